#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <random>
#include <vector>

#include "fdqn/oracle.hpp"
#include "fdqn/problems.hpp"

namespace fdqn::testing {

// Quadratic f(x) = 1/2 x'Ax as a residual map: phi_j = sqrt(lambda_j/2) q_j'x
// for A = Q diag(lambda) Q'. Noise-free unless sigma is set afterwards.
struct QuadraticProblem {
  Problem problem;
  Eigen::MatrixXd a;
  double lipschitz = 0.0;  // lambda_max
};

inline QuadraticProblem make_quadratic(const Eigen::VectorXd& lambda, unsigned rng_seed) {
  const int d = static_cast<int>(lambda.size());
  std::mt19937 rng(rng_seed);
  std::normal_distribution<double> normal;
  Eigen::MatrixXd m(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) m(i, j) = normal(rng);
  const Eigen::MatrixXd q = Eigen::HouseholderQR<Eigen::MatrixXd>(m).householderQ();

  QuadraticProblem out;
  out.a = q * lambda.asDiagonal() * q.transpose();
  out.lipschitz = lambda.maxCoeff();

  Eigen::MatrixXd rows(d, d);  // phi = rows * x
  for (int j = 0; j < d; ++j) rows.row(j) = std::sqrt(lambda[j] / 2.0) * q.col(j).transpose();

  out.problem.d = d;
  out.problem.p = d;
  out.problem.residuals = [rows](const Eigen::VectorXd& x) -> Eigen::VectorXd { return rows * x; };
  out.problem.jacobian = [rows](const Eigen::VectorXd&) -> Eigen::MatrixXd { return rows; };
  out.problem.x_standard = Eigen::VectorXd::Ones(d);
  out.problem.name = "quadratic";
  return out;
}

// Identity-Hessian quadratic f = 1/2 ||x||^2 (phi_j = x_j / sqrt(2)).
inline Problem make_half_norm_squared(int d, NoiseModel model = NoiseModel::abs,
                                      double sigma = 0.0) {
  Problem prob;
  prob.d = d;
  prob.p = d;
  prob.residuals = [](const Eigen::VectorXd& x) -> Eigen::VectorXd {
    return x / std::sqrt(2.0);
  };
  prob.jacobian = [d](const Eigen::VectorXd&) -> Eigen::MatrixXd {
    return Eigen::MatrixXd::Identity(d, d) / std::sqrt(2.0);
  };
  prob.noise_model = model;
  prob.sigma = sigma;
  prob.x_standard = Eigen::VectorXd::Ones(d);
  prob.name = "half_norm_squared";
  return prob;
}

// Finite-support noise for exact-enumeration checks: coordinate j of sample
// id is +sigma when bit j of the id is set, else -sigma. Ids 0..2^p-1
// enumerate the whole support with equal weight.
inline std::function<Eigen::VectorXd(CrnSample, int)> sign_noise(double sigma) {
  return [sigma](CrnSample s, int p) {
    Eigen::VectorXd z(p);
    for (int j = 0; j < p; ++j) z[j] = ((s.id >> j) & 1u) ? sigma : -sigma;
    return z;
  };
}

// Dense BFGS recursion oracle: H = gamma I updated oldest-to-newest with
// H <- (I - rho s y')H(I - rho y s') + rho s s', gamma from the newest pair.
inline Eigen::MatrixXd dense_bfgs(const std::vector<Eigen::VectorXd>& s,
                                  const std::vector<Eigen::VectorXd>& y, double gamma_empty = 1.0) {
  const int d = s.empty() ? 1 : static_cast<int>(s.front().size());
  double gamma = gamma_empty;
  if (!s.empty()) {
    const double ys = y.back().dot(s.back());
    gamma = ys / y.back().squaredNorm();
  }
  Eigen::MatrixXd h = gamma * Eigen::MatrixXd::Identity(d, d);
  const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(d, d);
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double rho = 1.0 / y[i].dot(s[i]);
    const Eigen::MatrixXd v = eye - rho * y[i] * s[i].transpose();
    h = v.transpose() * h * v + rho * s[i] * s[i].transpose();
  }
  return h;
}

inline Eigen::VectorXd random_vector(std::mt19937& rng, int d, double scale = 1.0) {
  std::normal_distribution<double> normal(0.0, scale);
  Eigen::VectorXd v(d);
  for (int i = 0; i < d; ++i) v[i] = normal(rng);
  return v;
}

}  // namespace fdqn::testing
