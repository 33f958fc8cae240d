#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>

namespace fdqn {

struct CrnSample;

enum class NoiseModel { abs, rel };

// A stochastic nonlinear least-squares benchmark problem. The expected
// objective is F(x) = sum_j phi_j(x)^2 under both noise models.
struct Problem {
  int d = 0;                                                      // variables
  int p = 0;                                                      // residuals
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> residuals;
  std::function<Eigen::MatrixXd(const Eigen::VectorXd&)> jacobian;  // optional; reference solves only
  NoiseModel noise_model = NoiseModel::abs;
  double sigma = 0.0;
  Eigen::VectorXd x_standard;
  std::optional<double> f_star;
  std::string name;

  // Test hook: replaces the Gaussian CRN realization with a custom one
  // (e.g. a finite-support distribution for exact-enumeration checks).
  std::function<Eigen::VectorXd(CrnSample, int)> noise_override;
};

// Chebyquad residual map (More-Garbow-Hillstrom form):
//   phi_j(x) = (1/d) sum_i T*_j(x_i) - I_j,   j = 1..p,
// with T*_j the shifted Chebyshev polynomial on [0,1] and I_j its integral
// over [0,1]: 0 for odd j, -1/(j^2-1) for even j.
Eigen::VectorXd chebyquad_residuals(const Eigen::VectorXd& x, int p);

// Analytic Jacobian of the Chebyquad residual map via the Chebyshev
// derivative recurrence: d phi_j / d x_i = (2 j / d) U_{j-1}(2 x_i - 1).
Eigen::MatrixXd chebyquad_jacobian(const Eigen::VectorXd& x, int p);

// Standard starting point x_i = i / (d + 1).
Eigen::VectorXd standard_start(int d);

Problem make_chebyquad(int d, int p, NoiseModel model, double sigma);

// Problem registry addressable by name from experiment configs.
// Known names: "chebyquad".
Problem make_problem(const std::string& name, int d, int p, NoiseModel model, double sigma);

// F(x) = sum_j phi_j(x)^2. Logging side channel; never touches EvalCounter.
double true_objective(const Problem& problem, const Eigen::VectorXd& x);

struct ReferenceOptions {
  long long max_iters = 200000;
  double grad_inf_tol = 1e-10;
  std::size_t memory = 30;
  double c1 = 1e-4;
  double tau = 0.5;
  int max_backtracks = 60;
  // Curvature filter for stored pairs; keeps roundoff-dominated pairs out of
  // the memory near the float floor of F.
  double beta = 1e-2;
};

struct ReferenceResult {
  Eigen::VectorXd x;
  double f_star = 0.0;
  double grad_inf_norm = 0.0;
  long long iterations = 0;
  bool converged = false;  // false: iteration cap or line-search stall; x is best found
};

// Deterministic L-BFGS on the noise-free objective with analytic gradients,
// run until ||grad F||_inf <= grad_inf_tol. Requires problem.jacobian.
ReferenceResult solve_reference(const Problem& problem, const ReferenceOptions& opts = {});

}  // namespace fdqn
