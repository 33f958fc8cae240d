#include "fdqn/oracle.hpp"

#include <cmath>

#include "fdqn/crn.hpp"

namespace fdqn {

Batch make_batch(std::uint64_t first_id, std::size_t n, double variance_fraction) {
  if (n == 0) throw std::invalid_argument("batch must hold at least one sample");
  Batch b;
  b.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) b.samples[i].id = first_id + i;
  const auto wanted = static_cast<std::size_t>(std::ceil(variance_fraction * static_cast<double>(n)));
  b.variance_subset_size = std::min(n, std::max<std::size_t>(1, wanted));
  return b;
}

Eigen::VectorXd realize_noise(CrnSample sample, int p, double sigma, std::uint64_t master_seed) {
  Eigen::VectorXd z(p);
  crn::fill_standard_normal(master_seed, sample.id, {z.data(), static_cast<std::size_t>(p)});
  return sigma * z;
}

Oracle::Oracle(const Problem& problem, std::uint64_t master_seed)
    : problem_(&problem), master_seed_(master_seed) {
  if (problem.d < 1 || problem.p < 1 || !problem.residuals)
    throw std::invalid_argument("oracle needs a problem with d, p and a residual map");
}

Eigen::VectorXd Oracle::noise_for(CrnSample sample) const {
  if (problem_->noise_override) return problem_->noise_override(sample, problem_->p);
  return realize_noise(sample, problem_->p, problem_->sigma, master_seed_);
}

Eigen::VectorXd Oracle::residuals_checked(const Eigen::VectorXd& x) const {
  Eigen::VectorXd phi = problem_->residuals(x);
  if (!phi.allFinite()) throw EvaluationError("non-finite residuals: iterate diverged");
  return phi;
}

double Oracle::combine(const Eigen::VectorXd& phi, const Eigen::VectorXd& zeta) const {
  const int p = problem_->p;
  const double sigma = problem_->sigma;
  double value = 0.0;
  if (problem_->noise_model == NoiseModel::abs) {
    for (int j = 0; j < p; ++j) {
      const double t = phi[j] + zeta[j];
      value += t * t;
    }
    // Debias by p sigma^2 so that E[f] = sum_j phi_j^2 holds for every p.
    value -= p * sigma * sigma;
  } else {
    for (int j = 0; j < p; ++j) {
      const double t = 1.0 + zeta[j];
      value += phi[j] * phi[j] * t * t;
    }
    value /= 1.0 + sigma * sigma;
  }
  if (!std::isfinite(value)) throw EvaluationError("non-finite function value: iterate diverged");
  return value;
}

double Oracle::eval_f(const Eigen::VectorXd& x, CrnSample sample) {
  const Eigen::VectorXd phi = residuals_checked(x);
  const double value = combine(phi, noise_for(sample));
  counter_.add(1);
  return value;
}

Eigen::VectorXd Oracle::fd_gradient_sample(const Eigen::VectorXd& x, double nu, CrnSample sample) {
  if (!(nu > 0.0)) throw std::invalid_argument("fd parameter nu must be positive");
  const int d = problem_->d;
  const Eigen::VectorXd zeta = noise_for(sample);
  const double base = combine(residuals_checked(x), zeta);
  counter_.add(1);
  Eigen::VectorXd g(d);
  Eigen::VectorXd xj = x;
  for (int j = 0; j < d; ++j) {
    xj[j] = x[j] + nu;
    g[j] = (combine(residuals_checked(xj), zeta) - base) / nu;
    counter_.add(1);
    xj[j] = x[j];
  }
  return g;
}

RealizedBatch Oracle::realize(const Batch& batch) const {
  if (batch.size() == 0) throw std::invalid_argument("batch must hold at least one sample");
  RealizedBatch rb;
  rb.batch = batch;
  rb.noise.reserve(batch.size());
  for (const CrnSample s : batch.samples) rb.noise.push_back(noise_for(s));
  return rb;
}

GradientEstimate Oracle::fd_gradient_batch(const Eigen::VectorXd& x, double nu, const Batch& batch) {
  return fd_gradient_batch(x, nu, realize(batch));
}

GradientEstimate Oracle::fd_gradient_batch(const Eigen::VectorXd& x, double nu,
                                           const RealizedBatch& rb) {
  const std::size_t n = rb.batch.size();
  const Eigen::VectorXd phi0 = residuals_checked(x);
  std::vector<double> base(n);
  for (std::size_t i = 0; i < n; ++i) base[i] = combine(phi0, rb.noise[i]);
  counter_.add(static_cast<long long>(n));

  GradientEstimate est = fd_gradient_batch_with_base(x, nu, rb, base);
  est.evals_used += static_cast<long long>(n);
  return est;
}

GradientEstimate Oracle::fd_gradient_batch_with_base(const Eigen::VectorXd& x, double nu,
                                                     const RealizedBatch& rb,
                                                     const std::vector<double>& base_values) {
  if (!(nu > 0.0)) throw std::invalid_argument("fd parameter nu must be positive");
  const std::size_t n = rb.batch.size();
  if (base_values.size() != n)
    throw std::invalid_argument("base values must cover the whole batch");
  const int d = problem_->d;
  const std::size_t nv = std::min(rb.batch.variance_subset_size, n);

  GradientEstimate est;
  est.base_values = base_values;
  est.base_mean = 0.0;
  for (double v : base_values) est.base_mean += v;
  est.base_mean /= static_cast<double>(n);

  est.per_sample_gradients.assign(nv, Eigen::VectorXd(d));
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(d);
  Eigen::VectorXd col(n);

  // The residual map is evaluated once per stencil point and shared across
  // the batch; only the noise combination differs per sample.
  Eigen::VectorXd xj = x;
  for (int j = 0; j < d; ++j) {
    xj[j] = x[j] + nu;
    const Eigen::VectorXd phij = residuals_checked(xj);
    xj[j] = x[j];
    for (std::size_t i = 0; i < n; ++i) {
      const double gij = (combine(phij, rb.noise[i]) - base_values[i]) / nu;
      col[static_cast<Eigen::Index>(i)] = gij;
      if (i < nv) est.per_sample_gradients[i][j] = gij;
    }
    mean[j] = col.mean();
  }
  counter_.add(static_cast<long long>(n) * d);

  est.batch_gradient = mean;
  est.evals_used = static_cast<long long>(n) * d;

  if (nv >= 2) {
    double acc = 0.0;
    for (std::size_t i = 0; i < nv; ++i)
      acc += (est.per_sample_gradients[i] - mean).squaredNorm();
    est.sample_variance = acc / static_cast<double>(nv - 1);
  } else {
    est.sample_variance = 0.0;  // singleton subset: no evidence, by convention
  }
  return est;
}

double Oracle::eval_batch_mean(const Eigen::VectorXd& x, const Batch& batch) {
  const auto values = eval_batch_values(x, realize(batch));
  double acc = 0.0;
  for (double v : values) acc += v;
  return acc / static_cast<double>(values.size());
}

std::vector<double> Oracle::eval_batch_values(const Eigen::VectorXd& x, const RealizedBatch& rb) {
  const std::size_t n = rb.batch.size();
  const Eigen::VectorXd phi = residuals_checked(x);
  std::vector<double> values(n);
  for (std::size_t i = 0; i < n; ++i) values[i] = combine(phi, rb.noise[i]);
  counter_.add(static_cast<long long>(n));
  return values;
}

}  // namespace fdqn
