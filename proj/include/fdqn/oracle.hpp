#pragma once

#include <Eigen/Core>
#include <atomic>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "fdqn/problems.hpp"

namespace fdqn {

// Identity of one noise realization zeta_i. The realized vector is a pure
// function of (id, p, sigma, master seed), never stored.
struct CrnSample {
  std::uint64_t id = 0;
};

// An iteration's sample set S_k. The variance subset S_k^v is the first
// variance_subset_size entries.
struct Batch {
  std::vector<CrnSample> samples;
  std::size_t variance_subset_size = 0;

  std::size_t size() const { return samples.size(); }
};

// Consecutive fresh ids [first_id, first_id + n); the variance subset covers
// ceil(fraction * n) samples, at least one.
Batch make_batch(std::uint64_t first_id, std::size_t n, double variance_fraction = 1.0);

struct GradientEstimate {
  Eigen::VectorXd batch_gradient;
  std::vector<Eigen::VectorXd> per_sample_gradients;  // for zeta_i in S_k^v
  double sample_variance = 0.0;
  long long evals_used = 0;
  // f(x, zeta_i) for every sample of the batch, in batch order. Their mean is
  // F_S(x), which the line search reuses without re-evaluating.
  std::vector<double> base_values;
  double base_mean = 0.0;
};

// Count of individual f(x, zeta_i) evaluations. Atomic so concurrent batch
// evaluation aggregates correctly.
class EvalCounter {
 public:
  void add(long long n) { total_.fetch_add(n, std::memory_order_relaxed); }
  long long total() const { return total_.load(std::memory_order_relaxed); }

 private:
  std::atomic<long long> total_{0};
};

// Thrown when a stochastic function value (or the residual map underneath)
// is non-finite, signaling divergence of the iterate.
class EvaluationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Noise realizations for one batch, computed once and shared by every
// evaluation point touching that batch (the CRN coupling).
struct RealizedBatch {
  Batch batch;
  std::vector<Eigen::VectorXd> noise;  // one vector of length p per sample
};

// Zero-order stochastic oracle for a nonlinear least-squares problem:
// f(x, zeta) built from the residual map plus a noise model, with CRN
// finite-difference gradient estimation and global evaluation accounting.
class Oracle {
 public:
  Oracle(const Problem& problem, std::uint64_t master_seed);

  // One stochastic function value; counts 1 evaluation.
  double eval_f(const Eigen::VectorXd& x, CrnSample sample);

  // Forward-difference gradient for a single sample, same zeta at all d+1
  // points; counts d+1 evaluations.
  Eigen::VectorXd fd_gradient_sample(const Eigen::VectorXd& x, double nu, CrnSample sample);

  // Batch forward-difference gradient estimate; counts (d+1)*|S| evaluations.
  GradientEstimate fd_gradient_batch(const Eigen::VectorXd& x, double nu, const Batch& batch);
  GradientEstimate fd_gradient_batch(const Eigen::VectorXd& x, double nu, const RealizedBatch& rb);

  // Same, but reusing per-sample base values already paid for at x (e.g. the
  // accepted line-search trial); counts d*|S| evaluations.
  GradientEstimate fd_gradient_batch_with_base(const Eigen::VectorXd& x, double nu,
                                               const RealizedBatch& rb,
                                               const std::vector<double>& base_values);

  // Mean of f over the batch; counts |S| evaluations.
  double eval_batch_mean(const Eigen::VectorXd& x, const Batch& batch);

  // Per-sample values at x; counts |S| evaluations.
  std::vector<double> eval_batch_values(const Eigen::VectorXd& x, const RealizedBatch& rb);

  // Realizes the batch's noise vectors once (no evaluations counted; the
  // realization is part of evaluating f and is repaid through eval counts).
  RealizedBatch realize(const Batch& batch) const;

  // The noise realization zeta_i as a pure function of (id, p, sigma, seed).
  Eigen::VectorXd noise_for(CrnSample sample) const;

  EvalCounter& counter() { return counter_; }
  const EvalCounter& counter() const { return counter_; }
  const Problem& problem() const { return *problem_; }
  std::uint64_t master_seed() const { return master_seed_; }

 private:
  // f(x, zeta) given precomputed residuals; throws EvaluationError when the
  // result (or any residual) is non-finite.
  double combine(const Eigen::VectorXd& phi, const Eigen::VectorXd& zeta) const;
  Eigen::VectorXd residuals_checked(const Eigen::VectorXd& x) const;

  const Problem* problem_;
  std::uint64_t master_seed_;
  EvalCounter counter_;
};

// Deterministic N(0, sigma^2) realization via the counter-based generator,
// keyed by (master_seed, sample id); repeat calls are bit-identical.
Eigen::VectorXd realize_noise(CrnSample sample, int p, double sigma, std::uint64_t master_seed);

}  // namespace fdqn
