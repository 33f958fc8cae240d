#include "fdqn/sampling.hpp"

#include <algorithm>
#include <cmath>

namespace fdqn {

namespace {

// Smallest |S| satisfying numerator / |S| <= theta^2 * denom, floored at the
// current size and capped at s_max.
std::size_t required_size_for(double numerator, double theta_sq_denom, std::size_t batch_size,
                              std::size_t s_max) {
  const double ratio = numerator / theta_sq_denom;
  if (!(ratio < static_cast<double>(s_max))) return s_max;
  const auto needed = static_cast<std::size_t>(std::ceil(ratio));
  return std::clamp(needed, batch_size, s_max);
}

TestOutcome variance_ratio_test(double numerator, double denom, std::size_t batch_size,
                                const SampleSizePolicy& policy, bool singleton_subset) {
  const double theta_sq = policy.theta * policy.theta;
  TestOutcome out;
  out.lhs = numerator / static_cast<double>(batch_size);
  out.rhs = theta_sq * denom;

  if (singleton_subset) {
    // No variance evidence; pass the arithmetic but demand two samples next.
    out.passed = true;
    out.lhs = 0.0;
    out.required_size = std::clamp<std::size_t>(2, batch_size, policy.s_max);
    return out;
  }
  if (denom == 0.0) {
    if (numerator == 0.0) {
      out.passed = true;  // stationary for the sampled problem
      out.required_size = batch_size;
    } else {
      out.passed = false;  // cannot certify anything near stationarity
      out.required_size = policy.s_max;
    }
    return out;
  }
  out.passed = out.lhs <= out.rhs;
  out.required_size = required_size_for(numerator, theta_sq * denom, batch_size, policy.s_max);
  return out;
}

}  // namespace

TestOutcome norm_test(const GradientEstimate& estimate, std::size_t batch_size,
                      const SampleSizePolicy& policy) {
  const double g_sq = estimate.batch_gradient.squaredNorm();
  const bool singleton = estimate.per_sample_gradients.size() < 2;
  return variance_ratio_test(estimate.sample_variance, g_sq, batch_size, policy, singleton);
}

TestOutcome ipqn_test(const GradientEstimate& estimate, const Eigen::VectorXd& hg,
                      const Eigen::VectorXd& hhg, std::size_t batch_size,
                      const SampleSizePolicy& policy) {
  const double hg_sq = hg.squaredNorm();
  const std::size_t nv = estimate.per_sample_gradients.size();
  double numerator = 0.0;
  if (nv >= 2) {
    // (H g_S)'(H g_i) = (H^2 g_S)'g_i, so each sample costs one dot product.
    double acc = 0.0;
    for (const auto& gi : estimate.per_sample_gradients) {
      const double dev = hhg.dot(gi) - hg_sq;
      acc += dev * dev;
    }
    numerator = acc / static_cast<double>(nv - 1);
  }
  if (hg_sq == 0.0 && nv >= 2) {
    // The projection statistic degenerates to 0 with the direction; the
    // gradient spread is the remaining evidence that the direction cannot be
    // certified near stationarity.
    numerator = std::max(numerator, estimate.sample_variance);
  }
  return variance_ratio_test(numerator, hg_sq * hg_sq, batch_size, policy, nv < 2);
}

NextBatch next_batch(const SampleSizePolicy& policy, const Batch& current,
                     const TestOutcome& outcome, std::uint64_t& id_counter) {
  std::size_t size;
  if (outcome.passed) {
    size = std::max(current.size(), outcome.required_size);
  } else {
    size = outcome.required_size;
    if (policy.growth_rule == GrowthRule::geometric)
      size = std::max(size, 2 * current.size());
  }

  NextBatch next;
  if (size >= policy.s_max) {
    next.saturated = size > policy.s_max || (!outcome.passed && outcome.required_size >= policy.s_max);
    size = policy.s_max;
  }
  next.batch = make_batch(id_counter, size, policy.variance_subset_fraction);
  id_counter += size;
  return next;
}

}  // namespace fdqn
