#pragma once

#include <Eigen/Core>
#include <cstdint>

#include "fdqn/oracle.hpp"

namespace fdqn {

enum class TestKind { norm, ipqn, fixed };
enum class GrowthRule { exact_required, geometric };

struct SampleSizePolicy {
  double theta = 0.9;
  TestKind test_kind = TestKind::norm;
  std::size_t s0 = 2;
  std::size_t s_max = 100000;
  GrowthRule growth_rule = GrowthRule::exact_required;
  double variance_subset_fraction = 1.0;
};

struct TestOutcome {
  bool passed = true;
  double lhs = 0.0;
  double rhs = 0.0;
  std::size_t required_size = 1;
};

// Practical finite-difference norm test:
//   lhs = Var_{S^v} / |S|,  rhs = theta^2 ||g_S||^2,  pass iff lhs <= rhs.
// required_size solves the test for |S|, floored at the current size and
// capped at s_max. Zero gradient with positive variance forces a failure
// with required_size = s_max; zero gradient with zero variance passes
// (stationary for the sampled problem). A singleton variance subset carries
// no evidence: the test passes with variance 0 but requires at least two
// samples next iteration.
TestOutcome norm_test(const GradientEstimate& estimate, std::size_t batch_size,
                      const SampleSizePolicy& policy);

// Practical finite-difference inner product quasi-Newton test. hg = H g_S and
// hhg = H (H g_S); since (H g_S)^T (H g_i) = (H^2 g_S)^T g_i, only hhg is
// needed per sample:
//   lhs = Var_{S^v}( hhg . g_i ) / |S|,  rhs = theta^2 ||hg||^4.
TestOutcome ipqn_test(const GradientEstimate& estimate, const Eigen::VectorXd& hg,
                      const Eigen::VectorXd& hhg, std::size_t batch_size,
                      const SampleSizePolicy& policy);

struct NextBatch {
  Batch batch;
  bool saturated = false;  // the s_max cap is binding
};

// Fresh sample ids every iteration, drawn consecutively from id_counter.
// On a pass the size is kept (grown only if the outcome demands a minimum);
// on a failure it becomes required_size (exact_required) or
// max(required_size, 2 |S|) (geometric), capped at s_max.
NextBatch next_batch(const SampleSizePolicy& policy, const Batch& current,
                     const TestOutcome& outcome, std::uint64_t& id_counter);

}  // namespace fdqn
