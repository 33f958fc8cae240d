#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fdqn/linesearch.hpp"
#include "fdqn/oracle.hpp"
#include "fdqn/sampling.hpp"

namespace fdqn {

enum class Method { fd_norm, fd_ipqn, fd_sg };
enum class StopReason { budget, line_search_failure, gradient_degenerate, max_iters, diverged };
enum class LsFailurePolicy { stop, resample };

const char* to_string(Method m);
const char* to_string(StopReason r);
const char* to_string(LsStatus s);

struct SolverConfig {
  Method method = Method::fd_norm;
  double nu = 1e-8;
  // The method determines which sample-size test runs; policy.test_kind is
  // consulted only for TestKind::fixed, which disables the test entirely.
  SampleSizePolicy policy;
  LineSearchConfig ls;
  std::size_t lbfgs_m = 10;
  double beta = 1e-2;
  double gamma_init = 1.0;
  double alpha_max = 1.0;
  LsFailurePolicy ls_failure_policy = LsFailurePolicy::stop;
  long long max_evals = 10'000'000;
  long long max_iters = 1'000'000;
  std::uint64_t master_seed = 0;
  std::optional<double> sg_alpha;  // fd_sg only
};

// Throws std::invalid_argument on an inconsistent configuration, before any
// evaluation happens.
void validate(const SolverConfig& cfg);

struct IterationRecord {
  long long k = 0;
  std::size_t batch_size = 0;
  double alpha = 0.0;
  double f_sampled = 0.0;  // batch mean at the iterate produced by this iteration
  double f_true = 0.0;     // oracle side channel, not visible to the solver
  double err = 0.0;        // f_true - F*, NaN when F* unknown
  double grad_norm_est = 0.0;
  bool test_passed = true;
  LsStatus ls_status = LsStatus::none;
  long long cum_evals = 0;

  // Replay channel for property tests; not part of the CSV schema.
  double f_before = 0.0;
  double g_dot_d = 0.0;
  int ls_trials = 0;
  bool pair_accepted = false;
  bool saturated = false;
};

struct RunResult {
  std::vector<IterationRecord> records;
  StopReason stop_reason = StopReason::budget;
  Eigen::VectorXd final_x;
  long long total_evals = 0;
};

// Adaptive finite-difference quasi-Newton loop (methods fd_norm, fd_ipqn):
// batch FD gradient, sample-size test, variance-shrunk initial steplength,
// stochastic backtracking, full-overlap curvature pair with the skip rule.
RunResult run_adaptive(const Problem& problem, const Eigen::VectorXd& x0, const SolverConfig& cfg);

// Fixed-batch, fixed-steplength FD stochastic gradient baseline.
RunResult run_fd_sg(const Problem& problem, const Eigen::VectorXd& x0, const SolverConfig& cfg);

// Dispatches on cfg.method.
RunResult run(const Problem& problem, const Eigen::VectorXd& x0, const SolverConfig& cfg);

struct TuneTrial {
  int j = 0;
  double alpha = 0.0;
  double final_f_true = 0.0;
  double final_err = 0.0;
  StopReason stop_reason = StopReason::budget;
  long long evals = 0;
};

struct TuneResult {
  double best_alpha = 0.0;
  int best_j = 0;
  std::vector<TuneTrial> trials;
};

// Steplength grid 2^j, j = -20..10, identical master seeds across trials;
// picks the alpha minimizing the final true objective (ties -> smaller
// alpha). Throws EvaluationError when every trial diverges.
TuneResult tune_fd_sg(const Problem& problem, const Eigen::VectorXd& x0,
                      const SolverConfig& base_cfg, long long budget_per_trial);

}  // namespace fdqn
