#include "fdqn/solver.hpp"

#include <cmath>
#include <limits>

#include "fdqn/lbfgs.hpp"

namespace fdqn {

const char* to_string(Method m) {
  switch (m) {
    case Method::fd_norm: return "fd_norm";
    case Method::fd_ipqn: return "fd_ipqn";
    case Method::fd_sg: return "fd_sg";
  }
  return "?";
}

const char* to_string(StopReason r) {
  switch (r) {
    case StopReason::budget: return "budget";
    case StopReason::line_search_failure: return "line_search_failure";
    case StopReason::gradient_degenerate: return "gradient_degenerate";
    case StopReason::max_iters: return "max_iters";
    case StopReason::diverged: return "diverged";
  }
  return "?";
}

const char* to_string(LsStatus s) {
  switch (s) {
    case LsStatus::accepted: return "accepted";
    case LsStatus::failed: return "failed";
    case LsStatus::none: return "none";
  }
  return "?";
}

void validate(const SolverConfig& cfg) {
  if (!(cfg.nu > 0.0)) throw std::invalid_argument("nu must be positive");
  if (!(cfg.policy.theta > 0.0 && cfg.policy.theta < 1.0))
    throw std::invalid_argument("theta must lie in (0,1)");
  if (cfg.policy.s0 < 1 || cfg.policy.s0 > cfg.policy.s_max)
    throw std::invalid_argument("need 1 <= s0 <= s_max");
  if (!(cfg.policy.variance_subset_fraction > 0.0 && cfg.policy.variance_subset_fraction <= 1.0))
    throw std::invalid_argument("variance_subset_fraction must lie in (0,1]");
  if (!(cfg.ls.c1 > 0.0 && cfg.ls.c1 < 1.0)) throw std::invalid_argument("c1 must lie in (0,1)");
  if (!(cfg.ls.tau > 0.0 && cfg.ls.tau < 1.0)) throw std::invalid_argument("tau must lie in (0,1)");
  if (cfg.ls.max_backtracks < 1) throw std::invalid_argument("max_backtracks must be positive");
  if (cfg.lbfgs_m < 1) throw std::invalid_argument("lbfgs memory must be positive");
  if (!(cfg.beta > 0.0)) throw std::invalid_argument("beta must be positive");
  if (!(cfg.alpha_max > 0.0)) throw std::invalid_argument("alpha_max must be positive");
  if (cfg.max_evals < 1) throw std::invalid_argument("max_evals must be positive");
  if (cfg.max_iters < 1) throw std::invalid_argument("max_iters must be positive");
  if (cfg.method == Method::fd_sg) {
    if (!cfg.sg_alpha || !(*cfg.sg_alpha > 0.0))
      throw std::invalid_argument("fd_sg needs a positive sg_alpha");
  }
}

namespace {

double err_of(const Problem& problem, double f_true) {
  return problem.f_star ? f_true - *problem.f_star : std::numeric_limits<double>::quiet_NaN();
}

}  // namespace

RunResult run_adaptive(const Problem& problem, const Eigen::VectorXd& x0, const SolverConfig& cfg) {
  validate(cfg);
  if (cfg.method != Method::fd_norm && cfg.method != Method::fd_ipqn)
    throw std::invalid_argument("run_adaptive handles fd_norm and fd_ipqn only");

  Oracle oracle(problem, cfg.master_seed);
  const long long d = problem.d;
  LbfgsMemory memory(cfg.lbfgs_m, cfg.gamma_init);

  RunResult result;
  result.final_x = x0;
  Eigen::VectorXd x = x0;

  std::uint64_t id_counter = 0;
  Batch batch = make_batch(id_counter, cfg.policy.s0, cfg.policy.variance_subset_fraction);
  id_counter += cfg.policy.s0;
  bool saturated = false;

  for (long long k = 0; k < cfg.max_iters; ++k) {
    // An iteration starts only if its gradient fits in the budget; the
    // iteration in progress then completes (bounded overshoot).
    const long long gradient_cost = (d + 1) * static_cast<long long>(batch.size());
    if (oracle.counter().total() + gradient_cost > cfg.max_evals) {
      result.stop_reason = StopReason::budget;
      break;
    }

    IterationRecord rec;
    rec.k = k;
    rec.batch_size = batch.size();
    rec.saturated = saturated;

    RealizedBatch rb;
    GradientEstimate est;
    try {
      rb = oracle.realize(batch);
      est = oracle.fd_gradient_batch(x, cfg.nu, rb);
    } catch (const EvaluationError&) {
      result.stop_reason = StopReason::diverged;
      break;
    }

    rec.grad_norm_est = est.batch_gradient.norm();
    rec.f_before = est.base_mean;

    if (rec.grad_norm_est == 0.0) {
      rec.f_sampled = est.base_mean;
      rec.f_true = true_objective(problem, x);
      rec.err = err_of(problem, rec.f_true);
      rec.cum_evals = oracle.counter().total();
      result.records.push_back(std::move(rec));
      result.stop_reason = StopReason::gradient_degenerate;
      break;
    }

    const Eigen::VectorXd direction = memory.apply_h(est.batch_gradient);

    TestOutcome outcome;
    if (cfg.method == Method::fd_norm && cfg.policy.test_kind != TestKind::fixed) {
      outcome = norm_test(est, batch.size(), cfg.policy);
    } else if (cfg.method == Method::fd_ipqn && cfg.policy.test_kind != TestKind::fixed) {
      const Eigen::VectorXd hhg = memory.apply_h(direction);
      outcome = ipqn_test(est, direction, hhg, batch.size(), cfg.policy);
    } else {
      outcome.passed = true;
      outcome.required_size = batch.size();
    }
    rec.test_passed = outcome.passed;

    const InitialStep init = initial_steplength(est, batch.size());
    const double alpha0 = std::min(init.alpha, cfg.alpha_max);

    const LineSearchResult ls =
        backtrack(oracle, x, direction, est.batch_gradient, rb, alpha0, est.base_mean, cfg.ls);
    rec.ls_status = ls.status;
    rec.ls_trials = ls.trial_count;
    rec.alpha = ls.alpha;
    rec.g_dot_d = est.batch_gradient.dot(direction);

    if (ls.status == LsStatus::accepted) {
      const Eigen::VectorXd x_new = x - ls.alpha * direction;
      // Full-overlap curvature pair: the gradient difference is measured on
      // the same realized batch, with base values at x_new reused from the
      // accepted trial.
      bool pair_ok = false;
      try {
        const GradientEstimate est_new =
            oracle.fd_gradient_batch_with_base(x_new, cfg.nu, rb, ls.accepted_values);
        pair_ok = memory.try_update(x_new - x, est_new.batch_gradient - est.batch_gradient,
                                    cfg.beta);
      } catch (const EvaluationError&) {
        result.stop_reason = StopReason::diverged;
        rec.f_sampled = ls.f_new;
        rec.f_true = true_objective(problem, x_new);
        rec.err = err_of(problem, rec.f_true);
        rec.cum_evals = oracle.counter().total();
        result.records.push_back(std::move(rec));
        break;
      }
      rec.pair_accepted = pair_ok;
      x = x_new;
      rec.f_sampled = ls.f_new;
    } else {
      rec.f_sampled = est.base_mean;
    }

    rec.f_true = true_objective(problem, x);
    rec.err = err_of(problem, rec.f_true);
    rec.cum_evals = oracle.counter().total();
    result.records.push_back(std::move(rec));

    if (ls.status == LsStatus::failed && cfg.ls_failure_policy == LsFailurePolicy::stop) {
      result.stop_reason = StopReason::line_search_failure;
      break;
    }

    const NextBatch nb = next_batch(cfg.policy, batch, outcome, id_counter);
    batch = nb.batch;
    saturated = nb.saturated;
    result.stop_reason = StopReason::max_iters;
  }

  result.final_x = x;
  result.total_evals = oracle.counter().total();
  return result;
}

RunResult run_fd_sg(const Problem& problem, const Eigen::VectorXd& x0, const SolverConfig& cfg) {
  validate(cfg);
  if (cfg.method != Method::fd_sg)
    throw std::invalid_argument("run_fd_sg handles fd_sg only");
  const double alpha = *cfg.sg_alpha;

  Oracle oracle(problem, cfg.master_seed);
  const long long d = problem.d;

  RunResult result;
  result.final_x = x0;
  Eigen::VectorXd x = x0;

  std::uint64_t id_counter = 0;

  for (long long k = 0; k < cfg.max_iters; ++k) {
    const long long gradient_cost = (d + 1) * static_cast<long long>(cfg.policy.s0);
    if (oracle.counter().total() + gradient_cost > cfg.max_evals) {
      result.stop_reason = StopReason::budget;
      break;
    }

    const Batch batch = make_batch(id_counter, cfg.policy.s0, cfg.policy.variance_subset_fraction);
    id_counter += cfg.policy.s0;

    IterationRecord rec;
    rec.k = k;
    rec.batch_size = batch.size();
    rec.alpha = alpha;
    rec.ls_status = LsStatus::none;

    GradientEstimate est;
    try {
      est = oracle.fd_gradient_batch(x, cfg.nu, batch);
    } catch (const EvaluationError&) {
      result.stop_reason = StopReason::diverged;
      break;
    }
    rec.grad_norm_est = est.batch_gradient.norm();
    rec.f_before = est.base_mean;
    rec.f_sampled = est.base_mean;

    const Eigen::VectorXd x_new = x - alpha * est.batch_gradient;
    if (!x_new.allFinite()) {
      result.stop_reason = StopReason::diverged;
      break;
    }
    x = x_new;

    rec.f_true = true_objective(problem, x);
    rec.err = err_of(problem, rec.f_true);
    rec.cum_evals = oracle.counter().total();
    const bool f_true_finite = std::isfinite(rec.f_true);
    result.records.push_back(std::move(rec));

    if (!f_true_finite) {
      result.stop_reason = StopReason::diverged;
      break;
    }
    result.stop_reason = StopReason::max_iters;
  }

  result.final_x = x;
  result.total_evals = oracle.counter().total();
  return result;
}

RunResult run(const Problem& problem, const Eigen::VectorXd& x0, const SolverConfig& cfg) {
  if (cfg.method == Method::fd_sg) return run_fd_sg(problem, x0, cfg);
  return run_adaptive(problem, x0, cfg);
}

TuneResult tune_fd_sg(const Problem& problem, const Eigen::VectorXd& x0,
                      const SolverConfig& base_cfg, long long budget_per_trial) {
  SolverConfig cfg = base_cfg;
  cfg.method = Method::fd_sg;
  cfg.max_evals = budget_per_trial;

  TuneResult result;
  bool have_best = false;
  double best_value = std::numeric_limits<double>::infinity();

  for (int j = -20; j <= 10; ++j) {
    cfg.sg_alpha = std::ldexp(1.0, j);
    const RunResult run = run_fd_sg(problem, x0, cfg);

    TuneTrial trial;
    trial.j = j;
    trial.alpha = *cfg.sg_alpha;
    trial.stop_reason = run.stop_reason;
    trial.evals = run.total_evals;
    if (!run.records.empty()) {
      trial.final_f_true = run.records.back().f_true;
      trial.final_err = run.records.back().err;
    } else {
      trial.final_f_true = std::numeric_limits<double>::quiet_NaN();
      trial.final_err = std::numeric_limits<double>::quiet_NaN();
    }
    result.trials.push_back(trial);

    const bool usable = run.stop_reason != StopReason::diverged &&
                        std::isfinite(trial.final_f_true);
    if (usable && trial.final_f_true < best_value) {
      best_value = trial.final_f_true;
      result.best_alpha = trial.alpha;
      result.best_j = j;
      have_best = true;
    }
  }

  if (!have_best)
    throw EvaluationError("every steplength trial diverged on problem '" + problem.name + "'");
  return result;
}

}  // namespace fdqn
