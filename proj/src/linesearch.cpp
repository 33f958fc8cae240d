#include "fdqn/linesearch.hpp"

#include <cmath>
#include <limits>

namespace fdqn {

InitialStep initial_steplength(const GradientEstimate& estimate, std::size_t batch_size) {
  const double g_sq = estimate.batch_gradient.squaredNorm();
  if (g_sq == 0.0) return {1.0, true};
  const double ratio = estimate.sample_variance / (static_cast<double>(batch_size) * g_sq);
  return {1.0 / (1.0 + ratio), false};
}

LineSearchResult backtrack(Oracle& oracle, const Eigen::VectorXd& x,
                           const Eigen::VectorXd& direction, const Eigen::VectorXd& g,
                           const RealizedBatch& batch, double alpha0, double f_ref,
                           const LineSearchConfig& cfg) {
  const double gd = g.dot(direction);
  LineSearchResult result;
  result.f_new = f_ref;

  double alpha = alpha0;
  for (int t = 0; t < cfg.max_backtracks; ++t) {
    const Eigen::VectorXd trial = x - alpha * direction;
    ++result.trial_count;
    bool finite = trial.allFinite();
    std::vector<double> values;
    double mean = std::numeric_limits<double>::quiet_NaN();
    if (finite) {
      try {
        values = oracle.eval_batch_values(trial, batch);
        mean = 0.0;
        for (double v : values) mean += v;
        mean /= static_cast<double>(values.size());
        finite = std::isfinite(mean);
      } catch (const EvaluationError&) {
        finite = false;  // rejected trial, keep backtracking
      }
    }
    if (finite && mean <= f_ref - cfg.c1 * alpha * gd) {
      result.status = LsStatus::accepted;
      result.alpha = alpha;
      result.f_new = mean;
      result.accepted_values = std::move(values);
      return result;
    }
    alpha *= cfg.tau;
  }
  result.status = LsStatus::failed;
  result.alpha = 0.0;
  return result;
}

DeterministicLsResult backtrack_deterministic(
    const std::function<double(const Eigen::VectorXd&)>& objective, const Eigen::VectorXd& x,
    const Eigen::VectorXd& direction, double g_dot_d, double f_ref, double alpha0,
    const LineSearchConfig& cfg, double f_tol_abs) {
  DeterministicLsResult result;
  double alpha = alpha0;
  for (int t = 0; t < cfg.max_backtracks; ++t) {
    ++result.trial_count;
    const Eigen::VectorXd trial = x - alpha * direction;
    const double f_new = trial.allFinite() ? objective(trial)
                                           : std::numeric_limits<double>::quiet_NaN();
    if (std::isfinite(f_new) && f_new <= f_ref - cfg.c1 * alpha * g_dot_d + f_tol_abs) {
      result.accepted = true;
      result.alpha = alpha;
      result.f_new = f_new;
      return result;
    }
    alpha *= cfg.tau;
  }
  return result;
}

double fd_parameter(double eps_m, double lipschitz) {
  if (!(eps_m > 0.0) || !(lipschitz > 0.0))
    throw std::invalid_argument("fd_parameter needs positive eps_m and lipschitz constant");
  return 2.0 * std::sqrt(eps_m / lipschitz);
}

}  // namespace fdqn
