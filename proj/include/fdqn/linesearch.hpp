#pragma once

#include <Eigen/Core>
#include <functional>
#include <vector>

#include "fdqn/oracle.hpp"

namespace fdqn {

struct LineSearchConfig {
  double c1 = 1e-4;
  double tau = 0.5;
  int max_backtracks = 30;
};

enum class LsStatus { accepted, failed, none };

struct LineSearchResult {
  LsStatus status = LsStatus::failed;
  double alpha = 0.0;  // 0 when failed (the iterate does not move)
  int trial_count = 0;
  double f_new = 0.0;  // batch mean at the accepted point; f_ref when failed
  // Per-sample values at the accepted point, reused as the base values of the
  // curvature-pair gradient at x_{k+1}.
  std::vector<double> accepted_values;
};

struct InitialStep {
  double alpha = 1.0;
  bool degenerate = false;  // zero gradient: the solver should have stopped
};

// Variance-shrunk initial trial steplength
//   alpha = (1 + Var / (|S| ||g_S||^2))^-1, always in (0, 1].
InitialStep initial_steplength(const GradientEstimate& estimate, std::size_t batch_size);

// Backtracking search for the sampled sufficient-decrease condition
//   F_S(x - alpha dir) <= f_ref - c1 alpha g'dir,
// with alpha = alpha0, tau alpha0, tau^2 alpha0, ... dir is H g; f_ref is
// F_S(x), already paid for by the gradient's base values. Each trial costs
// |S| evaluations; non-finite trial values count as rejected trials. failed
// is a normal return, reached when max_backtracks trials are exhausted.
LineSearchResult backtrack(Oracle& oracle, const Eigen::VectorXd& x,
                           const Eigen::VectorXd& direction, const Eigen::VectorXd& g,
                           const RealizedBatch& batch, double alpha0, double f_ref,
                           const LineSearchConfig& cfg);

struct DeterministicLsResult {
  bool accepted = false;
  double alpha = 0.0;
  int trial_count = 0;
  double f_new = 0.0;
};

// Armijo backtracking on an arbitrary deterministic objective; the noise-free
// reference solve runs on this. f_tol_abs is an absolute acceptance slack for
// the regime where true decreases fall below the float resolution of the
// objective (the sufficient-decrease term rounds to zero there); 0 keeps the
// strict condition.
DeterministicLsResult backtrack_deterministic(
    const std::function<double(const Eigen::VectorXd&)>& objective, const Eigen::VectorXd& x,
    const Eigen::VectorXd& direction, double g_dot_d, double f_ref, double alpha0,
    const LineSearchConfig& cfg, double f_tol_abs = 0.0);

// nu* = 2 sqrt(eps_m / L): the finite-difference parameter minimizing the
// gradient-approximation error bound under numerical noise eps_m. Advisory;
// experiment configs fix nu directly.
double fd_parameter(double eps_m, double lipschitz);

}  // namespace fdqn
