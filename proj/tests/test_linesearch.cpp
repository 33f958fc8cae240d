#include <doctest.h>

#include "fdqn/linesearch.hpp"
#include "support.hpp"

using namespace fdqn;
using namespace fdqn::testing;

namespace {

GradientEstimate estimate_of(const Eigen::VectorXd& g, double variance) {
  GradientEstimate est;
  est.batch_gradient = g;
  est.sample_variance = variance;
  return est;
}

}  // namespace

TEST_CASE("initial_steplength: zero variance gives the full step") {
  const auto step = initial_steplength(estimate_of(Eigen::Vector2d(1, 2), 0.0), 8);
  CHECK(step.alpha == 1.0);
  CHECK_FALSE(step.degenerate);
}

TEST_CASE("initial_steplength: unit variance ratio halves the step") {
  // var/(|S| |g|^2) = 10/(10*1) = 1 -> alpha = 1/2.
  const auto step = initial_steplength(estimate_of(Eigen::Vector2d(1, 0), 10.0), 10);
  CHECK(step.alpha == doctest::Approx(0.5));
}

TEST_CASE("initial_steplength: hand value 1/1.9") {
  const auto step = initial_steplength(estimate_of(Eigen::Vector2d(0, 1), 9.0), 10);
  CHECK(step.alpha == doctest::Approx(1.0 / 1.9));
}

TEST_CASE("initial_steplength: zero gradient flags degeneracy") {
  const auto step = initial_steplength(estimate_of(Eigen::Vector2d(0, 0), 1.0), 4);
  CHECK(step.alpha == 1.0);
  CHECK(step.degenerate);
}

TEST_CASE("initial_steplength: in (0,1] and non-increasing in the variance ratio") {
  double prev = 1.0;
  for (double var : {0.0, 0.5, 1.0, 4.0, 100.0, 1e6}) {
    const auto step = initial_steplength(estimate_of(Eigen::Vector2d(1, 1), var), 3);
    CHECK(step.alpha > 0.0);
    CHECK(step.alpha <= 1.0);
    CHECK(step.alpha <= prev);
    prev = step.alpha;
  }
}

TEST_CASE("backtrack: unit step accepted on the noise-free quadratic") {
  // F = 1/2 |x|^2, x = (1,0), direction = g = x, alpha0 = 1:
  // F(0) = 0 <= 0.5 - 1e-4.
  Problem prob = make_half_norm_squared(2);
  Oracle oracle(prob, 0);
  const auto rb = oracle.realize(make_batch(0, 1));
  Eigen::VectorXd x(2);
  x << 1.0, 0.0;
  const Eigen::VectorXd g = x;
  const LineSearchResult r =
      backtrack(oracle, x, g, g, rb, 1.0, 0.5, LineSearchConfig{1e-4, 0.5, 30});
  CHECK(r.status == LsStatus::accepted);
  CHECK(r.alpha == 1.0);
  CHECK(r.trial_count == 1);
  CHECK(r.f_new == doctest::Approx(0.0));
}

TEST_CASE("backtrack: alpha0=4 on the quadratic backtracks to the unit step") {
  // Sufficient decrease at c1 = 1e-4, tau = 0.5, from alpha = 4:
  //   alpha 4: F(-3) = 4.5 > 0.5 - 4e-4   (reject)
  //   alpha 2: F(-1) = 0.5 > 0.5 - 2e-4   (reject; equality fails the margin)
  //   alpha 1: F(0)  = 0   <= 0.5 - 1e-4  (accept)
  Problem prob = make_half_norm_squared(1);
  Oracle oracle(prob, 0);
  const auto rb = oracle.realize(make_batch(0, 1));
  Eigen::VectorXd x(1);
  x << 1.0;
  const LineSearchResult r =
      backtrack(oracle, x, x, x, rb, 4.0, 0.5, LineSearchConfig{1e-4, 0.5, 30});
  CHECK(r.status == LsStatus::accepted);
  CHECK(r.alpha == doctest::Approx(1.0));
  CHECK(r.trial_count == 3);
  CHECK(r.f_new == doctest::Approx(0.0));
}

TEST_CASE("backtrack: ascent direction fails after max_backtracks") {
  Problem prob = make_half_norm_squared(2);
  Oracle oracle(prob, 0);
  const auto rb = oracle.realize(make_batch(0, 1));
  Eigen::VectorXd x(2);
  x << 1.0, 0.0;
  const Eigen::VectorXd up = -x;  // moves uphill for every alpha
  const LineSearchResult r =
      backtrack(oracle, x, up, x, rb, 1.0, 0.5, LineSearchConfig{1e-4, 0.5, 12});
  CHECK(r.status == LsStatus::failed);
  CHECK(r.alpha == 0.0);
  CHECK(r.trial_count == 12);
  CHECK(r.f_new == doctest::Approx(0.5));
}

TEST_CASE("backtrack: accepted point satisfies the sufficient decrease as evaluated") {
  Problem prob = make_half_norm_squared(3, NoiseModel::abs, 0.05);
  Oracle oracle(prob, 33);
  const auto rb = oracle.realize(make_batch(0, 4));
  Eigen::VectorXd x(3);
  x << 2.0, -1.0, 0.5;
  const auto est = oracle.fd_gradient_batch(x, 1e-6, rb);
  const LineSearchConfig cfg{1e-4, 0.5, 30};
  const LineSearchResult r =
      backtrack(oracle, x, est.batch_gradient, est.batch_gradient, rb, 1.0, est.base_mean, cfg);
  REQUIRE(r.status == LsStatus::accepted);
  const double gd = est.batch_gradient.squaredNorm();
  CHECK(r.f_new <= est.base_mean - cfg.c1 * r.alpha * gd);
  // Per-sample values at the accepted point are returned for CRN reuse.
  CHECK(r.accepted_values.size() == 4);
  double mean = 0.0;
  for (double v : r.accepted_values) mean += v;
  CHECK(r.f_new == doctest::Approx(mean / 4.0).epsilon(1e-15));
}

TEST_CASE("backtrack: each trial costs |S| evaluations") {
  Problem prob = make_half_norm_squared(2, NoiseModel::abs, 0.05);
  Oracle oracle(prob, 3);
  const auto rb = oracle.realize(make_batch(0, 5));
  Eigen::VectorXd x(2);
  x << 1.0, 1.0;
  const auto before = oracle.counter().total();
  const LineSearchResult r =
      backtrack(oracle, x, x, x, rb, 4.0, 1.0 + prob.sigma, LineSearchConfig{1e-4, 0.5, 30});
  CHECK(oracle.counter().total() - before == 5 * r.trial_count);
}

TEST_CASE("backtrack: trial sequence is deterministic") {
  Problem prob = make_half_norm_squared(2, NoiseModel::abs, 0.1);
  Eigen::VectorXd x(2);
  x << 3.0, 4.0;
  auto run_once = [&] {
    Oracle oracle(prob, 5);
    const auto rb = oracle.realize(make_batch(0, 3));
    const auto est = oracle.fd_gradient_batch(x, 1e-6, rb);
    return backtrack(oracle, x, est.batch_gradient, est.batch_gradient, rb, 1.0, est.base_mean,
                     LineSearchConfig{1e-4, 0.5, 30});
  };
  const auto a = run_once();
  const auto b = run_once();
  CHECK(a.alpha == b.alpha);
  CHECK(a.trial_count == b.trial_count);
  CHECK(a.f_new == b.f_new);
}

TEST_CASE("backtrack: non-finite trial values count as rejected trials") {
  // Residuals overflow for |x| > 2, so the first trials are rejected as
  // non-finite rather than raising.
  Problem prob;
  prob.d = 1;
  prob.p = 1;
  prob.residuals = [](const Eigen::VectorXd& x) {
    Eigen::VectorXd r(1);
    r[0] = std::abs(x[0]) > 2.0 ? std::numeric_limits<double>::infinity() : x[0];
    return r;
  };
  prob.x_standard = Eigen::VectorXd::Zero(1);
  prob.name = "cliff";
  Oracle oracle(prob, 0);
  const auto rb = oracle.realize(make_batch(0, 1));
  Eigen::VectorXd x(1);
  x << 1.0;
  Eigen::VectorXd dir(1);
  dir << 1.0;  // trial points 1-alpha for alpha in 8,4,2,1,...
  const LineSearchResult r =
      backtrack(oracle, x, dir, dir, rb, 8.0, 1.0, LineSearchConfig{1e-4, 0.5, 30});
  CHECK(r.status == LsStatus::accepted);
  // 8 and 4 overflow the residual map; 2 lands at x=-1 where f equals f_ref
  // and misses the decrease margin; 1 lands at the minimum.
  CHECK(r.trial_count == 4);
  CHECK(r.alpha == doctest::Approx(1.0));
}

TEST_CASE("fd_parameter: hand values and validation") {
  CHECK(fd_parameter(1e-16, 4.0) == doctest::Approx(1e-8).epsilon(1e-12));
  CHECK(fd_parameter(1e-16, 1.0) == doctest::Approx(2e-8).epsilon(1e-12));
  CHECK_THROWS_AS(fd_parameter(0.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(fd_parameter(1e-16, 0.0), std::invalid_argument);
}
