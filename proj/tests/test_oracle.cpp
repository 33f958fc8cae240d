#include <doctest.h>

#include <cmath>

#include "fdqn/oracle.hpp"
#include "support.hpp"

using namespace fdqn;
using namespace fdqn::testing;

namespace {

// Fixed residual map phi(x) = c for hand-value checks.
Problem constant_residuals(const Eigen::VectorXd& c, NoiseModel model, double sigma) {
  Problem prob;
  prob.d = 1;
  prob.p = static_cast<int>(c.size());
  prob.residuals = [c](const Eigen::VectorXd&) { return c; };
  prob.noise_model = model;
  prob.sigma = sigma;
  prob.x_standard = Eigen::VectorXd::Zero(1);
  prob.name = "constant";
  return prob;
}

Problem with_fixed_noise(Problem prob, const Eigen::VectorXd& zeta) {
  prob.noise_override = [zeta](CrnSample, int) { return zeta; };
  return prob;
}

}  // namespace

TEST_CASE("eval_f: noise-free value is sum of squared residuals for both models") {
  Eigen::VectorXd c(2);
  c << 1.0, 2.0;
  for (NoiseModel model : {NoiseModel::abs, NoiseModel::rel}) {
    Problem prob = constant_residuals(c, model, 0.0);
    Oracle oracle(prob, 0);
    CHECK(oracle.eval_f(Eigen::VectorXd::Zero(1), CrnSample{0}) == doctest::Approx(5.0));
  }
}

TEST_CASE("eval_f: abs model hand value") {
  // phi=(1,0), zeta=(0.1,-0.2), sigma=0.1:
  // (1.1)^2 + (-0.2)^2 - p sigma^2 = 1.25 - 0.02 = 1.23. The p sigma^2
  // debias is what makes E[f] = sum phi^2 hold exactly for p > 1.
  Eigen::VectorXd c(2);
  c << 1.0, 0.0;
  Eigen::VectorXd zeta(2);
  zeta << 0.1, -0.2;
  Problem prob = with_fixed_noise(constant_residuals(c, NoiseModel::abs, 0.1), zeta);
  Oracle oracle(prob, 0);
  CHECK(oracle.eval_f(Eigen::VectorXd::Zero(1), CrnSample{0}) == doctest::Approx(1.23).epsilon(1e-12));
}

TEST_CASE("eval_f: rel model hand value") {
  // phi=(1,1), zeta=(0,0), sigma=0.1: 2 / 1.01.
  Eigen::VectorXd c(2);
  c << 1.0, 1.0;
  Eigen::VectorXd zeta = Eigen::VectorXd::Zero(2);
  Problem prob = with_fixed_noise(constant_residuals(c, NoiseModel::rel, 0.1), zeta);
  Oracle oracle(prob, 0);
  CHECK(oracle.eval_f(Eigen::VectorXd::Zero(1), CrnSample{0}) ==
        doctest::Approx(2.0 / 1.01).epsilon(1e-12));
}

TEST_CASE("eval_f: non-finite residuals raise EvaluationError") {
  Problem prob = make_half_norm_squared(2);
  Oracle oracle(prob, 0);
  Eigen::VectorXd x(2);
  x << std::numeric_limits<double>::infinity(), 0.0;
  CHECK_THROWS_AS(oracle.eval_f(x, CrnSample{0}), EvaluationError);
}

TEST_CASE("eval_f increments the counter by one") {
  Problem prob = make_half_norm_squared(3, NoiseModel::abs, 0.2);
  Oracle oracle(prob, 5);
  oracle.eval_f(Eigen::VectorXd::Ones(3), CrnSample{4});
  CHECK(oracle.counter().total() == 1);
}

TEST_CASE("fd_gradient_sample: exact on a linear function") {
  // f(x) = a'x + C realized through a sqrt residual; forward differences are
  // exact on linear functions up to roundoff.
  Eigen::VectorXd a(2);
  a << 2.0, -3.0;
  Problem prob;
  prob.d = 2;
  prob.p = 1;
  prob.residuals = [a](const Eigen::VectorXd& x) {
    Eigen::VectorXd r(1);
    r[0] = std::sqrt(a.dot(x) + 16.0);
    return r;
  };
  prob.x_standard = Eigen::VectorXd::Zero(2);
  prob.name = "linear";
  Oracle oracle(prob, 0);
  Eigen::VectorXd x(2);
  x << 0.25, 0.5;
  const Eigen::VectorXd g = oracle.fd_gradient_sample(x, 0.5, CrnSample{0});
  CHECK(g[0] == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(g[1] == doctest::Approx(-3.0).epsilon(1e-12));
}

TEST_CASE("fd_gradient_sample: quadratic 1d hand value") {
  // f(x) = x^2, x=1, nu=0.1 -> (1.1^2 - 1)/0.1 = 2.1.
  Problem prob;
  prob.d = 1;
  prob.p = 1;
  prob.residuals = [](const Eigen::VectorXd& x) { return x; };
  prob.x_standard = Eigen::VectorXd::Zero(1);
  prob.name = "square";
  Oracle oracle(prob, 0);
  const Eigen::VectorXd g = oracle.fd_gradient_sample(Eigen::VectorXd::Ones(1), 0.1, CrnSample{0});
  CHECK(g[0] == doctest::Approx(2.1).epsilon(1e-12));
}

TEST_CASE("fd_gradient_sample: CRN determinism with noise") {
  Problem prob = make_half_norm_squared(3, NoiseModel::abs, 0.5);
  Oracle oracle(prob, 11);
  Eigen::VectorXd x(3);
  x << 1.0, -2.0, 0.5;
  const Eigen::VectorXd g1 = oracle.fd_gradient_sample(x, 1e-3, CrnSample{9});
  const Eigen::VectorXd g2 = oracle.fd_gradient_sample(x, 1e-3, CrnSample{9});
  CHECK(g1 == g2);
  CHECK(oracle.counter().total() == 2 * (3 + 1));
}

TEST_CASE("fd_gradient_batch: singleton batch equals the sample gradient") {
  Problem prob = make_half_norm_squared(4, NoiseModel::abs, 0.3);
  Oracle a(prob, 3);
  Oracle b(prob, 3);
  Eigen::VectorXd x(4);
  x << 0.1, 0.2, 0.3, 0.4;
  const auto est = a.fd_gradient_batch(x, 1e-4, make_batch(17, 1));
  const Eigen::VectorXd gs = b.fd_gradient_sample(x, 1e-4, CrnSample{17});
  CHECK(est.batch_gradient == gs);
  CHECK(est.sample_variance == 0.0);
}

TEST_CASE("fd_gradient_batch: noise-free batches have zero variance") {
  Problem prob = make_half_norm_squared(3);
  Oracle oracle(prob, 0);
  const auto est = oracle.fd_gradient_batch(Eigen::VectorXd::Ones(3), 1e-6, make_batch(0, 5));
  CHECK(est.sample_variance == 0.0);
  for (const auto& g : est.per_sample_gradients) CHECK(g == est.batch_gradient);
}

TEST_CASE("fd_gradient_batch: hand-computed mean and variance") {
  // With phi(x) = x and abs noise, the per-sample gradient is 2(x + zeta_i);
  // the noise patterns below realize per-sample gradients (1,0),(0,1),(2,2)
  // at x = 0, whose mean is (1,1) and whose sample variance is
  // (|(0,-1)|^2 + |(-1,0)|^2 + |(1,1)|^2)/2 = 2.
  Problem prob;
  prob.d = 2;
  prob.p = 2;
  prob.residuals = [](const Eigen::VectorXd& x) -> Eigen::VectorXd { return x; };
  prob.x_standard = Eigen::VectorXd::Zero(2);
  prob.name = "identity";
  const std::vector<Eigen::Vector2d> zetas = {{0.5, 0.0}, {0.0, 0.5}, {1.0, 1.0}};
  prob.noise_override = [zetas](CrnSample s, int) -> Eigen::VectorXd { return zetas.at(s.id); };

  Oracle oracle(prob, 0);
  const auto est = oracle.fd_gradient_batch(Eigen::VectorXd::Zero(2), 1e-7, make_batch(0, 3));
  CHECK(est.batch_gradient[0] == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(est.batch_gradient[1] == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(est.sample_variance == doctest::Approx(2.0).epsilon(1e-6));
  CHECK(est.per_sample_gradients.size() == 3);
  CHECK(est.per_sample_gradients[2][0] == doctest::Approx(2.0).epsilon(1e-6));
}

TEST_CASE("fd_gradient_batch: evaluation accounting is exactly (d+1)|S|") {
  Problem prob = make_half_norm_squared(6, NoiseModel::abs, 0.1);
  Oracle oracle(prob, 2);
  oracle.fd_gradient_batch(Eigen::VectorXd::Ones(6), 1e-5, make_batch(0, 9));
  CHECK(oracle.counter().total() == (6 + 1) * 9);
}

TEST_CASE("fd_gradient_batch_with_base: reuses base values, costs d|S|") {
  Problem prob = make_half_norm_squared(5, NoiseModel::abs, 0.1);
  Oracle oracle(prob, 2);
  const Eigen::VectorXd x = Eigen::VectorXd::Ones(5);
  const auto rb = oracle.realize(make_batch(0, 3));
  const auto values = oracle.eval_batch_values(x, rb);
  const long long before = oracle.counter().total();
  const auto est = oracle.fd_gradient_batch_with_base(x, 1e-5, rb, values);
  CHECK(oracle.counter().total() - before == 5 * 3);
  // Same result as the full-cost path.
  Oracle fresh(prob, 2);
  const auto full = fresh.fd_gradient_batch(x, 1e-5, make_batch(0, 3));
  CHECK(est.batch_gradient == full.batch_gradient);
}

TEST_CASE("eval_batch_mean: noise-free equals sum of squares; singleton equals eval_f") {
  Problem prob = make_half_norm_squared(3);
  Oracle oracle(prob, 0);
  Eigen::VectorXd x(3);
  x << 1.0, 2.0, 2.0;
  CHECK(oracle.eval_batch_mean(x, make_batch(0, 4)) == doctest::Approx(4.5));

  Problem noisy = make_half_norm_squared(3, NoiseModel::abs, 0.2);
  Oracle a(noisy, 8);
  Oracle b(noisy, 8);
  CHECK(a.eval_batch_mean(x, make_batch(21, 1)) == b.eval_f(x, CrnSample{21}));
}

TEST_CASE("eval_batch_mean: matches an independently computed average") {
  Problem prob = make_half_norm_squared(2, NoiseModel::abs, 0.4);
  Oracle oracle(prob, 13);
  Eigen::VectorXd x(2);
  x << 0.5, -1.5;
  const Batch batch = make_batch(100, 6);
  double acc = 0.0;
  for (const CrnSample s : batch.samples) {
    Oracle one(prob, 13);
    acc += one.eval_f(x, s);
  }
  CHECK(oracle.eval_batch_mean(x, batch) == doctest::Approx(acc / 6.0).epsilon(1e-15));
}

TEST_CASE("CRN purity: batch operations are pure functions of their inputs") {
  Problem prob = make_half_norm_squared(4, NoiseModel::rel, 0.05);
  Eigen::VectorXd x(4);
  x << 0.9, -0.1, 0.4, 0.2;
  Oracle a(prob, 77);
  Oracle b(prob, 77);
  const auto e1 = a.fd_gradient_batch(x, 1e-6, make_batch(5, 7));
  const auto e2 = b.fd_gradient_batch(x, 1e-6, make_batch(5, 7));
  CHECK(e1.batch_gradient == e2.batch_gradient);
  CHECK(e1.sample_variance == e2.sample_variance);
  CHECK(e1.base_values == e2.base_values);
}

TEST_CASE("unbiasedness by exact enumeration over the sign-noise support") {
  // With zeta_j in {-sigma, +sigma} equiprobable, enumerating ids 0..2^p-1
  // gives the exact expectation: E[f] = sum phi^2 and E[grad per sample]
  // equals the FD gradient of the expected function.
  const double sigma = 0.3;
  const int d = 2;
  const int p = 3;
  Problem prob;
  prob.d = d;
  prob.p = p;
  prob.residuals = [](const Eigen::VectorXd& x) {
    Eigen::Vector3d r;
    r << x[0] + 0.5, x[1] - 0.25, x[0] * x[1];
    return r;
  };
  prob.x_standard = Eigen::VectorXd::Zero(d);
  prob.name = "enum";

  Eigen::VectorXd x(2);
  x << 0.4, -0.8;
  const double nu = 1e-3;

  Problem noise_free = prob;
  Oracle exact(noise_free, 0);
  const double f_expected = true_objective(prob, x);
  const Eigen::VectorXd fd_of_mean = exact.fd_gradient_sample(x, nu, CrnSample{0});

  for (NoiseModel model : {NoiseModel::abs, NoiseModel::rel}) {
    Problem noisy = prob;
    noisy.noise_model = model;
    noisy.sigma = sigma;
    noisy.noise_override = sign_noise(sigma);
    Oracle oracle(noisy, 0);

    const int support = 1 << p;
    double f_mean = 0.0;
    Eigen::VectorXd g_mean = Eigen::VectorXd::Zero(d);
    for (int id = 0; id < support; ++id) {
      f_mean += oracle.eval_f(x, CrnSample{static_cast<std::uint64_t>(id)});
      g_mean += oracle.fd_gradient_sample(x, nu, CrnSample{static_cast<std::uint64_t>(id)});
    }
    f_mean /= support;
    g_mean /= support;
    CHECK(f_mean == doctest::Approx(f_expected).epsilon(1e-12));
    CHECK((g_mean - fd_of_mean).cwiseAbs().maxCoeff() <= 1e-12);

    // Batches of size 2, enumerated exhaustively over ordered pairs.
    Eigen::VectorXd batch_mean = Eigen::VectorXd::Zero(d);
    int count = 0;
    for (int i = 0; i < support; ++i) {
      for (int j = 0; j < support; ++j) {
        if (i == j) continue;  // batch ids are distinct
        Batch b;
        b.samples = {CrnSample{static_cast<std::uint64_t>(i)},
                     CrnSample{static_cast<std::uint64_t>(j)}};
        b.variance_subset_size = 2;
        batch_mean += oracle.fd_gradient_batch(x, nu, b).batch_gradient;
        ++count;
      }
    }
    batch_mean /= count;
    CHECK((batch_mean - fd_of_mean).cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("make_batch: distinct consecutive ids and variance subset bounds") {
  const Batch b = make_batch(40, 10, 0.5);
  CHECK(b.size() == 10);
  CHECK(b.variance_subset_size == 5);
  for (std::size_t i = 0; i < b.size(); ++i) CHECK(b.samples[i].id == 40 + i);
  CHECK(make_batch(0, 3, 1.0).variance_subset_size == 3);
  CHECK(make_batch(0, 3, 0.01).variance_subset_size == 1);
  CHECK_THROWS_AS(make_batch(0, 0), std::invalid_argument);
}
