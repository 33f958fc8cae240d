#include "fdqn/lbfgs.hpp"

#include <stdexcept>
#include <vector>

namespace fdqn {

LbfgsMemory::LbfgsMemory(std::size_t m, double gamma_init)
    : m_(m), gamma_init_(gamma_init), gamma_(gamma_init) {
  if (m == 0) throw std::invalid_argument("lbfgs memory capacity must be positive");
  if (!(gamma_init > 0.0)) throw std::invalid_argument("gamma must be positive");
}

Eigen::VectorXd LbfgsMemory::apply_h(const Eigen::VectorXd& v) const {
  Eigen::VectorXd q = v;
  const std::size_t n = pairs_.size();
  std::vector<double> a(n);
  for (std::size_t i = n; i-- > 0;) {
    const Pair& pr = pairs_[i];
    a[i] = pr.rho * pr.s.dot(q);
    q -= a[i] * pr.y;
  }
  q *= gamma_;
  for (std::size_t i = 0; i < n; ++i) {
    const Pair& pr = pairs_[i];
    const double b = pr.rho * pr.y.dot(q);
    q += (a[i] - b) * pr.s;
  }
  return q;
}

Eigen::VectorXd LbfgsMemory::apply_h_squared(const Eigen::VectorXd& v) const {
  return apply_h(apply_h(v));
}

bool LbfgsMemory::try_update(const Eigen::VectorXd& s, const Eigen::VectorXd& y, double beta) {
  if (!s.allFinite() || !y.allFinite())
    throw std::invalid_argument("curvature pair with non-finite entries");
  const double ys = y.dot(s);
  if (!(ys > beta * s.squaredNorm())) return false;

  pairs_.push_back({s, y, 1.0 / ys});
  if (pairs_.size() > m_) pairs_.pop_front();
  gamma_ = ys / y.squaredNorm();
  return true;
}

void LbfgsMemory::clear() {
  pairs_.clear();
  gamma_ = gamma_init_;
}

}  // namespace fdqn
