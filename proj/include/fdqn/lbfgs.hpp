#pragma once

#include <Eigen/Core>
#include <cstddef>
#include <deque>

namespace fdqn {

// Limited-memory BFGS inverse-Hessian operator. Pairs are admitted through
// try_update's curvature condition, which keeps every stored rho positive and
// the operator positive definite.
class LbfgsMemory {
 public:
  explicit LbfgsMemory(std::size_t m, double gamma_init = 1.0);

  // H v via the two-loop recursion with H0 = gamma I. gamma is
  // (y's)/(y'y) of the newest pair, or gamma_init while empty.
  Eigen::VectorXd apply_h(const Eigen::VectorXd& v) const;

  // H (H v); the one extra operator application the ipqn test costs.
  Eigen::VectorXd apply_h_squared(const Eigen::VectorXd& v) const;

  // Admits (s, y) iff y's > beta ||s||^2, evicting the oldest pair beyond
  // capacity and refreshing gamma. Returns false (memory untouched) on a
  // skipped pair. Non-finite s or y is a caller bug, not a skip:
  // throws std::invalid_argument.
  bool try_update(const Eigen::VectorXd& s, const Eigen::VectorXd& y, double beta);

  std::size_t size() const { return pairs_.size(); }
  std::size_t capacity() const { return m_; }
  double gamma() const { return gamma_; }
  void clear();

 private:
  struct Pair {
    Eigen::VectorXd s;
    Eigen::VectorXd y;
    double rho;
  };

  std::deque<Pair> pairs_;  // oldest first
  std::size_t m_;
  double gamma_init_;
  double gamma_;
};

}  // namespace fdqn
