#include "mixfbm/cheb_table.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace mixfbm {

ChebTable::ChebTable(const std::function<double(double)>& f, int depth, int degree,
                     bool grade_left, bool grade_right)
    : deg_(degree), clamp_left_(grade_left), clamp_right_(grade_right) {
  edges_.push_back(0.0);
  if (grade_left) {
    for (int k = depth; k >= 2; --k) edges_.push_back(std::ldexp(1.0, -k));
  }
  edges_.push_back(0.5);
  if (grade_right) {
    for (int k = 2; k <= depth; ++k) edges_.push_back(1.0 - std::ldexp(1.0, -k));
  }
  edges_.push_back(1.0);

  const int n = deg_ + 1;
  std::vector<double> cx(n);
  for (int j = 0; j < n; ++j) cx[j] = std::cos(std::numbers::pi * (j + 0.5) / n);
  const std::size_t np = edges_.size() - 1;
  coef_.assign(np * n, 0.0);
  std::vector<double> vals(n);
  for (std::size_t p = 0; p < np; ++p) {
    if ((p == 0 && clamp_left_) || (p == np - 1 && clamp_right_)) continue;
    const double a = edges_[p], b = edges_[p + 1];
    for (int j = 0; j < n; ++j) vals[j] = f(0.5 * (a + b) + 0.5 * (b - a) * cx[j]);
    for (int k = 0; k < n; ++k) {
      double s = 0.0;
      for (int j = 0; j < n; ++j) s += vals[j] * std::cos(std::numbers::pi * k * (j + 0.5) / n);
      coef_[p * n + k] = (k == 0 ? 1.0 : 2.0) * s / n;
    }
  }
  if (clamp_left_) left_const_ = (*this)(edges_[1]);
  if (clamp_right_) right_const_ = (*this)(edges_[np - 1]);
}

double ChebTable::operator()(double x) const {
  const std::size_t np = edges_.size() - 1;
  std::size_t p;
  if (x <= edges_[1]) {
    if (clamp_left_ && x < edges_[1]) return left_const_;
    p = 0;
  } else if (x >= edges_[np - 1]) {
    if (clamp_right_ && x > edges_[np - 1]) return right_const_;
    p = np - 1;
  } else {
    p = static_cast<std::size_t>(std::upper_bound(edges_.begin(), edges_.end(), x) - edges_.begin()) - 1;
  }
  // an exact hit on a clamped panel's inner edge is evaluated on the neighbour
  if (clamp_left_ && p == 0) p = 1;
  if (clamp_right_ && p == np - 1) p = np - 2;
  const double a = edges_[p], b = edges_[p + 1];
  const double t = (2.0 * x - a - b) / (b - a);
  const double* c = &coef_[p * (deg_ + 1)];
  double b1 = 0.0, b2 = 0.0;
  for (int k = deg_; k >= 1; --k) {
    const double tmp = 2.0 * t * b1 - b2 + c[k];
    b2 = b1;
    b1 = tmp;
  }
  return t * b1 - b2 + c[0];
}

}  // namespace mixfbm
