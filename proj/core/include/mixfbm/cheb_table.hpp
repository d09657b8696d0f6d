#pragma once

#include <functional>
#include <vector>

namespace mixfbm {

// Piecewise Chebyshev interpolant of a function on (0,1), with panels that
// halve toward both ends.  The two outermost panels (width 2^-depth) hold
// the constant value of their inner neighbour at the shared edge.
class ChebTable {
 public:
  ChebTable() = default;
  ChebTable(const std::function<double(double)>& f, int depth = 44, int degree = 20,
            bool grade_left = true, bool grade_right = true);

  double operator()(double x) const;
  bool empty() const { return edges_.empty(); }
  std::size_t panels() const { return edges_.empty() ? 0 : edges_.size() - 1; }

 private:
  std::vector<double> edges_;
  std::vector<double> coef_;  // panels() x (degree+1)
  int deg_ = 0;
  double left_const_ = 0.0, right_const_ = 0.0;
  bool clamp_left_ = false, clamp_right_ = false;
};

}  // namespace mixfbm
