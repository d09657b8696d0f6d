#pragma once

#include <functional>
#include <vector>

#include <Eigen/Dense>

namespace mixfbm {

using Fn = std::function<double(double)>;

// Rule for  int_a^b f(x) (x-a)^p (b-x)^q dx  ~  sum w_i f(x_i).
struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
  double a = 0.0, b = 1.0;
  double p = 0.0, q = 0.0;

  std::size_t size() const { return nodes.size(); }
  template <class F>
  double apply(F&& f) const {
    double s = 0.0;
    for (std::size_t i = 0; i < nodes.size(); ++i) s += weights[i] * f(nodes[i]);
    return s;
  }
};

double gamma_fn(double x);
double beta_fn(double x, double y);

// Gauss-Jacobi via Golub-Welsch. n may go up to a few thousand.
QuadratureRule jacobi_rule(int n, double p, double q, double a = 0.0, double b = 1.0);
QuadratureRule legendre_rule(int n, double a = 0.0, double b = 1.0);

struct IntegralResult {
  double value = 0.0;
  double change = 0.0;  // |last - previous|
  int n = 0;
  bool converged = true;
};

struct RefineOptions {
  int n0 = 8;
  double rtol = 1e-10;
  int cap = 4096;
};

// Gauss-Jacobi with doubling of n until two successive values agree.
IntegralResult singular_integral(const Fn& f, double a, double b, double p, double q,
                                 const RefineOptions& opt = {});

// Composite rule for a *plain* integral  int_a^b F(x) dx  where
//   F ~ (x-a)^p near a and F ~ (b-x)^q near b (times something smooth),
// and F may have near-singular structure at distance `near_a` / `near_b`
// outside the interval (0 means: only the endpoint power itself).
// Panels shrink geometrically toward each end; the innermost panel at a
// singular end uses Gauss-Jacobi with the power divided out of the weights.
struct GradedSpec {
  double p = 0.0, q = 0.0;
  double near_a = -1.0;  // <0: no grading toward a unless p != 0
  double near_b = -1.0;
  int m = 10;            // nodes per panel
  int max_depth = 48;
};
QuadratureRule graded_rule(double a, double b, const GradedSpec& spec);

// Same as graded_rule but integrates, doubling m until converged.
IntegralResult graded_integral(const Fn& F, double a, double b, GradedSpec spec,
                               double rtol = 1e-10, int m_cap = 160);

// (I^alpha_{1-} f)(v) = 1/Gamma(alpha) int_v^1 f(t)(t-v)^{alpha-1} dt.
// `q` is the power of f at t=1; `near0` the power of f at t=0 (0 if regular).
double frac_integral_right(const Fn& f, double alpha, double v, double q = 0.0,
                           double near0 = 0.0, double rtol = 1e-10);

// Left-sided RL derivative of order alpha.  When `power` is set, f is taken to
// be t^power and the analytic rule is used.
struct FracDerivOptions {
  bool has_power = false;
  double power = 0.0;
  int stencil = 5;
  double step = 1e-3;
};
double frac_derivative_left(const Fn& f, double alpha, double x,
                            const FracDerivOptions& opt = {});
double frac_integral_left(const Fn& f, double alpha, double x, double p0 = 0.0,
                          double rtol = 1e-10);
double frac_derivative_right(const Fn& f, double alpha, double x,
                             const FracDerivOptions& opt = {});

struct DenseSolve {
  Eigen::VectorXd x;
  double condition = 1.0;  // 1-norm estimate
  double residual = 0.0;   // ||Ax-b||_inf / ||b||_inf
};
DenseSolve solve_dense(const Eigen::MatrixXd& A, const Eigen::VectorXd& b,
                       double max_condition = 1e12);

}  // namespace mixfbm
