#include "mixfbm/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <tuple>

#include <Eigen/Eigenvalues>

#include "mixfbm/errors.hpp"

namespace mixfbm {

double gamma_fn(double x) {
  if (!(x > 0.0)) throw DomainError("gamma_fn: argument must be positive");
  return std::tgamma(x);
}

double beta_fn(double x, double y) {
  if (!(x > 0.0) || !(y > 0.0)) throw DomainError("beta_fn: arguments must be positive");
  // lgamma route keeps large arguments finite; direct ratio is more accurate below 20
  if (x + y < 20.0) return std::tgamma(x) * std::tgamma(y) / std::tgamma(x + y);
  return std::exp(std::lgamma(x) + std::lgamma(y) - std::lgamma(x + y));
}

namespace {

struct RefRule {
  std::vector<double> t, w;  // on [-1,1], weight (1-t)^alpha (1+t)^beta
};

RefRule golub_welsch(int n, double alpha, double beta) {
  Eigen::VectorXd d(n), e(std::max(n - 1, 0));
  const double ab = alpha + beta;
  d[0] = (beta - alpha) / (ab + 2.0);
  for (int k = 1; k < n; ++k) {
    const double s = 2.0 * k + ab;
    d[k] = (beta * beta - alpha * alpha) / (s * (s + 2.0));
  }
  for (int k = 1; k < n; ++k) {
    const double s = 2.0 * k + ab;
    double bk;
    if (k == 1) {
      bk = 4.0 * (1.0 + alpha) * (1.0 + beta) / ((2.0 + ab) * (2.0 + ab) * (3.0 + ab));
    } else {
      bk = 4.0 * k * (k + alpha) * (k + beta) * (k + ab) / (s * s * (s + 1.0) * (s - 1.0));
    }
    e[k - 1] = std::sqrt(bk);
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
  es.computeFromTridiagonal(d, e, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw AccuracyError("jacobi_rule: tridiagonal eigensolver failed");
  const double mu0 = std::pow(2.0, ab + 1.0) * beta_fn(alpha + 1.0, beta + 1.0);
  RefRule r;
  r.t.resize(n);
  r.w.resize(n);
  // Christoffel numbers from the orthonormal recurrence; eigenvalues come back ascending
  for (int i = 0; i < n; ++i) {
    const double x = es.eigenvalues()[i];
    double p_prev = 0.0, p = 1.0, sum = 1.0;
    for (int k = 0; k + 1 < n; ++k) {
      const double next = ((x - d[k]) * p - (k > 0 ? e[k - 1] * p_prev : 0.0)) / e[k];
      p_prev = p;
      p = next;
      sum += p * p;
    }
    r.t[i] = x;
    r.w[i] = mu0 / sum;
  }
  return r;
}

std::shared_ptr<const RefRule> cached_rule(int n, double alpha, double beta) {
  static std::mutex mu;
  static std::map<std::tuple<int, double, double>, std::shared_ptr<const RefRule>> cache;
  const auto key = std::make_tuple(n, alpha, beta);
  {
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
  }
  auto rule = std::make_shared<const RefRule>(golub_welsch(n, alpha, beta));
  std::lock_guard<std::mutex> lock(mu);
  cache.emplace(key, rule);
  return rule;
}

}  // namespace

QuadratureRule jacobi_rule(int n, double p, double q, double a, double b) {
  if (n < 1) throw DomainError("jacobi_rule: n must be >= 1");
  if (!(p > -1.0) || !(q > -1.0)) throw DomainError("jacobi_rule: exponents must exceed -1");
  if (!(b > a)) throw DomainError("jacobi_rule: need a < b");
  auto ref = cached_rule(n, q, p);
  QuadratureRule r;
  r.a = a;
  r.b = b;
  r.p = p;
  r.q = q;
  r.nodes.resize(n);
  r.weights.resize(n);
  const double h = 0.5 * (b - a);
  const double scale = std::pow(h, p + q + 1.0);
  for (int i = 0; i < n; ++i) {
    r.nodes[i] = a + h * (1.0 + ref->t[i]);
    r.weights[i] = scale * ref->w[i];
  }
  return r;
}

QuadratureRule legendre_rule(int n, double a, double b) { return jacobi_rule(n, 0.0, 0.0, a, b); }

IntegralResult singular_integral(const Fn& f, double a, double b, double p, double q,
                                 const RefineOptions& opt) {
  IntegralResult res;
  int n = std::max(1, opt.n0);
  double prev = jacobi_rule(n, p, q, a, b).apply(f);
  while (true) {
    n *= 2;
    if (n > opt.cap) {
      res.converged = false;
      res.value = prev;
      res.n = n / 2;
      break;
    }
    const double cur = jacobi_rule(n, p, q, a, b).apply(f);
    res.change = std::abs(cur - prev);
    res.value = cur;
    res.n = n;
    if (res.change <= opt.rtol * std::abs(cur) || res.change == 0.0) return res;
    prev = cur;
  }
  // f itself is not smooth at an end (e.g. a stray power): geometric panels instead
  GradedSpec g;
  g.p = p;
  g.q = q;
  g.near_a = 0.0;
  g.near_b = 0.0;
  const Fn F = [&](double x) { return f(x) * std::pow(x - a, p) * std::pow(b - x, q); };
  const IntegralResult r = graded_integral(F, a, b, g, opt.rtol);
  if (r.converged) return r;
  return res;
}

namespace {

int depth_for(double len, double near, int max_depth) {
  if (near < 0.0) return 0;
  if (near == 0.0) return max_depth;
  const int k = static_cast<int>(std::ceil(std::log2(len / near))) + 1;
  return std::clamp(k, 1, max_depth);
}

}  // namespace

QuadratureRule graded_rule(double a, double b, const GradedSpec& spec) {
  if (!(b > a)) throw DomainError("graded_rule: need a < b");
  const double len = b - a;
  // keep innermost nodes resolvable next to a nonzero endpoint
  const double tiny = std::numeric_limits<double>::min();
  const double floor_a = std::max(1e-10 * std::abs(a), tiny);
  const double floor_b = std::max(1e-10 * std::abs(b), tiny);
  int kl = depth_for(len, spec.near_a, spec.max_depth);
  int kr = depth_for(len, spec.near_b, spec.max_depth);
  if (spec.p != 0.0 && spec.q != 0.0) {
    kl = std::max(kl, 1);
    kr = std::max(kr, 1);
  }
  std::vector<double> br{a, b};
  for (int k = 1; k <= kl; ++k) {
    const double w = std::ldexp(len, -k);
    if (w < floor_a) break;
    br.push_back(a + w);
  }
  for (int k = 1; k <= kr; ++k) {
    const double w = std::ldexp(len, -k);
    if (w < floor_b) break;
    br.push_back(b - w);
  }
  std::sort(br.begin(), br.end());
  br.erase(std::unique(br.begin(), br.end()), br.end());

  QuadratureRule out;
  out.a = a;
  out.b = b;
  out.p = spec.p;
  out.q = spec.q;
  const auto gl = cached_rule(spec.m, 0.0, 0.0);
  const std::size_t np = br.size() - 1;
  for (std::size_t i = 0; i < np; ++i) {
    const double c = br[i], d = br[i + 1];
    const bool at_a = (i == 0) && spec.p != 0.0;
    const bool at_b = (i == np - 1) && spec.q != 0.0;
    if (at_a || at_b) {
      const double pp = at_a ? spec.p : 0.0;
      const double qq = at_b ? spec.q : 0.0;
      const QuadratureRule jr = jacobi_rule(spec.m, pp, qq, c, d);
      for (std::size_t j = 0; j < jr.size(); ++j) {
        const double x = jr.nodes[j];
        double w = jr.weights[j];
        if (at_a) w /= std::pow(x - a, pp);
        if (at_b) w /= std::pow(b - x, qq);
        out.nodes.push_back(x);
        out.weights.push_back(w);
      }
    } else {
      const double h = 0.5 * (d - c);
      for (std::size_t j = 0; j < gl->t.size(); ++j) {
        out.nodes.push_back(c + h * (1.0 + gl->t[j]));
        out.weights.push_back(h * gl->w[j]);
      }
    }
  }
  return out;
}

IntegralResult graded_integral(const Fn& F, double a, double b, GradedSpec spec, double rtol,
                               int m_cap) {
  IntegralResult res;
  double prev = graded_rule(a, b, spec).apply(F);
  while (true) {
    spec.m *= 2;
    if (spec.m > m_cap) {
      res.converged = false;
      res.value = prev;
      res.n = spec.m / 2;
      return res;
    }
    const double cur = graded_rule(a, b, spec).apply(F);
    res.change = std::abs(cur - prev);
    res.value = cur;
    res.n = spec.m;
    if (res.change <= rtol * std::abs(cur) || res.change == 0.0) return res;
    prev = cur;
  }
}

double frac_integral_right(const Fn& f, double alpha, double v, double q, double near0,
                           double rtol) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("frac_integral_right: alpha must be in (0,1)");
  if (v >= 1.0) return 0.0;
  if (v < 0.0) throw DomainError("frac_integral_right: v must lie in [0,1)");
  GradedSpec g;
  g.p = alpha - 1.0 + (v == 0.0 ? near0 : 0.0);
  g.q = q;
  g.near_a = (near0 != 0.0 && v > 0.0) ? v : -1.0;
  g.m = 12;
  const Fn F = [&](double t) { return f(t) * std::pow(t - v, alpha - 1.0); };
  return graded_integral(F, v, 1.0, g, rtol).value / gamma_fn(alpha);
}

double frac_integral_left(const Fn& f, double alpha, double x, double p0, double rtol) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("frac_integral_left: alpha must be in (0,1)");
  if (x <= 0.0) return 0.0;
  GradedSpec g;
  g.p = p0;
  g.q = alpha - 1.0;
  g.m = 12;
  const Fn F = [&](double t) { return f(t) * std::pow(x - t, alpha - 1.0); };
  return graded_integral(F, 0.0, x, g, rtol).value / gamma_fn(alpha);
}

namespace {

// derivative at the centre of an equispaced stencil
double central_derivative(const std::vector<double>& vals, double h) {
  const int s = static_cast<int>(vals.size());
  const double c = 0.5 * (s - 1);
  double acc = 0.0;
  for (int j = 0; j < s; ++j) {
    // l_j'(c) for nodes 0..s-1
    double dj = 0.0;
    for (int k = 0; k < s; ++k) {
      if (k == j) continue;
      double prod = 1.0 / (j - k);
      for (int m = 0; m < s; ++m) {
        if (m == j || m == k) continue;
        prod *= (c - m) / (j - m);
      }
      dj += prod;
    }
    acc += dj * vals[j];
  }
  return acc / h;
}

}  // namespace

double frac_derivative_left(const Fn& f, double alpha, double x, const FracDerivOptions& opt) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("frac_derivative_left: alpha must be in (0,1)");
  if (opt.has_power) {
    const double b = opt.power;
    return gamma_fn(b + 1.0) / std::tgamma(b + 1.0 - alpha) * std::pow(x, b - alpha);
  }
  const int s = std::max(3, opt.stencil | 1);
  const double h = opt.step * x;
  std::vector<double> vals(s);
  for (int j = 0; j < s; ++j) {
    const double xj = x + (j - 0.5 * (s - 1)) * h;
    vals[j] = frac_integral_left(f, 1.0 - alpha, xj, 0.0, 1e-13);
  }
  return central_derivative(vals, h);
}

double frac_derivative_right(const Fn& f, double alpha, double x, const FracDerivOptions& opt) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("frac_derivative_right: alpha must be in (0,1)");
  const int s = std::max(3, opt.stencil | 1);
  const double h = opt.step * std::min(x, 1.0 - x);
  std::vector<double> vals(s);
  for (int j = 0; j < s; ++j) {
    const double xj = x + (j - 0.5 * (s - 1)) * h;
    vals[j] = frac_integral_right(f, 1.0 - alpha, xj, 0.0, 0.0, 1e-13);
  }
  return -central_derivative(vals, h);
}

DenseSolve solve_dense(const Eigen::MatrixXd& A, const Eigen::VectorXd& b, double max_condition) {
  if (A.rows() != A.cols() || A.rows() != b.size()) throw DomainError("solve_dense: shape mismatch");
  DenseSolve out;
  if (A.rows() == 0) return out;
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(A);
  const double rc = lu.rcond();
  out.condition = rc > 0.0 ? 1.0 / rc : std::numeric_limits<double>::infinity();
  if (!(out.condition <= max_condition)) {
    throw IllConditioned("solve_dense: condition estimate exceeds limit", out.condition);
  }
  out.x = lu.solve(b);
  const double bn = b.lpNorm<Eigen::Infinity>();
  out.residual = (A * out.x - b).lpNorm<Eigen::Infinity>() / (bn > 0.0 ? bn : 1.0);
  return out;
}

}  // namespace mixfbm
