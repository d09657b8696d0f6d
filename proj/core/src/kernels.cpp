#include "mixfbm/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>

#include "mixfbm/errors.hpp"
#include "mixfbm/numerics.hpp"

namespace mixfbm {

KernelContext::KernelContext(const DerivedConstants& c, int n, double tol)
    : constants(c), quad_n(n), rtol(tol) {
  if (quad_n < 8) throw DomainError("KernelContext: quad_n must be >= 8");
}

namespace {

void check_pair(double t, double s, const char* who) {
  if (!(s > 0.0) || s > t) throw DomainError(std::string(who) + ": requires 0 < s <= t");
}

// int_0^1 z^{zp}(1-z)^{zq} G(z) dz with G near-singular at z = -x/(1-x)
double z_integral(double zp, double zq, double x_over, const Fn& G, double rtol, int cap) {
  GradedSpec g;
  g.p = zp;
  g.q = zq;
  g.near_a = x_over;
  g.m = 12;
  const Fn F = [&](double z) { return std::pow(z, zp) * std::pow(1.0 - z, zq) * G(z); };
  return graded_integral(F, 0.0, 1.0, g, rtol, cap).value;
}

}  // namespace

double kernel_KH(double H, double t, double s, double rtol) {
  if (!(H > 0.5 && H < 1.0)) throw DomainError("kernel_KH: H must lie in (1/2,1)");
  check_pair(t, s, "kernel_KH");
  if (s == t) return 0.0;
  const double w = t - s;
  const Fn G = [&](double z) { return std::pow(s + w * z, H - 0.5); };
  const double I = z_integral(H - 1.5, 0.0, s / w, G, rtol, 192);
  return beta_h(H) * std::pow(s, 0.5 - H) * std::pow(w, H - 0.5) * I;
}

double kernel_K12(const KernelContext& ctx, double t, double s) {
  check_pair(t, s, "kernel_K12");
  if (s == t) return 0.0;
  const double h1 = ctx.h1(), h2 = ctx.h2();
  const double w = t - s;
  const Fn G = [&](double z) { return std::pow(s + w * z, h2 - h1); };
  const double I = z_integral(h2 - 1.5, 0.5 - h1, s / w, G, ctx.rtol, 4 * ctx.quad_n);
  return ctx.constants.beta_h2 * std::pow(s, 0.5 - h2) * std::pow(w, h2 - h1) * I;
}

double kernel_K12_dt(const KernelContext& ctx, double t, double s) {
  if (!(s > 0.0) || !(s < t)) throw DomainError("kernel_K12_dt: requires 0 < s < t");
  const double h1 = ctx.h1(), h2 = ctx.h2();
  const double w = t - s;
  const Fn G = [&](double z) {
    const double g = s + w * z;
    return std::pow(g, h2 - h1 - 1.0) * (g + w * z);
  };
  const double I = z_integral(h2 - 1.5, 0.5 - h1, s / w, G, ctx.rtol, 4 * ctx.quad_n);
  return (h2 - h1) * ctx.constants.beta_h2 * std::pow(s, 0.5 - h2) * std::pow(w, h2 - h1 - 1.0) * I;
}

double kernel_J_direct(const HurstPair& hp, double x, double rtol) {
  const double w = 1.0 - x;
  const Fn G = [&](double z) { return std::pow(x + w * z, hp.h2 - hp.h1); };
  return z_integral(hp.h2 - 1.5, 0.5 - hp.h1, x / w, G, rtol, 192);
}

double kernel_E_direct(const HurstPair& hp, double x, double rtol) {
  const double w = 1.0 - x;
  const Fn G = [&](double z) {
    const double g = x + w * z;
    return std::pow(g, hp.h2 - hp.h1 - 1.0) * (g + w * z);
  };
  return (hp.h2 - hp.h1) * beta_h(hp.h2) *
         z_integral(hp.h2 - 1.5, 0.5 - hp.h1, x / w, G, rtol, 192);
}

namespace {

// points closer than this (relative) to the diagonal are moved off it
constexpr double kDiagGuard = 1e-8;

void guard_diagonal(double& lo, double hi) {
  if (hi - lo < kDiagGuard * hi) lo = hi * (1.0 - kDiagGuard);
}

}  // namespace

double kernel_k(const KernelContext& ctx, double s, double u) {
  if (!(s > 0.0) || !(u > 0.0)) throw DomainError("kernel_k: arguments must be positive");
  auto tab = KernelTables::get(ctx.constants.hurst);
  double lo = std::min(s, u), hi = std::max(s, u);
  guard_diagonal(lo, hi);
  return tab->k_quadrature(lo, hi, std::min(ctx.rtol, 1e-10));
}

double kernel_k_direct(const KernelContext& ctx, double s, double u, double rtol, bool tabulated_dk) {
  if (!(s > 0.0) || !(u > 0.0)) throw DomainError("kernel_k_direct: arguments must be positive");
  double lo = std::min(s, u), hi = std::max(s, u);
  guard_diagonal(lo, hi);
  GradedSpec g;
  g.p = 1.0 - 2.0 * ctx.h2();
  g.q = ctx.h2() - ctx.h1() - 1.0;
  g.near_a = 1e-9 * lo;
  g.near_b = hi - lo;
  g.m = 12;
  if (tabulated_dk) {
    auto tab = KernelTables::get(ctx.constants.hurst);
    const Fn F = [&](double v) { return tab->dK12(lo, v) * tab->dK12(hi, v); };
    return graded_integral(F, 0.0, lo, g, rtol, 48).value;
  }
  const Fn F = [&](double v) { return kernel_K12_dt(ctx, lo, v) * kernel_K12_dt(ctx, hi, v); };
  return graded_integral(F, 0.0, lo, g, rtol, 48).value;
}

double kernel_k1(const KernelContext& ctx, double s, double u) {
  if (!(s > 0.0) || !(u > 0.0)) throw DomainError("kernel_k1: arguments must be positive");
  auto tab = KernelTables::get(ctx.constants.hurst);
  double lo = std::min(s, u), hi = std::max(s, u);
  guard_diagonal(lo, hi);
  return tab->k1(lo, hi);
}

double covariance_X2(const KernelContext& ctx, double t, double s) {
  if (t < 0.0 || s < 0.0) throw DomainError("covariance_X2: times must be nonnegative");
  return KernelTables::get(ctx.constants.hurst)->R(t, s);
}

double covariance_X2_double(const KernelContext& ctx, double t, double s, double rtol) {
  if (t < 0.0 || s < 0.0) throw DomainError("covariance_X2_double: times must be nonnegative");
  if (t == 0.0 || s == 0.0) return 0.0;
  const double h1 = ctx.h1(), h2 = ctx.h2();
  const double a = 0.5 - h1, e = 2.0 * h2 - 2.0;
  auto l = [&](double T, double x) { return std::pow(T - x, a) * std::pow(x, a); };
  // G(u) = int_0^s l(s,v)|u-v|^{2H2-2} dv
  auto G = [&](double u) {
    GradedSpec g;
    g.m = 24;
    if (u < s) {
      g.p = a;
      g.q = e;
      g.near_b = s - u;
      double left = graded_rule(0.0, u, g).apply([&](double v) { return l(s, v) * std::pow(u - v, e); });
      GradedSpec g2;
      g2.m = 24;
      g2.p = e;
      g2.q = a;
      g2.near_a = u;
      double right = graded_rule(u, s, g2).apply([&](double v) { return l(s, v) * std::pow(v - u, e); });
      return left + right;
    }
    g.p = a;
    g.q = (u == s) ? a + e : a;
    g.near_b = (u == s) ? -1.0 : u - s;
    return graded_rule(0.0, s, g).apply([&](double v) { return l(s, v) * std::pow(u - v, e); });
  };
  const Fn outer = [&](double u) { return l(t, u) * G(u); };
  double total = 0.0;
  if (s < t) {
    GradedSpec g1;
    g1.p = a;
    g1.near_b = 0.0;
    g1.max_depth = 30;
    total += graded_integral(outer, 0.0, s, g1, rtol, 96).value;
    GradedSpec g2;
    g2.q = a;
    g2.near_a = 0.0;
    g2.max_depth = 30;
    total += graded_integral(outer, s, t, g2, rtol, 96).value;
  } else {
    GradedSpec g1;
    g1.p = a;
    g1.q = a;
    g1.near_a = 0.0;
    g1.near_b = 0.0;
    g1.max_depth = 30;
    total += graded_integral(outer, 0.0, t, g1, rtol, 96).value;
  }
  return ctx.constants.alpha_h2 * total;
}

// ---------------------------------------------------------------------------

KernelTables::KernelTables(const HurstPair& hp) : hp_(hp), beta2_(beta_h(hp.h2)) {
  hp_.validate();
  E_ = ChebTable([&](double x) { return kernel_E_direct(hp_, x, 1e-13); });
  J_ = ChebTable([&](double x) { return kernel_J_direct(hp_, x, 1e-13); });
  const double a = 0.5 - hp_.h1, bm1 = beta_exp() - 1.0;
  Phi_ = ChebTable([&](double r) {
    return phi_raw(r) / (std::pow(r, a) * std::pow(1.0 - r, bm1));
  });
  Rho_ = ChebTable([&](double r) { return rho_raw(r) / std::pow(r, 2.0 - 2.0 * hp_.h1); });
}

std::shared_ptr<const KernelTables> KernelTables::get(const HurstPair& hp) {
  static std::mutex mu;
  static std::map<std::pair<double, double>, std::shared_ptr<const KernelTables>> cache;
  const auto key = std::make_pair(hp.h1, hp.h2);
  {
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
  }
  auto t = std::make_shared<const KernelTables>(hp);
  std::lock_guard<std::mutex> lock(mu);
  return cache.emplace(key, t).first->second;
}

double KernelTables::D_split(double x, double omx) const {
  return std::pow(x, 0.5 - hp_.h2) * std::pow(omx, hp_.h2 - hp_.h1 - 1.0) * E_(x);
}

double KernelTables::D(double x) const { return D_split(x, 1.0 - x); }

double KernelTables::K1(double x) const {
  return beta2_ * std::pow(x, 0.5 - hp_.h2) * std::pow(1.0 - x, hp_.h2 - hp_.h1) * J_(x);
}

double KernelTables::K12(double t, double s) const {
  if (s <= 0.0 || s >= t) return 0.0;
  const double d = 0.5 + hp_.h2 - 2.0 * hp_.h1;
  const double x = s / t;
  return std::pow(t, d) * beta2_ * std::pow(x, 0.5 - hp_.h2) *
         std::pow((t - s) / t, hp_.h2 - hp_.h1) * J_(x);
}

double KernelTables::dK12(double t, double s) const {
  return std::pow(t, c_exp()) * D_split(s / t, (t - s) / t);
}

double KernelTables::k1(double s, double u) const {
  const double lo = std::min(s, u), hi = std::max(s, u);
  if (lo == hi) return std::numeric_limits<double>::infinity();
  const double r = lo / hi, omr = (hi - lo) / hi;
  const double bm1 = beta_exp() - 1.0;
  return std::pow(hi, bm1) * std::pow(r, 0.5 - hp_.h1) * std::pow(omr, bm1) * Phi_(r);
}

double KernelTables::phi(double r) const { return k1(r, 1.0); }

double KernelTables::k(double s, double u) const {
  return std::pow(s * u, 0.5 - hp_.h1) * k1(s, u);
}

double KernelTables::k_quadrature(double s, double u, double rtol) const {
  const double lo = std::min(s, u), hi = std::max(s, u);
  const double r = lo / hi;
  GradedSpec g;
  g.p = 1.0 - 2.0 * hp_.h2;
  g.q = hp_.h2 - hp_.h1 - 1.0;
  g.near_a = 1e-9;
  g.near_b = (hi - lo) / lo;
  g.m = 12;
  const Fn F = [&](double y) {
    const double yr = y * r;
    return D_split(y, 1.0 - y) * D_split(yr, 1.0 - yr);
  };
  const double I = graded_integral(F, 0.0, 1.0, g, rtol, 48).value;
  const double c = c_exp();
  return std::pow(lo, c + 1.0) * std::pow(hi, c) * I;
}

double KernelTables::phi_raw(double r) const {
  return std::pow(r, hp_.h1 - 0.5) * k_quadrature(r, 1.0, 1e-13);
}

double KernelTables::rho_raw(double r) const {
  const double d = 0.5 + hp_.h2 - 2.0 * hp_.h1;
  GradedSpec g;
  g.p = 1.0 - 2.0 * hp_.h2;
  g.q = hp_.h2 - hp_.h1;
  g.near_a = 1e-9;
  g.near_b = (1.0 - r) / r;
  g.m = 12;
  const Fn F = [&](double y) { return K1(r * y) * K1(y); };
  return std::pow(r, 1.0 + d) * graded_integral(F, 0.0, 1.0, g, 1e-13, 48).value;
}

double KernelTables::R(double t, double s) const {
  const double lo = std::min(t, s), hi = std::max(t, s);
  if (lo <= 0.0) return 0.0;
  const double r = lo / hi;
  return std::pow(hi, 2.0 + 2.0 * hp_.h2 - 4.0 * hp_.h1) * std::pow(r, 2.0 - 2.0 * hp_.h1) * Rho_(r);
}

}  // namespace mixfbm
