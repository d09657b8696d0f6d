#include <doctest.h>

#include <array>
#include <cmath>

#include "mixfbm/closed_form.hpp"
#include "mixfbm/errors.hpp"
#include "mixfbm/numerics.hpp"

using namespace mixfbm;
using doctest::Approx;

namespace {
struct Oracle {
  HurstPair hp;
  double gamma2, I0, limit;
  double h0_gamma2, h0_natural, h0_printed;
  std::array<double, 6> chain;  // C = 1, corrected
};
// arbitrary-precision quadrature of the defining fractional integrals
const std::array<Oracle, 3> kOracles{{
    {{0.6, 0.9}, 1.19664063048260, 1.263097138758665, 0.984684299463348, 0.60518934528898728,
     0.86660015586475878, 3.5129222332090822,
     {0.8, 0.27740597387450363, 3.1418541631017321, 0.45946401271272594, 1.3250299012539189,
      0.40112721820682248}},
    {{0.7, 0.99}, 1.36212138142884, 1.647844462335776, 0.997806687736876, 0.49796263121202976,
     0.92390724645512144, 0.73154975100253143,
     {0.6, 0.095949561108897513, 7.998717262266743, 0.1555482756976193, 0.97268777824474151,
      0.30946335911254362}},
    {{0.55, 0.85}, 1.09964483817328, 1.129984816057680, 0.981827504177140, 0.69544137819645162,
     0.84094076803406388, 11.874062451660065,
     {0.9, 0.30531777052839036, 3.0539905210181005, 0.55522717145574867, 1.6366700616389709,
      0.46418611948234887}},
}};

double fit_slope(const std::function<double(double)>& f, double a, double b) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const int m = 9;
  for (int i = 0; i < m; ++i) {
    const double v = a * std::pow(b / a, i / (m - 1.0));
    const double x = std::log(v), y = std::log(f(v));
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  return (m * sxy - sx * sy) / (m * sxx - sx * sx);
}
}  // namespace

TEST_CASE("constant chain") {
  for (const auto& o : kOracles) {
    auto k = derive_constants(o.hp);
    CHECK(k.gamma2() == Approx(o.gamma2).epsilon(1e-13));
    auto ch = constant_chain(1.0, k);
    CHECK(ch.c1 == Approx(o.chain[0]).epsilon(1e-14));
    CHECK(ch.c2 == Approx(o.chain[1]).epsilon(1e-13));
    CHECK(ch.c3 == Approx(o.chain[2]).epsilon(1e-13));
    CHECK(ch.c4 == Approx(o.chain[3]).epsilon(1e-13));
    CHECK(ch.c5 == Approx(o.chain[4]).epsilon(1e-13));
    CHECK(ch.c6 == Approx(o.chain[5]).epsilon(1e-13));
    auto ch2 = constant_chain(2.0, k);
    CHECK(ch2.c6 == Approx(ch.c6 / 2).epsilon(1e-14));
    CHECK(natural_c(k) == Approx(1.0 / o.gamma2).epsilon(1e-13));
  }
  SUBCASE("printed links, re-evaluated") {
    auto k = derive_constants(HurstPair{0.6, 0.9});
    const double h1 = 0.6, h2 = 0.9;
    auto p = constant_chain(1.0, k, ChainVariant::Printed);
    const double c1 = 2 - 2 * h1;
    const double c2 = c1 * k.beta_h2 * gamma_fn(1.5 - h2);
    const double c3 = (1.5 - h1) * beta_fn(h1 - 0.5, 3 - 2 * h1) / (c2 * gamma_fn(h1 - 0.5));
    const double c4 = c3 * (2 - 2 * h2) / (gamma_fn(h2 - 0.5) * gamma_fn(1.5 - h2));
    const double c5 = c4 / (k.beta_h2 * gamma_fn(1.5 - h1));
    const double c6 = c5 * gamma_fn(h1 - 0.5) / gamma_fn(1.5 - h1);
    CHECK(p.c1 == Approx(c1).epsilon(1e-14));
    CHECK(p.c2 == Approx(c2).epsilon(1e-14));
    CHECK(p.c3 == Approx(c3).epsilon(1e-13));
    CHECK(p.c4 == Approx(c4).epsilon(1e-13));
    CHECK(p.c5 == Approx(c5).epsilon(1e-13));
    CHECK(p.c6 == Approx(c6).epsilon(1e-13));
  }
  CHECK_THROWS_AS(constant_chain(0.0, derive_constants(HurstPair{0.6, 0.9})), DomainError);
}

TEST_CASE("h0 values, linearity and end behaviour") {
  for (const auto& o : kOracles) {
    auto k = derive_constants(o.hp);
    CHECK(h0(0.5, k, o.gamma2) == Approx(o.h0_gamma2).epsilon(1e-10));
    CHECK(h0(0.5, k, 1.0 / o.gamma2) == Approx(o.h0_natural).epsilon(1e-10));
    CHECK(h0(0.5, k, o.gamma2, ChainVariant::Printed) == Approx(o.h0_printed).epsilon(1e-10));
    CHECK(h0(0.5, k, 2 * o.gamma2) == Approx(o.h0_gamma2 / 2).epsilon(1e-10));
    auto tab = H0Table::get(o.hp);
    for (double v : {1e-6, 0.01, 0.3, 0.5, 0.9, 0.999})
      CHECK((*tab)(v, 0.7) == Approx(h0(v, k, 0.7)).epsilon(1e-9));
  }
  auto k = derive_constants(HurstPair{0.6, 0.9});
  CHECK_THROWS_AS(h0(0.0, k, 1.0), DomainError);
  CHECK_THROWS_AS(h0(1.0, k, 1.0), DomainError);

  // (0.7, 0.99): 2H1 - H2 < 1/2, so the divergent part of the fractional integral decides
  const HurstPair hp{0.7, 0.99};
  auto k2 = derive_constants(hp);
  CHECK(h0_exponent_left(hp) == Approx(0.7 - 0.99));
  CHECK(h0_exponent_left(hp, ChainVariant::Printed) == Approx(3 * 0.7 - 0.99 - 1));
  CHECK(h0_exponent_right(hp) == Approx(0.7 - 0.99));
  CHECK(h0_exponent_right(hp, ChainVariant::Printed) == Approx(0.0).epsilon(1e-14));
  // The divergent part is v^{2H1-H2-1/2} = v^{-0.09} against a constant, so the
  // power law only takes over far inside the interval.
  auto corrected = [&](double v) { return h0(v, k2, 1.0); };
  auto printed = [&](double v) { return h0(v, k2, 1.0, ChainVariant::Printed); };
  CHECK(std::abs(fit_slope(corrected, 1e-10, 1e-9) - (0.7 - 0.99)) <= 0.05);
  CHECK(std::abs(fit_slope(printed, 1e-10, 1e-9) - (3 * 0.7 - 0.99 - 1)) <= 0.05);
  CHECK(std::abs(fit_slope(corrected, 1e-3, 1e-2) - (0.7 - 0.99)) <= 0.07);
  CHECK(std::abs(fit_slope(printed, 1e-3, 1e-2) - (3 * 0.7 - 0.99 - 1)) <= 0.07);
  for (double v : {0.01, 0.2, 0.6, 0.95}) CHECK(h0(v, k2, 1.0) > 0);
}

TEST_CASE("first-kind equation") {
  auto k = derive_constants(HurstPair{0.6, 0.9});
  auto g = build_grid(256, 3.0);
  auto rep = verify_first_kind(k, g);
  CHECK(rep.u.size() == rep.ratio.size());
  CHECK_FALSE(rep.u.empty());
  CHECK(rep.u.front() >= 0.1);
  CHECK(rep.u.back() <= 0.9);
  CHECK(rep.max_rel_deviation <= 1e-3);
  CHECK(rep.constancy <= 2e-3);

  FirstKindOptions twice;
  twice.C = 2.0 / k.gamma2();
  auto rep2 = verify_first_kind(k, g, twice);
  CHECK(rep2.constancy == Approx(rep.constancy).epsilon(1e-3).scale(1e-9));
  CHECK(rep2.mean_ratio == Approx(rep.mean_ratio).epsilon(1e-9));

  FirstKindOptions printed;
  printed.variant = ChainVariant::Printed;
  auto rp = verify_first_kind(k, g, printed);
  CHECK(rp.constancy > 0.05);  // the printed chain does not solve the equation

  CHECK_THROWS_AS(verify_first_kind(derive_constants(HurstPair{0.6, 0.7}), g), DomainError);
}

TEST_CASE("asymptotic variance functional") {
  for (const auto& o : kOracles) {
    auto k = derive_constants(o.hp);
    auto av = asymptotic_variance(k);
    CHECK(av.integral == Approx(o.I0).epsilon(1e-8));
    CHECK(av.paper_form == Approx(1.0 / o.I0).epsilon(1e-8));
    CHECK(av.scaled_limit == Approx(o.limit).epsilon(1e-8));
    CHECK(av.scaled_limit > 0);
    CHECK(av.error_estimate < 1e-8);
  }
}

TEST_CASE("h_mu approaches h0") {
  auto k = derive_constants(HurstPair{0.6, 0.9});
  auto op = assemble(KernelContext(k), build_grid(256, 3.0));
  double prev_gap = 1e300, prev_norm = 1e300, prev_int = 0;
  for (double T : {1.0, 5.0, 25.0, 125.0}) {
    auto sol = solve_second_kind(op, T, k);
    auto cmp = compare_h_mu(sol, k);
    auto hm = h_mu(sol, k);
    CHECK(hm.mu() == Approx(k.mu_of_T(T)));
    CHECK(hm.weighted_integral() == Approx(cmp.integral_mu).epsilon(1e-12));
    CHECK(hm(0.3) == Approx(hm.factor() * sol.h_hat_at(0.3)).epsilon(1e-12));
    CHECK(cmp.plugin_residual <= sol.residual_sup * (1 + 1e-6) + 1e-14);
    CHECK(cmp.norm_diff <= cmp.norm_h0);
    CHECK(cmp.norm_diff < prev_norm);
    CHECK(cmp.rel_gap < prev_gap);
    CHECK(cmp.integral_mu > prev_int);
    CHECK(cmp.integral_0 == Approx(1.263097138758665).epsilon(1e-8));
    // <N> = sigma^2 gamma^2 T^{2-2H2} int h_mu u^{1/2-H1}
    CHECK(sol.qv_N == Approx(k.gamma2() * std::pow(T, 2 - 2 * 0.9) * cmp.integral_mu).epsilon(1e-10));
    prev_gap = cmp.rel_gap;
    prev_norm = cmp.norm_diff;
    prev_int = cmp.integral_mu;
  }
}
