#include <doctest.h>

#include <cmath>
#include <map>
#include <random>

#include "mixfbm/errors.hpp"
#include "mixfbm/fredholm.hpp"
#include "mixfbm/numerics.hpp"

using namespace mixfbm;
using doctest::Approx;

namespace {
const HurstPair kPair{0.6, 0.9};
const DerivedConstants& K() {
  static const DerivedConstants c = derive_constants(kPair);
  return c;
}
OperatorPtr model_op(int n) {
  static std::map<int, OperatorPtr> cache;
  auto& op = cache[n];
  if (!op) op = assemble(KernelContext(K()), build_grid(n));
  return op;
}
KernelSpec constant_kernel(double c) {
  KernelSpec ks;
  ks.k1 = [c](double, double) { return c; };
  return ks;
}
}  // namespace

TEST_CASE("grid") {
  auto g = build_grid(8, 1.0);
  CHECK(g.nodes.size() == 8u);
  double sum = 0;
  for (double w : g.weights) sum += w;
  CHECK(sum == Approx(1.0).epsilon(1e-14));
  for (std::size_t i = 1; i < g.nodes.size(); ++i) CHECK(g.nodes[i] > g.nodes[i - 1]);
  CHECK(g.nodes.front() > 0.0);
  CHECK(g.nodes.back() < 1.0);

  auto g2 = build_grid(64, 2.0);
  const double first = g2.breaks[1];
  // 16 panels: x^2 / (x^2 + (1-x)^2) at x = 1/16
  CHECK(first < 4.0 / (16.0 * 16.0));
  CHECK(g2.breaks[1] - g2.breaks[0] < g2.breaks[9] - g2.breaks[8]);
  CHECK(1.0 - g2.breaks[15] == Approx(first).epsilon(1e-12));

  auto g3 = build_grid(256, 3.0);
  double I = 0;
  for (int i = 0; i < g3.n; ++i) I += g3.weights[i] * std::pow(g3.nodes[i], -0.4);
  CHECK(I == Approx(1.0 / 0.6).epsilon(1e-4));
  CHECK(g3.panel_of(0.5) >= 0);

  CHECK_THROWS_AS(build_grid(4, 2.0), DomainError);
  CHECK_THROWS_AS(build_grid(30, 2.0), DomainError);
  CHECK_THROWS_AS(build_grid(64, 0.5), DomainError);
}

TEST_CASE("test seams: zero and rank-one kernels") {
  auto g = build_grid(32, 2.0);
  AssembleOptions opt;
  opt.residual_check = false;
  auto zero = assemble_custom(constant_kernel(0.0), g, -0.1, opt);
  CHECK(zero->matrix.cwiseAbs().maxCoeff() == 0.0);
  auto s0 = solve_second_kind_lambda(zero, 3.0, 1.0, 0.6);
  for (int i = 0; i < g.n; ++i)
    CHECK(s0.h_hat[i] == Approx(std::pow(g.nodes[i] * 3.0, -0.1)).epsilon(1e-14));
  CHECK(s0.h_T(1.7) == Approx(1.0).epsilon(1e-13));
  CHECK(unscale(s0)(0.2) == Approx(1.0).epsilon(1e-13));
  auto ev0 = spectrum_report(*zero);
  for (double e : ev0) CHECK(std::abs(e) < 1e-14);
  // zero kernel: <N> = sigma^2 gamma^2 int t^{1-2H1} = eps T^{2-2H1}; the moments
  // carry the interpolation error of s^{-0.1} on the mesh (1.5e-6 here, 5.6e-8 at n=128)
  const double qv_exact = K().epsilon_h1 * std::pow(3.0, 0.8);
  CHECK(quadratic_variation_N(s0, K()) == Approx(qv_exact).epsilon(2e-6));
  {
    auto fine = assemble_custom(constant_kernel(0.0), build_grid(128, 2.0), -0.1, opt);
    CHECK(quadratic_variation_N(solve_second_kind_lambda(fine, 3.0, 1.0, 0.6), K()) ==
          Approx(qv_exact).epsilon(1e-7));
  }

  // k1 = c: h = rhs - lambda c (int rhs) / (1 + lambda c).  The first panel carries
  // s^{-0.1} poly(s), which holds the constant shift only approximately.
  const double c = 0.5, lambda = 1.0, T = 1.0;
  auto gf = build_grid(256, 3.0);
  auto r1 = assemble_custom(constant_kernel(c), gf, -0.1, opt);
  auto s1 = solve_second_kind_lambda(r1, T, lambda, 0.6);
  const double int_rhs = 1.0 / 0.9;
  const double corr = lambda * c * int_rhs / (1 + lambda * c);
  double err = 0;
  for (int i = 0; i < gf.n; ++i)
    err = std::max(err, std::abs(s1.h_hat[i] - (std::pow(gf.nodes[i], -0.1) - corr)));
  CHECK(err <= 1e-8);
  CHECK(s1.h_hat_at(0.37) == Approx(std::pow(0.37, -0.1) - corr).epsilon(1e-8));
  CHECK_THROWS_AS(s1.h_hat_at(0.0), DomainError);
  CHECK_THROWS_AS(s1.h_T(1.5), DomainError);
  CHECK_THROWS_AS(solve_second_kind_lambda(r1, -1.0, lambda, 0.6), DomainError);
}

TEST_CASE("assembly guards") {
  CHECK_THROWS_AS(assemble(KernelContext(derive_constants(HurstPair{0.6, 0.7})), build_grid(16)),
                  DomainError);
  auto op = model_op(64);
  CHECK(op->matrix.allFinite());
  CHECK(op->asymmetry() < 0.5);
  // operator assembled for another pair
  CHECK_THROWS_AS(solve_second_kind(op, 1.0, derive_constants(HurstPair{0.55, 0.85})), DomainError);
}

TEST_CASE("positivity and spectrum") {
  auto op = model_op(128);
  auto ev = spectrum_report(*op);
  REQUIRE(ev.size() == 128u);
  CHECK(ev.back() >= -1e-8);
  for (int k = 1; k < 20; ++k) CHECK(ev[k] < ev[k - 1]);
  auto S = symmetrized(*op);
  CHECK((S - S.transpose()).cwiseAbs().maxCoeff() < 1e-12);

  auto ef = energy_form(*op);
  std::mt19937_64 rng(3);
  std::normal_distribution<double> nd;
  double worst = 1e300;
  for (int r = 0; r < 100; ++r) {
    Eigen::VectorXd f(128);
    for (int i = 0; i < 128; ++i) f[i] = nd(rng);
    worst = std::min(worst, f.dot(ef.G * f) / f.squaredNorm());
  }
  CHECK(worst >= -1e-8);

  // collocation eigenvalues agree with the Galerkin ones at the top of the spectrum
  std::vector<double> coll;
  for (Eigen::Index k = 0; k < op->eigenvalues.size(); ++k) coll.push_back(op->eigenvalues[k].real());
  std::sort(coll.rbegin(), coll.rend());
  CHECK(coll[0] == Approx(ev[0]).epsilon(1e-4));
  CHECK(coll[1] == Approx(ev[1]).epsilon(1e-3));
}

TEST_CASE("Hilbert-Schmidt sums grow toward the kernel norm") {
  auto tab = KernelTables::get(kPair);
  const double b = tab->beta_exp();
  GradedSpec spec;
  spec.q = 2 * (b - 1);
  spec.p = 2 * (0.5 - 0.6);
  spec.near_a = 0.0;
  spec.near_b = 0.0;
  const double norm2 =
      graded_integral([&](double x) { return std::pow(tab->phi(x), 2); }, 0, 1, spec, 1e-5).value / b;
  double prev = 0;
  for (int n : {64, 128, 256}) {
    double s = 0;
    for (double e : spectrum_report(*model_op(n))) s += e * e;
    CHECK(s > prev);
    CHECK(s < norm2);
    prev = s;
  }
  // the missing tail decays slowly (eigenvalues ~ k^{-(2H2-2H1)}); at n=256 it is under 15%
  CHECK(prev > 0.85 * norm2);
}

TEST_CASE("second-kind solve") {
  auto op = model_op(256);
  auto sol = solve_second_kind(op, 1.0, K());
  CHECK_FALSE(sol.flagged);
  CHECK(sol.residual_sup <= 1e-5);
  CHECK(sol.qv_N > 0);
  CHECK(sol.lambda == Approx(1.0 / K().gamma2()));
  CHECK(sol.eigen_margin >= 1.0 - 1e-9);
  CHECK(sol.condition < 1e3);
  for (int i : {0, 17, 128, 255}) {
    const double t = sol.grid.nodes[i] * 1.0;
    CHECK(sol.h_T(t) * std::pow(t, 0.5 - 0.6) == Approx(sol.h_hat[i]).epsilon(1e-10));
  }
  CHECK(quadratic_variation_N(sol, K()) == Approx(sol.qv_N));

  auto sol2 = solve_second_kind(op, 2.0, K());
  CHECK(sol2.qv_N > sol.qv_N);

  SUBCASE("self-convergence") {
    auto ref = solve_second_kind(model_op(512), 1.0, K());
    const double d64 = relative_l2_difference(solve_second_kind(model_op(64), 1.0, K()),
                                              solve_second_kind(model_op(128), 1.0, K()));
    const double d128 = relative_l2_difference(solve_second_kind(model_op(128), 1.0, K()),
                                               solve_second_kind(model_op(256), 1.0, K()));
    const double d256 = relative_l2_difference(sol, ref);
    CHECK(d128 < d64);
    CHECK(d256 < d128);
    CHECK(relative_l2_difference(solve_second_kind(model_op(128), 1.0, K()), ref) <= 1e-3);
    // interpolation between nodes
    for (double u : {0.013, 0.31, 0.77})
      CHECK(sol.h_hat_at(u) == Approx(ref.h_hat_at(u)).epsilon(1e-3));
    CHECK(sol.qv_N == Approx(ref.qv_N).epsilon(1e-6));
  }

  SUBCASE("strict mode turns a flag into an error") {
    SolverOptions so;
    so.residual_tol = 1e-12;
    auto loose = solve_second_kind(op, 1.0, K(), so);
    CHECK(loose.flagged);
    so.strict = true;
    CHECK_THROWS_AS(solve_second_kind(op, 1.0, K(), so), AccuracyError);
  }
}

TEST_CASE("integrate_against_kernel reproduces the matrix rows") {
  auto op = model_op(64);
  Eigen::VectorXd c = Eigen::VectorXd::LinSpaced(64, 0.5, 1.5);
  const double u = 0.42;
  const double via_row = op->row(u).dot(c);
  const double direct = integrate_against_kernel(
      op->kernel, op->grid, [&](double s) { return op->expand(c, s); }, op->basis_exp, 0.0, u);
  CHECK(direct == Approx(via_row).epsilon(1e-9));
}
