#include "mixfbm/closed_form.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>

#include "mixfbm/errors.hpp"
#include "mixfbm/numerics.hpp"
#include "mixfbm/parallel.hpp"

namespace mixfbm {

ConstantChain constant_chain(double C, const DerivedConstants& k, ChainVariant variant) {
  if (!(C > 0.0)) throw DomainError("constant_chain: C must be positive");
  k.hurst.validate();
  const double h1 = k.hurst.h1, h2 = k.hurst.h2, b2 = k.beta_h2;
  ConstantChain ch;
  ch.c = C;
  ch.variant = variant;
  ch.c1 = C * (2.0 - 2.0 * h1);
  if (variant == ChainVariant::Corrected) {
    ch.c2 = ch.c1 * b2 * gamma_fn(1.5 - h1);
    ch.c3 = gamma_fn(3.0 - 2.0 * h1) / (ch.c2 * gamma_fn(1.5 - h1));
    ch.c4 = ch.c3 * gamma_fn(1.5 - h2) / (gamma_fn(h2 - 0.5) * gamma_fn(2.0 - 2.0 * h2));
    ch.c5 = ch.c4 / (b2 * gamma_fn(1.5 - h1));
    ch.c6 = ch.c5 / (gamma_fn(h2 - 0.5) * gamma_fn(1.5 - h2));
  } else {
    ch.c2 = ch.c1 * b2 * gamma_fn(1.5 - h2);
    ch.c3 = (1.5 - h1) * beta_fn(h1 - 0.5, 3.0 - 2.0 * h1) / (ch.c2 * gamma_fn(h1 - 0.5));
    ch.c4 = ch.c3 * (2.0 - 2.0 * h2) / (gamma_fn(h2 - 0.5) * gamma_fn(1.5 - h2));
    ch.c5 = ch.c4 / (b2 * gamma_fn(1.5 - h1));
    ch.c6 = ch.c5 * gamma_fn(h1 - 0.5) / gamma_fn(1.5 - h1);
  }
  return ch;
}

double natural_c(const DerivedConstants& k) { return 1.0 / k.gamma2(); }

namespace {

// powers (outer v power, power of (1-t) inside the fractional integral)
std::pair<double, double> h0_powers(const HurstPair& hp, ChainVariant variant) {
  if (variant == ChainVariant::Corrected) return {0.5 - hp.h1, 0.5 - hp.h2};
  return {hp.h1 - 0.5, 0.5 - hp.h1};
}

}  // namespace

double h0(double v, const DerivedConstants& k, double C, ChainVariant variant) {
  if (!(v > 0.0 && v < 1.0)) throw DomainError("h0: v must lie in (0,1)");
  const ConstantChain ch = constant_chain(C, k, variant);
  const double h1 = k.hurst.h1, h2 = k.hurst.h2;
  const auto [outer, q] = h0_powers(k.hurst, variant);
  const double a = h1 - 0.5;
  double fi;
  if (1.0 - v < 1e-8) {
    // interval below resolution: I^a (1-t)^q g = g Gamma(q+1)/Gamma(a+q+1) (1-v)^{a+q}, g = t^{H1-H2}
    const double g = std::pow(0.5 * (1.0 + v), h1 - h2);
    fi = g * gamma_fn(q + 1.0) / gamma_fn(a + q + 1.0) * std::pow(1.0 - v, a + q);
  } else {
    const Fn f = [=](double t) { return std::pow(t, h1 - h2) * std::pow(1.0 - t, q); };
    fi = frac_integral_right(f, a, v, q, h1 - h2, 1e-12);
  }
  return ch.c6 * std::pow(v, outer) * fi;
}

double h0_exponent_left(const HurstPair& hp, ChainVariant variant) {
  const double outer = h0_powers(hp, variant).first;
  // fractional integral ~ v^{2H1-H2-1/2} if that is negative, else bounded
  return outer + std::min(0.0, 2.0 * hp.h1 - hp.h2 - 0.5);
}

double h0_exponent_right(const HurstPair& hp, ChainVariant variant) {
  return hp.h1 - 0.5 + h0_powers(hp, variant).second;
}

// ---------------------------------------------------------------------------

std::shared_ptr<const H0Table> H0Table::get(const HurstPair& hp, ChainVariant variant) {
  static std::mutex mu;
  static std::map<std::tuple<double, double, int>, std::shared_ptr<const H0Table>> cache;
  const auto key = std::make_tuple(hp.h1, hp.h2, static_cast<int>(variant));
  {
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
  }
  auto t = std::make_shared<const H0Table>(hp, variant);
  std::lock_guard<std::mutex> lock(mu);
  return cache.emplace(key, t).first->second;
}

H0Table::H0Table(const HurstPair& hp, ChainVariant variant) : hp_(hp), variant_(variant) {
  hp.validate();
  e0_ = h0_exponent_left(hp, variant);
  e1_ = h0_exponent_right(hp, variant);
  const DerivedConstants k = derive_constants(hp);
  smooth_ = ChebTable([&](double v) {
    return h0(v, k, 1.0, variant) / (std::pow(v, e0_) * std::pow(1.0 - v, e1_));
  });
}

double H0Table::operator()(double v, double C) const {
  if (!(v > 0.0 && v < 1.0)) throw DomainError("h0: v must lie in (0,1)");
  return smooth_(v) * std::pow(v, e0_) * std::pow(1.0 - v, e1_) / C;
}

// ---------------------------------------------------------------------------

FirstKindReport verify_first_kind(const DerivedConstants& k, const QuadratureGrid& grid,
                                  const FirstKindOptions& opt) {
  const HurstPair hp = k.hurst;
  hp.validate();
  if (!hp.solver_admissible())
    throw DomainError("verify_first_kind: requires h2 - h1 > 1/4 (square integrable kernel)");
  const double C = opt.C > 0.0 ? opt.C : natural_c(k);
  auto tab = H0Table::get(hp, opt.variant);
  const KernelSpec ks = model_kernel(hp);
  const Fn f = [&](double s) { return (*tab)(s, C); };

  FirstKindReport rep;
  for (double u : grid.nodes)
    if (u >= opt.u_min && u <= opt.u_max) rep.u.push_back(u);
  if (rep.u.empty()) throw DomainError("verify_first_kind: no grid nodes in the check window");
  rep.ratio.resize(rep.u.size());
  parallel_for(rep.u.size(), [&](std::size_t i) {
    const double u = rep.u[i];
    const double kh = integrate_against_kernel(ks, grid, f, tab->exponent_left(),
                                               tab->exponent_right(), u, opt.sub_nodes, 30);
    rep.ratio[i] = C * kh / std::pow(u, 0.5 - hp.h1);
  });
  double lo = rep.ratio[0], hi = rep.ratio[0], sum = 0.0;
  for (double r : rep.ratio) {
    if (!std::isfinite(r)) throw AccuracyError("verify_first_kind: non-finite quadrature value");
    lo = std::min(lo, r);
    hi = std::max(hi, r);
    sum += r;
    rep.max_rel_deviation = std::max(rep.max_rel_deviation, std::abs(r - 1.0));
  }
  rep.mean_ratio = sum / static_cast<double>(rep.ratio.size());
  rep.constancy = (hi - lo) / rep.mean_ratio;
  return rep;
}

AsymptoticVariance asymptotic_variance(const DerivedConstants& k) {
  const HurstPair hp = k.hurst;
  hp.validate();
  const double C = natural_c(k);
  const DerivedConstants k1 = derive_constants(hp);  // sigma plays no role in h0
  GradedSpec g;
  g.p = h0_exponent_left(hp) + 0.5 - hp.h1;
  g.q = h0_exponent_right(hp);
  g.near_a = 0.0;
  g.near_b = 0.0;
  g.max_depth = 40;
  g.m = 8;
  if (!(g.p > -1.0 && g.q > -1.0)) throw AccuracyError("asymptotic_variance: divergent integral");
  const Fn F = [&](double u) { return h0(u, k1, C) * std::pow(u, 0.5 - hp.h1); };
  const IntegralResult r = graded_integral(F, 0.0, 1.0, g, 1e-9, 64);
  if (!(r.value > 0.0) || !std::isfinite(r.value))
    throw AccuracyError("asymptotic_variance: quadrature failed");
  AsymptoticVariance av;
  av.integral = r.value;
  av.error_estimate = r.change;
  av.paper_form = 1.0 / r.value;
  const double num = (2.0 - 2.0 * hp.h1) * k.script_b;
  av.scaled_limit = k.gamma2() / (num * num * r.value);
  return av;
}

// ---------------------------------------------------------------------------

HMu::HMu(FredholmSolution sol, const DerivedConstants& k) : sol_(std::move(sol)) {
  const double T = sol_.horizon_T;
  mu_ = k.mu_of_T(T);
  factor_ = mu_ * std::pow(T, k.hurst.h1 - 0.5);
}

double HMu::operator()(double u) const { return factor_ * sol_.h_hat_at(u); }

double HMu::weighted_integral() const { return factor_ * sol_.weighted_integral(); }

HMu h_mu(const FredholmSolution& sol, const DerivedConstants& k) {
  if (!sol.op) throw DomainError("h_mu: solution carries no operator");
  return HMu(sol, k);
}

HMuComparison compare_h_mu(const FredholmSolution& sol, const DerivedConstants& k) {
  const HMu hm = h_mu(sol, k);
  const HurstPair hp = k.hurst;
  const double s2 = k.sigma * k.sigma, C = natural_c(k);
  auto tab = H0Table::get(hp);
  const AsymptoticVariance av = asymptotic_variance(k);

  HMuComparison out;
  out.T = sol.horizon_T;
  out.integral_mu = hm.weighted_integral();
  out.integral_0 = s2 * av.integral;
  out.rel_gap = std::abs(out.integral_mu - out.integral_0) / out.integral_0;

  // weighted L2 norms on the solver grid's panels
  const auto& g = sol.grid;
  std::vector<double> xs, ws;
  for (int p = 0; p < g.panels(); ++p) {
    GradedSpec s;
    s.m = 8;
    if (p == 0) {
      s.p = 2.0 * tab->exponent_left() + 0.5 - hp.h1;
      s.near_a = 0.0;
      s.max_depth = 30;
    }
    if (p == g.panels() - 1) {
      s.q = 2.0 * tab->exponent_right();
      s.near_b = 0.0;
      s.max_depth = 30;
    }
    const QuadratureRule r = graded_rule(g.breaks[p], g.breaks[p + 1], s);
    xs.insert(xs.end(), r.nodes.begin(), r.nodes.end());
    ws.insert(ws.end(), r.weights.begin(), r.weights.end());
  }
  std::vector<double> diff2(xs.size()), ref2(xs.size());
  parallel_for(xs.size(), [&](std::size_t i) {
    const double u = xs[i], w = ws[i] * std::pow(u, 0.5 - hp.h1);
    const double a = s2 * (*tab)(u, C);
    const double d = hm(u) - a;
    diff2[i] = w * d * d;
    ref2[i] = w * a * a;
  });
  double nd = 0.0, nr = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    nd += diff2[i];
    nr += ref2[i];
  }
  out.norm_diff = std::sqrt(nd);
  out.norm_h0 = std::sqrt(nr);

  // (sigma^2 gamma^2/mu) h_mu + K h_mu - sigma^2 gamma^2 u^{1/2-H1}, with K from the refined operator
  if (sol.op && sol.op->refined) {
    const auto& fine = *sol.op->refined;
    Eigen::VectorXd hf(fine.grid.n);
    for (int i = 0; i < fine.grid.n; ++i) hf[i] = hm(fine.grid.nodes[i]);
    const Eigen::VectorXd khf = sol.op->rows_check_fine * hf;
    const double sg = s2 * k.gamma2();
    double sup = 0.0;
    for (std::size_t i = 0; i < sol.op->check_points.size(); ++i) {
      const double u = sol.op->check_points[i];
      const double target = sg * std::pow(u, 0.5 - hp.h1);
      const double lhs = sg / hm.mu() * hm(u) + khf[static_cast<Eigen::Index>(i)];
      sup = std::max(sup, std::abs(lhs - target) / target);
    }
    out.plugin_residual = sup;
  }
  return out;
}

}  // namespace mixfbm
