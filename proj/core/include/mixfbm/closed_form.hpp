#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "mixfbm/cheb_table.hpp"
#include "mixfbm/fredholm.hpp"
#include "mixfbm/model.hpp"

namespace mixfbm {

// Exact solution of the first-kind equation  K h = const * u^{1/2-H1}.
//
// Two versions are kept.  `Corrected` satisfies the equation (checked by
// verify_first_kind); `Printed` is the chain as usually written down, which
// drops a Gamma(3/2-H1)/Gamma(3/2-H2) ratio and swaps two exponents.  It is
// kept only so the difference can be reported.
enum class ChainVariant { Corrected, Printed };

struct ConstantChain {
  double c = 0.0;
  double c1 = 0, c2 = 0, c3 = 0, c4 = 0, c5 = 0, c6 = 0;
  ChainVariant variant = ChainVariant::Corrected;
};

ConstantChain constant_chain(double C, const DerivedConstants& k,
                             ChainVariant variant = ChainVariant::Corrected);

// Input constant for which K h0 = gamma^2 u^{1/2-H1} (corrected chain): 1/gamma^2.
double natural_c(const DerivedConstants& k);

// h0(v) = c6 v^{1/2-H1} (I^{H1-1/2}_{1-} t^{H1-H2}(1-t)^{1/2-H2})(v)            corrected
// h0(v) = c6 v^{H1-1/2} (I^{H1-1/2}_{1-} t^{H1-H2}(1-t)^{1/2-H1})(v)            printed
double h0(double v, const DerivedConstants& k, double C,
          ChainVariant variant = ChainVariant::Corrected);

// Leading powers of h0 at v -> 0 and at v -> 1.
double h0_exponent_left(const HurstPair& hp, ChainVariant variant = ChainVariant::Corrected);
double h0_exponent_right(const HurstPair& hp, ChainVariant variant = ChainVariant::Corrected);

// Tabulated h0 at C = 1 (h0 is proportional to 1/C).  Cached per Hurst pair.
class H0Table {
 public:
  static std::shared_ptr<const H0Table> get(const HurstPair& hp,
                                            ChainVariant variant = ChainVariant::Corrected);
  H0Table(const HurstPair& hp, ChainVariant variant);

  double operator()(double v, double C) const;
  double exponent_left() const { return e0_; }
  double exponent_right() const { return e1_; }

 private:
  HurstPair hp_;
  ChainVariant variant_;
  double e0_ = 0, e1_ = 0;
  ChebTable smooth_;  // h0(v; C=1) / (v^{e0} (1-v)^{e1})
};

struct FirstKindReport {
  std::vector<double> u;
  std::vector<double> ratio;  // C (K h0)(u) / u^{1/2-H1}; identically 1 for the corrected chain
  double max_rel_deviation = 0.0;  // max |ratio - 1|
  double constancy = 0.0;          // (max ratio - min ratio) / mean ratio, scale free
  double mean_ratio = 0.0;
};

struct FirstKindOptions {
  double C = 0.0;  // 0: natural_c
  ChainVariant variant = ChainVariant::Corrected;
  double u_min = 0.1, u_max = 0.9;
  int sub_nodes = 12;
};

// (K h0)(u_i) by product quadrature on the grid's panels, at the grid nodes in [u_min,u_max].
FirstKindReport verify_first_kind(const DerivedConstants& k, const QuadratureGrid& grid,
                                  const FirstKindOptions& opt = {});

struct AsymptoticVariance {
  double integral = 0.0;        // int_0^1 h0(u) u^{1/2-H1} du at C = natural_c
  double paper_form = 0.0;      // 1 / integral
  double scaled_limit = 0.0;    // lim T^{2-2H2} / (d^2 <N>(T)) = gamma^2/(((2-2H1) B)^2 integral)
  double error_estimate = 0.0;  // |last - previous refinement| of the integral
};

AsymptoticVariance asymptotic_variance(const DerivedConstants& k);

// h_mu(u) = mu T^{H1-1/2} h_hat(u), with h_hat the scaled second-kind solution.
// It solves (sigma^2 gamma^2 / mu) h + K h = sigma^2 gamma^2 u^{1/2-H1}, so its
// limit is sigma^2 h0 (C = natural_c).
class HMu {
 public:
  HMu(FredholmSolution sol, const DerivedConstants& k);
  double operator()(double u) const;
  double weighted_integral() const;  // int h_mu(u) u^{1/2-H1} du
  double mu() const { return mu_; }
  double factor() const { return factor_; }
  const FredholmSolution& solution() const { return sol_; }

 private:
  FredholmSolution sol_;
  double mu_ = 1.0;
  double factor_ = 1.0;  // mu T^{H1-1/2}
};

HMu h_mu(const FredholmSolution& sol, const DerivedConstants& k);

struct HMuComparison {
  double T = 0.0;
  double integral_mu = 0.0;  // int h_mu u^{1/2-H1}
  double integral_0 = 0.0;   // sigma^2 int h0 u^{1/2-H1}
  double rel_gap = 0.0;      // |integral_mu - integral_0| / integral_0
  double norm_diff = 0.0;    // ||h_mu - sigma^2 h0||, weight u^{1/2-H1}
  double norm_h0 = 0.0;      // ||sigma^2 h0||
  double plugin_residual = 0.0;  // relative, at the solver's check points
};

HMuComparison compare_h_mu(const FredholmSolution& sol, const DerivedConstants& k);

}  // namespace mixfbm
