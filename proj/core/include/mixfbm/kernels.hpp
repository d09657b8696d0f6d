#pragma once

#include <memory>

#include "mixfbm/cheb_table.hpp"
#include "mixfbm/model.hpp"

namespace mixfbm {

struct KernelContext {
  DerivedConstants constants;
  int quad_n = 64;  // upper bound on nodes per panel for the refinement loop
  double rtol = 1e-10;

  explicit KernelContext(const DerivedConstants& c, int n = 64, double tol = 1e-10);
  double h1() const { return constants.hurst.h1; }
  double h2() const { return constants.hurst.h2; }
};

// Direct quadrature evaluations.
double kernel_KH(double H, double t, double s, double rtol = 1e-12);
double kernel_K12(const KernelContext& ctx, double t, double s);
double kernel_K12_dt(const KernelContext& ctx, double t, double s);
double kernel_k(const KernelContext& ctx, double s, double u);
double kernel_k1(const KernelContext& ctx, double s, double u);
// int_0^{s^u} dK(s,v) dK(u,v) dv in the original variables.  The factors come
// from kernel_K12_dt (slow) or, with tabulated_dk, from the tables.
double kernel_k_direct(const KernelContext& ctx, double s, double u, double rtol = 1e-11,
                       bool tabulated_dk = false);
double covariance_X2(const KernelContext& ctx, double t, double s);
// alpha_{H2} double-integral representation of the same covariance (slow)
double covariance_X2_double(const KernelContext& ctx, double t, double s, double rtol = 1e-9);

// Smooth factors of the one-variable reductions, by direct quadrature.
//   K12(1,x)     = beta2 x^{1/2-H2} (1-x)^{H2-H1} J(x)
//   dK12(1,x)    =       x^{1/2-H2} (1-x)^{H2-H1-1} E(x)
double kernel_J_direct(const HurstPair& hp, double x, double rtol = 1e-12);
double kernel_E_direct(const HurstPair& hp, double x, double rtol = 1e-12);

// Tabulated kernels for one Hurst pair.  All two-variable kernels are
// homogeneous, so each reduces to a function on (0,1):
//   dK(t,s) = t^c D(s/t),            c = H2 - 2H1 - 1/2
//   k1(s,u) = max^{b-1} phi(min/max), b = 2H2 - 2H1
//   R(t,s)  = max^{2+2H2-4H1} rho(min/max)
class KernelTables {
 public:
  static std::shared_ptr<const KernelTables> get(const HurstPair& hp);
  explicit KernelTables(const HurstPair& hp);

  const HurstPair& hurst() const { return hp_; }
  double E(double x) const { return E_(x); }
  double J(double x) const { return J_(x); }
  double D(double x) const;                  // dK12(1,x)
  double D_split(double x, double one_minus_x) const;
  double K1(double x) const;                 // K12(1,x)

  double K12(double t, double s) const;
  double dK12(double t, double s) const;     // d/dt K12(t,s), s < t
  double k(double s, double u) const;        // via k1
  double k1(double s, double u) const;       // +inf on the diagonal
  double phi(double r) const;                // k1(r,1)
  double R(double t, double s) const;
  double rho(double r) const { return R(1.0, r); }

  // quadrature of the defining integral for k, using the tabulated D
  double k_quadrature(double s, double u, double rtol = 1e-12) const;

  double c_exp() const { return hp_.h2 - 2.0 * hp_.h1 - 0.5; }
  double beta_exp() const { return 2.0 * (hp_.h2 - hp_.h1); }

 private:
  double phi_raw(double r) const;
  double rho_raw(double r) const;

  HurstPair hp_;
  double beta2_;
  ChebTable E_, J_, Phi_, Rho_;
};

}  // namespace mixfbm
