#pragma once

#include <string>

namespace mixfbm {

struct HurstPair {
  double h1 = 0.6;
  double h2 = 0.9;

  // 1/2 < h1 < h2 < 1; throws DomainError naming the failed inequality
  void validate() const;
  bool solver_admissible() const { return h2 - h1 > 0.25; }
};

struct ModelParams {
  HurstPair hurst;
  double sigma = 1.0;
  double theta = 0.0;
  double horizon_T = 1.0;

  void validate() const;
};

struct DerivedConstants {
  HurstPair hurst;
  double sigma = 1.0;
  double alpha_h1 = 0, alpha_h2 = 0;  // H(2H-1)
  double beta_h1 = 0, beta_h2 = 0;
  double gamma_h1 = 0;          // sqrt(E M(1)^2 (2-2H1)), see gamma_h()
  double gamma_h1_printed = 0;  // the alternative closed form, reporting only
  double epsilon_h1 = 0;        // gamma^2/(2-2H1) = E M(1)^2
  double script_b = 0;          // B(3/2-H1, 3/2-H1)
  double delta_paper = 0;       // (2-2H1) B / (sigma gamma)
  double drift_norm = 0;        // (2-2H1) B / (sigma^2 gamma^2)

  double gamma2() const { return gamma_h1 * gamma_h1; }
  double mu_of_T(double T) const;
  double lambda_of_T(double T) const;  // mu / (sigma^2 gamma^2)
};

double alpha_h(double H);
double beta_h(double H);
// Normalising constant of the fundamental martingale: E M(t)^2 = gamma^2 t^{2-2H}/(2-2H).
double gamma_h(double H);
double gamma_h_printed(double H);

DerivedConstants derive_constants(const ModelParams& params);
DerivedConstants derive_constants(const HurstPair& hp, double sigma = 1.0);

}  // namespace mixfbm
