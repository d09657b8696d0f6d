#include "mixfbm/model.hpp"

#include <cmath>

#include "mixfbm/errors.hpp"
#include "mixfbm/numerics.hpp"

namespace mixfbm {

void HurstPair::validate() const {
  if (!(h1 > 0.5)) throw DomainError("HurstPair: requires h1 > 1/2");
  if (!(h2 > h1)) throw DomainError("HurstPair: requires h1 < h2");
  if (!(h2 < 1.0)) throw DomainError("HurstPair: requires h2 < 1");
}

void ModelParams::validate() const {
  hurst.validate();
  if (!(sigma > 0.0)) throw DomainError("ModelParams: sigma must be positive");
  if (!(horizon_T > 0.0)) throw DomainError("ModelParams: horizon_T must be positive");
  if (!std::isfinite(theta)) throw DomainError("ModelParams: theta must be finite");
}

double alpha_h(double H) { return H * (2.0 * H - 1.0); }

double beta_h(double H) { return std::sqrt(alpha_h(H) / beta_fn(H - 0.5, 2.0 - 2.0 * H)); }

double gamma_h(double H) {
  return beta_h(H) * gamma_fn(1.5 - H) * gamma_fn(H - 0.5);
}

double gamma_h_printed(double H) {
  const double g = gamma_fn(1.5 - H);
  return std::sqrt(2.0 * H * (1.5 - H) * g * g * g * gamma_fn(H + 0.5) / gamma_fn(3.0 - 2.0 * H));
}

double DerivedConstants::mu_of_T(double T) const {
  return std::pow(T, 2.0 * (hurst.h2 - hurst.h1));
}

double DerivedConstants::lambda_of_T(double T) const {
  return mu_of_T(T) / (sigma * sigma * gamma2());
}

DerivedConstants derive_constants(const HurstPair& hp, double sigma) {
  hp.validate();
  if (!(sigma > 0.0)) throw DomainError("derive_constants: sigma must be positive");
  DerivedConstants c;
  c.hurst = hp;
  c.sigma = sigma;
  c.alpha_h1 = alpha_h(hp.h1);
  c.alpha_h2 = alpha_h(hp.h2);
  c.beta_h1 = beta_h(hp.h1);
  c.beta_h2 = beta_h(hp.h2);
  c.gamma_h1 = gamma_h(hp.h1);
  c.gamma_h1_printed = gamma_h_printed(hp.h1);
  c.epsilon_h1 = c.gamma_h1 * c.gamma_h1 / (2.0 - 2.0 * hp.h1);
  c.script_b = beta_fn(1.5 - hp.h1, 1.5 - hp.h1);
  c.delta_paper = (2.0 - 2.0 * hp.h1) * c.script_b / (sigma * c.gamma_h1);
  c.drift_norm = (2.0 - 2.0 * hp.h1) * c.script_b / (sigma * sigma * c.gamma2());
  return c;
}

DerivedConstants derive_constants(const ModelParams& params) {
  params.validate();
  return derive_constants(params.hurst, params.sigma);
}

}  // namespace mixfbm
