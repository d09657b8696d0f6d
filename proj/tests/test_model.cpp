#include <doctest.h>

#include <cmath>

#include "mixfbm/errors.hpp"
#include "mixfbm/model.hpp"
#include "mixfbm/numerics.hpp"

using namespace mixfbm;
using doctest::Approx;

TEST_CASE("hurst pair gate") {
  CHECK_NOTHROW((HurstPair{0.6, 0.9}).validate());
  CHECK_THROWS_WITH_AS((HurstPair{0.5, 0.9}).validate(), doctest::Contains("h1 > 1/2"), DomainError);
  CHECK_THROWS_WITH_AS((HurstPair{0.8, 0.7}).validate(), doctest::Contains("h1 < h2"), DomainError);
  CHECK_THROWS_WITH_AS((HurstPair{0.6, 1.0}).validate(), doctest::Contains("h2 < 1"), DomainError);
  CHECK(HurstPair{0.6, 0.9}.solver_admissible());
  CHECK_FALSE(HurstPair{0.6, 0.7}.solver_admissible());

  ModelParams p;
  p.sigma = 0.0;
  CHECK_THROWS_AS(p.validate(), DomainError);
  p.sigma = 1.0;
  p.horizon_T = -1.0;
  CHECK_THROWS_AS(derive_constants(p), DomainError);
}

TEST_CASE("closed-form constants") {
  CHECK(alpha_h(0.75) == Approx(0.375));
  auto k75 = derive_constants(HurstPair{0.75, 0.9});
  const double g = gamma_fn(0.75);
  CHECK(k75.script_b == Approx(g * g / gamma_fn(1.5)).epsilon(1e-14));
  CHECK(k75.script_b == Approx(1.69442616958795817).epsilon(1e-14));

  auto k = derive_constants(HurstPair{0.6, 0.9});
  // arbitrary-precision values
  CHECK(k.beta_h1 == Approx(0.10760051841318069).epsilon(1e-13));
  CHECK(k.gamma_h1 == Approx(1.0939107049858326).epsilon(1e-13));
  CHECK(k.gamma2() == Approx(1.1966406304826014).epsilon(1e-13));
  CHECK(k.gamma_h1_printed == Approx(1.1602675162620586).epsilon(1e-13));
  CHECK(k.script_b == Approx(1.2260974891062873).epsilon(1e-13));

  for (double H : {0.55, 0.6, 0.75, 0.9, 0.99}) {
    CHECK(beta_h(H) == Approx(std::sqrt(alpha_h(H) / beta_fn(H - 0.5, 2 - 2 * H))).epsilon(1e-12));
    CHECK(gamma_h(H) > 0);
  }
}

TEST_CASE("derived constant identities") {
  for (double sigma : {1.0, 0.5, 2.5}) {
    auto k = derive_constants(HurstPair{0.6, 0.9}, sigma);
    CHECK(k.alpha_h1 > 0);
    CHECK(k.alpha_h2 > 0);
    CHECK(k.beta_h2 > 0);
    CHECK(k.epsilon_h1 == Approx(k.gamma2() / (2 - 2 * 0.6)).epsilon(1e-15));
    CHECK(k.delta_paper * k.gamma_h1 == Approx(sigma * k.drift_norm * k.gamma2()).epsilon(1e-14));
    CHECK(k.drift_norm == Approx(0.8 * k.script_b / (sigma * sigma * k.gamma2())).epsilon(1e-14));
    CHECK(k.mu_of_T(5.0) == Approx(std::pow(5.0, 0.6)).epsilon(1e-14));
    CHECK(k.lambda_of_T(5.0) == Approx(std::pow(5.0, 0.6) / (sigma * sigma * k.gamma2())).epsilon(1e-14));
  }
}
