#include "doctest.h"

#include "mvhedge/config.hpp"
#include "mvhedge/params.hpp"

using namespace mvhedge;

TEST_CASE("default parameters validate") {
  const MarketParams m;
  const MortalityParams q;
  const ScenarioSpec s;
  auto b = validate_params(m, q, s);
  CHECK(b.market.mu == 0.06);
  CHECK(b.mortality.lambda0 == 0.05);
  // idempotent
  auto b2 = validate_params(b.market, b.mortality, b.scenario);
  CHECK(to_key_values(b2) == to_key_values(b));
}

TEST_CASE("violations name the field and value") {
  MarketParams m;
  m.sigma = 0;
  MortalityParams q;
  q.psi2 = -1.5;
  ScenarioSpec s;
  s.T_L = 5;
  try {
    validate_params(m, q, s);
    FAIL("expected ValidationError");
  } catch (const ValidationError& e) {
    REQUIRE(e.violations().size() == 3);
    CHECK(e.violations()[0] == "sigma must be > 0 (got 0)");
    CHECK(e.violations()[1] == "psi2 must be > -1 (got -1.5)");
    CHECK(e.violations()[2] == "T_L must be >= T (got 5)");
  }
  CHECK_THROWS_AS(validate_params(m, MortalityParams{}, ScenarioSpec{}), std::invalid_argument);
}

TEST_CASE("theta tilde") {
  MortalityParams q;
  CHECK(theta_tilde(q) == doctest::Approx(0.101).epsilon(1e-14));
  q.varrho_lambda = 0;
  CHECK(theta_tilde(q) == q.theta);
  q.varrho_lambda = 0.5;
  q.psi2 = -1 + 1e-12;
  CHECK(theta_tilde(q) == doctest::Approx(0.1).epsilon(1e-12));

  // linear in varrho_lambda and varsigma
  MortalityParams p;
  auto at = [&](double rho, double vs) {
    p.varrho_lambda = rho;
    p.varsigma = vs;
    return theta_tilde(p);
  };
  CHECK(at(0.5, 0.001) - at(0.25, 0.001) == doctest::Approx(at(0.25, 0.001) - at(0.0, 0.001)).epsilon(1e-12));
  CHECK(at(0.5, 0.004) - at(0.5, 0.002) == doctest::Approx(at(0.5, 0.002) - at(0.5, 0.0)).epsilon(1e-12));
}

TEST_CASE("scenario names round trip") {
  for (auto s : {Scenario::Baseline, Scenario::NoLongevity, Scenario::JumpBlind, Scenario::BrownianOnly,
                 Scenario::NormalJumps, Scenario::LongBond})
    CHECK(scenario_from_string(to_string(s)) == s);
  CHECK(scenario_from_string("no-longevity") == Scenario::NoLongevity);
  CHECK_THROWS_AS(scenario_from_string("panel_z"), std::invalid_argument);
}

TEST_CASE("config parsing") {
  const auto kv = parse_key_values("# comment\nsigma = 0.2\n\n  T = 25   # horizon\nseed=7\n");
  const auto b = bundle_from_key_values(kv);
  CHECK(b.market.sigma == 0.2);
  CHECK(b.scenario.T == 25);
  CHECK(b.scenario.T_L == 25);
  CHECK(b.scenario.n_steps == 6250);
  CHECK(b.scenario.seed == 7);
  CHECK(b.market.mu == 0.06);

  CHECK_THROWS_AS(bundle_from_key_values(parse_key_values("sigmaa = 1")), ConfigError);
  CHECK_THROWS_AS(bundle_from_key_values(parse_key_values("sigma = abc")), ConfigError);
  CHECK_THROWS_AS(bundle_from_key_values(parse_key_values("n_paths = 1.5")), ConfigError);
  CHECK_THROWS_AS(parse_key_values("just words"), ConfigError);
  CHECK_THROWS_WITH_AS(load_config("/nonexistent/x.cfg"), "cannot open config file '/nonexistent/x.cfg'", ConfigError);

  // round trip through the writer
  ModelBundle c;
  c.mortality.kappa = 0.123456789012345;
  c.scenario.scenario = Scenario::LongBond;
  const auto back = bundle_from_key_values(parse_key_values(to_key_values(c)));
  CHECK(back.mortality.kappa == c.mortality.kappa);
  CHECK(back.scenario.scenario == Scenario::LongBond);
}
