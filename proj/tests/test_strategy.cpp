#include "doctest.h"

#include <cmath>

#include "mvhedge/strategy.hpp"

using namespace mvhedge;

namespace {

SurfaceOptions small_opts() {
  SurfaceOptions o;
  o.n_lambda = 13;
  o.inner_paths = 300;
  o.substeps = 2;
  o.threads = 1;
  return o;
}

ModelBundle short_bundle(Scenario s) {
  ModelBundle b;
  b.scenario.scenario = s;
  b.scenario.T = 2;
  b.scenario.T_L = 2;
  return b;
}

}  // namespace

TEST_CASE("wealth coefficient solves A' + rA = 0, A(T) = 1") {
  const double r = 0.02, T = 10;
  CHECK(wealth_coefficient(T, T, r) == 1.0);
  for (double t : {0.0, 1.3, 4.7, 9.9}) {
    const double h = 1e-5;
    const double d = (wealth_coefficient(t + h, T, r) - wealth_coefficient(t - h, T, r)) / (2 * h);
    CHECK(std::abs(d + r * wealth_coefficient(t, T, r)) < 1e-9);
  }
}

TEST_CASE("stock allocation") {
  const MarketParams m;
  // 0.04 / (0.04 * 2 * e^{0.2})
  CHECK(u_star_stock(0, m, 2, 10) == doctest::Approx(0.5 * std::exp(-0.2)).epsilon(1e-15));
  CHECK(u_star_stock(0, m, 2, 10) == doctest::Approx(0.409365376538991).epsilon(1e-14));
  CHECK(u_star_stock(10, m, 2, 10) == doctest::Approx(0.5));
  // exact 1/gamma scaling
  for (double t : {0.0, 2.5, 7.0}) CHECK(u_star_stock(t, m, 2, 10) == 2 * u_star_stock(t, m, 4, 10));
  // no jumps: Merton-type ratio
  MarketParams nj = m;
  nj.varrho_S = 0;
  nj.sigma = 0.2;
  CHECK(u_star_stock(1, nj, 2, 10) ==
        doctest::Approx(nj.excess_return() / (0.04 * 2 * std::exp(0.02 * 9))).epsilon(1e-15));
  CHECK_THROWS_AS(u_star_stock(11, m, 2, 10), std::domain_error);
  CHECK_THROWS_AS(u_star_stock(0, m, 0, 10), std::invalid_argument);
}

TEST_CASE("longevity allocation: limits, scaling, errors") {
  const MarketParams m;
  const MortalityParams q;
  const auto s2 = build_b_surface(m, q, 2.0, 2.0, 2.0, small_opts());
  const auto s4 = build_b_surface(m, q, 2.0, 2.0, 4.0, small_opts());
  for (double t : {0.0, 0.7, 1.9})
    for (double lam : {0.0, 0.05, 0.31}) {
      const double u2 = u_star_longevity(t, lam, s2, m, q, 2.0, 2.0, 2.0);
      const double u4 = u_star_longevity(t, lam, s4, m, q, 4.0, 2.0, 2.0);
      CHECK(std::isfinite(u2));
      CHECK(u2 == 2 * u4);
    }
  CHECK_THROWS_AS(u_star_longevity(2.0, 0.05, s2, m, q, 2.0, 2.0, 2.0), std::domain_error);
  CHECK_THROWS_AS(u_star_longevity(0.5, -0.1, s2, m, q, 2.0, 2.0, 2.0), std::domain_error);

  // unpriced longevity risk: nothing to earn, nothing to hedge
  MortalityParams q0 = q;
  q0.kappa = 0;
  q0.psi2 = 0;
  const auto s0 = build_b_surface(m, q0, 2.0, 2.0, 2.0, small_opts());
  for (double lam : {0.0, 0.05, 0.4}) CHECK(u_star_longevity(0.3, lam, s0, m, q0, 2.0, 2.0, 2.0) == 0.0);

  // riskless bond: no diffusion and no jumps
  MortalityParams flat = q;
  flat.sigma_lambda = 0;
  flat.varrho_lambda = 0;
  flat.kappa = 0;
  flat.psi2 = 0;
  const auto sf = build_b_surface(m, flat, 2.0, 2.0, 2.0, small_opts());
  CHECK_THROWS_AS(u_star_longevity(0.3, 0.05, sf, m, flat, 2.0, 2.0, 2.0), std::domain_error);
}

TEST_CASE("no-jump intensity model: lambda -> 0 limit stays finite") {
  const MarketParams m;
  MortalityParams q;
  q.varrho_lambda = 0;
  const auto s = build_b_surface(m, q, 2.0, 2.0, 2.0, small_opts());
  const double u0 = u_star_longevity(0.5, 0.0, s, m, q, 2.0, 2.0, 2.0);
  const double u1 = u_star_longevity(0.5, 1e-9, s, m, q, 2.0, 2.0, 2.0);
  CHECK(std::isfinite(u0));
  CHECK(u0 == doctest::Approx(u1).epsilon(1e-6));
}

TEST_CASE("scenario variants") {
  const auto base = prepare_scenario(short_bundle(Scenario::Baseline), small_opts());
  const auto noL = prepare_scenario(short_bundle(Scenario::NoLongevity), small_opts());
  const auto blind = prepare_scenario(short_bundle(Scenario::JumpBlind), small_opts());
  const auto brown = prepare_scenario(short_bundle(Scenario::BrownianOnly), small_opts());
  const auto normal = prepare_scenario(short_bundle(Scenario::NormalJumps), small_opts());

  CHECK(noL.surface == nullptr);
  CHECK(blind.belief_market.varrho_S == 0);
  CHECK(blind.belief_mortality.varrho_lambda == 0);
  CHECK(blind.world_mortality.varrho_lambda == MortalityParams{}.varrho_lambda);
  CHECK(brown.world_mortality.varrho_lambda == 0);
  CHECK(brown.world_market.varrho_S == 0);
  CHECK(normal.world_market.jump_size_law == JumpSizeLaw::StandardNormal);

  for (double t : {0.0, 0.4, 1.5})
    for (double lam : {0.01, 0.05, 0.2}) {
      const auto a = scenario_strategy(base, t, lam);
      CHECK(scenario_strategy(noL, t, lam).u_Y == 0.0);
      CHECK(scenario_strategy(noL, t, lam).u_S == a.u_S);
      CHECK(scenario_strategy(blind, t, lam).u_S == doctest::Approx(a.u_S).epsilon(1e-14));
      CHECK(scenario_strategy(normal, t, lam).u_S == a.u_S);
      CHECK(scenario_strategy(normal, t, lam).u_Y == a.u_Y);
      CHECK(scenario_strategy(blind, t, lam).u_Y == scenario_strategy(brown, t, lam).u_Y);
    }
}

TEST_CASE("strategy table matches the pointwise formulas") {
  const auto art = prepare_scenario(short_bundle(Scenario::Baseline), small_opts());
  const StrategyTable table(art, 0.0, 2.0, 50);
  for (std::int64_t i : {0, 7, 25, 49})
    for (double lam : {0.0, 0.033, 0.05, 0.4, 0.75}) {
      const auto a = table.at(i, lam);
      const auto b = scenario_strategy(art, table.time(i), lam);
      CHECK(a.u_S == b.u_S);
      CHECK(a.u_Y == doctest::Approx(b.u_Y).epsilon(1e-12));
    }
  CHECK_THROWS_AS(StrategyTable(art, 0.0, 3.0, 10), std::invalid_argument);
}

TEST_CASE("u_S does not depend on the state") {
  const auto art = prepare_scenario(short_bundle(Scenario::Baseline), small_opts());
  const double ref = scenario_strategy(art, 0.8, 0.05).u_S;
  for (double lam : {0.0, 0.01, 0.3, 2.0}) CHECK(scenario_strategy(art, 0.8, lam).u_S == ref);
}
