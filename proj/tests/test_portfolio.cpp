#include "doctest.h"

#include <cmath>
#include <sstream>

#include "mvhedge/portfolio.hpp"

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

ModelBundle short_bundle(Scenario s = Scenario::Baseline) {
  ModelBundle b;
  b.scenario.scenario = s;
  b.scenario.T = 2;
  b.scenario.T_L = 2;
  b.scenario.n_steps = 200;
  b.scenario.n_paths = 3000;
  return b;
}

}  // namespace

TEST_CASE("wealth step arithmetic") {
  CHECK(step_wealth(1.0, {0.5, 0.2}, 0.01, -0.005, 0.02, 0.004) == doctest::Approx(1.004024).epsilon(1e-15));
  const double g = 0.02 * 0.004;
  CHECK(step_wealth(1.7, {3.0, -2.0}, g, g, 0.02, 0.004) == doctest::Approx(1.7 * (1 + g)).epsilon(1e-15));
  CHECK(step_wealth(-1.0, {0.0, 0.0}, 0.5, 0.5, 0.02, 0.004) < 0);
  CHECK(step_wealth_compounded(2.0, {0.0, 0.0}, 9.0, 9.0, std::expm1(0.01)) == 2.0 + 2.0 * std::expm1(0.01));
}

TEST_CASE("summary statistics") {
  const std::vector<double> x{1.0, 2.0, 3.0, 4.0};
  const auto s = summarize_terminal_wealth(x, 2.0);
  CHECK(s.mean_PT == 2.5);
  CHECK(s.var_PT == doctest::Approx(5.0 / 3.0));
  CHECK(s.roer == doctest::Approx(std::log(2.5) / 2.0));
  CHECK(s.ci_mean_halfwidth == doctest::Approx(1.959963984540054 * std::sqrt(5.0 / 12.0)));
  CHECK(s.n_paths_used == 4);
  const auto neg = summarize_terminal_wealth({-1.0, -2.0}, 1.0);
  CHECK_FALSE(neg.has_roer());
  CHECK(mean_variance_objective(s, 2.0) == doctest::Approx(2.5 - 5.0 / 3.0));
}

TEST_CASE("riskless portfolio grows at the short rate") {
  auto b = short_bundle(Scenario::NoLongevity);
  b.market.mu = b.market.r;  // u_S = 0
  b.scenario.n_paths = 50;
  const auto art = prepare_scenario(b, small_opts());
  WealthSimOptions o;
  o.keep_terminal = true;
  const auto res = simulate_terminal_wealth(b.scenario, art, o);
  for (double P : res.terminal) {
    CHECK(P == res.terminal.front());
    CHECK(std::abs(P - std::exp(b.market.r * b.scenario.T)) < 1e-14);
  }
  CHECK(res.summary.var_PT == 0.0);
  const auto vf = value_function_report(b.scenario, art, res.summary);
  CHECK(vf.V_hat == res.summary.mean_PT);
}

TEST_CASE("self-financing identity and positivity on dumped paths") {
  auto b = short_bundle();
  b.scenario.n_paths = 20;
  const auto art = prepare_scenario(b, small_opts());
  WealthSimOptions o;
  o.dump_paths = 5;
  const auto res = simulate_terminal_wealth(b.scenario, art, o);
  REQUIRE(res.paths.size() == 5);
  const double growth = std::expm1(b.market.r * b.scenario.dt());
  for (const auto& path : res.paths) {
    REQUIRE(path.size() == static_cast<std::size_t>(b.scenario.n_steps) + 1);
    for (std::size_t i = 0; i + 1 < path.size(); ++i) {
      const auto& r = path[i];
      CHECK(path[i + 1].P == step_wealth_compounded(r.P, {r.u_S, r.u_Y}, r.dS_rel, r.dY_rel, growth));
      CHECK(path[i + 1].S == r.S * (1 + r.dS_rel));
      CHECK(r.S > 0);
      CHECK(r.lambda >= 0);
      CHECK(r.Phi >= 0);
      CHECK(r.Y > 0);
    }
    CHECK(path.back().t == b.scenario.T);
  }
  std::ostringstream os;
  write_wealth_paths_header(os);
  write_wealth_paths(os, 0, res.paths[0]);
  CHECK(os.str().rfind("path_id,t,P,u_S,u_Y", 0) == 0);
}

TEST_CASE("wealth simulation is reproducible bitwise") {
  const auto b = short_bundle();
  const auto art = prepare_scenario(b, small_opts());
  WealthSimOptions o1, o3;
  o1.threads = 1;
  o3.threads = 3;
  const auto a = simulate_terminal_wealth(b.scenario, art, o1);
  const auto c = simulate_terminal_wealth(b.scenario, art, o3);
  CHECK(a.summary.mean_PT == c.summary.mean_PT);
  CHECK(a.summary.var_PT == c.summary.var_PT);
  CHECK(a.summary.ci_var_halfwidth == c.summary.ci_var_halfwidth);
  auto b2 = b;
  b2.scenario.seed += 1;
  CHECK(simulate_terminal_wealth(b2.scenario, art, o1).summary.mean_PT != a.summary.mean_PT);
  CHECK(a.summary.mean_PT > std::exp(b.market.r * b.scenario.T));
}

TEST_CASE("artifacts must match the spec") {
  const auto b = short_bundle();
  const auto art = prepare_scenario(b, small_opts());
  auto other = b.scenario;
  other.gamma = 3;
  CHECK_THROWS_AS(simulate_terminal_wealth(other, art), std::invalid_argument);
}

TEST_CASE("null perturbation reproduces J exactly") {
  const auto b = short_bundle();
  const auto art = prepare_scenario(b, small_opts());
  const auto rep = equilibrium_perturbation_check(b.scenario, art, {{0.0, 0.0}, {0.2, 0.0}, {0.0, -0.2}}, 0.2, 1);
  REQUIRE(rep.J_perturbed.size() == 3);
  CHECK(rep.J_perturbed[0] == rep.J_star);
  CHECK(rep.se_diff[0] == 0.0);
  CHECK(rep.pass);
  CHECK(default_perturbations(0.1).size() == 4);
}

TEST_CASE("ansatz: terminal identity and unpriced-longevity closed form") {
  auto b = short_bundle();
  b.mortality.kappa = 0;
  b.mortality.psi2 = 0;
  b.scenario.n_paths = 20000;
  b.scenario.n_steps = 100;
  const auto art = prepare_scenario(b, small_opts());
  const auto at_T = ansatz_consistency_check(b.scenario, art, 2.0, 1.3, 0.05, 1);
  CHECK(at_T.predicted == doctest::Approx(1.3).epsilon(1e-15));
  CHECK(at_T.mc_mean == 1.3);
  CHECK(at_T.pass);
  const auto rep = ansatz_consistency_check(b.scenario, art, 0.5, 1.0, 0.05, 1);
  const double closed = std::exp(0.02 * 1.5) + theta1(b.market) * b.market.excess_return() * 1.5 / 2.0;
  CHECK(rep.predicted == doctest::Approx(closed).epsilon(1e-13));
  CHECK(rep.pass);
}
