#include "doctest.h"

#include <cmath>

#include "mvhedge/moments.hpp"

using namespace mvhedge;

namespace {
// mpmath values, tests/oracles/bond_and_moments.py
constexpr double kPrintedMean = 0.0876610714662367659157884148895;
constexpr double kPrintedVar = 0.0085100615370359795876006241018;
constexpr double kOdeVar = 0.00853909890458972119932827914400609;
constexpr double kMatchedTheta = 0.101158360126845755568717773125;
constexpr double kMatchedSigma = 0.297875370502039458661382514307;
}  // namespace

TEST_CASE("stock moments") {
  const MarketParams m;
  const auto s = stock_moments(m, 10.0);
  CHECK(std::abs(s.mean - 1.822) < 1e-3);
  CHECK(std::abs(s.variance - 1.633) < 1e-3);
  CHECK(s.mean == doctest::Approx(1.82211880039050897).epsilon(1e-14));
  CHECK(s.variance == doctest::Approx(1.63291550165856731).epsilon(1e-13));

  const auto z = stock_moments(m, 0.0);
  CHECK(z.mean == m.s0);
  CHECK(z.variance == 0);

  MarketParams d = m;
  d.sigma = 0;
  d.varrho_S = 0;
  for (double t : {1.0, 5.0, 30.0}) CHECK(stock_moments(d, t).variance == 0);

  double prev = 0;
  for (int i = 0; i <= 100; ++i) {
    const double mean = stock_moments(m, 0.1 * i).mean;
    CHECK(mean > prev);
    prev = mean;
  }
  CHECK_THROWS_AS(stock_moments(m, -1.0), std::domain_error);
}

TEST_CASE("lambda moments closed form") {
  const MortalityParams q;
  const auto p = lambda_moments(q, 10.0);
  CHECK(p.mean == doctest::Approx(kPrintedMean).epsilon(1e-13));
  CHECK(p.variance == doctest::Approx(kPrintedVar).epsilon(1e-12));

  const auto z = lambda_moments(q, 0.0);
  CHECK(z.mean == q.lambda0);
  CHECK(z.variance == 0);

  // the moment-ODE solution: same mean, slightly different variance
  const auto o = lambda_moments_ode(q, 10.0);
  CHECK(o.mean == doctest::Approx(kPrintedMean).epsilon(1e-13));
  CHECK(o.variance == doctest::Approx(kOdeVar).epsilon(1e-12));
}

TEST_CASE("classical CIR reduction") {
  MortalityParams q;
  q.varrho_lambda = 0;
  q.kappa = 0;
  const double b = q.beta, s2 = q.sigma_lambda * q.sigma_lambda;
  for (double t : {0.5, 2.0, 10.0}) {
    const double e = std::exp(-b * t);
    const double mean = q.theta + (q.lambda0 - q.theta) * e;
    const double var = q.lambda0 * s2 / b * (e - e * e) + q.theta * s2 / (2 * b) * (1 - e) * (1 - e);
    CHECK(lambda_moments(q, t).mean == doctest::Approx(mean).epsilon(1e-13));
    CHECK(lambda_moments_ode(q, t).variance == doctest::Approx(var).epsilon(1e-12));
    // The closed-form variance carries (1 - e^{-at}) where the classical
    // formula has its square, so it overstates the variance here.
    CHECK(lambda_moments(q, t).variance > var);
  }
}

TEST_CASE("closed-form variance stays non-negative on a sweep") {
  int negatives = 0, evaluated = 0;
  for (double rho : {0.1, 0.3, 0.5, 0.8, 1.2})
    for (double vs : {0.0002, 0.0005, 0.001, 0.002, 0.005})
      for (double sl : {0.1, 0.2, 0.3, 0.4, 0.5}) {
        MortalityParams q;
        q.varrho_lambda = rho;
        q.varsigma = vs;
        q.sigma_lambda = sl;
        for (int k = 0; k <= 50; ++k) {
          ++evaluated;
          const auto v = lambda_moments(q, double(k)).variance;
          if (!(v >= 0)) ++negatives;
        }
      }
  CHECK(evaluated == 125 * 51);
  REQUIRE(negatives == 0);
}

TEST_CASE("moment matching") {
  const MarketParams m;
  const MortalityParams q;
  const auto nj = match_no_jump_params(m, q, 10.0);
  CHECK(nj.market.sigma == doctest::Approx(0.2).epsilon(1e-15));
  CHECK(nj.market.varrho_S == 0);
  CHECK(nj.mortality.varrho_lambda == 0);
  CHECK(nj.mortality.beta == q.beta);
  CHECK(nj.mortality.kappa == q.kappa);
  CHECK(nj.mortality.lambda0 == q.lambda0);
  CHECK(nj.mortality.theta == doctest::Approx(kMatchedTheta).epsilon(1e-9));
  CHECK(nj.mortality.sigma_lambda == doctest::Approx(kMatchedSigma).epsilon(1e-9));

  const auto a = lambda_moments(q, 10.0);
  const auto b = lambda_moments(nj.mortality, 10.0);
  CHECK(std::abs(a.mean - b.mean) < 1e-10);
  CHECK(std::abs(a.variance - b.variance) < 1e-10);

  // stock moments agree for every t
  for (double t : {1.0, 10.0, 25.0}) {
    CHECK(stock_moments(nj.market, t).mean == doctest::Approx(stock_moments(m, t).mean).epsilon(1e-14));
    CHECK(stock_moments(nj.market, t).variance == doctest::Approx(stock_moments(m, t).variance).epsilon(1e-12));
  }

  // fixed point: already jump free
  const auto again = match_no_jump_params(nj.market, nj.mortality, 10.0);
  CHECK(again.newton_iterations == 0);
  CHECK(again.mortality.theta == nj.mortality.theta);
  CHECK(again.mortality.sigma_lambda == nj.mortality.sigma_lambda);
  CHECK(again.market.sigma == doctest::Approx(nj.market.sigma).epsilon(1e-15));

  CHECK_THROWS_AS(match_no_jump_params(m, q, 0.0), std::invalid_argument);
}
