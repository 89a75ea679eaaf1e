#include "doctest.h"

#include <cmath>
#include <filesystem>

#include "mvhedge/b_surface.hpp"
#include "mvhedge/quadrature.hpp"

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

bool same(const Eigen::ArrayXXd& a, const Eigen::ArrayXXd& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() && (a == b).all();
}

}  // namespace

TEST_CASE("theta1 scalar and matrix forms agree") {
  const MarketParams m;
  CHECK(theta1(m) == doctest::Approx(1.0).epsilon(1e-15));
  Eigen::VectorXd mu(1), xi(1);
  Eigen::MatrixXd cov(1, 1), R(1, 1);
  mu << m.excess_return();
  cov << m.sigma * m.sigma;
  R << m.rho;
  xi << m.varrho_S * m.jump_second_moment();
  CHECK(theta1(mu, cov, R, xi)(0) == doctest::Approx(theta1(m)).epsilon(1e-14));

  // two stocks, uncorrelated: componentwise ratio
  Eigen::VectorXd mu2(2), xi2(2);
  Eigen::MatrixXd cov2 = Eigen::MatrixXd::Zero(2, 2), R2 = Eigen::MatrixXd::Identity(2, 2) * 0.1;
  mu2 << 0.04, 0.02;
  cov2.diagonal() << 0.01, 0.04;
  xi2 << 3, 1;
  const Eigen::VectorXd th = theta1(mu2, cov2, R2, xi2);
  CHECK(th(0) == doctest::Approx(0.04 / 0.04));
  CHECK(th(1) == doctest::Approx(0.02 / 0.05));

  MarketParams flat = m;
  flat.sigma = 0;
  flat.varrho_S = 0;
  CHECK_THROWS_AS(theta1(flat), std::domain_error);
}

TEST_CASE("gauss-laguerre integrates polynomials times e^-x") {
  const auto gl = gauss_laguerre(20);
  double s0 = 0, s3 = 0;
  for (int i = 0; i < 20; ++i) {
    s0 += gl.weights(i);
    s3 += gl.weights(i) * std::pow(gl.nodes(i), 3);
  }
  CHECK(s0 == doctest::Approx(1.0).epsilon(1e-13));
  CHECK(s3 == doctest::Approx(6.0).epsilon(1e-12));
}

TEST_CASE("terminal row of the surface is zero") {
  const MarketParams m;
  const MortalityParams q;
  const auto s = build_b_surface(m, q, 2.0, 2.0, 2.0, small_opts());
  CHECK(s.n_t == 11);
  const int J = s.n_t - 1;
  for (int i = 0; i < s.n_lambda; ++i) {
    CHECK(s.b(J, i) == 0.0);
    CHECK(s.b_lambda(J, i) == 0.0);
    CHECK(s.b2(J, i) == 0.0);
  }
  // b(0, .) sits above the stock part Theta1 mu_tilde T / gamma
  CHECK(s.b(0, 0) > theta1(m) * m.excess_return() * 2.0 / 2.0);
  CHECK(s.girsanov_violations == 0);
}

TEST_CASE("unpriced longevity gives the closed form") {
  const MarketParams m;
  MortalityParams q;
  q.kappa = 0;
  q.psi2 = 0;
  const auto s = build_b_surface(m, q, 3.0, 3.0, 2.0, small_opts());
  for (int j = 0; j < s.n_t; ++j)
    for (int i = 0; i < s.n_lambda; ++i) {
      const double exact = theta1(m) * m.excess_return() * (3.0 - s.t(j)) / 2.0;
      CHECK(s.b(j, i) == doctest::Approx(exact).epsilon(1e-13));
      CHECK(s.b_lambda(j, i) == 0.0);
      CHECK(s.b2(j, i) == 0.0);
    }
}

TEST_CASE("interpolation hits nodes and averages midpoints") {
  const auto s = build_b_surface(MarketParams{}, MortalityParams{}, 2.0, 2.0, 2.0, small_opts());
  const auto e = eval_b(s, s.t(3), s.lambda(4));
  CHECK(e.b == s.b(3, 4));
  CHECK(e.b_lambda == s.b_lambda(3, 4));
  const auto mid = eval_b(s, 0.5 * (s.t(3) + s.t(4)), 0.5 * (s.lambda(4) + s.lambda(5)));
  const double avg = 0.25 * (s.b(3, 4) + s.b(4, 4) + s.b(3, 5) + s.b(4, 5));
  CHECK(mid.b == doctest::Approx(avg).epsilon(1e-14));

  s.reset_extrapolations();
  const double slope = (s.b(0, s.n_lambda - 1) - s.b(0, s.n_lambda - 2)) / s.dlambda();
  const auto far = eval_b(s, 0.0, s.lambda_max + 0.1);
  CHECK(far.b == doctest::Approx(s.b(0, s.n_lambda - 1) + 0.1 * slope).epsilon(1e-12));
  CHECK(s.extrapolations() == 1);
}

TEST_CASE("surface build is deterministic and thread-count independent") {
  auto o = small_opts();
  const auto a = build_b_surface(MarketParams{}, MortalityParams{}, 2.0, 2.0, 2.0, o);
  o.threads = 3;
  const auto b = build_b_surface(MarketParams{}, MortalityParams{}, 2.0, 2.0, 2.0, o);
  CHECK(same(a.b, b.b));
  CHECK(same(a.b2, b.b2));
  CHECK(same(a.se, b.se));
}

TEST_CASE("b scales exactly as 1/gamma") {
  const auto a = build_b_surface(MarketParams{}, MortalityParams{}, 2.0, 2.0, 2.0, small_opts());
  const auto b = build_b_surface(MarketParams{}, MortalityParams{}, 2.0, 2.0, 4.0, small_opts());
  CHECK(same(a.b, 2.0 * b.b));
  CHECK(same(a.b_lambda, 2.0 * b.b_lambda));
  CHECK(same(a.b2_over_B, 2.0 * b.b2_over_B));
}

TEST_CASE("density-weighted and direct estimators agree (coarse)") {
  auto o = small_opts();
  o.inner_paths = 1500;
  o.n_lambda = 7;
  const auto dp = build_b_surface(MarketParams{}, MortalityParams{}, 2.0, 2.0, 2.0, o);
  o.estimator = BEstimator::DensityWeighted;
  const auto dw = build_b_surface(MarketParams{}, MortalityParams{}, 2.0, 2.0, 2.0, o);
  const auto cmp = compare_surfaces(dp, dw);
  CHECK(cmp.nodes == 10 * 7);
  CHECK(cmp.pass());
}

TEST_CASE("surface cache round trip") {
  const auto dir = std::filesystem::temp_directory_path() / "mvhedge_cache_test";
  std::filesystem::remove_all(dir);
  const MarketParams m;
  const MortalityParams q;
  bool hit = true;
  const auto a = cached_b_surface(m, q, 2.0, 2.0, 2.0, small_opts(), dir, &hit);
  CHECK_FALSE(hit);
  const auto b = cached_b_surface(m, q, 2.0, 2.0, 2.0, small_opts(), dir, &hit);
  CHECK(hit);
  CHECK(same(a.b, b.b));
  CHECK(same(a.b2_over_B, b.b2_over_B));
  CHECK(a.cache_key == b.cache_key);
  MortalityParams q2 = q;
  q2.kappa = 0.21;
  CHECK(surface_cache_key(m, q2, 2.0, 2.0, 2.0, small_opts()) != a.cache_key);
  auto o2 = small_opts();
  o2.seed += 1;
  CHECK(surface_cache_key(m, q, 2.0, 2.0, 2.0, o2) != a.cache_key);
  std::filesystem::remove_all(dir);
}
