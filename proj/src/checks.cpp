#include "mvhedge/checks.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "mvhedge/kernels.hpp"
#include "mvhedge/longevity_bond.hpp"
#include "mvhedge/moments.hpp"
#include "mvhedge/parallel.hpp"
#include "mvhedge/portfolio.hpp"

namespace mvhedge {

namespace {

constexpr std::int64_t kBlock = 1024;

/// Fills out[p] = f(p) for every path, blocks run in parallel.
template <typename F>
std::vector<double> per_path(std::int64_t n, unsigned threads, F&& f) {
  if (n < 2) throw std::invalid_argument("Monte Carlo check needs at least 2 paths");
  std::vector<double> out(static_cast<std::size_t>(n));
  parallel_for((n + kBlock - 1) / kBlock, threads, [&](std::int64_t blk) {
    const std::int64_t end = std::min(n, (blk + 1) * kBlock);
    for (std::int64_t p = blk * kBlock; p < end; ++p) out[static_cast<std::size_t>(p)] = f(p);
  });
  return out;
}

MomentCheck moment_check(std::string name, double t, const MomentPair<double>& exact, const std::vector<double>& x,
                         std::int64_t n_steps) {
  const auto s = summarize_terminal_wealth(x, 1.0);
  MomentCheck c;
  c.quantity = std::move(name);
  c.t = t;
  c.analytic_mean = exact.mean;
  c.analytic_var = exact.variance;
  c.mc_mean = s.mean_PT;
  c.mc_var = s.var_PT;
  c.ci_mean = s.ci_mean_halfwidth;
  c.ci_var = s.ci_var_halfwidth;
  c.n_paths = static_cast<std::int64_t>(x.size());
  c.n_steps = n_steps;
  return c;
}

}  // namespace

bool MomentCheck::mean_ok() const { return std::abs(mc_mean - analytic_mean) <= ci_mean; }
bool MomentCheck::var_ok() const { return std::abs(mc_var - analytic_var) <= ci_var; }
bool MartingaleCheck::pass() const { return std::abs(mc - target) <= ci; }

MomentCheck stock_moment_check(const MarketParams& m, double t, std::int64_t n_paths, std::int64_t n_steps,
                               std::uint64_t seed, unsigned threads) {
  const PathGrid g(0.0, t, n_steps);
  const auto x = per_path(n_paths, threads, [&](std::int64_t p) {
    auto rng = stock_stream(seed, static_cast<std::uint64_t>(p));
    return simulate_stock_path(m, g, rng).back();
  });
  return moment_check("S", t, stock_moments(m, t), x, n_steps);
}

MomentCheck lambda_moment_check(const MortalityParams& q, double t, std::int64_t n_paths, std::int64_t n_steps,
                                std::uint64_t seed, unsigned threads) {
  const PathGrid g(0.0, t, n_steps);
  const auto x = per_path(n_paths, threads, [&](std::int64_t p) {
    auto rng = mortality_stream(seed, static_cast<std::uint64_t>(p));
    return simulate_jcir_path(q, MeasureTag::P, g, rng).lambda.back();
  });
  return moment_check("lambda", t, lambda_moments(q, t), x, n_steps);
}

double riccati_residual(const MortalityParams& q, double T_L, int samples) {
  const double e = 1e-4;
  double worst = 0;
  for (int k = 1; k < samples; ++k) {
    const double t = T_L * k / samples;
    if (t - e < 0 || t + e > T_L) continue;
    const double d = (riccati_B(t + e, T_L, q) - riccati_B(t - e, T_L, q)) / (2 * e);
    const double b = riccati_B(t, T_L, q);
    worst = std::max(worst, std::abs(d - (0.5 * q.sigma_lambda * q.sigma_lambda * b * b + q.beta * b - 1)));
  }
  return worst;
}

BondCheck bond_price_check(const MortalityParams& q, double r, double T_L, std::int64_t n_paths, std::int64_t n_steps,
                           std::uint64_t seed, unsigned threads) {
  const PathGrid g(0.0, T_L, n_steps);
  const double dt = g.dt();
  const auto x = per_path(n_paths, threads, [&](std::int64_t p) {
    auto rng = mortality_stream(seed, static_cast<std::uint64_t>(p));
    const auto path = simulate_jcir_path(q, MeasureTag::Q, g, rng);
    double integral = 0;
    for (std::size_t i = 0; i + 1 < path.lambda.size(); ++i) integral += 0.5 * (path.lambda[i] + path.lambda[i + 1]);
    return std::exp(-(integral * dt + r * T_L));
  });
  const auto s = summarize_terminal_wealth(x, 1.0);
  BondCheck c;
  c.T_L = T_L;
  c.affine = bond_price(0.0, T_L, q.lambda0, q, r);
  c.mc = s.mean_PT;
  c.ci = s.ci_mean_halfwidth;
  c.rel_err = std::abs(c.mc - c.affine) / c.affine;
  c.riccati_residual = riccati_residual(q, T_L);
  c.n_paths = n_paths;
  c.n_steps = n_steps;
  return c;
}

std::vector<MartingaleCheck> martingale_checks(const MarketParams& m, const MortalityParams& q, double T, double T_L,
                                               std::int64_t n_paths, std::int64_t n_steps, std::uint64_t seed,
                                               unsigned threads) {
  const PathGrid g(0.0, T, n_steps);
  const JointStepper under_q(m, q, g, T_L, MeasureTag::Q);
  const JointStepper under_p(m, q, g, T_L, MeasureTag::P);
  auto terminal = [&](const JointStepper& st, std::int64_t p) {
    auto srng = stock_stream(seed, static_cast<std::uint64_t>(p));
    auto mrng = mortality_stream(seed, static_cast<std::uint64_t>(p));
    auto s = st.initial();
    for (std::int64_t i = 0; i < n_steps; ++i) st.step(i, s, srng, mrng);
    return s;
  };
  const auto y = per_path(n_paths, threads, [&](std::int64_t p) { return std::exp(-m.r * T) * terminal(under_q, p).Y; });
  const auto phi = per_path(n_paths, threads, [&](std::int64_t p) { return terminal(under_p, p).Phi; });
  const auto sy = summarize_terminal_wealth(y, 1.0);
  const auto sp = summarize_terminal_wealth(phi, 1.0);
  return {{"discounted_Y_under_Q", bond_price(0.0, T_L, q.lambda0, q, m.r), sy.mean_PT, sy.ci_mean_halfwidth},
          {"Phi_under_P", 1.0, sp.mean_PT, sp.ci_mean_halfwidth}};
}

}  // namespace mvhedge
