#ifndef MVHEDGE_CHECKS_HPP
#define MVHEDGE_CHECKS_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "mvhedge/params.hpp"

namespace mvhedge {

/// Analytic moments against a Monte Carlo sample. A moment passes when the
/// analytic value lies inside the 95% interval of the estimate.
struct MomentCheck {
  std::string quantity;
  double t = 0;
  double analytic_mean = 0, analytic_var = 0;
  double mc_mean = 0, mc_var = 0;
  double ci_mean = 0, ci_var = 0;
  std::int64_t n_paths = 0, n_steps = 0;

  bool mean_ok() const;
  bool var_ok() const;
  bool pass() const { return mean_ok() && var_ok(); }
};

MomentCheck stock_moment_check(const MarketParams& m, double t, std::int64_t n_paths, std::int64_t n_steps,
                               std::uint64_t seed, unsigned threads = 0);

/// Intensity under P against the closed form lambda_moments.
MomentCheck lambda_moment_check(const MortalityParams& q, double t, std::int64_t n_paths, std::int64_t n_steps,
                                std::uint64_t seed, unsigned threads = 0);

/// Affine price L(0, T_L) against E_Q[exp(-int (lambda + r))] with a
/// trapezoid integral along full-truncation paths.
struct BondCheck {
  double T_L = 0;
  double affine = 0;
  double mc = 0;
  double ci = 0;
  double rel_err = 0;
  /// max |dB/dt - (sigma^2/2 B^2 + beta B - 1)| on interior sample times
  double riccati_residual = 0;
  std::int64_t n_paths = 0, n_steps = 0;
  double rel_tolerance = 0.005;

  bool pass() const { return rel_err <= rel_tolerance && riccati_residual < 1e-8; }
};

double riccati_residual(const MortalityParams& q, double T_L, int samples = 50);

BondCheck bond_price_check(const MortalityParams& q, double r, double T_L, std::int64_t n_paths, std::int64_t n_steps,
                           std::uint64_t seed, unsigned threads = 0);

struct MartingaleCheck {
  std::string name;
  double target = 0;
  double mc = 0;
  double ci = 0;
  bool pass() const;
};

/// E_Q[e^{-rT} Y_T] = Y_0 and E_P[Phi_T] = 1.
std::vector<MartingaleCheck> martingale_checks(const MarketParams& m, const MortalityParams& q, double T, double T_L,
                                               std::int64_t n_paths, std::int64_t n_steps, std::uint64_t seed,
                                               unsigned threads = 0);

}  // namespace mvhedge

#endif  // MVHEDGE_CHECKS_HPP
