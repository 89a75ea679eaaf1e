#ifndef MVHEDGE_STRATEGY_HPP
#define MVHEDGE_STRATEGY_HPP

#include <filesystem>
#include <memory>
#include <vector>

#include "mvhedge/b_surface.hpp"
#include "mvhedge/longevity_bond.hpp"
#include "mvhedge/moments.hpp"
#include "mvhedge/params.hpp"

namespace mvhedge {

/// Dollar amounts held in the stock and in the longevity bond.
struct Allocation {
  double u_S = 0;
  double u_Y = 0;
};

/// Solution of A' + r A = 0, A(T) = 1; the same function is the wealth
/// coefficient a(t) of g = a(t) p + b(t, lambda).
inline double wealth_coefficient(double t, double T, double r) { return std::exp(r * (T - t)); }

/// mu_tilde / ((sigma^2 + rho^2 varrho_S E[x^2]) gamma e^{r(T-t)}).
double u_star_stock(double t, const MarketParams& m, double gamma, double T);

/// The bond allocation from the b-surface. Numerator nu_L - gamma b_lambda
/// sigma_lambda sqrt(lambda) sigma_L - gamma b2, denominator (sigma_L^2 +
/// eta_tilde) gamma e^{r(T-t)}; evaluated in B-scaled form so the lambda -> 0
/// and no-jump limits are exact.
double u_star_longevity(double t, double lambda, const BSurface& surface, const MarketParams& m,
                        const MortalityParams& q, double gamma, double T, double T_L);

/// Same as u_star_longevity with the bond coefficients and surface values
/// already evaluated.
double longevity_allocation(const BondCoefficients<double>& c, const MortalityParams& q, double lambda,
                            double b_lambda, double b2_over_B, double gamma, double discount);

enum class StrategyVariant { Equilibrium, NoLongevity, JumpBlind, BrownianOnly, NormalJumps, LongBond };

StrategyVariant variant_for(Scenario s);
const char* to_string(StrategyVariant v);

/// Everything a scenario run needs: the model the agent believes (used for the
/// allocation) and the model that generates the paths.
struct StrategyArtifacts {
  StrategyVariant variant = StrategyVariant::Equilibrium;
  MarketParams belief_market;
  MortalityParams belief_mortality;
  MarketParams world_market;
  MortalityParams world_mortality;
  double T = 10;
  double T_L = 10;
  double gamma = 2;
  std::shared_ptr<const BSurface> surface;  // null for NoLongevity
  bool surface_from_cache = false;
};

/// Builds (or loads from `cache_dir`) the surfaces for a scenario.
///   Baseline / LongBond: true model, bond maturity spec.T_L.
///   NoLongevity: no surface, u_Y = 0.
///   JumpBlind: belief = moment-matched jump-free model, world = true model.
///   BrownianOnly: belief = world = moment-matched jump-free model.
///   NormalJumps: standard-normal stock jumps; same E[x^2] = 1, so the surface
///   is the baseline one.
StrategyArtifacts prepare_scenario(const ModelBundle& bundle, const SurfaceOptions& opt,
                                   const std::filesystem::path& cache_dir = {});

/// Allocation at (t, lambda) for the scenario.
Allocation scenario_strategy(const StrategyArtifacts& art, double t, double lambda);

/// Per-step allocation table for a fixed time grid; lambda enters only through
/// the surface lookup. Used by the wealth simulator.
class StrategyTable {
 public:
  StrategyTable(const StrategyArtifacts& art, double t0, double t1, std::int64_t n_steps);

  Allocation at(std::int64_t i, double lambda) const;
  double time(std::int64_t i) const { return t0_ + static_cast<double>(i) * dt_; }

 private:
  const StrategyArtifacts* art_;
  double t0_, dt_;
  bool longevity_;
  std::vector<double> u_S_, discount_;
  std::vector<BondCoefficients<double>> coeffs_;
  // b_lambda and b2/B interpolated to each step's time, n_lambda per step
  std::vector<double> b_lambda_, b2_over_B_;
  int n_lambda_ = 0;
  double inv_dlambda_ = 0;
};

}  // namespace mvhedge

#endif  // MVHEDGE_STRATEGY_HPP
