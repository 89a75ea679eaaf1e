#ifndef MVHEDGE_PARAMS_HPP
#define MVHEDGE_PARAMS_HPP

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace mvhedge {

enum class JumpSizeLaw { UnitConstant, StandardNormal };

enum class Scenario { Baseline, NoLongevity, JumpBlind, BrownianOnly, NormalJumps, LongBond };

/// Stock and bank-account parameters. All rates per year.
template <typename Scalar>
struct BasicMarketParams {
  Scalar mu = Scalar(0.06);
  Scalar sigma = Scalar(0.1);
  Scalar rho = Scalar(0.1);
  Scalar varrho_S = Scalar(3);
  Scalar r = Scalar(0.02);
  Scalar s0 = Scalar(1);
  JumpSizeLaw jump_size_law = JumpSizeLaw::UnitConstant;

  Scalar excess_return() const { return mu - r; }
  /// E[x] of a single stock jump size.
  Scalar jump_mean() const { return jump_size_law == JumpSizeLaw::UnitConstant ? Scalar(1) : Scalar(0); }
  /// E[x^2] of a single stock jump size; 1 under both laws.
  Scalar jump_second_moment() const { return Scalar(1); }
  /// sigma^2 + rho^2 varrho_S E[x^2], the instantaneous variance of dS/S.
  Scalar total_variance_rate() const {
    return sigma * sigma + rho * rho * varrho_S * jump_second_moment();
  }
};

/// Jump-CIR force of mortality with exponential(mean varsigma) upward jumps.
template <typename Scalar>
struct BasicMortalityParams {
  Scalar beta = Scalar(0.4);
  Scalar theta = Scalar(0.1);
  Scalar sigma_lambda = Scalar(0.3);
  Scalar kappa = Scalar(0.2);
  Scalar psi2 = Scalar(-0.2);
  Scalar varrho_lambda = Scalar(0.5);
  Scalar varsigma = Scalar(0.001);
  Scalar lambda0 = Scalar(0.05);

  /// theta + (1 + psi2) varrho_lambda varsigma / beta
  Scalar theta_tilde() const { return theta + (Scalar(1) + psi2) * varrho_lambda * varsigma / beta; }
  /// Mean-reversion speed under P.
  Scalar p_reversion() const { return beta + kappa * sigma_lambda; }
  /// Jump intensity under the pricing measure.
  Scalar q_jump_intensity() const { return (Scalar(1) + psi2) * varrho_lambda; }
  /// P drift with compensated jumps, evaluated at a (non-negative) intensity level.
  Scalar p_drift(Scalar lambda) const {
    return beta * theta_tilde() - p_reversion() * lambda - psi2 * varrho_lambda * varsigma;
  }
  Scalar q_drift(Scalar lambda) const { return beta * (theta - lambda); }
};

using MarketParams = BasicMarketParams<double>;
using MortalityParams = BasicMortalityParams<double>;

struct ScenarioSpec {
  Scenario scenario = Scenario::Baseline;
  double T = 10.0;
  double T_L = 10.0;
  double gamma = 2.0;
  double p0 = 1.0;
  std::int64_t n_paths = 200000;
  std::int64_t n_steps = 2500;
  std::uint64_t seed = 42;

  double dt() const { return T / static_cast<double>(n_steps); }
};

struct SimSummary {
  double mean_PT = 0;
  double var_PT = 0;
  /// ln(mean)/T; NaN when the mean is not positive.
  double roer = 0;
  double ci_mean_halfwidth = 0;
  double ci_var_halfwidth = 0;
  std::int64_t n_paths_used = 0;

  bool has_roer() const { return std::isfinite(roer); }
};

struct ModelBundle {
  MarketParams market;
  MortalityParams mortality;
  ScenarioSpec scenario;
};

/// Thrown by validate_params with every violated invariant.
class ValidationError : public std::invalid_argument {
 public:
  explicit ValidationError(std::vector<std::string> violations);
  const std::vector<std::string>& violations() const noexcept { return violations_; }

 private:
  std::vector<std::string> violations_;
};

/// Returns the bundle unchanged when all invariants hold, otherwise throws
/// ValidationError listing each violation with the offending value.
ModelBundle validate_params(const MarketParams& m, const MortalityParams& q, const ScenarioSpec& s);

/// Invariant violations without throwing; empty when valid.
std::vector<std::string> collect_violations(const MarketParams& m, const MortalityParams& q,
                                            const ScenarioSpec& s);

template <typename Scalar>
Scalar theta_tilde(const BasicMortalityParams<Scalar>& q) {
  return q.theta_tilde();
}

const char* to_string(Scenario s);
const char* to_string(JumpSizeLaw law);
Scenario scenario_from_string(const std::string& name);
JumpSizeLaw jump_size_law_from_string(const std::string& name);

}  // namespace mvhedge

#endif  // MVHEDGE_PARAMS_HPP
