#include "mvhedge/strategy.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mvhedge {

namespace {

constexpr double kMinDenominator = 1e-14;

}  // namespace

double u_star_stock(double t, const MarketParams& m, double gamma, double T) {
  if (!(gamma > 0)) throw std::invalid_argument("u_star_stock: gamma must be positive");
  if (t > T) throw std::domain_error("u_star_stock: t after horizon");
  const double var = m.total_variance_rate();
  if (var == 0) throw std::domain_error("u_star_stock: zero instantaneous variance");
  return m.excess_return() / ((var * gamma) * wealth_coefficient(t, T, m.r));
}

double longevity_allocation(const BondCoefficients<double>& c, const MortalityParams& q, double lambda,
                            double b_lambda, double b2_over_B, double gamma, double discount) {
  lambda = std::max(lambda, 0.0);
  const double s2 = q.sigma_lambda * q.sigma_lambda;
  double num, den;
  if (q.varrho_lambda == 0) {
    // lambda cancels: (kappa + gamma b_lambda sigma) / (B sigma gamma e)
    num = q.kappa + gamma * b_lambda * q.sigma_lambda;
    den = ((c.B() * q.sigma_lambda) * gamma) * discount;
  } else {
    num = c.nu_hat(lambda) + gamma * b_lambda * s2 * lambda - gamma * b2_over_B;
    den = ((c.B() * c.s_hat(lambda)) * gamma) * discount;
  }
  if (!(std::abs(den) >= kMinDenominator))
    throw std::domain_error("u_star_longevity: bond carries no risk (denominator below 1e-14)");
  return num / den;
}

double u_star_longevity(double t, double lambda, const BSurface& surface, const MarketParams& m,
                        const MortalityParams& q, double gamma, double T, double T_L) {
  if (!(gamma > 0)) throw std::invalid_argument("u_star_longevity: gamma must be positive");
  if (t >= T) throw std::domain_error("u_star_longevity: t must be before the horizon");
  if (t >= T_L) throw std::domain_error("u_star_longevity: t must be before bond maturity");
  if (lambda < 0) throw std::domain_error("u_star_longevity: negative intensity");
  const BondCoefficients<double> c(q, t, T_L);
  const BEval e = eval_b(surface, t, lambda);
  return longevity_allocation(c, q, lambda, e.b_lambda, e.b2_over_B, gamma, wealth_coefficient(t, T, m.r));
}

StrategyVariant variant_for(Scenario s) {
  switch (s) {
    case Scenario::Baseline: return StrategyVariant::Equilibrium;
    case Scenario::NoLongevity: return StrategyVariant::NoLongevity;
    case Scenario::JumpBlind: return StrategyVariant::JumpBlind;
    case Scenario::BrownianOnly: return StrategyVariant::BrownianOnly;
    case Scenario::NormalJumps: return StrategyVariant::NormalJumps;
    case Scenario::LongBond: return StrategyVariant::LongBond;
  }
  throw std::invalid_argument("unknown scenario");
}

const char* to_string(StrategyVariant v) {
  switch (v) {
    case StrategyVariant::Equilibrium: return "equilibrium";
    case StrategyVariant::NoLongevity: return "no_longevity";
    case StrategyVariant::JumpBlind: return "jump_blind";
    case StrategyVariant::BrownianOnly: return "brownian_only";
    case StrategyVariant::NormalJumps: return "normal_jumps";
    case StrategyVariant::LongBond: return "long_bond";
  }
  return "?";
}

StrategyArtifacts prepare_scenario(const ModelBundle& bundle, const SurfaceOptions& opt,
                                   const std::filesystem::path& cache_dir) {
  const auto& spec = bundle.scenario;
  StrategyArtifacts art;
  art.variant = variant_for(spec.scenario);
  art.T = spec.T;
  art.T_L = spec.T_L;
  art.gamma = spec.gamma;
  art.belief_market = art.world_market = bundle.market;
  art.belief_mortality = art.world_mortality = bundle.mortality;

  // the surface only sees the stock through Theta1 mu_tilde
  MarketParams surface_market = bundle.market;

  switch (art.variant) {
    case StrategyVariant::Equilibrium:
    case StrategyVariant::LongBond:
      break;
    case StrategyVariant::NoLongevity:
      return art;
    case StrategyVariant::NormalJumps:
      art.belief_market.jump_size_law = art.world_market.jump_size_law = JumpSizeLaw::StandardNormal;
      surface_market.jump_size_law = bundle.market.jump_size_law;
      break;
    case StrategyVariant::JumpBlind:
    case StrategyVariant::BrownianOnly: {
      const auto nj = match_no_jump_params(bundle.market, bundle.mortality, spec.T);
      art.belief_market = surface_market = nj.market;
      art.belief_mortality = nj.mortality;
      if (art.variant == StrategyVariant::BrownianOnly) {
        art.world_market = nj.market;
        art.world_mortality = nj.mortality;
      }
      break;
    }
  }
  bool hit = false;
  art.surface = std::make_shared<BSurface>(
      cached_b_surface(surface_market, art.belief_mortality, spec.T, spec.T_L, spec.gamma, opt, cache_dir, &hit));
  art.surface_from_cache = hit;
  return art;
}

Allocation scenario_strategy(const StrategyArtifacts& art, double t, double lambda) {
  Allocation a;
  a.u_S = u_star_stock(t, art.belief_market, art.gamma, art.T);
  if (art.variant != StrategyVariant::NoLongevity) {
    if (!art.surface) throw std::invalid_argument("scenario_strategy: missing b-surface");
    a.u_Y = u_star_longevity(t, lambda, *art.surface, art.belief_market, art.belief_mortality, art.gamma, art.T,
                             art.T_L);
  }
  return a;
}

StrategyTable::StrategyTable(const StrategyArtifacts& art, double t0, double t1, std::int64_t n_steps)
    : art_(&art), t0_(t0), dt_((t1 - t0) / static_cast<double>(n_steps)),
      longevity_(art.variant != StrategyVariant::NoLongevity) {
  if (n_steps <= 0 || !(t1 > t0)) throw std::invalid_argument("StrategyTable: bad grid");
  if (t1 > art.T + 1e-12) throw std::invalid_argument("StrategyTable: grid runs past the horizon");
  if (longevity_ && !art.surface) throw std::invalid_argument("StrategyTable: missing b-surface");
  const auto n = static_cast<std::size_t>(n_steps);
  u_S_.resize(n);
  discount_.resize(n);
  if (longevity_) {
    coeffs_.resize(n);
    n_lambda_ = art.surface->n_lambda;
    inv_dlambda_ = 1.0 / art.surface->dlambda();
    b_lambda_.resize(n * static_cast<std::size_t>(n_lambda_));
    b2_over_B_.resize(b_lambda_.size());
  }
  for (std::size_t i = 0; i < n; ++i) {
    const double t = time(static_cast<std::int64_t>(i));
    u_S_[i] = u_star_stock(t, art.belief_market, art.gamma, art.T);
    discount_[i] = wealth_coefficient(t, art.T, art.belief_market.r);
    if (!longevity_) continue;
    if (t >= art.T_L) throw std::domain_error("StrategyTable: bond matures inside the trading window");
    coeffs_[i] = BondCoefficients<double>(art.belief_mortality, t, art.T_L);
    const auto& s = *art.surface;
    const auto cell = detail::grid_cell(t / s.dt(), s.n_t, true);
    const int j = cell.index;
    const double wt = cell.weight;
    for (int k = 0; k < n_lambda_; ++k) {
      const std::size_t at = i * static_cast<std::size_t>(n_lambda_) + static_cast<std::size_t>(k);
      b_lambda_[at] = detail::lerp(s.b_lambda(j, k), s.b_lambda(j + 1, k), wt);
      b2_over_B_[at] = detail::lerp(s.b2_over_B(j, k), s.b2_over_B(j + 1, k), wt);
    }
  }
}

Allocation StrategyTable::at(std::int64_t step, double lambda) const {
  const auto i = static_cast<std::size_t>(step);
  Allocation a;
  a.u_S = u_S_[i];
  if (!longevity_) return a;
  lambda = std::max(lambda, 0.0);
  const double pos = lambda * inv_dlambda_;
  int k = static_cast<int>(pos);
  if (k > n_lambda_ - 2) {
    if (lambda > art_->surface->lambda_max) art_->surface->note_extrapolation();
    k = n_lambda_ - 2;
  }
  const double wl = pos - k;  // no node snapping here; agrees with eval_b to rounding
  const double* bl = &b_lambda_[i * static_cast<std::size_t>(n_lambda_)];
  const double* b2 = &b2_over_B_[i * static_cast<std::size_t>(n_lambda_)];
  a.u_Y = longevity_allocation(coeffs_[i], art_->belief_mortality, lambda, detail::lerp(bl[k], bl[k + 1], wl),
                               detail::lerp(b2[k], b2[k + 1], wl), art_->gamma, discount_[i]);
  return a;
}

}  // namespace mvhedge
