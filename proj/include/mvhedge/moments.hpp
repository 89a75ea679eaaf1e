#ifndef MVHEDGE_MOMENTS_HPP
#define MVHEDGE_MOMENTS_HPP

#include <cmath>
#include <stdexcept>
#include <string>

#include "mvhedge/params.hpp"

namespace mvhedge {

template <typename Scalar>
struct MomentPair {
  Scalar mean;
  Scalar variance;
};

template <typename To, typename From>
BasicMortalityParams<To> cast_params(const BasicMortalityParams<From>& q) {
  BasicMortalityParams<To> out;
  out.beta = To(q.beta);
  out.theta = To(q.theta);
  out.sigma_lambda = To(q.sigma_lambda);
  out.kappa = To(q.kappa);
  out.psi2 = To(q.psi2);
  out.varrho_lambda = To(q.varrho_lambda);
  out.varsigma = To(q.varsigma);
  out.lambda0 = To(q.lambda0);
  return out;
}

/// Mean and variance of lambda_t under P, the reference closed forms
/// (rate a = beta + kappa sigma_lambda, level b = beta theta / a).
///
/// The closed-form variance does not reduce to the classical CIR variance when
/// the jumps are switched off; see lambda_moments_ode for the moment-ODE
/// solution. Both are kept so the discrepancy can be reported.
template <typename Scalar>
MomentPair<Scalar> lambda_moments(const BasicMortalityParams<Scalar>& q, Scalar t) {
  using std::exp;
  if (t < Scalar(0)) throw std::domain_error("lambda_moments: t must be >= 0");
  const Scalar a = q.beta + q.kappa * q.sigma_lambda;
  const Scalar b = q.beta * q.theta / a;
  const Scalar s2 = q.sigma_lambda * q.sigma_lambda;
  const Scalar rs = q.varrho_lambda * q.varsigma;
  const Scalar e1 = exp(-a * t);
  const Scalar e2 = exp(-2 * a * t);
  const Scalar mean = b * (1 - e1) + q.lambda0 * e1 + rs / a * (1 - e1);
  const Scalar var = q.beta * s2 * q.theta / (2 * a * a) * (1 - e1) + q.lambda0 * s2 / a * e1 * (1 - e1) +
                     q.varrho_lambda * q.varsigma * q.varsigma / a * (1 - e2) + s2 * rs / a * (1 - e1) +
                     s2 * rs / (2 * a * a) * (e2 - 1);
  return {mean, var};
}

/// Mean and variance from the linear moment ODEs
///   m' = beta theta + varrho varsigma - a m,   v' = -2 a v + sigma^2 m + 2 varrho varsigma^2.
template <typename Scalar>
MomentPair<Scalar> lambda_moments_ode(const BasicMortalityParams<Scalar>& q, Scalar t) {
  using std::exp;
  if (t < Scalar(0)) throw std::domain_error("lambda_moments_ode: t must be >= 0");
  const Scalar a = q.beta + q.kappa * q.sigma_lambda;
  const Scalar s2 = q.sigma_lambda * q.sigma_lambda;
  const Scalar m_inf = (q.beta * q.theta + q.varrho_lambda * q.varsigma) / a;
  const Scalar e1 = exp(-a * t);
  const Scalar e2 = exp(-2 * a * t);
  const Scalar mean = m_inf + (q.lambda0 - m_inf) * e1;
  const Scalar var = s2 * m_inf * (1 - e2) / (2 * a) + s2 * (q.lambda0 - m_inf) * (e1 - e2) / a +
                     q.varrho_lambda * q.varsigma * q.varsigma * (1 - e2) / a;
  return {mean, var};
}

template <typename Scalar>
MomentPair<Scalar> stock_moments(const BasicMarketParams<Scalar>& m, Scalar t) {
  using std::exp;
  if (t < Scalar(0)) throw std::domain_error("stock_moments: t must be >= 0");
  const Scalar mean = m.s0 * exp(m.mu * t);
  using std::expm1;
  return {mean, mean * mean * expm1(m.total_variance_rate() * t)};
}

class MomentMatchError : public std::runtime_error {
 public:
  MomentMatchError(const std::string& what, double mean_residual, double var_residual)
      : std::runtime_error(what), mean_residual_(mean_residual), var_residual_(var_residual) {}
  double mean_residual() const { return mean_residual_; }
  double var_residual() const { return var_residual_; }

 private:
  double mean_residual_, var_residual_;
};

/// Jump-free model with matched terminal moments.
struct NoJumpModel {
  MarketParams market;
  MortalityParams mortality;
  int newton_iterations = 0;
  double mean_residual = 0;
  double var_residual = 0;
};

/// Stock: sigma'^2 = sigma^2 + rho^2 varrho_S E[x^2], varrho_S' = 0. Mortality:
/// varrho' = 0 and (theta', sigma_lambda') chosen by damped Newton so that
/// lambda_moments at t_match are unchanged; beta, kappa, lambda0 are held fixed.
NoJumpModel match_no_jump_params(const MarketParams& m, const MortalityParams& q, double t_match,
                                 double tol = 1e-10, int max_iter = 100);

}  // namespace mvhedge

#endif  // MVHEDGE_MOMENTS_HPP
