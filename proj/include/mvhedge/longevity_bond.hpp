#ifndef MVHEDGE_LONGEVITY_BOND_HPP
#define MVHEDGE_LONGEVITY_BOND_HPP

// Affine pricing of the zero-coupon longevity bond under Q, and the
// coefficients of its dollar-value process Y under P.
//
// With u = varsigma * B the exponential jump law gives closed forms
//   E[e^{-B x}] - 1       = -u / (1 + u)
//   E[(e^{-B x} - 1)^2]   = 2 u^2 / ((1 + u)(1 + 2u)).
// Every coefficient below is written in terms of these.

#include <cmath>
#include <limits>
#include <stdexcept>

#include "mvhedge/params.hpp"
#include "mvhedge/quadrature.hpp"

namespace mvhedge {

namespace detail {

template <typename Scalar>
Scalar time_to_maturity(Scalar t, Scalar T_L) {
  const Scalar eps = Scalar(64) * std::numeric_limits<Scalar>::epsilon() * std::max(Scalar(1), std::abs(T_L));
  if (t > T_L + eps) throw std::domain_error("time after bond maturity");
  return std::max(Scalar(0), T_L - t);
}

}  // namespace detail

/// CIR Riccati coefficient B(t, T_L), solving dB/dt = (sigma^2/2) B^2 + beta B - 1, B(T_L) = 0.
template <typename Scalar>
Scalar riccati_B(Scalar t, Scalar T_L, const BasicMortalityParams<Scalar>& q) {
  const Scalar tau = detail::time_to_maturity(t, T_L);
  const Scalar h = std::sqrt(q.beta * q.beta + 2 * q.sigma_lambda * q.sigma_lambda);
  const Scalar e = std::expm1(h * tau);
  return 2 * e / (2 * h + (q.beta + h) * e);
}

/// CIR A(t, T_L); the sigma_lambda = 0 limit is exp(-theta (tau - B)).
template <typename Scalar>
Scalar cir_A(Scalar t, Scalar T_L, const BasicMortalityParams<Scalar>& q) {
  const Scalar tau = detail::time_to_maturity(t, T_L);
  if (q.sigma_lambda == Scalar(0)) {
    return std::exp(-q.theta * (tau - riccati_B(t, T_L, q)));
  }
  // log of the bracket, rearranged so every term is O(sigma^2) without cancellation:
  // (beta - h) tau / 2 + log1p(d) - log1p(d e^{-h tau}),  d = (h - beta) / (h + beta)
  const Scalar s2 = q.sigma_lambda * q.sigma_lambda;
  const Scalar h = std::sqrt(q.beta * q.beta + 2 * s2);
  const Scalar h_minus_beta = 2 * s2 / (h + q.beta);
  const Scalar d = h_minus_beta / (h + q.beta);
  const Scalar log_base = -h_minus_beta * tau / 2 + std::log1p(d) - std::log1p(d * std::exp(-h * tau));
  return std::exp(2 * q.beta * q.theta / s2 * log_base);
}

/// Jump factor exp(-(1+psi2) varrho int_t^{T_L} varsigma B / (1 + varsigma B) ds).
template <typename Scalar>
Scalar jump_correction_alpha(Scalar t, Scalar T_L, const BasicMortalityParams<Scalar>& q) {
  const Scalar tau = detail::time_to_maturity(t, T_L);
  const Scalar intensity = q.q_jump_intensity();
  if (tau == Scalar(0) || intensity == Scalar(0)) return Scalar(1);
  auto integrand = [&](Scalar s) {
    const Scalar u = q.varsigma * riccati_B(std::min(s, T_L), T_L, q);
    return u / (1 + u);
  };
  const Scalar integral = integrate_gauss_kronrod(integrand, t, T_L, Scalar(1e-12));
  return std::exp(-intensity * integral);
}

/// Survival-index bond price e^{-r (T_L - t)} A alpha e^{-B lambda}.
template <typename Scalar>
Scalar bond_price(Scalar t, Scalar T_L, Scalar lambda, const BasicMortalityParams<Scalar>& q, Scalar r) {
  if (lambda < 0) throw std::domain_error("bond_price: negative intensity");
  const Scalar tau = detail::time_to_maturity(t, T_L);
  return std::exp(-r * tau - riccati_B(t, T_L, q) * lambda) * cir_A(t, T_L, q) * jump_correction_alpha(t, T_L, q);
}

/// Coefficients of dY/Y at a fixed time t for maturity T_L.
///
/// Uses the rescalings nu_L = B nu_hat and sigma_L^2 + eta_tilde = B^2 s_hat, which
/// stay smooth as t -> T_L where B -> 0.
template <typename Scalar>
class BondCoefficients {
 public:
  BondCoefficients() = default;
  BondCoefficients(const BasicMortalityParams<Scalar>& q, Scalar t, Scalar T_L)
      : sigma_(q.sigma_lambda), kappa_(q.kappa), psi2_(q.psi2), varrho_(q.varrho_lambda),
        varsigma_(q.varsigma), B_(riccati_B(t, T_L, q)) {
    const Scalar u = varsigma_ * B_;
    nu_const_ = psi2_ * varrho_ * varsigma_ / (1 + u);
    s_const_ = 2 * varrho_ * varsigma_ * varsigma_ / ((1 + u) * (1 + 2 * u));
    eta_mean_over_B_ = -varrho_ * varsigma_ / (1 + u);
  }

  Scalar B() const { return B_; }
  /// nu_hat and s_hat at lambda = 0
  Scalar nu_hat_intercept() const { return nu_const_; }
  Scalar s_hat_intercept() const { return s_const_; }

  /// nu_L / B
  Scalar nu_hat(Scalar lambda) const { return sigma_ * kappa_ * lambda + nu_const_; }
  /// (sigma_L^2 + eta_tilde) / B^2
  Scalar s_hat(Scalar lambda) const { return sigma_ * sigma_ * lambda + s_const_; }

  Scalar nu_L(Scalar lambda) const { return B_ * nu_hat(lambda); }
  Scalar sigma_L(Scalar lambda) const { return -B_ * sigma_ * std::sqrt(lambda); }
  Scalar eta_L(Scalar x) const { return std::expm1(-B_ * x); }
  /// eta_L(x) / B, with the B -> 0 limit -x.
  Scalar eta_L_over_B(Scalar x) const { return B_ == Scalar(0) ? -x : std::expm1(-B_ * x) / B_; }
  /// int eta_L^2 dtheta
  Scalar eta_tilde() const { return B_ * B_ * s_const_; }
  /// int eta_L dtheta, the compensator of the Y jumps under P.
  Scalar eta_compensator() const { return B_ * eta_mean_over_B_; }
  Scalar eta_compensator_over_B() const { return eta_mean_over_B_; }

  /// Theta2 * B = nu_hat / s_hat. Without jumps the lambda factor cancels to kappa/sigma.
  Scalar theta2_times_B(Scalar lambda) const {
    if (varrho_ == Scalar(0)) {
      if (sigma_ == Scalar(0)) throw std::domain_error("Theta2 undefined: riskless longevity bond");
      return kappa_ / sigma_;
    }
    return nu_hat(lambda) / s_hat(lambda);
  }
  Scalar theta2(Scalar lambda) const {
    if (B_ == Scalar(0)) throw std::domain_error("Theta2 undefined at bond maturity");
    return theta2_times_B(lambda) / B_;
  }
  /// Theta2 * nu_L, finite at maturity.
  Scalar theta2_nu(Scalar lambda) const { return theta2_times_B(lambda) * nu_hat(lambda); }
  /// C(x) = Theta2 * eta_L(x)
  Scalar girsanov_C(Scalar lambda, Scalar x) const { return theta2_times_B(lambda) * eta_L_over_B(x); }
  /// -Theta2 * sigma_L: volatility of the density process.
  Scalar density_volatility(Scalar lambda) const { return theta2_times_B(lambda) * sigma_ * std::sqrt(lambda); }
  /// -Theta2 * sigma_lambda sqrt(lambda) * sigma_L: extra P* drift of lambda.
  Scalar pstar_drift_shift(Scalar lambda) const { return theta2_times_B(lambda) * sigma_ * sigma_ * lambda; }
  /// -Theta2 * int eta_L dtheta: rate of the additional P* jumps when Theta2 > 0.
  Scalar pstar_extra_jump_rate(Scalar lambda) const {
    return -theta2_times_B(lambda) * eta_mean_over_B_;
  }

 private:
  Scalar sigma_{}, kappa_{}, psi2_{}, varrho_{}, varsigma_{}, B_{};
  Scalar nu_const_{}, s_const_{}, eta_mean_over_B_{};
};

/// Plain evaluation of the Y coefficients at (t, lambda).
template <typename Scalar>
struct YCoeffs {
  Scalar nu_L;
  Scalar sigma_L;
  Scalar eta_tilde;
  Scalar B;
  Scalar eta_L(Scalar x) const { return std::expm1(-B * x); }
};

template <typename Scalar>
YCoeffs<Scalar> y_coeffs(Scalar t, Scalar lambda, Scalar T_L, const BasicMortalityParams<Scalar>& q) {
  if (lambda < 0) throw std::domain_error("y_coeffs: negative intensity");
  const BondCoefficients<Scalar> c(q, t, T_L);
  return {c.nu_L(lambda), c.sigma_L(lambda), c.eta_tilde(), c.B()};
}

}  // namespace mvhedge

#endif  // MVHEDGE_LONGEVITY_BOND_HPP
