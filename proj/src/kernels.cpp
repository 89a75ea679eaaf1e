#include "mvhedge/kernels.hpp"

#include <cmath>
#include <ostream>
#include <sstream>

namespace mvhedge {

void PathGrid::validate() const {
  if (n_steps < 1) throw std::invalid_argument("PathGrid: n_steps must be >= 1");
  if (!(t1 > t0)) throw std::invalid_argument("PathGrid: dt must be > 0 (t1 <= t0)");
}

namespace {

std::string violation_message(double t, double lambda, double x, double C) {
  std::ostringstream os;
  os << "Girsanov condition violated: C = " << C << " >= 1 at t = " << t << ", lambda = " << lambda
     << ", jump size = " << x;
  return os.str();
}

}  // namespace

GirsanovViolation::GirsanovViolation(double t_, double lambda_, double x_, double C_)
    : std::runtime_error(violation_message(t_, lambda_, x_, C_)), t(t_), lambda(lambda_), x(x_), C(C_) {}

namespace detail {

double stock_jump_factor(const MarketParams& m, RngStream& rng) {
  if (m.jump_size_law == JumpSizeLaw::UnitConstant) return 1 + m.rho;
  for (;;) {
    const double x = rng.normal();
    if (m.rho * x > -1 + 1e-6) return 1 + m.rho * x;
  }
}

}  // namespace detail

std::vector<double> simulate_stock_path(const MarketParams& m, const PathGrid& g, RngStream& rng) {
  g.validate();
  const double dt = g.dt();
  const double drift = (m.mu - 0.5 * m.sigma * m.sigma - m.rho * m.varrho_S * m.jump_mean()) * dt;
  const double vol = m.sigma * std::sqrt(dt);
  std::vector<double> S(static_cast<std::size_t>(g.n_steps) + 1);
  S[0] = m.s0;
  for (std::int64_t i = 0; i < g.n_steps; ++i) {
    double factor = std::exp(drift + vol * rng.normal());
    const auto n = rng.poisson(m.varrho_S * dt);
    for (std::int64_t k = 0; k < n; ++k) factor *= detail::stock_jump_factor(m, rng);
    S[static_cast<std::size_t>(i) + 1] = S[static_cast<std::size_t>(i)] * factor;
  }
  return S;
}

JcirPath simulate_jcir_path(const MortalityParams& q, MeasureTag measure, const PathGrid& g, RngStream& rng,
                            double bond_T_L, GirsanovPolicy policy) {
  g.validate();
  if (measure == MeasureTag::Pstar && bond_T_L < g.t1)
    throw std::invalid_argument("simulate_jcir_path: P* needs a bond maturity >= the path horizon");
  const double dt = g.dt();
  const double sqdt = std::sqrt(dt);
  const double a = q.p_reversion();
  const double rate = (measure == MeasureTag::Q ? q.q_jump_intensity() : q.varrho_lambda) * dt;

  JcirPath out;
  out.lambda.resize(static_cast<std::size_t>(g.n_steps) + 1);
  out.lambda[0] = q.lambda0;
  double raw = q.lambda0;
  for (std::int64_t i = 0; i < g.n_steps; ++i) {
    const double lam = raw > 0 ? raw : 0.0;
    const double dW = sqdt * rng.normal();
    double jumps = 0;
    double drift = measure == MeasureTag::Q ? q.beta * (q.theta - lam) : q.beta * q.theta - a * lam;
    const auto n = rng.poisson(rate);

    if (measure != MeasureTag::Pstar) {
      for (std::int64_t k = 0; k < n; ++k) {
        const double x = rng.exponential(q.varsigma);
        jumps += x;
        out.jumps.push_back({i, x});
      }
    } else {
      const double t = g.time(i);
      const BondCoefficients<double> c(q, t, bond_T_L);
      const double R = c.theta2_times_B(lam);
      drift += c.pstar_drift_shift(lam);
      for (std::int64_t k = 0; k < n; ++k) {
        const double x = rng.exponential(q.varsigma);
        const double u = rng.uniform();
        const double C = R * c.eta_L_over_B(x);
        if (C >= 1) {
          if (policy == GirsanovPolicy::Abort) throw GirsanovViolation(t, lam, x, C);
          ++out.girsanov_violations;
          continue;
        }
        if (u < 1 - C) {
          jumps += x;
          out.jumps.push_back({i, x});
        }
      }
      const double uE = rng.uniform();
      if (R > 0) {
        const auto n2 = RngStream::poisson_inverse(c.pstar_extra_jump_rate(lam) * dt, uE);
        const double second = q.varsigma / (1 + q.varsigma * c.B());
        for (std::int64_t k = 0; k < n2; ++k) {
          const double x = rng.exponential(q.varsigma) + rng.exponential(second);
          jumps += x;
          out.jumps.push_back({i, x});
        }
      }
    }
    raw += drift * dt + q.sigma_lambda * std::sqrt(lam) * dW + jumps;
    out.lambda[static_cast<std::size_t>(i) + 1] = raw > 0 ? raw : 0.0;
  }
  return out;
}

JointStepper::JointStepper(const MarketParams& m, const MortalityParams& q, const PathGrid& g, double T_L,
                           MeasureTag measure)
    : m_(m), q_(q), grid_(g), T_L_(T_L), measure_(measure) {
  g.validate();
  if (measure == MeasureTag::Pstar) throw std::invalid_argument("JointStepper: only P and Q dynamics");
  if (T_L < g.t1) throw std::invalid_argument("JointStepper: bond maturity before path horizon");
  coeffs_.reserve(static_cast<std::size_t>(g.n_steps));
  for (std::int64_t i = 0; i < g.n_steps; ++i) coeffs_.emplace_back(q, g.time(i), T_L);
  dt_ = g.dt();
  sqdt_ = std::sqrt(dt_);
  growth_ = std::expm1(m.r * dt_);
  stock_drift_ = (m.mu - 0.5 * m.sigma * m.sigma - m.rho * m.varrho_S * m.jump_mean()) * dt_;
  stock_vol_ = m.sigma * sqdt_;
  stock_rate_ = m.varrho_S * dt_;
  log_unit_jump_ = std::log1p(m.rho);
  lambda_rate_ = (measure == MeasureTag::Q ? q.q_jump_intensity() : q.varrho_lambda) * dt_;
  stock_p0_ = std::exp(-stock_rate_);
  lambda_p0_ = std::exp(-lambda_rate_);
  // a riskless bond (no diffusion, no jumps) leaves Theta2 undefined; Phi stays 1
  has_density_ = q.varrho_lambda != 0 || q.sigma_lambda != 0;
}

JointStepper::State JointStepper::initial() const {
  return {m_.s0, q_.lambda0, bond_price(grid_.t0, T_L_, q_.lambda0, q_, m_.r), 0.0, 1.0};
}

JointStepper::Increment JointStepper::step(std::int64_t i, State& s, RngStream& stock_rng,
                                           RngStream& mortality_rng) const {
  Increment inc{};

  // stock
  const double z = stock_rng.normal();
  const auto nS = stock_rng.poisson(stock_rate_, stock_p0_);
  if (m_.jump_size_law == JumpSizeLaw::UnitConstant) {
    inc.dS_rel = std::expm1(stock_drift_ + stock_vol_ * z + static_cast<double>(nS) * log_unit_jump_);
  } else {
    double factor = std::exp(stock_drift_ + stock_vol_ * z);
    for (std::int64_t k = 0; k < nS; ++k) factor *= detail::stock_jump_factor(m_, stock_rng);
    inc.dS_rel = factor - 1;
  }
  inc.stock_jumps = static_cast<int>(nS);
  s.S *= 1 + inc.dS_rel;

  // mortality, bond value and density share dW and the jump marks
  const auto& c = coeffs_[static_cast<std::size_t>(i)];
  const double lam = s.lambda();
  const double dW = sqdt_ * mortality_rng.normal();
  const auto nL = mortality_rng.poisson(lambda_rate_, lambda_p0_);
  double jump_sum = 0, eta_sum = 0, eta_over_B_sum = 0;
  for (std::int64_t k = 0; k < nL; ++k) {
    const double x = mortality_rng.exponential(q_.varsigma);
    jump_sum += x;
    eta_sum += c.eta_L(x);
    eta_over_B_sum += c.eta_L_over_B(x);
  }
  inc.lambda_jumps = static_cast<int>(nL);

  double drift;
  if (measure_ == MeasureTag::Q) {
    drift = q_.beta * (q_.theta - lam);
    inc.dY_rel = growth_ + c.sigma_L(lam) * dW + eta_sum - (1 + q_.psi2) * c.eta_compensator() * dt_;
  } else {
    drift = q_.beta * q_.theta - q_.p_reversion() * lam;
    inc.dY_rel = growth_ + c.nu_L(lam) * dt_ + c.sigma_L(lam) * dW + eta_sum - c.eta_compensator() * dt_;
  }
  s.Y *= 1 + inc.dY_rel;

  if (has_density_) {
    const double R = c.theta2_times_B(lam);
    const double phi_factor =
        1 + c.density_volatility(lam) * dW - R * eta_over_B_sum + R * c.eta_compensator_over_B() * dt_;
    s.Phi = phi_factor > 0 ? s.Phi * phi_factor : 0.0;
  }

  s.lambda_raw += drift * dt_ + q_.sigma_lambda * std::sqrt(lam) * dW + jump_sum;
  s.int_lambda += 0.5 * (lam + s.lambda()) * dt_;
  return inc;
}

std::vector<JointRecord> simulate_joint_path(const MarketParams& m, const MortalityParams& q, const ScenarioSpec& spec,
                                             const PathGrid& g, std::uint64_t path_id, MeasureTag measure) {
  const JointStepper stepper(m, q, g, spec.T_L, measure);
  auto srng = stock_stream(spec.seed, path_id);
  auto mrng = mortality_stream(spec.seed, path_id);
  auto s = stepper.initial();
  std::vector<JointRecord> out;
  out.reserve(static_cast<std::size_t>(g.n_steps) + 1);
  out.push_back({g.t0, s.S, s.lambda(), s.Y, s.int_lambda, s.Phi, 0, 0});
  for (std::int64_t i = 0; i < g.n_steps; ++i) {
    const auto inc = stepper.step(i, s, srng, mrng);
    out.push_back({g.time(i + 1), s.S, s.lambda(), s.Y, s.int_lambda, s.Phi, inc.stock_jumps, inc.lambda_jumps});
  }
  return out;
}

void write_path_csv_header(std::ostream& os) { os << "path_id,t,S,lambda,Y,int_lambda,Phi\n"; }

void write_path_csv(std::ostream& os, std::uint64_t path_id, const std::vector<JointRecord>& path) {
  const auto old = os.precision(12);
  for (const auto& r : path) {
    os << path_id << ',' << r.t << ',' << r.S << ',' << r.lambda << ',' << r.Y << ',' << r.int_lambda << ','
       << r.Phi << '\n';
  }
  os.precision(old);
}

}  // namespace mvhedge
