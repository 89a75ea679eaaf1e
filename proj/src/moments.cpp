#include "mvhedge/moments.hpp"

#include <Eigen/Dense>
#include <unsupported/Eigen/AutoDiff>

#include <cmath>
#include <sstream>

namespace mvhedge {

namespace {

using AD = Eigen::AutoDiffScalar<Eigen::Vector2d>;

// Residuals of the primed CIR moments against the targets, with the 2x2 Jacobian
// in (theta', sigma_lambda').
void residuals(const MortalityParams& base, const Eigen::Vector2d& x, double t, const MomentPair<double>& target,
               Eigen::Vector2d& f, Eigen::Matrix2d& jac) {
  auto q = cast_params<AD>(base);
  q.theta = AD(x[0], 2, 0);
  q.sigma_lambda = AD(x[1], 2, 1);
  q.varrho_lambda = AD(0.0);
  const auto mp = lambda_moments(q, AD(t));
  f << mp.mean.value() - target.mean, mp.variance.value() - target.variance;
  jac.row(0) = mp.mean.derivatives().transpose();
  jac.row(1) = mp.variance.derivatives().transpose();
}

}  // namespace

NoJumpModel match_no_jump_params(const MarketParams& m, const MortalityParams& q, double t_match, double tol,
                                 int max_iter) {
  if (!(t_match > 0)) throw std::invalid_argument("match_no_jump_params: t_match must be > 0");

  NoJumpModel out;
  out.market = m;
  out.market.sigma = std::sqrt(m.total_variance_rate());
  out.market.varrho_S = 0;

  out.mortality = q;
  if (q.varrho_lambda == 0) return out;

  const auto target = lambda_moments(q, t_match);
  Eigen::Vector2d x(q.theta, q.sigma_lambda);
  Eigen::Vector2d f;
  Eigen::Matrix2d jac;
  residuals(q, x, t_match, target, f, jac);

  int it = 0;
  for (; it < max_iter && f.cwiseAbs().maxCoeff() > tol; ++it) {
    const Eigen::Vector2d step = jac.fullPivLu().solve(-f);
    double damp = 1.0;
    Eigen::Vector2d fx;
    Eigen::Matrix2d jx;
    Eigen::Vector2d trial;
    for (int k = 0; k < 40; ++k, damp *= 0.5) {
      trial = x + damp * step;
      if (trial[0] <= 0 || trial[1] <= 0) continue;
      residuals(q, trial, t_match, target, fx, jx);
      if (fx.norm() < f.norm()) break;
    }
    x = trial;
    f = fx;
    jac = jx;
  }
  out.newton_iterations = it;
  out.mean_residual = f[0];
  out.var_residual = f[1];
  if (f.cwiseAbs().maxCoeff() > tol || !x.allFinite()) {
    std::ostringstream os;
    os << "match_no_jump_params: Newton did not converge after " << it << " iterations (residuals " << f[0] << ", "
       << f[1] << ")";
    throw MomentMatchError(os.str(), f[0], f[1]);
  }
  out.mortality.theta = x[0];
  out.mortality.sigma_lambda = x[1];
  out.mortality.varrho_lambda = 0;
  return out;
}

}  // namespace mvhedge
