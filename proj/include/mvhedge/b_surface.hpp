#ifndef MVHEDGE_B_SURFACE_HPP
#define MVHEDGE_B_SURFACE_HPP

#include <Eigen/Dense>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "mvhedge/kernels.hpp"
#include "mvhedge/longevity_bond.hpp"
#include "mvhedge/params.hpp"

namespace mvhedge {

/// Theta1 = (mu - r) / (sigma^2 + rho^2 varrho_S E[x^2]).
template <typename Scalar>
Scalar theta1(const BasicMarketParams<Scalar>& m) {
  const Scalar den = m.total_variance_rate();
  if (den == Scalar(0)) throw std::domain_error("theta1: zero instantaneous variance");
  return m.excess_return() / den;
}

/// Multi-stock form Theta1^T = mu_tilde^T (Sigma_S + R diag(xi) R^T)^{-1}, with
/// Sigma_S the diffusion covariance, R the jump loadings and xi the per-jump
/// intensity times E[x^2].
template <typename Derived1, typename Derived2, typename Derived3, typename Derived4>
Eigen::Matrix<typename Derived1::Scalar, Eigen::Dynamic, 1> theta1(const Eigen::MatrixBase<Derived1>& mu_tilde,
                                                                   const Eigen::MatrixBase<Derived2>& sigma_cov,
                                                                   const Eigen::MatrixBase<Derived3>& jump_loadings,
                                                                   const Eigen::MatrixBase<Derived4>& xi) {
  using Scalar = typename Derived1::Scalar;
  using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  const Mat total = sigma_cov + jump_loadings * xi.asDiagonal() * jump_loadings.transpose();
  Eigen::LDLT<Mat> ldlt(total);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive())
    throw std::domain_error("theta1: total covariance is not positive definite");
  return ldlt.solve(mu_tilde);
}

/// Theta2(t, lambda) for maturity T_L; rejected at t = T_L.
inline double theta2(double t, double lambda, double T_L, const MortalityParams& q) {
  if (lambda < 0) throw std::domain_error("theta2: negative intensity");
  return BondCoefficients<double>(q, t, T_L).theta2(lambda);
}

enum class BEstimator { DensityWeighted, DirectPstar };
/// Forward weights the P-expectation by Phi_T / Phi_t, Reciprocal by Phi_t / Phi_T.
enum class DensityOrientation { Forward, Reciprocal };

const char* to_string(BEstimator e);
const char* to_string(DensityOrientation o);

struct SurfaceOptions {
  /// time nodes on [0, T]; 0 picks 5 T + 1 (step 0.2 years)
  int n_t = 0;
  int n_lambda = 41;
  double lambda_max = 0.6;
  int inner_paths = 4000;
  /// Euler substeps per time-grid interval
  int substeps = 5;
  int laguerre_nodes = 32;
  std::uint64_t seed = 20240601;
  BEstimator estimator = BEstimator::DirectPstar;
  DensityOrientation orientation = DensityOrientation::Forward;
  GirsanovPolicy policy = GirsanovPolicy::Clamp;
  unsigned threads = 0;

  int time_nodes(double T) const;
};

/// b(t, lambda) on a uniform (t, lambda) grid together with b_lambda and the
/// jump integral b2 = varrho int (b(lambda + x) - b(lambda)) eta_L(x) f(x) dx.
/// Rows index time, columns index lambda. b2_over_B stores b2 / B_lambda(t_j),
/// which stays finite at bond maturity.
struct BSurface {
  double T = 0;
  double T_L = 0;
  double gamma = 0;
  double lambda_max = 0;
  int n_t = 0;
  int n_lambda = 0;
  Eigen::ArrayXXd b, b_lambda, b2, b2_over_B, se;
  BEstimator estimator = BEstimator::DirectPstar;
  DensityOrientation orientation = DensityOrientation::Forward;
  int inner_paths = 0;
  int substeps = 0;
  std::uint64_t seed = 0;
  std::int64_t girsanov_violations = 0;
  std::uint64_t cache_key = 0;

  double dt() const { return T / (n_t - 1); }
  double dlambda() const { return lambda_max / (n_lambda - 1); }
  double t(int j) const { return j == n_t - 1 ? T : j * dt(); }
  double lambda(int i) const { return i * dlambda(); }

  /// Queries above lambda_max since the last reset (linear extrapolation).
  std::int64_t extrapolations() const { return extrapolated_->load(std::memory_order_relaxed); }
  void reset_extrapolations() const { extrapolated_->store(0); }
  void note_extrapolation() const { extrapolated_->fetch_add(1, std::memory_order_relaxed); }

 private:
  std::shared_ptr<std::atomic<std::int64_t>> extrapolated_ = std::make_shared<std::atomic<std::int64_t>>(0);
};

namespace detail {

struct GridCell {
  int index;
  double weight;
};

/// Cell [index, index + 1] of an n-node axis holding position `pos` (in node
/// units), with the weight snapped onto a node when within 1e-9 of it so that
/// node queries return node values exactly. Positions past the last cell
/// extrapolate (weight > 1) unless `clamp_weight`.
inline GridCell grid_cell(double pos, int n, bool clamp_weight = false) {
  const double near = std::round(pos);
  if (std::abs(pos - near) < 1e-9) pos = near;
  int i = static_cast<int>(std::floor(pos));
  i = std::clamp(i, 0, n - 2);
  double w = pos - i;
  if (w < 0) w = 0;
  if (clamp_weight && w > 1) w = 1;
  return {i, w};
}

/// a + w (b - a): exact at w = 0 and when a == b.
inline double lerp(double a, double b, double w) { return a + w * (b - a); }

}  // namespace detail

struct BEval {
  double b;
  double b_lambda;
  double b2;
  double b2_over_B;
};

/// Bilinear interpolation; lambda above lambda_max extrapolates linearly from the
/// last two nodes and bumps the surface's extrapolation counter.
BEval eval_b(const BSurface& s, double t, double lambda);

BSurface build_b_surface(const MarketParams& m, const MortalityParams& q, double T, double T_L, double gamma,
                         const SurfaceOptions& opt = {});
inline BSurface build_b_surface(const MarketParams& m, const MortalityParams& q, const ScenarioSpec& spec,
                                const SurfaceOptions& opt = {}) {
  return build_b_surface(m, q, spec.T, spec.T_L, spec.gamma, opt);
}

/// Node-wise comparison; a node passes when |b1 - b2| <= k sqrt(se1^2 + se2^2).
struct SurfaceComparison {
  std::int64_t nodes = 0;
  std::int64_t within = 0;
  double max_abs_diff = 0;
  double max_z = 0;
  int worst_row = 0, worst_col = 0;
  bool pass() const { return nodes > 0 && within == nodes; }
};
SurfaceComparison compare_surfaces(const BSurface& a, const BSurface& b, double k = 2.0, bool skip_terminal = true);

std::uint64_t surface_cache_key(const MarketParams& m, const MortalityParams& q, double T, double T_L, double gamma,
                                const SurfaceOptions& opt);
void save_surface(const BSurface& s, const std::filesystem::path& path);
BSurface load_surface(const std::filesystem::path& path);
/// Loads `dir/<key>.bsurf` if present, otherwise builds and stores it. An empty
/// dir disables caching.
BSurface cached_b_surface(const MarketParams& m, const MortalityParams& q, double T, double T_L, double gamma,
                          const SurfaceOptions& opt, const std::filesystem::path& dir, bool* hit = nullptr);

void write_surface_csv(const BSurface& s, std::ostream& os);

}  // namespace mvhedge

#endif  // MVHEDGE_B_SURFACE_HPP
