#ifndef MVHEDGE_KERNELS_HPP
#define MVHEDGE_KERNELS_HPP

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "mvhedge/longevity_bond.hpp"
#include "mvhedge/params.hpp"
#include "mvhedge/rng.hpp"

namespace mvhedge {

struct PathGrid {
  double t0 = 0;
  double t1 = 1;
  std::int64_t n_steps = 1;

  PathGrid() = default;
  PathGrid(double t0_, double t1_, std::int64_t n) : t0(t0_), t1(t1_), n_steps(n) { validate(); }

  double dt() const { return (t1 - t0) / static_cast<double>(n_steps); }
  double time(std::int64_t i) const { return i == n_steps ? t1 : t0 + static_cast<double>(i) * dt(); }
  void validate() const;
};

enum class MeasureTag { P, Q, Pstar };

/// What to do when a P* jump proposal has C(x) = Theta2 eta_L(x) >= 1, where
/// the Girsanov density would turn negative.
enum class GirsanovPolicy { Abort, Clamp };

class GirsanovViolation : public std::runtime_error {
 public:
  GirsanovViolation(double t, double lambda, double x, double C);
  double t, lambda, x, C;
};

struct JumpRecord {
  std::int64_t step;
  double size;
};

struct JcirPath {
  std::vector<double> lambda;  // max(lambda, 0) at grid points
  std::vector<JumpRecord> jumps;
  std::int64_t girsanov_violations = 0;
};

/// Stock path; the log-increment over a step is exact given the jump count, so
/// sigma = varrho_S = 0 reproduces s0 exp(mu t) to rounding.
std::vector<double> simulate_stock_path(const MarketParams& m, const PathGrid& g, RngStream& rng);

/// Full-truncation Euler for the jump-CIR intensity. Under Pstar, `bond_T_L`
/// gives the maturity whose Theta2 defines the measure.
JcirPath simulate_jcir_path(const MortalityParams& q, MeasureTag measure, const PathGrid& g, RngStream& rng,
                            double bond_T_L = 0, GirsanovPolicy policy = GirsanovPolicy::Abort);

struct JointRecord {
  double t;
  double S;
  double lambda;
  double Y;
  double int_lambda;
  double Phi;
  int stock_jumps;
  int lambda_jumps;
};

/// Sampler for one step of (S, lambda, Y, int lambda, Phi) under P or Q.
/// dY/Y uses the bond coefficients frozen at the left endpoint and shares the
/// Brownian increment and jump marks with lambda; S draws from its own stream.
class JointStepper {
 public:
  struct State {
    double S;
    double lambda_raw;  // may dip below 0 under full truncation
    double Y;
    double int_lambda;
    double Phi;
    double lambda() const { return lambda_raw > 0 ? lambda_raw : 0.0; }
  };
  struct Increment {
    double dS_rel;
    double dY_rel;
    int stock_jumps;
    int lambda_jumps;
  };

  JointStepper(const MarketParams& m, const MortalityParams& q, const PathGrid& g, double T_L,
               MeasureTag measure = MeasureTag::P);

  State initial() const;
  /// Advances `s` over [t_i, t_{i+1}].
  Increment step(std::int64_t i, State& s, RngStream& stock_rng, RngStream& mortality_rng) const;

  const PathGrid& grid() const { return grid_; }
  const BondCoefficients<double>& coefficients(std::int64_t i) const { return coeffs_[static_cast<std::size_t>(i)]; }
  double T_L() const { return T_L_; }
  const MarketParams& market() const { return m_; }
  const MortalityParams& mortality() const { return q_; }

 private:
  MarketParams m_;
  MortalityParams q_;
  PathGrid grid_;
  double T_L_;
  MeasureTag measure_;
  std::vector<BondCoefficients<double>> coeffs_;
  double dt_, sqdt_, growth_;
  double stock_drift_, stock_vol_, stock_rate_, log_unit_jump_;
  double lambda_rate_;
  double stock_p0_, lambda_p0_;  // exp(-rate)
  bool has_density_;
};

/// Stock stream and mortality stream used for path `path_id`.
inline RngStream stock_stream(std::uint64_t seed, std::uint64_t path_id) { return RngStream(seed, 2 * path_id); }
inline RngStream mortality_stream(std::uint64_t seed, std::uint64_t path_id) {
  return RngStream(seed, 2 * path_id + 1);
}

std::vector<JointRecord> simulate_joint_path(const MarketParams& m, const MortalityParams& q, const ScenarioSpec& spec,
                                             const PathGrid& g, std::uint64_t path_id,
                                             MeasureTag measure = MeasureTag::P);

void write_path_csv_header(std::ostream& os);
void write_path_csv(std::ostream& os, std::uint64_t path_id, const std::vector<JointRecord>& path);

namespace detail {
/// Relative stock jump 1 + rho x, drawing x from the law. Standard-normal
/// sizes with rho x <= -1 + 1e-6 are redrawn.
double stock_jump_factor(const MarketParams& m, RngStream& rng);
}  // namespace detail

}  // namespace mvhedge

#endif  // MVHEDGE_KERNELS_HPP
