#ifndef MVHEDGE_PORTFOLIO_HPP
#define MVHEDGE_PORTFOLIO_HPP

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "mvhedge/kernels.hpp"
#include "mvhedge/params.hpp"
#include "mvhedge/strategy.hpp"

namespace mvhedge {

/// One step of a simulated wealth path. Allocation and increments refer to
/// [t, t + dt]; the last record of a path carries zeros there.
struct WealthPathRecord {
  double t;
  double P;
  double u_S;
  double u_Y;
  double S;
  double lambda;
  double Y;
  double int_lambda;
  double Phi;
  double dS_rel;
  double dY_rel;
};

/// P + u_S dS_rel + u_Y dY_rel + (P - u_S - u_Y) r dt.
inline double step_wealth(double P, const Allocation& a, double dS_rel, double dY_rel, double r, double dt) {
  return P + a.u_S * dS_rel + a.u_Y * dY_rel + (P - a.u_S - a.u_Y) * (r * dt);
}

/// Same step with the cash account compounded exactly: `growth` = e^{r dt} - 1.
inline double step_wealth_compounded(double P, const Allocation& a, double dS_rel, double dY_rel, double growth) {
  return P + a.u_S * dS_rel + a.u_Y * dY_rel + (P - a.u_S - a.u_Y) * growth;
}

/// Mean, unbiased variance, ROER and 95% intervals of a terminal-wealth sample,
/// accumulated in index order.
SimSummary summarize_terminal_wealth(const std::vector<double>& PT, double T);

/// J = mean - (gamma/2) var.
double mean_variance_objective(const SimSummary& s, double gamma);

struct WealthSimOptions {
  unsigned threads = 0;
  /// record full paths for the first k path ids
  int dump_paths = 0;
  /// keep every terminal value in the result
  bool keep_terminal = false;
};

struct WealthSimResult {
  SimSummary summary;
  std::vector<double> terminal;
  std::vector<std::vector<WealthPathRecord>> paths;
  /// surface lookups above lambda_max
  std::int64_t extrapolations = 0;
  /// empty unless something needs a note (e.g. ROER undefined)
  std::string diagnostic;
};

/// Simulates spec.n_paths wealth paths under the artifacts' world model with
/// the artifacts' strategy, evaluated at the left end of every step. Path p
/// uses stock_stream(seed, p) and mortality_stream(seed, p).
WealthSimResult simulate_terminal_wealth(const ScenarioSpec& spec, const StrategyArtifacts& art,
                                         const WealthSimOptions& opt = {});

/// Same, started at (t0, p0, lambda0) with spec.n_steps scaled to [t0, T].
WealthSimResult simulate_terminal_wealth_from(const ScenarioSpec& spec, const StrategyArtifacts& art, double t0,
                                              double p0, double lambda0, const WealthSimOptions& opt = {});

struct PerturbationReport {
  double J_star = 0;
  double window = 0;
  std::vector<Allocation> deltas;
  std::vector<double> J_perturbed;
  /// standard error of J_perturbed - J_star (paired, common random numbers)
  std::vector<double> se_diff;
  bool pass = false;
};

/// {+eps, 0}, {-eps, 0}, {0, +eps}, {0, -eps}.
std::vector<Allocation> default_perturbations(double eps);

/// Runs u* and, on the same random numbers, u* + delta on [0, window) for every
/// delta. Passes when J_star >= J_delta - 2 se for every delta.
PerturbationReport equilibrium_perturbation_check(const ScenarioSpec& spec, const StrategyArtifacts& art,
                                                  const std::vector<Allocation>& deltas, double window,
                                                  unsigned threads = 0);

struct AnsatzReport {
  double t0 = 0, p0 = 0, lambda0 = 0;
  double predicted = 0;  // e^{r(T - t0)} p0 + b(t0, lambda0)
  double mc_mean = 0;
  double ci_halfwidth = 0;
  /// Monte Carlo error of the surface value itself (2 se, bilinear in the nodes)
  double surface_tolerance = 0;
  bool pass = false;
};

AnsatzReport ansatz_consistency_check(const ScenarioSpec& spec, const StrategyArtifacts& art, double t0, double p0,
                                      double lambda0, unsigned threads = 0);

struct ValueFunctionReport {
  double V_hat = 0;
  double mean = 0;
  double var = 0;
  /// a(0) p0 + b(0, lambda0)
  double g_ansatz = 0;
  /// V_hat - g_ansatz; equals -(gamma/2) var up to Monte Carlo error in b
  double residual = 0;
};

ValueFunctionReport value_function_report(const ScenarioSpec& spec, const StrategyArtifacts& art,
                                          const SimSummary& summary);

void write_results_header(std::ostream& os);
void write_results_row(std::ostream& os, const ScenarioSpec& spec, const SimSummary& s);

void write_wealth_paths_header(std::ostream& os);
void write_wealth_paths(std::ostream& os, std::uint64_t path_id, const std::vector<WealthPathRecord>& path);

}  // namespace mvhedge

#endif  // MVHEDGE_PORTFOLIO_HPP
