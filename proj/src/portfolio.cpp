#include "mvhedge/portfolio.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>

#include "mvhedge/parallel.hpp"

namespace mvhedge {

namespace {

constexpr std::int64_t kBlock = 512;
constexpr double kZ95 = 1.959963984540054;

struct RunRequest {
  double t0 = 0;
  double p0 = 1;
  double lambda0 = 0;
  std::int64_t n_steps = 1;
  std::vector<Allocation> deltas;  // extra wealth processes sharing the randomness
  double window = 0;
  int dump_paths = 0;
  unsigned threads = 0;
};

struct RunOutput {
  // n_paths x (1 + deltas) row-major; column 0 is the unperturbed strategy
  std::vector<double> terminal;
  std::vector<std::vector<WealthPathRecord>> paths;
  std::int64_t extrapolations = 0;
};

RunOutput run_paths(const ScenarioSpec& spec, const StrategyArtifacts& art, const RunRequest& req) {
  if (spec.n_paths <= 0) throw std::invalid_argument("simulate_terminal_wealth: n_paths must be positive");
  MortalityParams world_q = art.world_mortality;
  world_q.lambda0 = req.lambda0;
  MarketParams world_m = art.world_market;
  const PathGrid grid(req.t0, art.T, req.n_steps);
  const JointStepper stepper(world_m, world_q, grid, art.T_L, MeasureTag::P);
  const StrategyTable table(art, req.t0, art.T, req.n_steps);
  const double growth = std::expm1(world_m.r * grid.dt());
  const std::size_t width = 1 + req.deltas.size();
  const std::int64_t n = spec.n_paths;
  const int n_dump = static_cast<int>(std::min<std::int64_t>(req.dump_paths, n));

  RunOutput out;
  out.terminal.assign(static_cast<std::size_t>(n) * width, 0.0);
  out.paths.resize(static_cast<std::size_t>(n_dump));
  if (art.surface) art.surface->reset_extrapolations();

  const std::int64_t blocks = (n + kBlock - 1) / kBlock;
  parallel_for(blocks, req.threads, [&](std::int64_t blk) {
    std::vector<double> P(width);
    const std::int64_t end = std::min(n, (blk + 1) * kBlock);
    for (std::int64_t p = blk * kBlock; p < end; ++p) {
      auto srng = stock_stream(spec.seed, static_cast<std::uint64_t>(p));
      auto mrng = mortality_stream(spec.seed, static_cast<std::uint64_t>(p));
      auto state = stepper.initial();
      std::fill(P.begin(), P.end(), req.p0);
      std::vector<WealthPathRecord>* rec = p < n_dump ? &out.paths[static_cast<std::size_t>(p)] : nullptr;
      if (rec) rec->reserve(static_cast<std::size_t>(req.n_steps) + 1);
      for (std::int64_t i = 0; i < req.n_steps; ++i) {
        const double t = grid.time(i);
        const double lam = state.lambda();
        const Allocation a = table.at(i, lam);
        const JointStepper::State before = state;
        const auto inc = stepper.step(i, state, srng, mrng);
        if (rec)
          rec->push_back({t, P[0], a.u_S, a.u_Y, before.S, lam, before.Y, before.int_lambda, before.Phi, inc.dS_rel,
                          inc.dY_rel});
        P[0] = step_wealth_compounded(P[0], a, inc.dS_rel, inc.dY_rel, growth);
        const bool in_window = t < req.t0 + req.window;
        for (std::size_t k = 1; k < width; ++k) {
          Allocation ak = a;
          if (in_window) {
            ak.u_S += req.deltas[k - 1].u_S;
            ak.u_Y += req.deltas[k - 1].u_Y;
          }
          P[k] = step_wealth_compounded(P[k], ak, inc.dS_rel, inc.dY_rel, growth);
        }
      }
      if (rec)
        rec->push_back(
            {grid.t1, P[0], 0.0, 0.0, state.S, state.lambda(), state.Y, state.int_lambda, state.Phi, 0.0, 0.0});
      std::copy(P.begin(), P.end(), out.terminal.begin() + static_cast<std::ptrdiff_t>(p * width));
    }
  });
  if (art.surface) out.extrapolations = art.surface->extrapolations();
  return out;
}

std::int64_t steps_for_window(const ScenarioSpec& spec, double t0) {
  const double frac = (spec.T - t0) / spec.T;
  return std::max<std::int64_t>(1, std::llround(static_cast<double>(spec.n_steps) * frac));
}

void check_art(const ScenarioSpec& spec, const StrategyArtifacts& art) {
  if (spec.T != art.T || spec.T_L != art.T_L || spec.gamma != art.gamma)
    throw std::invalid_argument("strategy artifacts were prepared for a different horizon, maturity or gamma");
}

std::vector<double> column(const std::vector<double>& m, std::size_t width, std::size_t k) {
  std::vector<double> c(m.size() / width);
  for (std::size_t i = 0; i < c.size(); ++i) c[i] = m[i * width + k];
  return c;
}

}  // namespace

SimSummary summarize_terminal_wealth(const std::vector<double>& PT, double T) {
  SimSummary s;
  const auto n = static_cast<std::int64_t>(PT.size());
  s.n_paths_used = n;
  if (n == 0) {
    s.mean_PT = s.var_PT = s.roer = std::numeric_limits<double>::quiet_NaN();
    return s;
  }
  double sum = 0;
  for (double x : PT) sum += x;
  double mean = sum / static_cast<double>(n);
  // second pass removes the rounding of the first (exact for constant samples)
  double resid = 0;
  for (double x : PT) resid += x - mean;
  mean += resid / static_cast<double>(n);
  double m2 = 0, m4 = 0;
  for (double x : PT) {
    const double d = x - mean;
    const double d2 = d * d;
    m2 += d2;
    m4 += d2 * d2;
  }
  s.mean_PT = mean;
  const double dn = static_cast<double>(n);
  if (n > 1) {
    s.var_PT = m2 / (dn - 1);
    s.ci_mean_halfwidth = kZ95 * std::sqrt(s.var_PT / dn);
    // Var(s^2) ~ (mu4 - s^4 (n-3)/(n-1)) / n
    const double mu4 = m4 / dn;
    const double v = (mu4 - s.var_PT * s.var_PT * (dn - 3) / (dn - 1)) / dn;
    s.ci_var_halfwidth = kZ95 * std::sqrt(std::max(v, 0.0));
  }
  s.roer = mean > 0 ? std::log(mean) / T : std::numeric_limits<double>::quiet_NaN();
  return s;
}

double mean_variance_objective(const SimSummary& s, double gamma) { return s.mean_PT - 0.5 * gamma * s.var_PT; }

WealthSimResult simulate_terminal_wealth_from(const ScenarioSpec& spec, const StrategyArtifacts& art, double t0,
                                              double p0, double lambda0, const WealthSimOptions& opt) {
  check_art(spec, art);
  if (!(t0 >= 0 && t0 <= spec.T)) throw std::invalid_argument("simulate_terminal_wealth: t0 outside [0, T]");
  WealthSimResult res;
  if (t0 == spec.T) {
    res.terminal.assign(static_cast<std::size_t>(spec.n_paths), p0);
  } else {
    RunRequest req;
    req.t0 = t0;
    req.p0 = p0;
    req.lambda0 = lambda0;
    req.n_steps = steps_for_window(spec, t0);
    req.dump_paths = opt.dump_paths;
    req.threads = opt.threads;
    auto out = run_paths(spec, art, req);
    res.terminal = std::move(out.terminal);
    res.paths = std::move(out.paths);
    res.extrapolations = out.extrapolations;
  }
  res.summary = summarize_terminal_wealth(res.terminal, spec.T);
  if (!res.summary.has_roer()) res.diagnostic = "mean terminal wealth is not positive; ROER undefined";
  if (!opt.keep_terminal) std::vector<double>().swap(res.terminal);
  return res;
}

WealthSimResult simulate_terminal_wealth(const ScenarioSpec& spec, const StrategyArtifacts& art,
                                         const WealthSimOptions& opt) {
  return simulate_terminal_wealth_from(spec, art, 0.0, spec.p0, art.world_mortality.lambda0, opt);
}

std::vector<Allocation> default_perturbations(double eps) {
  return {{eps, 0.0}, {-eps, 0.0}, {0.0, eps}, {0.0, -eps}};
}

PerturbationReport equilibrium_perturbation_check(const ScenarioSpec& spec, const StrategyArtifacts& art,
                                                  const std::vector<Allocation>& deltas, double window,
                                                  unsigned threads) {
  check_art(spec, art);
  if (!(window > 0 && window <= spec.T)) throw std::invalid_argument("perturbation window must lie in (0, T]");
  RunRequest req;
  req.p0 = spec.p0;
  req.lambda0 = art.world_mortality.lambda0;
  req.n_steps = spec.n_steps;
  req.deltas = deltas;
  req.window = window;
  req.threads = threads;
  const auto out = run_paths(spec, art, req);
  const std::size_t width = 1 + deltas.size();
  const double g = spec.gamma;

  PerturbationReport rep;
  rep.window = window;
  rep.deltas = deltas;
  const auto base = column(out.terminal, width, 0);
  const auto sb = summarize_terminal_wealth(base, spec.T);
  rep.J_star = mean_variance_objective(sb, g);
  rep.pass = true;
  const double n = static_cast<double>(base.size());
  for (std::size_t k = 1; k < width; ++k) {
    const auto col = column(out.terminal, width, k);
    const auto sk = summarize_terminal_wealth(col, spec.T);
    const double J = mean_variance_objective(sk, g);
    // influence functions of mean - g/2 var, differenced path by path
    double sum = 0, sum2 = 0;
    for (std::size_t i = 0; i < base.size(); ++i) {
      const double db = base[i] - sb.mean_PT, dk = col[i] - sk.mean_PT;
      const double psi_b = db - 0.5 * g * (db * db - sb.var_PT);
      const double psi_k = dk - 0.5 * g * (dk * dk - sk.var_PT);
      const double d = psi_k - psi_b;
      sum += d;
      sum2 += d * d;
    }
    const double md = sum / n;
    const double var_d = n > 1 ? std::max(0.0, (sum2 - n * md * md) / (n - 1)) : 0.0;
    const double se = std::sqrt(var_d / n);
    rep.J_perturbed.push_back(J);
    rep.se_diff.push_back(se);
    if (!(rep.J_star >= J - 2 * se)) rep.pass = false;
  }
  return rep;
}

AnsatzReport ansatz_consistency_check(const ScenarioSpec& spec, const StrategyArtifacts& art, double t0, double p0,
                                      double lambda0, unsigned threads) {
  if (!art.surface) throw std::invalid_argument("ansatz_consistency_check: needs a b-surface");
  const auto& s = *art.surface;
  if (t0 < 0 || t0 > s.T || lambda0 < 0 || lambda0 > s.lambda_max)
    throw std::invalid_argument("ansatz_consistency_check: (t0, lambda0) outside the surface grid");
  AnsatzReport rep;
  rep.t0 = t0;
  rep.p0 = p0;
  rep.lambda0 = lambda0;
  rep.predicted = wealth_coefficient(t0, spec.T, art.belief_market.r) * p0 + eval_b(s, t0, lambda0).b;
  // the node standard errors interpolate like b does
  BSurface se_only = s;
  se_only.b = s.se;
  rep.surface_tolerance = 2 * eval_b(se_only, t0, lambda0).b;
  WealthSimOptions opt;
  opt.threads = threads;
  const auto res = simulate_terminal_wealth_from(spec, art, t0, p0, lambda0, opt);
  rep.mc_mean = res.summary.mean_PT;
  rep.ci_halfwidth = res.summary.ci_mean_halfwidth;
  rep.pass = std::abs(rep.mc_mean - rep.predicted) <= rep.ci_halfwidth + rep.surface_tolerance;
  return rep;
}

ValueFunctionReport value_function_report(const ScenarioSpec& spec, const StrategyArtifacts& art,
                                          const SimSummary& summary) {
  ValueFunctionReport rep;
  rep.mean = summary.mean_PT;
  rep.var = summary.var_PT;
  rep.V_hat = mean_variance_objective(summary, spec.gamma);
  rep.g_ansatz = wealth_coefficient(0.0, spec.T, art.belief_market.r) * spec.p0;
  if (art.surface) rep.g_ansatz += eval_b(*art.surface, 0.0, art.world_mortality.lambda0).b;
  rep.residual = rep.V_hat - rep.g_ansatz;
  return rep;
}

void write_results_header(std::ostream& os) {
  os << "scenario,T,T_L,gamma,n_paths,n_steps,seed,mean,ci_mean,var,ci_var,roer\n";
}

void write_results_row(std::ostream& os, const ScenarioSpec& spec, const SimSummary& s) {
  const auto old = os.precision(10);
  os << to_string(spec.scenario) << ',' << spec.T << ',' << spec.T_L << ',' << spec.gamma << ',' << spec.n_paths
     << ',' << spec.n_steps << ',' << spec.seed << ',' << s.mean_PT << ',' << s.ci_mean_halfwidth << ',' << s.var_PT
     << ',' << s.ci_var_halfwidth << ',';
  if (s.has_roer()) os << s.roer;
  os << '\n';
  os.precision(old);
}

void write_wealth_paths_header(std::ostream& os) { os << "path_id,t,P,u_S,u_Y,S,lambda,Y,dS_rel,dY_rel\n"; }

void write_wealth_paths(std::ostream& os, std::uint64_t path_id, const std::vector<WealthPathRecord>& path) {
  const auto old = os.precision(12);
  for (const auto& r : path)
    os << path_id << ',' << r.t << ',' << r.P << ',' << r.u_S << ',' << r.u_Y << ',' << r.S << ',' << r.lambda << ','
       << r.Y << ',' << r.dS_rel << ',' << r.dY_rel << '\n';
  os.precision(old);
}

}  // namespace mvhedge
