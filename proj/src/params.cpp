#include "mvhedge/params.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

namespace mvhedge {

namespace {

std::string join(const std::vector<std::string>& items) {
  std::string out;
  for (const auto& s : items) {
    if (!out.empty()) out += "; ";
    out += s;
  }
  return out;
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(10);
  os << v;
  return os.str();
}

void require(std::vector<std::string>& out, bool ok, const char* what, double value) {
  if (!ok) out.push_back(std::string(what) + " (got " + fmt(value) + ")");
}

std::string normalized(std::string name) {
  std::transform(name.begin(), name.end(), name.begin(), [](unsigned char c) {
    return c == '-' ? '_' : static_cast<char>(std::tolower(c));
  });
  return name;
}

}  // namespace

ValidationError::ValidationError(std::vector<std::string> violations)
    : std::invalid_argument("invalid parameters: " + join(violations)), violations_(std::move(violations)) {}

std::vector<std::string> collect_violations(const MarketParams& m, const MortalityParams& q,
                                            const ScenarioSpec& s) {
  std::vector<std::string> v;
  require(v, m.sigma > 0, "sigma must be > 0", m.sigma);
  require(v, m.varrho_S >= 0, "varrho_S must be >= 0", m.varrho_S);
  require(v, m.rho >= 0 && m.rho <= 1, "rho must be in [0,1]", m.rho);
  require(v, m.s0 > 0, "s0 must be > 0", m.s0);
  require(v, m.r >= 0, "r must be >= 0", m.r);

  require(v, q.beta > 0, "beta must be > 0", q.beta);
  require(v, q.theta > 0, "theta must be > 0", q.theta);
  require(v, q.sigma_lambda > 0, "sigma_lambda must be > 0", q.sigma_lambda);
  require(v, q.varrho_lambda > 0, "varrho_lambda must be > 0", q.varrho_lambda);
  require(v, q.varsigma > 0, "varsigma must be > 0", q.varsigma);
  require(v, q.lambda0 > 0, "lambda0 must be > 0", q.lambda0);
  require(v, q.psi2 > -1, "psi2 must be > -1", q.psi2);

  require(v, s.T > 0, "T must be > 0", s.T);
  require(v, s.T_L >= s.T, "T_L must be >= T", s.T_L);
  require(v, s.gamma > 0, "gamma must be > 0", s.gamma);
  require(v, s.p0 > 0, "p0 must be > 0", s.p0);
  require(v, s.n_paths >= 1, "n_paths must be >= 1", static_cast<double>(s.n_paths));
  require(v, s.n_steps >= 1, "n_steps must be >= 1", static_cast<double>(s.n_steps));
  return v;
}

ModelBundle validate_params(const MarketParams& m, const MortalityParams& q, const ScenarioSpec& s) {
  auto v = collect_violations(m, q, s);
  if (!v.empty()) throw ValidationError(std::move(v));
  return ModelBundle{m, q, s};
}

const char* to_string(Scenario s) {
  switch (s) {
    case Scenario::Baseline: return "baseline";
    case Scenario::NoLongevity: return "no_longevity";
    case Scenario::JumpBlind: return "jump_blind";
    case Scenario::BrownianOnly: return "brownian_only";
    case Scenario::NormalJumps: return "normal_jumps";
    case Scenario::LongBond: return "long_bond";
  }
  return "?";
}

const char* to_string(JumpSizeLaw law) {
  return law == JumpSizeLaw::UnitConstant ? "unit_constant" : "standard_normal";
}

Scenario scenario_from_string(const std::string& name) {
  const auto n = normalized(name);
  for (auto s : {Scenario::Baseline, Scenario::NoLongevity, Scenario::JumpBlind, Scenario::BrownianOnly,
                 Scenario::NormalJumps, Scenario::LongBond}) {
    if (n == to_string(s)) return s;
  }
  throw std::invalid_argument("unknown scenario '" + name + "'");
}

JumpSizeLaw jump_size_law_from_string(const std::string& name) {
  const auto n = normalized(name);
  if (n == "unit_constant" || n == "unitconstant" || n == "unit") return JumpSizeLaw::UnitConstant;
  if (n == "standard_normal" || n == "standardnormal" || n == "normal") return JumpSizeLaw::StandardNormal;
  throw std::invalid_argument("unknown jump_size_law '" + name + "'");
}

}  // namespace mvhedge
