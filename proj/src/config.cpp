#include "mvhedge/config.hpp"

#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>

namespace mvhedge {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  double x = 0;
  try {
    x = std::stod(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != v.size()) throw ConfigError("key '" + key + "': not a number: '" + v + "'");
  return x;
}

std::int64_t to_int(const std::string& key, const std::string& v) {
  const double x = to_double(key, v);
  if (x != std::floor(x)) throw ConfigError("key '" + key + "': not an integer: '" + v + "'");
  return static_cast<std::int64_t>(x);
}

std::uint64_t to_uint(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  std::uint64_t x = 0;
  try {
    x = std::stoull(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != v.size()) throw ConfigError("key '" + key + "': not an unsigned integer: '" + v + "'");
  return x;
}

}  // namespace

KeyValues parse_key_values(const std::string& text) {
  KeyValues kv;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    auto key = trim(line.substr(0, eq));
    auto value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError("line " + std::to_string(lineno) + ": empty key");
    kv[key] = value;
  }
  return kv;
}

ModelBundle bundle_from_key_values(const KeyValues& kv, ModelBundle b) {
  auto& m = b.market;
  auto& q = b.mortality;
  auto& s = b.scenario;

  using Setter = std::function<void(const std::string&, const std::string&)>;
  auto real = [](double& field) -> Setter {
    return [&field](const std::string& k, const std::string& v) { field = to_double(k, v); };
  };
  const std::map<std::string, Setter> setters = {
      {"mu", real(m.mu)},
      {"sigma", real(m.sigma)},
      {"rho", real(m.rho)},
      {"varrho_S", real(m.varrho_S)},
      {"r", real(m.r)},
      {"s0", real(m.s0)},
      {"jump_size_law", [&](const std::string&, const std::string& v) { m.jump_size_law = jump_size_law_from_string(v); }},
      {"beta", real(q.beta)},
      {"theta", real(q.theta)},
      {"sigma_lambda", real(q.sigma_lambda)},
      {"kappa", real(q.kappa)},
      {"psi2", real(q.psi2)},
      {"varrho_lambda", real(q.varrho_lambda)},
      {"varsigma", real(q.varsigma)},
      {"lambda0", real(q.lambda0)},
      {"scenario", [&](const std::string&, const std::string& v) { s.scenario = scenario_from_string(v); }},
      {"T", real(s.T)},
      {"T_L", real(s.T_L)},
      {"gamma", real(s.gamma)},
      {"p0", real(s.p0)},
      {"n_paths", [&](const std::string& k, const std::string& v) { s.n_paths = to_int(k, v); }},
      {"n_steps", [&](const std::string& k, const std::string& v) { s.n_steps = to_int(k, v); }},
      {"seed", [&](const std::string& k, const std::string& v) { s.seed = to_uint(k, v); }},
  };

  const double dt_before = s.T / static_cast<double>(s.n_steps);
  for (const auto& [key, value] : kv) {
    auto it = setters.find(key);
    if (it == setters.end()) throw ConfigError("unknown key '" + key + "'");
    try {
      it->second(key, value);
    } catch (const std::invalid_argument& e) {
      throw ConfigError("key '" + key + "': " + e.what());
    }
  }
  if (kv.count("T") && !kv.count("T_L")) s.T_L = s.T;
  if (kv.count("T") && !kv.count("n_steps")) s.n_steps = static_cast<std::int64_t>(std::llround(s.T / dt_before));
  return b;
}

ModelBundle load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return bundle_from_key_values(parse_key_values(ss.str()));
}

std::string to_key_values(const ModelBundle& b) {
  std::ostringstream os;
  os.precision(17);
  const auto& m = b.market;
  const auto& q = b.mortality;
  const auto& s = b.scenario;
  os << "mu = " << m.mu << "\nsigma = " << m.sigma << "\nrho = " << m.rho << "\nvarrho_S = " << m.varrho_S
     << "\nr = " << m.r << "\ns0 = " << m.s0 << "\njump_size_law = " << to_string(m.jump_size_law)
     << "\nbeta = " << q.beta << "\ntheta = " << q.theta << "\nsigma_lambda = " << q.sigma_lambda
     << "\nkappa = " << q.kappa << "\npsi2 = " << q.psi2 << "\nvarrho_lambda = " << q.varrho_lambda
     << "\nvarsigma = " << q.varsigma << "\nlambda0 = " << q.lambda0 << "\nscenario = " << to_string(s.scenario)
     << "\nT = " << s.T << "\nT_L = " << s.T_L << "\ngamma = " << s.gamma << "\np0 = " << s.p0
     << "\nn_paths = " << s.n_paths << "\nn_steps = " << s.n_steps << "\nseed = " << s.seed << "\n";
  return os.str();
}

}  // namespace mvhedge
