#include "mvhedge/b_surface.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <ostream>
#include <sstream>

#include "mvhedge/parallel.hpp"
#include "mvhedge/quadrature.hpp"
#include "mvhedge/rng.hpp"

namespace mvhedge {

const char* to_string(BEstimator e) { return e == BEstimator::DirectPstar ? "direct_pstar" : "density_weighted"; }
const char* to_string(DensityOrientation o) { return o == DensityOrientation::Forward ? "forward" : "reciprocal"; }

int SurfaceOptions::time_nodes(double T) const {
  if (n_t > 0) return n_t;
  return static_cast<int>(std::llround(5 * T)) + 1;
}

namespace {

using Array = Eigen::ArrayXd;

struct RowStats {
  Array mean, se;
  std::int64_t violations = 0;
};

// Theta2 * B on an array of lambda values.
Array ratio(const BondCoefficients<double>& c, const MortalityParams& q, const Array& lp) {
  if (q.varrho_lambda == 0) return Array::Constant(lp.size(), q.kappa / q.sigma_lambda);
  const Array nu = q.sigma_lambda * q.kappa * lp + c.nu_hat_intercept();
  const Array s = q.sigma_lambda * q.sigma_lambda * lp + c.s_hat_intercept();
  return nu / s;
}

// Theta2 * nu_L, the integrand of the expectation in b.
Array integrand(const BondCoefficients<double>& c, const MortalityParams& q, const Array& lp, const Array& R) {
  return R * (q.sigma_lambda * q.kappa * lp + c.nu_hat_intercept());
}

// E[int_{t_j}^T Theta2 nu_L ds] for every lambda node of row j, under P* directly
// or under P with density weights. All nodes of a row share the same draws.
RowStats simulate_row(const MortalityParams& q, const std::vector<BondCoefficients<double>>& fine,
                      const std::vector<double>& fine_t, int start, double h, const Array& lambda0,
                      const SurfaceOptions& opt, std::uint64_t row) {
  const int L = static_cast<int>(fine.size()) - 1;
  const auto n = lambda0.size();
  const bool direct = opt.estimator == BEstimator::DirectPstar;
  const double sqh = std::sqrt(h);
  const double a = q.p_reversion();
  const double base_rate = q.varrho_lambda * h;
  const double base_p0 = std::exp(-base_rate);
  const double s2 = q.sigma_lambda * q.sigma_lambda;

  Array sum = Array::Zero(n), sum2 = Array::Zero(n);
  Array lam(n), phi(n), F(n), lp(n), R(n), g_prev(n), g(n), jumps(n), C(n);
  std::int64_t violations = 0;

  for (int k = 0; k < opt.inner_paths; ++k) {
    RngStream rng(opt.seed, row * static_cast<std::uint64_t>(opt.inner_paths) + static_cast<std::uint64_t>(k));
    lam = lambda0;
    phi.setOnes();
    F.setZero();
    lp = lam.max(0.0);
    R = ratio(fine[start], q, lp);
    g_prev = integrand(fine[start], q, lp, R);

    for (int l = start; l < L; ++l) {
      const auto& c = fine[static_cast<std::size_t>(l)];
      const double dW = sqh * rng.normal();
      const Array sq = lp.sqrt();
      Array drift = q.beta * q.theta - a * lp;
      if (direct) drift += R * s2 * lp;

      jumps.setZero();
      double eta_over_B_sum = 0;
      const auto nj = RngStream::poisson_inverse(base_rate, base_p0, rng.uniform());
      for (std::int64_t m = 0; m < nj; ++m) {
        const double x = rng.exponential(q.varsigma);
        const double u = rng.uniform();
        const double eob = c.eta_L_over_B(x);
        C = R * eob;
        const auto bad = (C >= 1.0).count();
        if (bad > 0) {
          if (opt.policy == GirsanovPolicy::Abort) {
            Eigen::Index i = 0;
            C.maxCoeff(&i);
            throw GirsanovViolation(fine_t[static_cast<std::size_t>(l)], lp[i], x, C[i]);
          }
          violations += bad;
        }
        if (direct) {
          jumps += ((C < 1.0) && (u < 1.0 - C)).cast<double>() * x;
        } else {
          jumps += x;
          eta_over_B_sum += eob;
        }
      }

      const double u_extra = rng.uniform();
      if (direct) {
        // extra P* jumps where Theta2 > 0, sizes Exp(varsigma) + Exp(varsigma / (1 + varsigma B))
        const Array rate = (R > 0.0).select(-R * c.eta_compensator_over_B() * h, 0.0);
        if (u_extra > std::exp(-rate.maxCoeff())) {
          std::vector<std::int64_t> counts(static_cast<std::size_t>(n));
          std::int64_t most = 0;
          for (Eigen::Index i = 0; i < n; ++i) {
            counts[static_cast<std::size_t>(i)] = RngStream::poisson_inverse(rate[i], u_extra);
            most = std::max(most, counts[static_cast<std::size_t>(i)]);
          }
          const double second = q.varsigma / (1 + q.varsigma * c.B());
          for (std::int64_t m = 0; m < most; ++m) {
            const double x = rng.exponential(q.varsigma) + rng.exponential(second);
            for (Eigen::Index i = 0; i < n; ++i)
              if (counts[static_cast<std::size_t>(i)] > m) jumps[i] += x;
          }
        }
      } else {
        const Array factor = 1.0 + R * q.sigma_lambda * sq * dW - R * eta_over_B_sum +
                             R * c.eta_compensator_over_B() * h;
        phi *= factor.max(0.0);
      }

      lam += drift * h + q.sigma_lambda * sq * dW + jumps;
      lp = lam.max(0.0);
      R = ratio(fine[static_cast<std::size_t>(l) + 1], q, lp);
      g = integrand(fine[static_cast<std::size_t>(l) + 1], q, lp, R);
      F += 0.5 * h * (g_prev + g);
      g_prev = g;
    }

    Array est;
    if (direct)
      est = F;
    else if (opt.orientation == DensityOrientation::Forward)
      est = phi * F;
    else
      est = F / phi;
    sum += est;
    sum2 += est * est;
  }
  const double M = opt.inner_paths;
  RowStats out;
  out.mean = sum / M;
  const Array var = ((sum2 - sum * sum / M) / std::max(M - 1, 1.0)).max(0.0);
  out.se = (var / M).sqrt();
  out.violations = violations;
  return out;
}

// Linear interpolation in lambda along one row, extrapolating past the ends.
double row_value(const Eigen::ArrayXXd& b, int j, double lambda, double dl) {
  const auto c = detail::grid_cell(lambda / dl, static_cast<int>(b.cols()));
  return detail::lerp(b(j, c.index), b(j, c.index + 1), c.weight);
}

void check_options(const SurfaceOptions& opt, int n_t) {
  if (n_t < 2 || opt.n_lambda < 2) throw std::invalid_argument("b-surface: need at least 2 nodes per axis");
  if (opt.inner_paths < 2) throw std::invalid_argument("b-surface: need at least 2 inner paths");
  if (opt.substeps < 1) throw std::invalid_argument("b-surface: substeps must be >= 1");
  if (!(opt.lambda_max > 0)) throw std::invalid_argument("b-surface: lambda_max must be > 0");
}

}  // namespace

BSurface build_b_surface(const MarketParams& m, const MortalityParams& q, double T, double T_L, double gamma,
                         const SurfaceOptions& opt) {
  const int n_t = opt.time_nodes(T);
  check_options(opt, n_t);
  if (!(T > 0) || T_L < T) throw std::invalid_argument("b-surface: need 0 < T <= T_L");
  if (!(gamma > 0)) throw std::invalid_argument("b-surface: gamma must be > 0");

  BSurface s;
  s.T = T;
  s.T_L = T_L;
  s.gamma = gamma;
  s.lambda_max = opt.lambda_max;
  s.n_t = n_t;
  s.n_lambda = opt.n_lambda;
  s.estimator = opt.estimator;
  s.orientation = opt.orientation;
  s.inner_paths = opt.inner_paths;
  s.substeps = opt.substeps;
  s.seed = opt.seed;
  s.cache_key = surface_cache_key(m, q, T, T_L, gamma, opt);

  const int L = (n_t - 1) * opt.substeps;
  const double h = T / L;
  std::vector<BondCoefficients<double>> fine;
  std::vector<double> fine_t;
  fine.reserve(static_cast<std::size_t>(L) + 1);
  for (int l = 0; l <= L; ++l) {
    fine_t.push_back(l == L ? T : l * h);
    fine.emplace_back(q, fine_t.back(), T_L);
  }

  Array lambda0(opt.n_lambda);
  for (int i = 0; i < opt.n_lambda; ++i) lambda0[i] = s.lambda(i);

  const double drift_part = theta1(m) * m.excess_return();
  const bool priced = q.kappa != 0 || q.psi2 != 0;

  std::vector<RowStats> rows(static_cast<std::size_t>(n_t));
  parallel_for(n_t - 1, opt.threads, [&](std::int64_t j) {
    if (!priced) {
      rows[static_cast<std::size_t>(j)] = {Array::Zero(opt.n_lambda), Array::Zero(opt.n_lambda), 0};
      return;
    }
    rows[static_cast<std::size_t>(j)] =
        simulate_row(q, fine, fine_t, static_cast<int>(j) * opt.substeps, h, lambda0, opt, static_cast<std::uint64_t>(j));
  });

  s.b = Eigen::ArrayXXd::Zero(n_t, opt.n_lambda);
  s.se = Eigen::ArrayXXd::Zero(n_t, opt.n_lambda);
  for (int j = 0; j + 1 < n_t; ++j) {
    const auto& r = rows[static_cast<std::size_t>(j)];
    s.b.row(j) = ((drift_part * (T - s.t(j)) + r.mean) / gamma).transpose();
    s.se.row(j) = (r.se / gamma).transpose();
    s.girsanov_violations += r.violations;
  }

  // b_lambda by central differences, one-sided at the edges
  const double dl = s.dlambda();
  const int nl = opt.n_lambda;
  s.b_lambda = Eigen::ArrayXXd::Zero(n_t, nl);
  s.b_lambda.col(0) = (s.b.col(1) - s.b.col(0)) / dl;
  s.b_lambda.col(nl - 1) = (s.b.col(nl - 1) - s.b.col(nl - 2)) / dl;
  if (nl > 2) s.b_lambda.middleCols(1, nl - 2) = (s.b.rightCols(nl - 2) - s.b.leftCols(nl - 2)) / (2 * dl);

  // b2 / B by Gauss-Laguerre in y = x / varsigma
  const auto gl = gauss_laguerre<double>(opt.laguerre_nodes);
  s.b2_over_B = Eigen::ArrayXXd::Zero(n_t, nl);
  s.b2 = Eigen::ArrayXXd::Zero(n_t, nl);
  for (int j = 0; j < n_t; ++j) {
    const BondCoefficients<double> c(q, s.t(j), T_L);
    for (int i = 0; i < nl; ++i) {
      const double base = s.b(j, i);
      const double lam = s.lambda(i);
      const double integral = gl.integrate([&](double y) {
        const double x = q.varsigma * y;
        return (row_value(s.b, j, lam + x, dl) - base) * c.eta_L_over_B(x);
      });
      s.b2_over_B(j, i) = q.varrho_lambda * integral;
      s.b2(j, i) = c.B() * s.b2_over_B(j, i);
    }
  }
  return s;
}

BEval eval_b(const BSurface& s, double t, double lambda) {
  const auto ct = detail::grid_cell(t / s.dt(), s.n_t, true);
  if (lambda < 0) lambda = 0;
  if (lambda > s.lambda_max) s.note_extrapolation();
  const auto cl = detail::grid_cell(lambda / s.dlambda(), s.n_lambda);
  const int j = ct.index, i = cl.index;

  auto bilinear = [&](const Eigen::ArrayXXd& a) {
    const double lo = detail::lerp(a(j, i), a(j, i + 1), cl.weight);
    const double hi = detail::lerp(a(j + 1, i), a(j + 1, i + 1), cl.weight);
    return detail::lerp(lo, hi, ct.weight);
  };
  return {bilinear(s.b), bilinear(s.b_lambda), bilinear(s.b2), bilinear(s.b2_over_B)};
}

SurfaceComparison compare_surfaces(const BSurface& a, const BSurface& b, double k, bool skip_terminal) {
  if (a.n_t != b.n_t || a.n_lambda != b.n_lambda) throw std::invalid_argument("compare_surfaces: grids differ");
  SurfaceComparison out;
  const int rows = skip_terminal ? a.n_t - 1 : a.n_t;
  for (int j = 0; j < rows; ++j)
    for (int i = 0; i < a.n_lambda; ++i) {
      const double diff = std::abs(a.b(j, i) - b.b(j, i));
      const double se = std::sqrt(a.se(j, i) * a.se(j, i) + b.se(j, i) * b.se(j, i));
      ++out.nodes;
      if (diff <= k * se) ++out.within;
      const double z = se > 0 ? diff / se : (diff > 0 ? INFINITY : 0.0);
      out.max_abs_diff = std::max(out.max_abs_diff, diff);
      if (z > out.max_z) {
        out.max_z = z;
        out.worst_row = j;
        out.worst_col = i;
      }
    }
  return out;
}

namespace {

struct Fnv {
  std::uint64_t h = 1469598103934665603ULL;
  template <typename T>
  void add(const T& v) {
    unsigned char bytes[sizeof(T)];
    std::memcpy(bytes, &v, sizeof(T));
    for (unsigned char c : bytes) {
      h ^= c;
      h *= 1099511628211ULL;
    }
  }
};

constexpr char kMagic[8] = {'M', 'V', 'B', 'S', 'U', 'R', 'F', '1'};

template <typename T>
void put(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}
template <typename T>
void get(std::istream& is, T& v) {
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw std::runtime_error("surface cache: truncated file");
}

void put_array(std::ostream& os, const Eigen::ArrayXXd& a) {
  os.write(reinterpret_cast<const char*>(a.data()), static_cast<std::streamsize>(sizeof(double) * a.size()));
}
void get_array(std::istream& is, Eigen::ArrayXXd& a, int rows, int cols) {
  a.resize(rows, cols);
  is.read(reinterpret_cast<char*>(a.data()), static_cast<std::streamsize>(sizeof(double) * a.size()));
  if (!is) throw std::runtime_error("surface cache: truncated file");
}

}  // namespace

std::uint64_t surface_cache_key(const MarketParams& m, const MortalityParams& q, double T, double T_L, double gamma,
                                const SurfaceOptions& opt) {
  Fnv f;
  for (double v : {m.mu, m.sigma, m.rho, m.varrho_S, m.r, m.s0}) f.add(v);
  f.add(static_cast<int>(m.jump_size_law));
  for (double v : {q.beta, q.theta, q.sigma_lambda, q.kappa, q.psi2, q.varrho_lambda, q.varsigma, q.lambda0}) f.add(v);
  for (double v : {T, T_L, gamma, opt.lambda_max}) f.add(v);
  for (int v : {opt.time_nodes(T), opt.n_lambda, opt.inner_paths, opt.substeps, opt.laguerre_nodes,
                static_cast<int>(opt.estimator), static_cast<int>(opt.orientation), static_cast<int>(opt.policy)})
    f.add(v);
  f.add(opt.seed);
  return f.h;
}

void save_surface(const BSurface& s, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write surface cache '" + path.string() + "'");
  os.write(kMagic, sizeof kMagic);
  put(os, s.T);
  put(os, s.T_L);
  put(os, s.gamma);
  put(os, s.lambda_max);
  put(os, s.n_t);
  put(os, s.n_lambda);
  put(os, static_cast<int>(s.estimator));
  put(os, static_cast<int>(s.orientation));
  put(os, s.inner_paths);
  put(os, s.substeps);
  put(os, s.seed);
  put(os, s.girsanov_violations);
  put(os, s.cache_key);
  for (const auto* a : {&s.b, &s.b_lambda, &s.b2, &s.b2_over_B, &s.se}) put_array(os, *a);
}

BSurface load_surface(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open surface cache '" + path.string() + "'");
  char magic[8];
  is.read(magic, sizeof magic);
  if (!is || std::memcmp(magic, kMagic, sizeof kMagic) != 0)
    throw std::runtime_error("surface cache: bad header in '" + path.string() + "'");
  BSurface s;
  int est = 0, ori = 0;
  get(is, s.T);
  get(is, s.T_L);
  get(is, s.gamma);
  get(is, s.lambda_max);
  get(is, s.n_t);
  get(is, s.n_lambda);
  get(is, est);
  get(is, ori);
  get(is, s.inner_paths);
  get(is, s.substeps);
  get(is, s.seed);
  get(is, s.girsanov_violations);
  get(is, s.cache_key);
  s.estimator = static_cast<BEstimator>(est);
  s.orientation = static_cast<DensityOrientation>(ori);
  if (s.n_t < 2 || s.n_lambda < 2 || s.n_t > 100000 || s.n_lambda > 100000)
    throw std::runtime_error("surface cache: implausible grid size");
  for (auto* a : {&s.b, &s.b_lambda, &s.b2, &s.b2_over_B, &s.se}) get_array(is, *a, s.n_t, s.n_lambda);
  return s;
}

BSurface cached_b_surface(const MarketParams& m, const MortalityParams& q, double T, double T_L, double gamma,
                          const SurfaceOptions& opt, const std::filesystem::path& dir, bool* hit) {
  if (hit) *hit = false;
  if (dir.empty()) return build_b_surface(m, q, T, T_L, gamma, opt);
  std::ostringstream name;
  name << std::hex << surface_cache_key(m, q, T, T_L, gamma, opt) << ".bsurf";
  const auto path = dir / name.str();
  if (std::filesystem::exists(path)) {
    auto s = load_surface(path);
    if (s.cache_key == surface_cache_key(m, q, T, T_L, gamma, opt)) {
      if (hit) *hit = true;
      return s;
    }
  }
  auto s = build_b_surface(m, q, T, T_L, gamma, opt);
  std::filesystem::create_directories(dir);
  save_surface(s, path);
  return s;
}

void write_surface_csv(const BSurface& s, std::ostream& os) {
  const auto old = os.precision(12);
  os << "t,lambda,b,b_lambda,b2,se\n";
  for (int j = 0; j < s.n_t; ++j)
    for (int i = 0; i < s.n_lambda; ++i)
      os << s.t(j) << ',' << s.lambda(i) << ',' << s.b(j, i) << ',' << s.b_lambda(j, i) << ',' << s.b2(j, i) << ','
         << s.se(j, i) << '\n';
  os.precision(old);
}

}  // namespace mvhedge
