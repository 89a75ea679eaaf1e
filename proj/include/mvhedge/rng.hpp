#ifndef MVHEDGE_RNG_HPP
#define MVHEDGE_RNG_HPP

#include <cmath>
#include <cstdint>
#include <random>

namespace mvhedge {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// One independent stream per (seed, stream_id). Two streams with the same
/// pair produce identical draws.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream_id)
      : seed_(seed), stream_id_(stream_id), engine_(derive(seed, stream_id)) {}

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_id_; }

  /// Marsaglia polar method; the second variate of each pair is kept.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double a, b, r2;
    do {
      a = 2 * uniform() - 1;
      b = 2 * uniform() - 1;
      r2 = a * a + b * b;
    } while (r2 >= 1 || r2 == 0);
    const double f = std::sqrt(-2 * std::log(r2) / r2);
    spare_ = b * f;
    has_spare_ = true;
    return a * f;
  }
  /// Uniform on [0, 1) from the top 53 bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double exponential(double mean) { return -mean * std::log1p(-uniform()); }

  /// Poisson count by inversion of a single uniform; cheap for the small
  /// per-step means that arise here.
  static std::int64_t poisson_inverse(double mean, double u) {
    if (mean <= 0) return 0;
    return poisson_inverse(mean, std::exp(-mean), u);
  }
  /// Same with exp(-mean) supplied by the caller.
  static std::int64_t poisson_inverse(double mean, double exp_minus_mean, double u) {
    if (mean <= 0) return 0;
    double p = exp_minus_mean;
    double cdf = p;
    std::int64_t k = 0;
    while (u > cdf && k < 10000) {
      ++k;
      p *= mean / static_cast<double>(k);
      cdf += p;
      if (p == 0) break;
    }
    return k;
  }
  std::int64_t poisson(double mean) { return mean <= 0 ? 0 : poisson_inverse(mean, uniform()); }
  std::int64_t poisson(double mean, double exp_minus_mean) {
    return mean <= 0 ? 0 : poisson_inverse(mean, exp_minus_mean, uniform());
  }

  std::mt19937_64& engine() { return engine_; }

 private:
  static std::uint64_t derive(std::uint64_t seed, std::uint64_t stream_id) {
    return splitmix64(splitmix64(seed) ^ splitmix64(stream_id + 0x632be59bd9b4e019ULL));
  }

  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::mt19937_64 engine_;
  double spare_ = 0;
  bool has_spare_ = false;
};

}  // namespace mvhedge

#endif  // MVHEDGE_RNG_HPP
