#pragma once

#include <cstdint>
#include <random>

#include <Eigen/Dense>

namespace sphercomp {

// SplitMix64 step; used for seeding and sub-stream derivation.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Seeded random stream with fully specified draw algorithms, so that a
/// given seed produces the same values on every run. Sub-streams derived
/// from a root seed are independent of the order in which they are used.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed);

  // Stream keyed by (root, a, b); trials/branches get disjoint streams.
  static RngStream substream(std::uint64_t root_seed, std::uint64_t a,
                             std::uint64_t b = 0);

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on the open interval (0, 1).
  double uniform01();

  /// Standard normal via Box-Muller (second value cached).
  double gaussian();

  /// Uniform integer in [0, m); unbiased by rejection.
  std::uint64_t uniform_index(std::uint64_t m);

  Eigen::VectorXd gaussian_vector(int n);

  /// Uniform on the unit sphere in dimension n.
  Eigen::VectorXd unit_sphere_vector(int n);

 private:
  std::mt19937_64 engine_;
  double cached_gaussian_ = 0.0;
  bool has_cached_gaussian_ = false;
};

/// Gamma(alpha, 1) by Marsaglia-Tsang squeeze; alpha < 1 handled by the
/// usual boost gamma(alpha) = gamma(alpha+1) * U^(1/alpha).
double gamma_sample(RngStream& rng, double alpha);

/// Chi distribution with k degrees of freedom (k need not be an integer).
double chi_sample(RngStream& rng, double k);

}  // namespace sphercomp
