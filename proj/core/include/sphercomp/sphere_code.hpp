#pragma once

#include <cstdint>
#include <iosfwd>

#include <Eigen/Dense>

#include "sphercomp/rng.hpp"
#include "sphercomp/specfun.hpp"

namespace sphercomp {

/// Parameters of a bitrate-R random spherical code: M = floor(2^(nR))
/// codewords uniform on the unit sphere, output scaled to radius rho.
struct SphericalCodeConfig {
  int n;             // ambient dimension, >= 2
  double rate;       // bits per coordinate, > 0
  double magnitude;  // output codeword radius rho, > 0
  double gamma;      // concentration scale of the input magnitude, > 0

  SphericalCodeConfig(int n, double rate, double magnitude, double gamma);

  /// rho = gamma / sqrt(1 - 2^(-2R)), the scaling that makes the code
  /// output comparable with the AWGN channel of matched SNR.
  static SphericalCodeConfig matched(int n, double rate, double gamma);

  specfun::SphereCapLaw law() const;
  /// AWGN-equivalent per-coordinate noise variance gamma^2/(n (2^(2R)-1)).
  double sigma2() const;
};

double effective_noise_variance(double gamma, int n, double rate);

/// Materialized codebook of M unit vectors (columns), for brute-force
/// encoding at small nR.
class ExplicitCodebook {
 public:
  static constexpr std::int64_t kMaxEntries = std::int64_t{1} << 28;

  ExplicitCodebook(SphericalCodeConfig config, Eigen::MatrixXd codewords,
                   std::uint64_t seed);

  const SphericalCodeConfig& config() const { return config_; }
  const Eigen::MatrixXd& codewords() const { return codewords_; }  // n x M
  std::uint64_t seed() const { return seed_; }
  int size() const { return static_cast<int>(codewords_.cols()); }

 private:
  SphericalCodeConfig config_;
  Eigen::MatrixXd codewords_;
  std::uint64_t seed_;
};

ExplicitCodebook draw_codebook(const SphericalCodeConfig& config,
                               std::uint64_t seed);

struct EncodeResult {
  int index;          // argmax of cosine similarity, lowest index on ties
  Eigen::VectorXd y;  // rho * C(index)
};

/// Brute-force encoding; a zero input picks a codeword uniformly at random.
EncodeResult encode(const ExplicitCodebook& codebook, const Eigen::VectorXd& x,
                    RngStream& rng);

/// One (seed, index) record of the codeword-index dump consumed by the
/// experiment harness.
void write_index_dump_line(std::ostream& os, std::uint64_t seed, int index);

/// Distributional sampler: equal in law to encode marginalized over
/// codebooks, built from the cap law S and a uniform direction H
/// orthogonal to x. Scales to any n.
Eigen::VectorXd sample_output(const SphericalCodeConfig& config,
                              const Eigen::VectorXd& x, RngStream& rng);

Eigen::VectorXd awgn_channel(const Eigen::VectorXd& x, double sigma2,
                             RngStream& rng);

/// Jointly sampled compressed/noisy pair sharing the radial direction and
/// the tangential direction H, with the concentration error terms of the
/// coupling bound.
struct CoupledPair {
  Eigen::VectorXd y;  // spherical-code output, |y| = rho
  Eigen::VectorXd z;  // AWGN output at the matched noise level
  double s;           // maximal cosine similarity
  double a;           // radial Gaussian component
  double b;           // chi(n-1) tangential component
  double delta1;      // |(S - sqrt(1-2^(-2R)), sqrt(1-S^2) - 2^(-R))|
  double delta2;      // |(A, B - sqrt(n))|
};

CoupledPair sample_coupled(const SphericalCodeConfig& config,
                           const Eigen::VectorXd& x, RngStream& rng);

/// Same joint law restricted to the quantities that determine |Y - Z|;
/// O(1) per draw, used by the tail experiments at large n.
struct CoupledScalars {
  double s, a, b, delta1, delta2;
  double distance;  // |Y - Z|
};

CoupledScalars sample_coupled_scalars(const SphericalCodeConfig& config,
                                      double x_norm, RngStream& rng);

}  // namespace sphercomp
