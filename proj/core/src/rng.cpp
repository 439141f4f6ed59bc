#include "sphercomp/rng.hpp"

#include <cmath>
#include <stdexcept>

namespace sphercomp {

namespace {

std::mt19937_64 make_engine(std::uint64_t seed) {
  // Expand the seed so mt19937_64 state is well mixed even for small seeds.
  std::uint64_t s = seed;
  std::seed_seq seq{splitmix64(s), splitmix64(s), splitmix64(s), splitmix64(s),
                    splitmix64(s), splitmix64(s), splitmix64(s), splitmix64(s)};
  return std::mt19937_64(seq);
}

}  // namespace

RngStream::RngStream(std::uint64_t seed) : engine_(make_engine(seed)) {}

RngStream RngStream::substream(std::uint64_t root_seed, std::uint64_t a,
                               std::uint64_t b) {
  std::uint64_t s = root_seed;
  std::uint64_t h = splitmix64(s);
  s = h ^ (a * 0xD6E8FEB86659FD93ULL);
  h = splitmix64(s);
  s = h ^ (b * 0xA5A5A5A5B9E8D6E9ULL);
  return RngStream(splitmix64(s));
}

double RngStream::uniform01() {
  // 53-bit mantissa; reject 0 so the result lies in the open interval.
  for (;;) {
    double u = static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    if (u > 0.0) return u;
  }
}

double RngStream::gaussian() {
  if (has_cached_gaussian_) {
    has_cached_gaussian_ = false;
    return cached_gaussian_;
  }
  double u1 = uniform01();
  double u2 = uniform01();
  double r = std::sqrt(-2.0 * std::log(u1));
  double angle = 2.0 * M_PI * u2;
  cached_gaussian_ = r * std::sin(angle);
  has_cached_gaussian_ = true;
  return r * std::cos(angle);
}

std::uint64_t RngStream::uniform_index(std::uint64_t m) {
  if (m == 0) throw std::invalid_argument("uniform_index: m must be positive");
  std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                        std::numeric_limits<std::uint64_t>::max() % m;
  for (;;) {
    std::uint64_t v = engine_();
    if (v < limit) return v % m;
  }
}

Eigen::VectorXd RngStream::gaussian_vector(int n) {
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v[i] = gaussian();
  return v;
}

Eigen::VectorXd RngStream::unit_sphere_vector(int n) {
  for (;;) {
    Eigen::VectorXd v = gaussian_vector(n);
    double norm = v.norm();
    if (norm > 1e-12) return v / norm;
  }
}

double gamma_sample(RngStream& rng, double alpha) {
  if (!(alpha > 0.0)) throw std::invalid_argument("gamma_sample: alpha <= 0");
  if (alpha < 1.0) {
    double u = rng.uniform01();
    return gamma_sample(rng, alpha + 1.0) * std::pow(u, 1.0 / alpha);
  }
  const double d = alpha - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x = rng.gaussian();
    double v = 1.0 + c * x;
    if (v <= 0.0) continue;
    v = v * v * v;
    double u = rng.uniform01();
    double x2 = x * x;
    if (u < 1.0 - 0.0331 * x2 * x2) return d * v;
    if (std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v))) return d * v;
  }
}

double chi_sample(RngStream& rng, double k) {
  return std::sqrt(2.0 * gamma_sample(rng, 0.5 * k));
}

}  // namespace sphercomp
