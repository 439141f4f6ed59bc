#include "sphercomp/sphere_code.hpp"

#include <cmath>
#include <ostream>
#include <stdexcept>

namespace sphercomp {

namespace {

// Uniform direction orthogonal to x_hat (a unit vector): Gram-Schmidt of a
// fresh Gaussian vector against x_hat, re-drawn on the null event that the
// residual vanishes.
Eigen::VectorXd orthogonal_direction(const Eigen::VectorXd& x_hat,
                                     RngStream& rng) {
  for (;;) {
    Eigen::VectorXd g = rng.gaussian_vector(static_cast<int>(x_hat.size()));
    g -= g.dot(x_hat) * x_hat;
    const double norm = g.norm();
    if (norm > 1e-12) return g / norm;
  }
}

struct CoupledDraw {
  double s, a, b, delta1, delta2;
};

CoupledDraw draw_coupling_scalars(const SphericalCodeConfig& config,
                                  RngStream& rng) {
  CoupledDraw d;
  d.s = specfun::sample_max_cosine(config.law(), rng.uniform01());
  d.a = rng.gaussian();
  d.b = chi_sample(rng, config.n - 1.0);
  const double sin_target = std::exp2(-config.rate);
  const double cos_target = std::sqrt(-std::expm1(-2.0 * M_LN2 * config.rate));
  d.delta1 = std::hypot(d.s - cos_target,
                        std::sqrt(std::max(0.0, (1.0 - d.s) * (1.0 + d.s))) -
                            sin_target);
  d.delta2 = std::hypot(d.a, d.b - std::sqrt(static_cast<double>(config.n)));
  return d;
}

}  // namespace

SphericalCodeConfig::SphericalCodeConfig(int n_, double rate_,
                                         double magnitude_, double gamma_)
    : n(n_), rate(rate_), magnitude(magnitude_), gamma(gamma_) {
  if (n < 2) throw std::invalid_argument("spherical code needs n >= 2");
  if (!(rate > 0.0)) throw std::invalid_argument("rate must be positive");
  if (!(magnitude > 0.0) || !(gamma > 0.0)) {
    throw std::invalid_argument("magnitude and gamma must be positive");
  }
}

SphericalCodeConfig SphericalCodeConfig::matched(int n, double rate,
                                                 double gamma) {
  const double one_minus = -std::expm1(-2.0 * M_LN2 * rate);  // 1 - 2^(-2R)
  return SphericalCodeConfig(n, rate, gamma / std::sqrt(one_minus), gamma);
}

specfun::SphereCapLaw SphericalCodeConfig::law() const {
  return specfun::SphereCapLaw::from_rate(n, rate);
}

double SphericalCodeConfig::sigma2() const {
  return effective_noise_variance(gamma, n, rate);
}

double effective_noise_variance(double gamma, int n, double rate) {
  if (!(rate > 0.0)) throw std::invalid_argument("rate must be positive");
  return gamma * gamma / (n * std::expm1(2.0 * M_LN2 * rate));
}

ExplicitCodebook::ExplicitCodebook(SphericalCodeConfig config,
                                   Eigen::MatrixXd codewords,
                                   std::uint64_t seed)
    : config_(config), codewords_(std::move(codewords)), seed_(seed) {
  if (codewords_.rows() != config_.n) {
    throw std::invalid_argument("codeword dimension mismatch");
  }
  for (int j = 0; j < codewords_.cols(); ++j) {
    if (std::fabs(codewords_.col(j).norm() - 1.0) > 1e-12) {
      throw std::invalid_argument("codewords must be unit vectors");
    }
  }
}

ExplicitCodebook draw_codebook(const SphericalCodeConfig& config,
                               std::uint64_t seed) {
  const double m_real = config.law().m();
  if (!(m_real * config.n <= static_cast<double>(ExplicitCodebook::kMaxEntries))) {
    throw std::invalid_argument(
        "codebook too large to materialize; use sample_output instead");
  }
  const auto m = static_cast<int>(m_real);
  RngStream rng(seed);
  Eigen::MatrixXd codewords(config.n, m);
  for (int j = 0; j < m; ++j) {
    codewords.col(j) = rng.unit_sphere_vector(config.n);
  }
  return ExplicitCodebook(config, std::move(codewords), seed);
}

EncodeResult encode(const ExplicitCodebook& codebook, const Eigen::VectorXd& x,
                    RngStream& rng) {
  const auto& c = codebook.codewords();
  if (x.size() != c.rows()) {
    throw std::invalid_argument("input dimension mismatch");
  }
  int best;
  if (x.norm() == 0.0) {
    best = static_cast<int>(rng.uniform_index(codebook.size()));
  } else {
    // Codewords are unit norm, so the cosine order equals the dot order.
    Eigen::VectorXd scores = c.transpose() * x;
    best = 0;
    for (int j = 1; j < scores.size(); ++j) {
      if (scores[j] > scores[best]) best = j;
    }
  }
  return EncodeResult{best, codebook.config().magnitude * c.col(best)};
}

void write_index_dump_line(std::ostream& os, std::uint64_t seed, int index) {
  os << seed << ' ' << index << '\n';
}

Eigen::VectorXd sample_output(const SphericalCodeConfig& config,
                              const Eigen::VectorXd& x, RngStream& rng) {
  if (x.size() != config.n) {
    throw std::invalid_argument("input dimension mismatch");
  }
  const double x_norm = x.norm();
  if (x_norm == 0.0) {
    return config.magnitude * rng.unit_sphere_vector(config.n);
  }
  const double s = specfun::sample_max_cosine(config.law(), rng.uniform01());
  const Eigen::VectorXd x_hat = x / x_norm;
  const Eigen::VectorXd h = orthogonal_direction(x_hat, rng);
  const double sin_s = std::sqrt(std::max(0.0, (1.0 - s) * (1.0 + s)));
  return config.magnitude * (s * x_hat + sin_s * h);
}

Eigen::VectorXd awgn_channel(const Eigen::VectorXd& x, double sigma2,
                             RngStream& rng) {
  if (!(sigma2 >= 0.0)) {
    throw std::invalid_argument("noise variance must be nonnegative");
  }
  if (sigma2 == 0.0) return x;
  return x + std::sqrt(sigma2) * rng.gaussian_vector(static_cast<int>(x.size()));
}

CoupledPair sample_coupled(const SphericalCodeConfig& config,
                           const Eigen::VectorXd& x, RngStream& rng) {
  if (x.size() != config.n) {
    throw std::invalid_argument("input dimension mismatch");
  }
  const double x_norm = x.norm();
  if (x_norm == 0.0) {
    throw std::invalid_argument("the coupling is defined for nonzero x");
  }
  const CoupledDraw d = draw_coupling_scalars(config, rng);
  const Eigen::VectorXd x_hat = x / x_norm;
  const Eigen::VectorXd h = orthogonal_direction(x_hat, rng);
  const double rho = config.magnitude;
  const double sigma = std::sqrt(config.sigma2());
  const double sin_s = std::sqrt(std::max(0.0, (1.0 - d.s) * (1.0 + d.s)));

  CoupledPair pair;
  pair.y = x + (rho * d.s - x_norm) * x_hat + rho * sin_s * h;
  pair.z = x + sigma * d.a * x_hat + sigma * d.b * h;
  pair.s = d.s;
  pair.a = d.a;
  pair.b = d.b;
  pair.delta1 = d.delta1;
  pair.delta2 = d.delta2;
  return pair;
}

CoupledScalars sample_coupled_scalars(const SphericalCodeConfig& config,
                                      double x_norm, RngStream& rng) {
  if (!(x_norm > 0.0)) {
    throw std::invalid_argument("the coupling is defined for nonzero x");
  }
  const CoupledDraw d = draw_coupling_scalars(config, rng);
  const double rho = config.magnitude;
  const double sigma = std::sqrt(config.sigma2());
  const double sin_s = std::sqrt(std::max(0.0, (1.0 - d.s) * (1.0 + d.s)));
  CoupledScalars out;
  out.s = d.s;
  out.a = d.a;
  out.b = d.b;
  out.delta1 = d.delta1;
  out.delta2 = d.delta2;
  out.distance =
      std::hypot(rho * d.s - x_norm - sigma * d.a, rho * sin_s - sigma * d.b);
  return out;
}

}  // namespace sphercomp
