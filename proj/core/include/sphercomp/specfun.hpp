#pragma once

#include <cstdint>

namespace sphercomp::specfun {

/// Normalizing constant of the sphere-cap density,
/// kappa_n = Gamma(n/2) / (sqrt(pi) Gamma((n-1)/2)), for n >= 2.
double kappa(int n);
double log_kappa(int n);

/// Complementary CDF of the cosine between a fixed direction and a uniform
/// random direction in dimension n:
///   Q_n(s) = kappa_n * integral_s^1 (1 - t^2)^((n-3)/2) dt,  s in [-1, 1].
/// Evaluated through the regularized incomplete beta function; the n = 2
/// case uses the arccos closed form.
double q_n(int n, double s);

/// log Q_n(s) for s in [0, 1]; stays finite-precision deep in the upper
/// tail where Q_n underflows.
double log_q_n(int n, double s);

/// Solves Q_n(s) = q for s in [-1, 1]; q = 0 -> 1, q = 1 -> -1.
/// Bracketed Newton, tolerance 1e-12 in Q (relative in the far tail).
double q_n_inverse(int n, double q);

/// Solves log Q_n(s) = log_q for s in [0, 1] (log_q <= log 1/2).
double q_n_inverse_log(int n, double log_q);

/// Law of the maximal cosine similarity S among m uniform directions:
/// P(S <= s) = (1 - Q_n(s))^m. The codebook size is held in log space so
/// rates with 2^(nR) far beyond integer range stay usable.
class SphereCapLaw {
 public:
  SphereCapLaw(int n, std::uint64_t m);
  static SphereCapLaw from_log_size(int n, double log_m);
  /// m = floor(2^(n*rate)); exact when it fits an integer, log-space after.
  static SphereCapLaw from_rate(int n, double rate);

  int n() const { return n_; }
  double log_m() const { return log_m_; }
  double m() const;  // may overflow to +inf for very large codebooks

  double cdf(double s) const;
  double log_cdf(double s) const;

 private:
  struct LogTag {};
  SphereCapLaw(int n, double log_m, LogTag);
  int n_;
  double log_m_;
  double m_;  // exact when constructed from an integer count
};

/// Inverse-CDF sample of S given a uniform u in (0, 1); deterministic in u.
double sample_max_cosine(const SphereCapLaw& law, double u);

/// Analytic tail bounds on the cap law, evaluated in log space.
/// Lower tail: P(S <= s) <= exp(-(m kappa_n/(n-1)) (1-s^2)^((n-1)/2)), n >= 2.
double tail_bound_lower(const SphereCapLaw& law, double s);
/// Upper tail: P(S >= s) <= min(1, m kappa_n (1-s^2)^((n-1)/2)), n >= 3.
double tail_bound_upper(const SphereCapLaw& law, double s);

}  // namespace sphercomp::specfun
