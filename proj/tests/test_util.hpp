#pragma once

// Independent numerical oracles for the test suites: adaptive quadrature,
// Kolmogorov-Smirnov machinery and a few distribution helpers. These stay
// deliberately separate from the library implementation paths they check.

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

namespace testutil {

inline double adaptive_simpson_step(const std::function<double(double)>& f,
                                    double a, double b, double fa, double fb,
                                    double fm, double whole, double tol,
                                    int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (depth <= 0 || std::fabs(delta) <= 15.0 * tol) {
    return left + right + delta / 15.0;
  }
  return adaptive_simpson_step(f, a, m, fa, fm, flm, left, 0.5 * tol,
                               depth - 1) +
         adaptive_simpson_step(f, m, b, fm, fb, frm, right, 0.5 * tol,
                               depth - 1);
}

inline double adaptive_simpson(const std::function<double(double)>& f,
                               double a, double b, double tol = 1e-13,
                               int depth = 50) {
  const double fa = f(a);
  const double fb = f(b);
  const double fm = f(0.5 * (a + b));
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return adaptive_simpson_step(f, a, b, fa, fb, fm, whole, tol, depth);
}

/// One-sample KS statistic against a CDF.
inline double ks_statistic(std::vector<double> samples,
                           const std::function<double(double)>& cdf) {
  std::sort(samples.begin(), samples.end());
  const auto count = samples.size();
  double d = 0.0;
  for (std::size_t i = 0; i < count; ++i) {
    const double c = cdf(samples[i]);
    d = std::max(d, std::fabs(c - static_cast<double>(i) / count));
    d = std::max(d, std::fabs(static_cast<double>(i + 1) / count - c));
  }
  return d;
}

/// Two-sample KS statistic.
inline double ks_statistic_two_sample(std::vector<double> a,
                                      std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  double d = 0.0;
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i] <= b[j]) {
      ++i;
    } else {
      ++j;
    }
    d = std::max(d, std::fabs(static_cast<double>(i) / a.size() -
                              static_cast<double>(j) / b.size()));
  }
  return d;
}

/// Kolmogorov critical constants: P(D_n > c(alpha)/sqrt(n)) = alpha.
inline double kolmogorov_critical(double alpha) {
  if (alpha == 0.01) return 1.62762;
  if (alpha == 0.05) return 1.35810;
  if (alpha == 0.10) return 1.22385;
  throw std::invalid_argument("tabulated alphas: 0.01, 0.05, 0.10");
}

inline double ks_one_sample_threshold(std::size_t n, double alpha) {
  return kolmogorov_critical(alpha) / std::sqrt(static_cast<double>(n));
}

inline double ks_two_sample_threshold(std::size_t n, std::size_t m,
                                      double alpha) {
  return kolmogorov_critical(alpha) *
         std::sqrt(static_cast<double>(n + m) / (static_cast<double>(n) * m));
}

/// Dvoretzky-Kiefer-Wolfowitz band half-width at confidence 1 - alpha.
inline double dkw_band(std::size_t n, double alpha) {
  return std::sqrt(std::log(2.0 / alpha) / (2.0 * static_cast<double>(n)));
}

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x * M_SQRT1_2); }
inline double normal_pdf(double x) {
  return std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI);
}

inline double mean_of(const std::vector<double>& v) {
  double acc = 0.0;
  for (double x : v) acc += x;
  return acc / static_cast<double>(v.size());
}

}  // namespace testutil
