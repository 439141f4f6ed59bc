#include "sphercomp/specfun.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace sphercomp::specfun {

namespace {

constexpr double kQTol = 1e-12;

void check_dimension(int n, int min_n = 2) {
  if (n < min_n) {
    throw std::invalid_argument("dimension n must be >= " +
                                std::to_string(min_n) + ", got " +
                                std::to_string(n));
  }
}

void check_cosine(double s) {
  if (!(s >= -1.0 && s <= 1.0)) {
    throw std::invalid_argument("cosine argument outside [-1, 1]");
  }
}

double log_beta(double a, double b) {
  return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
}

// Continued fraction for the incomplete beta function (Lentz's method).
// Converges for x < (a + 1) / (a + b + 2).
double ibeta_cf(double a, double b, double x) {
  constexpr int kMaxIter = 500;
  constexpr double kEps = 3e-16;
  constexpr double kFpMin = 1e-300;

  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kFpMin) d = kFpMin;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kFpMin) d = kFpMin;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kFpMin) c = kFpMin;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kFpMin) d = kFpMin;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kFpMin) c = kFpMin;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEps) return h;
  }
  throw std::runtime_error("incomplete beta continued fraction stalled");
}

// Regularized incomplete beta I_x(a, b).
double ibeta_reg(double a, double b, double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double log_bt =
      a * std::log(x) + b * std::log1p(-x) - log_beta(a, b);
  if (x < (a + 1.0) / (a + b + 2.0)) {
    return std::exp(log_bt) * ibeta_cf(a, b, x) / a;
  }
  return 1.0 - std::exp(log_bt) * ibeta_cf(b, a, 1.0 - x) / b;
}

// log I_x(a, b) on the direct branch x < (a+1)/(a+b+2); exact deep into
// the x -> 0 tail where I underflows.
double log_ibeta_reg_lower(double a, double b, double x) {
  if (x <= 0.0) return -std::numeric_limits<double>::infinity();
  const double log_bt =
      a * std::log(x) + b * std::log1p(-x) - log_beta(a, b);
  return log_bt + std::log(ibeta_cf(a, b, x) / a);
}

// 1 - s^2 without cancellation near |s| = 1.
double one_minus_sq(double s) { return (1.0 - s) * (1.0 + s); }

}  // namespace

double log_kappa(int n) {
  check_dimension(n);
  return std::lgamma(0.5 * n) - std::lgamma(0.5 * (n - 1)) -
         0.5 * std::log(M_PI);
}

double kappa(int n) { return std::exp(log_kappa(n)); }

double q_n(int n, double s) {
  check_dimension(n);
  check_cosine(s);
  if (n == 2) return std::acos(s) / M_PI;  // integrable endpoint singularity
  if (std::fabs(s) < 1e-6) {
    // x = 1 - s^2 saturates at 1 here; use the odd series of the defining
    // integral, Q_n(s) = 1/2 - kappa_n (s - (n-3) s^3 / 6 + ...).
    const double m = 0.5 * (n - 3);
    return 0.5 - kappa(n) * s * (1.0 - m * s * s / 3.0);
  }
  if (s < 0.0) return 1.0 - q_n(n, -s);
  if (s == 1.0) return 0.0;
  const double x = one_minus_sq(s);
  return 0.5 * ibeta_reg(0.5 * (n - 1), 0.5, x);
}

double log_q_n(int n, double s) {
  check_dimension(n);
  if (!(s >= 0.0 && s <= 1.0)) {
    throw std::invalid_argument("log_q_n expects s in [0, 1]");
  }
  if (s == 1.0) return -std::numeric_limits<double>::infinity();
  if (n == 2) return std::log(std::acos(s) / M_PI);
  const double a = 0.5 * (n - 1);
  const double x = one_minus_sq(s);
  if (x < (a + 1.0) / (a + 1.5 + 1.0)) {
    return log_ibeta_reg_lower(a, 0.5, x) - M_LN2;
  }
  return std::log(q_n(n, s));
}

namespace {

// Newton on g(s) = log Q_n(s) - log_q over s in [0, 1], with a bisection
// bracket as safeguard. d log Q / ds = -kappa_n (1-s^2)^((n-3)/2) / Q_n(s).
double invert_log_tail(int n, double log_q) {
  const double lk = log_kappa(n);
  // Initial guess from the Appendix envelope
  // Q_n(s) ~ (kappa_n/(n-1)) (1-s^2)^((n-1)/2).
  double s;
  if (n == 3) {
    s = std::min(1.0, std::max(0.0, 1.0 - 2.0 * std::exp(log_q)));
  } else {
    const double log_x =
        (log_q - lk + std::log(static_cast<double>(n - 1))) * 2.0 / (n - 1);
    const double x = std::exp(std::min(log_x, 0.0));
    s = std::sqrt(std::max(0.0, 1.0 - x));
  }
  double lo = 0.0, hi = 1.0;  // g(lo) >= 0 >= g(hi), g decreasing
  for (int iter = 0; iter < 200; ++iter) {
    if (!(s > lo && s < hi)) s = 0.5 * (lo + hi);
    const double g = log_q_n(n, s) - log_q;
    if (std::fabs(g) <= kQTol) return s;
    if (g > 0.0) {
      lo = s;
    } else {
      hi = s;
    }
    const double log_deriv =
        lk + 0.5 * (n - 3) * std::log(one_minus_sq(s)) - log_q_n(n, s);
    const double step = g * std::exp(-log_deriv);  // g / |dlogQ/ds|, sign +
    double next = s + step;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (hi - lo < 1e-16) return 0.5 * (lo + hi);
    s = next;
  }
  return s;
}

}  // namespace

double q_n_inverse_log(int n, double log_q) {
  check_dimension(n);
  if (!(log_q <= 0.0)) {
    throw std::invalid_argument("q_n_inverse_log expects log_q <= 0");
  }
  if (std::isinf(log_q)) return 1.0;
  if (n == 2) return std::cos(M_PI * std::exp(log_q));
  return invert_log_tail(n, log_q);
}

double q_n_inverse(int n, double q) {
  check_dimension(n);
  if (!(q >= 0.0 && q <= 1.0)) {
    throw std::invalid_argument("q_n_inverse expects q in [0, 1]");
  }
  if (q == 0.0) return 1.0;
  if (q == 1.0) return -1.0;
  if (n == 2) return std::cos(M_PI * q);
  if (q <= 0.5) return invert_log_tail(n, std::log(q));
  return -invert_log_tail(n, std::log1p(-q));
}

SphereCapLaw::SphereCapLaw(int n, double log_m, LogTag)
    : n_(n), log_m_(log_m), m_(std::exp(log_m)) {
  check_dimension(n);
  if (!(log_m >= 0.0)) {
    throw std::invalid_argument("codebook size must be >= 1");
  }
}

SphereCapLaw::SphereCapLaw(int n, std::uint64_t m)
    : SphereCapLaw(n, m == 0 ? -1.0 : std::log(static_cast<double>(m)),
                   LogTag{}) {
  m_ = static_cast<double>(m);
}

SphereCapLaw SphereCapLaw::from_log_size(int n, double log_m) {
  return SphereCapLaw(n, log_m, LogTag{});
}

SphereCapLaw SphereCapLaw::from_rate(int n, double rate) {
  if (!(rate > 0.0)) throw std::invalid_argument("rate must be positive");
  const double bits = n * rate;
  if (bits <= 62.0) {
    const auto m = static_cast<std::uint64_t>(std::floor(std::exp2(bits)));
    return SphereCapLaw(n, m);
  }
  return SphereCapLaw(n, bits * M_LN2, LogTag{});
}

double SphereCapLaw::m() const { return m_; }

double SphereCapLaw::log_cdf(double s) const {
  check_cosine(s);
  if (s >= 1.0) return 0.0;
  // log (1-Q)^M = M log1p(-Q); for Q below double range use log Q directly.
  const double q = q_n(n_, s);
  double log_neg;  // log(-log(1 - Q))
  if (q > 1e-300) {
    if (q >= 1.0) return -std::numeric_limits<double>::infinity();
    log_neg = std::log(-std::log1p(-q));
  } else {
    log_neg = log_q_n(n_, s);  // only reachable for s >= 0 where Q is tiny
  }
  return -std::exp(log_m_ + log_neg);
}

double SphereCapLaw::cdf(double s) const { return std::exp(log_cdf(s)); }

double sample_max_cosine(const SphereCapLaw& law, double u) {
  if (!(u > 0.0 && u < 1.0)) {
    throw std::invalid_argument("sample_max_cosine expects u in (0, 1)");
  }
  // Solve (1 - Q)^M = u:  Q = -expm1(log(u) / M), all in log space.
  const double log_l = std::log(-std::log(u)) - law.log_m();
  if (log_l < std::log(1e-10)) {
    // -expm1(-e^L) = e^L to relative accuracy e^L; invert on log Q = L.
    return q_n_inverse_log(law.n(), log_l);
  }
  const double q_target = -std::expm1(-std::exp(log_l));
  return q_n_inverse(law.n(), q_target);
}

double tail_bound_lower(const SphereCapLaw& law, double s) {
  if (!(s >= 0.0 && s <= 1.0)) {
    throw std::invalid_argument("tail bound expects s in [0, 1]");
  }
  const int n = law.n();
  const double log_inner = law.log_m() + log_kappa(n) -
                           std::log(static_cast<double>(n - 1)) +
                           0.5 * (n - 1) * std::log(one_minus_sq(s));
  return std::exp(-std::exp(log_inner));
}

double tail_bound_upper(const SphereCapLaw& law, double s) {
  if (law.n() < 3) {
    throw std::invalid_argument("upper tail bound stated for n >= 3");
  }
  if (!(s >= 0.0 && s <= 1.0)) {
    throw std::invalid_argument("tail bound expects s in [0, 1]");
  }
  const int n = law.n();
  const double log_bound =
      law.log_m() + log_kappa(n) + 0.5 * (n - 1) * std::log(one_minus_sq(s));
  return log_bound >= 0.0 ? 1.0 : std::exp(log_bound);
}

}  // namespace sphercomp::specfun
