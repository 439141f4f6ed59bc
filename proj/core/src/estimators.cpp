#include "sphercomp/estimators.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "sphercomp/quadrature.hpp"

namespace sphercomp {

namespace {

double normal_cdf(double x) { return 0.5 * std::erfc(-x * M_SQRT1_2); }
double normal_pdf(double x) {
  return std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI);
}

// Risk of soft thresholding in unit noise at signal value mu.
double soft_risk_unit(double lambda, double mu) {
  const double inner =
      normal_cdf(lambda - mu) - normal_cdf(-lambda - mu);  // P(|Z| <= lambda)
  const double outer =
      normal_cdf(mu - lambda) + normal_cdf(-mu - lambda);  // P(|Z| > lambda)
  return mu * mu * inner + (1.0 + lambda * lambda) * outer -
         (lambda + mu) * normal_pdf(lambda - mu) -
         (lambda - mu) * normal_pdf(lambda + mu);
}

double beta0_objective(double lambda, double nu) {
  return (1.0 - nu) * soft_risk_unit(lambda, 0.0) +
         nu * (1.0 + lambda * lambda);
}

}  // namespace

double optimal_linear_coefficient(double kappa2, double eps2, double sigma2) {
  if (!(kappa2 >= 0.0 && eps2 >= 0.0 && sigma2 >= 0.0)) {
    throw std::invalid_argument("second moments must be nonnegative");
  }
  const double denom = kappa2 + eps2 + sigma2;
  if (!(denom > 0.0)) {
    throw std::invalid_argument("all-zero moments leave lambda* undefined");
  }
  return kappa2 / denom;
}

double soft_threshold(double z, double lambda) {
  if (!(lambda >= 0.0)) throw std::invalid_argument("threshold must be >= 0");
  if (z > lambda) return z - lambda;
  if (z < -lambda) return z + lambda;
  return 0.0;
}

Eigen::VectorXd soft_threshold(const Eigen::VectorXd& z, double lambda) {
  Eigen::VectorXd out(z.size());
  for (int i = 0; i < z.size(); ++i) out[i] = soft_threshold(z[i], lambda);
  return out;
}

double soft_threshold_risk(double lambda, double tau, double theta) {
  if (!(lambda >= 0.0)) throw std::invalid_argument("threshold must be >= 0");
  if (!(tau > 0.0)) {
    // No noise: estimator is deterministic.
    const double e = soft_threshold(theta, lambda) - theta;
    return e * e;
  }
  const double r = soft_risk_unit(lambda / tau, theta / tau);
  return tau * tau * r;
}

Beta0Result beta0_minimax(double nu) {
  if (!(nu >= 0.0 && nu <= 1.0)) {
    throw std::invalid_argument("sparsity fraction must lie in [0, 1]");
  }
  constexpr double kHi = 10.0;
  if (nu == 0.0) return {0.0, kHi};  // infimum attained in the lambda limit

  // Coarse scan to bracket the minimum, then golden-section refinement.
  constexpr int kScan = 201;
  int best = 0;
  double best_val = beta0_objective(0.0, nu);
  for (int i = 1; i < kScan; ++i) {
    const double lambda = kHi * i / (kScan - 1);
    const double v = beta0_objective(lambda, nu);
    if (v < best_val) {
      best_val = v;
      best = i;
    }
  }
  double lo = kHi * std::max(0, best - 1) / (kScan - 1);
  double hi = kHi * std::min(kScan - 1, best + 1) / (kScan - 1);
  const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
  double x1 = hi - gr * (hi - lo);
  double x2 = lo + gr * (hi - lo);
  double f1 = beta0_objective(x1, nu);
  double f2 = beta0_objective(x2, nu);
  while (hi - lo > 1e-8) {
    if (f1 < f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - gr * (hi - lo);
      f1 = beta0_objective(x1, nu);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + gr * (hi - lo);
      f2 = beta0_objective(x2, nu);
    }
  }
  double lambda = 0.5 * (lo + hi);
  double value = beta0_objective(lambda, nu);
  for (double endpoint : {0.0, kHi}) {
    const double v = beta0_objective(endpoint, nu);
    if (v < value) {
      value = v;
      lambda = endpoint;
    }
  }
  return {value, lambda};
}

double beta0(double nu) { return beta0_minimax(nu).value; }

PosteriorMoments posterior_moments(const ScalarPrior& prior, double sigma,
                                   double z) {
  if (!(sigma > 0.0)) throw std::invalid_argument("sigma must be positive");
  const auto& x = prior.support();
  const auto& w = prior.weights();
  const double inv_two_var = 0.5 / (sigma * sigma);

  double max_ll = -std::numeric_limits<double>::infinity();
  std::vector<double> ll(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (w[i] <= 0.0) {
      ll[i] = -std::numeric_limits<double>::infinity();
      continue;
    }
    const double d = z - x[i];
    ll[i] = std::log(w[i]) - d * d * inv_two_var;
    max_ll = std::max(max_ll, ll[i]);
  }
  double norm = 0.0, m1 = 0.0, m2 = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (std::isinf(ll[i])) continue;
    const double p = std::exp(ll[i] - max_ll);
    norm += p;
    m1 += p * x[i];
    m2 += p * x[i] * x[i];
  }
  return {m1 / norm, m2 / norm};
}

double posterior_mean_scalar(const ScalarPrior& prior, double sigma, double z) {
  return posterior_moments(prior, sigma, z).mean;
}

double posterior_mean_derivative(const ScalarPrior& prior, double sigma,
                                 double z) {
  return posterior_moments(prior, sigma, z).variance() / (sigma * sigma);
}

double scalar_mmse(const ScalarPrior& prior, double sigma, int hermite_order) {
  if (!(sigma >= 0.0)) throw std::invalid_argument("sigma must be >= 0");
  if (sigma == 0.0) return 0.0;
  const GaussHermite& gh = gauss_hermite(hermite_order);
  const auto& x = prior.support();
  const auto& w = prior.weights();
  const double inv_sqrt_pi = 1.0 / std::sqrt(M_PI);
  double mse = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (w[i] <= 0.0) continue;
    double inner = 0.0;
    for (int j = 0; j < hermite_order; ++j) {
      const double z = x[i] + sigma * M_SQRT2 * gh.nodes[j];
      const double e = posterior_mean_scalar(prior, sigma, z) - x[i];
      inner += gh.weights[j] * e * e;
    }
    mse += w[i] * inner * inv_sqrt_pi;
  }
  return mse;
}

}  // namespace sphercomp
