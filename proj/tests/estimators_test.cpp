#include "sphercomp/estimators.hpp"

#include <cmath>

#include <doctest.h>

#include "sphercomp/prior.hpp"
#include "sphercomp/rng.hpp"
#include "sphercomp/sphere_code.hpp"
#include "test_util.hpp"

using namespace sphercomp;

TEST_CASE("optimal linear coefficient") {
  CHECK(optimal_linear_coefficient(1.0, 1.0 / 3.0, 0.0) ==
        doctest::Approx(0.75).epsilon(1e-15));
  CHECK(optimal_linear_coefficient(2.0, 0.0, 0.0) == doctest::Approx(1.0));
  // worst-case linear MSE at kappa^2 = 1, eps^2 = 0, sigma^2 = 1/3
  const double l = optimal_linear_coefficient(1.0, 0.0, 1.0 / 3.0);
  CHECK(1.0 * (0.0 + 1.0 / 3.0) / (1.0 + 1.0 / 3.0) ==
        doctest::Approx(0.25).epsilon(1e-15));
  CHECK(l == doctest::Approx(0.75).epsilon(1e-15));
  CHECK_THROWS_AS(optimal_linear_coefficient(0.0, 0.0, 0.0),
                  std::invalid_argument);
}

TEST_CASE("soft threshold cases and contraction property") {
  CHECK(soft_threshold(0.0, 1.3) == 0.0);
  CHECK(soft_threshold(2.3, 1.3) == doctest::Approx(1.0));
  CHECK(soft_threshold(-2.6, 1.3) == doctest::Approx(-1.3));
  RngStream rng(11);
  for (int i = 0; i < 10000; ++i) {
    const double a = 5.0 * rng.gaussian();
    const double b = 5.0 * rng.gaussian();
    const double lambda = std::fabs(rng.gaussian());
    CHECK(std::fabs(soft_threshold(a, lambda) - soft_threshold(b, lambda)) <=
          std::fabs(a - b) + 1e-15);
  }
}

TEST_CASE("soft threshold risk closed form against quadrature") {
  for (double lambda : {0.0, 0.7, 2.0}) {
    for (double tau : {0.5, 1.0, 2.5}) {
      for (double theta : {0.0, 0.3, -1.7, 4.0}) {
        const double closed = soft_threshold_risk(lambda, tau, theta);
        const double numeric = testutil::adaptive_simpson(
            [&](double w) {
              const double e =
                  soft_threshold(theta + tau * w, lambda) - theta;
              return e * e * testutil::normal_pdf(w);
            },
            -12.0, 12.0, 1e-12);
        CHECK(closed == doctest::Approx(numeric).epsilon(1e-8));
      }
    }
  }
}

TEST_CASE("beta0 endpoints, oracle value and monotonicity") {
  CHECK(beta0(1.0) == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(beta0(0.0) == 0.0);

  // dense-grid brute force on lambda in [0, 12]
  const double nu = 0.05;
  double best = 1e300;
  for (int i = 0; i <= 100000; ++i) {
    const double lambda = 12.0 * i / 100000.0;
    const double phi_l = testutil::normal_pdf(lambda);
    const double cdf_l = testutil::normal_cdf(-lambda);
    const double v = (1.0 - nu) * (2.0 * (1.0 + lambda * lambda) * cdf_l -
                                   2.0 * lambda * phi_l) +
                     nu * (1.0 + lambda * lambda);
    best = std::min(best, v);
  }
  CHECK(beta0(nu) == doctest::Approx(best).epsilon(1e-6));

  double prev = -1.0;
  for (int i = 0; i <= 100; ++i) {
    const double v = beta0(i / 100.0);
    CHECK(v >= prev - 1e-12);
    prev = v;
  }
  CHECK_THROWS_AS(beta0(1.5), std::invalid_argument);
}

TEST_CASE("posterior mean: Gaussian conjugate and Rademacher tanh") {
  const double kappa2 = 1.7;
  const auto gauss = ScalarPrior::gaussian(kappa2);
  for (double sigma : {0.4, 1.0, 2.0}) {
    for (double z : {-3.0, -0.5, 0.0, 1.2, 4.0}) {
      const double expected = kappa2 * z / (kappa2 + sigma * sigma);
      CHECK(posterior_mean_scalar(gauss, sigma, z) ==
            doctest::Approx(expected).epsilon(1e-10));
    }
  }
  const auto rad = ScalarPrior::rademacher(1.0);
  for (double sigma : {0.3, 1.0}) {
    for (double z : {-2.0, -0.1, 0.7, 3.0}) {
      CHECK(posterior_mean_scalar(rad, sigma, z) ==
            doctest::Approx(std::tanh(z / (sigma * sigma))).epsilon(1e-12));
    }
  }
}

TEST_CASE("posterior mean: three-atom hand computation") {
  const auto prior = ScalarPrior::atoms({-1.0, 0.0, 1.0}, {0.25, 0.5, 0.25});
  const double sigma = 1.0, z = 0.7;
  // direct Bayes rule
  const double wm = 0.25 * std::exp(-0.5 * (z + 1.0) * (z + 1.0));
  const double w0 = 0.50 * std::exp(-0.5 * z * z);
  const double wp = 0.25 * std::exp(-0.5 * (z - 1.0) * (z - 1.0));
  const double expected = (-wm + wp) / (wm + w0 + wp);
  CHECK(posterior_mean_scalar(prior, sigma, z) ==
        doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("scalar mmse: conjugate closed form, large-noise limit, MC oracle") {
  const double kappa2 = 1.3;
  const auto gauss = ScalarPrior::gaussian(kappa2);
  for (double sigma : {0.5, 1.0, 3.0}) {
    const double expected =
        kappa2 * sigma * sigma / (kappa2 + sigma * sigma);
    CHECK(scalar_mmse(gauss, sigma) == doctest::Approx(expected).epsilon(1e-8));
  }
  CHECK(scalar_mmse(gauss, 0.0) == 0.0);
  CHECK(scalar_mmse(gauss, 1000.0) ==
        doctest::Approx(kappa2).epsilon(1e-3));

  // Rademacher at sigma^2 = 1/3 against a 10^7-sample Monte Carlo oracle.
  const auto rad = ScalarPrior::rademacher(1.0);
  const double sigma = std::sqrt(1.0 / 3.0);
  RngStream rng(2718);
  const int draws = 10000000;
  double acc = 0.0, acc_sq = 0.0;
  for (int i = 0; i < draws; ++i) {
    const double u = rng.uniform01() < 0.5 ? -1.0 : 1.0;
    const double z = u + sigma * rng.gaussian();
    const double e = std::tanh(z / (sigma * sigma)) - u;
    acc += e * e;
    acc_sq += e * e * e * e;
  }
  const double mc = acc / draws;
  const double se =
      std::sqrt((acc_sq / draws - mc * mc) / draws);
  CHECK(std::fabs(scalar_mmse(rad, sigma) - mc) <= 3.0 * se);
}

TEST_CASE("posterior mean derivative: closed forms and finite differences") {
  const double kappa2 = 0.9;
  const auto gauss = ScalarPrior::gaussian(kappa2);
  for (double z : {-1.0, 0.0, 2.0}) {
    CHECK(posterior_mean_derivative(gauss, 0.8, z) ==
          doctest::Approx(kappa2 / (kappa2 + 0.64)).epsilon(1e-9));
  }
  const auto rad = ScalarPrior::rademacher(1.0);
  for (double z : {-0.5, 0.3, 1.5}) {
    const double s2 = 0.49;
    const double t = std::tanh(z / s2);
    CHECK(posterior_mean_derivative(rad, 0.7, z) ==
          doctest::Approx((1.0 - t * t) / s2).epsilon(1e-10));
  }

  // finite-difference oracle across priors
  const auto bg = ScalarPrior::bernoulli_gaussian(0.2, 1.5);
  RngStream rng(37);
  for (const ScalarPrior* prior : {&gauss, &rad, &bg}) {
    for (int i = 0; i < 20; ++i) {
      const double sigma = 0.3 + rng.uniform01() * 2.0;
      const double z = 4.0 * rng.gaussian();
      const double h = 1e-5;
      const double fd = (posterior_mean_scalar(*prior, sigma, z + h) -
                         posterior_mean_scalar(*prior, sigma, z - h)) /
                        (2.0 * h);
      CHECK(std::fabs(posterior_mean_derivative(*prior, sigma, z) - fd) <=
            1e-6);
    }
  }
}

TEST_CASE("Bayes slope stays within the posterior-variance certificate") {
  const auto bg = ScalarPrior::bernoulli_gaussian(0.1, 1.0);
  const double radius = bg.support_radius();
  RngStream rng(43);
  for (int i = 0; i < 2000; ++i) {
    const double sigma = 0.2 + 2.0 * rng.uniform01();
    const double z = 6.0 * rng.gaussian();
    const double slope = posterior_mean_derivative(bg, sigma, z);
    CHECK(slope >= -1e-12);
    CHECK(slope <= radius * radius / (sigma * sigma) + 1e-9);
  }
}

TEST_CASE("risk transfer through the coupling is bounded by L |Y-Z|") {
  // |rootMSE f(Y) - rootMSE f(Z)| <= L sqrt(sum |Y-Z|^2) on the same
  // coupled sample set; exact by the triangle inequality.
  const int n = 64;
  const double gamma = std::sqrt(2.0 * n);
  const auto cfg = SphericalCodeConfig::matched(n, 1.0, gamma);
  RngStream rng(47);
  const auto rad = ScalarPrior::rademacher(1.0);
  const double sigma_b = std::sqrt(cfg.sigma2() + 1.0);
  const double bayes_lip = 1.0 / (sigma_b * sigma_b);

  struct Estimator {
    const char* name;
    double lip;
    std::function<double(double)> f;
  };
  const Estimator estimators[] = {
      {"linear", 0.6, [](double v) { return 0.6 * v; }},
      {"soft", 1.0, [](double v) { return soft_threshold(v, 0.8); }},
      {"bayes", bayes_lip,
       [&](double v) { return posterior_mean_scalar(rad, sigma_b, v); }},
  };

  const int trials = 200;
  for (const auto& est : estimators) {
    double sum_y = 0.0, sum_z = 0.0, sum_diff = 0.0;
    RngStream sample_rng(101);
    for (int t = 0; t < trials; ++t) {
      Eigen::VectorXd theta(n);
      for (int i = 0; i < n; ++i) {
        theta[i] = sample_rng.uniform01() < 0.5 ? -1.0 : 1.0;
      }
      const Eigen::VectorXd x = theta + sample_rng.gaussian_vector(n);
      const CoupledPair pair = sample_coupled(cfg, x, sample_rng);
      for (int i = 0; i < n; ++i) {
        const double ey = est.f(pair.y[i]) - theta[i];
        const double ez = est.f(pair.z[i]) - theta[i];
        sum_y += ey * ey;
        sum_z += ez * ez;
      }
      sum_diff += (pair.y - pair.z).squaredNorm();
    }
    const double gap = std::fabs(std::sqrt(sum_y) - std::sqrt(sum_z));
    CHECK(gap <= est.lip * std::sqrt(sum_diff) * (1.0 + 1e-12));
  }
}

TEST_CASE("sparse minimax bound at the beta0-optimal threshold") {
  // k-sparse mean vector under unit-noise AWGN at the combined level:
  // empirical MSE <= (eps^2 + sigma^2) beta0(k/n) (1 + 5%).
  const int n = 10000, k = 500;
  const double eps2 = 0.09, sigma2 = (1.0 + eps2) / 3.0;
  const double noise = std::sqrt(eps2 + sigma2);
  const Beta0Result b0 = beta0_minimax(static_cast<double>(k) / n);
  const double lambda = b0.lambda * noise;
  RngStream rng(59);
  const double amplitude = std::sqrt(static_cast<double>(n) / k);
  double acc = 0.0;
  const int trials = 10;
  for (int t = 0; t < trials; ++t) {
    for (int i = 0; i < n; ++i) {
      const double theta = i < k ? amplitude : 0.0;
      const double z = theta + noise * rng.gaussian();
      const double e = soft_threshold(z, lambda) - theta;
      acc += e * e;
    }
  }
  const double mse = acc / (static_cast<double>(n) * trials);
  CHECK(mse <= (eps2 + sigma2) * b0.value * 1.05);
}

TEST_CASE("prior invariants: weights normalized, moments cached") {
  const auto bg = ScalarPrior::bernoulli_gaussian(0.1, 2.0);
  double total = 0.0, second = 0.0;
  for (std::size_t i = 0; i < bg.weights().size(); ++i) {
    total += bg.weights()[i];
    second += bg.weights()[i] * bg.support()[i] * bg.support()[i];
  }
  CHECK(std::fabs(total - 1.0) <= 1e-12);
  CHECK(std::fabs(second - bg.second_moment()) <= 1e-10);
  CHECK(bg.second_moment() == doctest::Approx(0.2).epsilon(1e-6));

  CHECK_THROWS_AS(ScalarPrior::atoms({1.0}, {-0.5}), std::invalid_argument);
  CHECK_THROWS_AS(ScalarPrior::atoms({1.0, 2.0}, {0.5}), std::invalid_argument);

  // sampling matches the weights (two-atom case)
  const auto rad = ScalarPrior::rademacher(2.0);
  RngStream rng(67);
  int plus = 0;
  const int draws = 100000;
  for (int i = 0; i < draws; ++i) {
    if (rad.sample(rng) > 0) ++plus;
  }
  CHECK(std::fabs(plus / static_cast<double>(draws) - 0.5) < 0.005);
}
