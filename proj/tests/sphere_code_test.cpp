#include "sphercomp/sphere_code.hpp"

#include <cmath>
#include <sstream>

#include <boost/math/distributions/chi_squared.hpp>
#include <doctest.h>

#include "test_util.hpp"

using namespace sphercomp;

TEST_CASE("config invariants and matched magnitude") {
  CHECK_THROWS_AS(SphericalCodeConfig(1, 1.0, 1.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(SphericalCodeConfig(4, 0.0, 1.0, 1.0), std::invalid_argument);
  const auto cfg = SphericalCodeConfig::matched(8, 1.0, 2.0);
  CHECK(cfg.magnitude == doctest::Approx(2.0 / std::sqrt(0.75)).epsilon(1e-15));
  CHECK(cfg.law().m() == doctest::Approx(256.0));
  CHECK(effective_noise_variance(4.0, 16, 1.0) ==
        doctest::Approx(1.0 / 3.0).epsilon(1e-14));
  // location-model form: gamma^2 = n (kappa^2 + eps^2)
  const double kappa2 = 1.0, eps2 = 0.25;
  CHECK(effective_noise_variance(std::sqrt(64 * (kappa2 + eps2)), 64, 1.5) ==
        doctest::Approx((kappa2 + eps2) / (std::pow(2.0, 3.0) - 1.0)));
  double prev = 1e300;
  for (double rate : {0.25, 0.5, 1.0, 2.0, 6.0, 20.0}) {
    const double s2 = effective_noise_variance(3.0, 10, rate);
    CHECK(s2 < prev);
    prev = s2;
  }
}

TEST_CASE("draw_codebook sizes, norms and the size guard") {
  const auto small = draw_codebook(SphericalCodeConfig::matched(2, 1.0, 1.0), 7);
  CHECK(small.size() == 4);

  const auto cb = draw_codebook(SphericalCodeConfig::matched(8, 1.0, 1.0), 11);
  CHECK(cb.size() == 256);
  for (int j = 0; j < cb.size(); ++j) {
    CHECK(std::fabs(cb.codewords().col(j).norm() - 1.0) <= 1e-12);
  }

  CHECK_THROWS_AS(
      draw_codebook(SphericalCodeConfig::matched(64, 1.0, 1.0), 1),
      std::invalid_argument);
}

TEST_CASE("pairwise cosine similarities average to zero") {
  // n = 10, R = 1.5: M = 32768; the pair mean comes from |sum c_i|^2.
  const auto cb = draw_codebook(SphericalCodeConfig::matched(10, 1.5, 1.0), 3);
  const double m = cb.size();
  CHECK(m == 32768.0);
  const double sum_norm_sq = cb.codewords().rowwise().sum().squaredNorm();
  const double pair_mean = (sum_norm_sq - m) / (m * (m - 1.0));
  CHECK(std::fabs(pair_mean) < 3.0 / std::sqrt(m * (m - 1.0) / 2.0));
}

TEST_CASE("encode returns the aligned codeword and breaks ties low") {
  const auto cfg = SphericalCodeConfig::matched(6, 0.5, 2.5);
  auto cb = draw_codebook(cfg, 21);
  RngStream rng(5);
  // A codebook containing x/|x| itself must win at that index.
  for (int j : {0, 3, cb.size() - 1}) {
    const Eigen::VectorXd x = 3.7 * cb.codewords().col(j);
    const auto enc = encode(cb, x, rng);
    CHECK(enc.index == j);
    CHECK((enc.y - cfg.magnitude * cb.codewords().col(j)).norm() <= 1e-12);
  }
}

TEST_CASE("zero input draws a uniform codeword index") {
  const auto cfg = SphericalCodeConfig::matched(4, 1.0, 1.0);  // M = 16
  const auto cb = draw_codebook(cfg, 13);
  RngStream rng(17);
  const int trials = 10000;
  std::vector<int> counts(cb.size(), 0);
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(4);
  for (int t = 0; t < trials; ++t) {
    counts[encode(cb, zero, rng).index]++;
  }
  double chi2 = 0.0;
  const double expected = static_cast<double>(trials) / cb.size();
  for (int c : counts) chi2 += (c - expected) * (c - expected) / expected;
  const boost::math::chi_squared dist(cb.size() - 1);
  CHECK(chi2 < boost::math::quantile(dist, 0.99));
}

TEST_CASE("brute-force cosines follow the cap law across codebook redraws") {
  const auto cfg = SphericalCodeConfig::matched(8, 1.0, 1.0);
  const auto law = cfg.law();
  Eigen::VectorXd x(8);
  x << 1, -2, 0.5, 3, -1, 0.25, 2, -0.5;
  RngStream rng(31);
  const int redraws = 2000;
  std::vector<double> cosines(redraws);
  for (int r = 0; r < redraws; ++r) {
    const auto cb = draw_codebook(cfg, 1000 + r);
    const auto enc = encode(cb, x, rng);
    cosines[r] = enc.y.dot(x) / (enc.y.norm() * x.norm());
  }
  const double d =
      testutil::ks_statistic(cosines, [&](double s) { return law.cdf(s); });
  CHECK(d < testutil::ks_one_sample_threshold(redraws, 0.01));
}

TEST_CASE("sample_output geometry: norm and orthogonal tangent") {
  const auto cfg = SphericalCodeConfig::matched(24, 1.0, 3.0);
  RngStream rng(77);
  Eigen::VectorXd x = rng.gaussian_vector(24);
  for (int t = 0; t < 200; ++t) {
    const Eigen::VectorXd y = sample_output(cfg, x, rng);
    CHECK(std::fabs(y.norm() - cfg.magnitude) <= 1e-9 * cfg.magnitude);
    const double s = y.dot(x) / (cfg.magnitude * x.norm());
    const Eigen::VectorXd tangent = y - cfg.magnitude * s * x / x.norm();
    CHECK(std::fabs(tangent.dot(x)) <= 1e-9 * x.norm() * cfg.magnitude);
  }
  // zero input: uniform direction scaled to rho
  const Eigen::VectorXd y0 = sample_output(cfg, Eigen::VectorXd::Zero(24), rng);
  CHECK(std::fabs(y0.norm() - cfg.magnitude) <= 1e-9 * cfg.magnitude);
}

TEST_CASE("sampler cosine distribution matches brute-force encode") {
  const auto cfg = SphericalCodeConfig::matched(8, 1.0, 1.0);
  Eigen::VectorXd x(8);
  x << 2, 1, -1, 0.5, -2, 1.5, 0.25, -0.75;
  RngStream rng(41);
  const int trials = 2000;
  std::vector<double> via_encode(trials), via_sampler(trials);
  for (int t = 0; t < trials; ++t) {
    const auto cb = draw_codebook(cfg, 50000 + t);
    via_encode[t] = encode(cb, x, rng).y.dot(x) / (cfg.magnitude * x.norm());
    const Eigen::VectorXd y = sample_output(cfg, x, rng);
    via_sampler[t] = y.dot(x) / (cfg.magnitude * x.norm());
  }
  const double d = testutil::ks_statistic_two_sample(via_encode, via_sampler);
  CHECK(d < testutil::ks_two_sample_threshold(trials, trials, 0.01));
}

TEST_CASE("awgn_channel moments") {
  RngStream rng(53);
  const Eigen::VectorXd x = rng.gaussian_vector(64);
  CHECK((awgn_channel(x, 0.0, rng) - x).norm() == 0.0);

  const double sigma2 = 0.7;
  const int trials = 10000;
  std::vector<double> sq(trials);
  for (int t = 0; t < trials; ++t) {
    sq[t] = (awgn_channel(x, sigma2, rng) - x).squaredNorm() / 64.0;
  }
  const double mean = testutil::mean_of(sq);
  // chi-square mean with 3-standard-error band
  const double se = sigma2 * std::sqrt(2.0 / (64.0 * trials));
  CHECK(std::fabs(mean - sigma2) <= 3.0 * se);

  // empirical covariance at n = 4 is sigma2 I within 0.01
  const Eigen::VectorXd x4 = rng.gaussian_vector(4);
  Eigen::Matrix4d cov = Eigen::Matrix4d::Zero();
  const int big = 100000;
  for (int t = 0; t < big; ++t) {
    const Eigen::VectorXd noise = awgn_channel(x4, 0.25, rng) - x4;
    cov += noise * noise.transpose();
  }
  cov /= big;
  CHECK((cov - 0.25 * Eigen::Matrix4d::Identity()).cwiseAbs().maxCoeff() <
        0.01);
}

TEST_CASE("coupled pair: exact two-dimensional distance identity") {
  const auto cfg = SphericalCodeConfig::matched(32, 1.0, std::sqrt(32.0));
  RngStream rng(61);
  const Eigen::VectorXd x = 1.3 * rng.unit_sphere_vector(32) * std::sqrt(32.0);
  const double sigma = std::sqrt(cfg.sigma2());
  for (int t = 0; t < 1000; ++t) {
    const CoupledPair pair = sample_coupled(cfg, x, rng);
    const double radial = cfg.magnitude * pair.s - x.norm() - sigma * pair.a;
    const double tangential =
        cfg.magnitude * std::sqrt(1.0 - pair.s * pair.s) - sigma * pair.b;
    const double direct = (pair.y - pair.z).norm();
    CHECK(direct ==
          doctest::Approx(std::hypot(radial, tangential)).epsilon(1e-9));
    CHECK(pair.delta1 >= 0.0);
    CHECK(pair.delta2 >= 0.0);
    CHECK(std::fabs(pair.y.norm() - cfg.magnitude) <= 1e-9 * cfg.magnitude);
    // coupling bound holds exactly by construction
    const double lhs = std::fabs(direct - std::fabs(x.norm() - cfg.gamma));
    const double one_minus = 1.0 - std::exp2(-2.0 * cfg.rate);
    const double rhs =
        cfg.gamma / std::sqrt(32.0) *
        (std::sqrt(32.0) * pair.delta1 / std::sqrt(one_minus) +
         pair.delta2 / std::sqrt(std::exp2(2.0 * cfg.rate) - 1.0));
    CHECK(lhs <= rhs * (1.0 + 1e-12) + 1e-12);
  }
  CHECK_THROWS_AS(sample_coupled(cfg, Eigen::VectorXd::Zero(32), rng),
                  std::invalid_argument);
}

TEST_CASE("coupled marginals: S law and chi component") {
  const int n = 50;
  const auto cfg = SphericalCodeConfig::matched(n, 1.0, std::sqrt(1.0 * n));
  RngStream rng(71);
  const int draws = 10000;
  std::vector<double> s_coupled(draws), s_output(draws), b_sq(draws);
  const Eigen::VectorXd x = std::sqrt(1.0 * n) * rng.unit_sphere_vector(n);
  for (int t = 0; t < draws; ++t) {
    const CoupledScalars cs = sample_coupled_scalars(cfg, x.norm(), rng);
    s_coupled[t] = cs.s;
    b_sq[t] = cs.b * cs.b;
    const Eigen::VectorXd y = sample_output(cfg, x, rng);
    s_output[t] = y.dot(x) / (cfg.magnitude * x.norm());
  }
  const double d = testutil::ks_statistic_two_sample(s_coupled, s_output);
  CHECK(d < testutil::ks_two_sample_threshold(draws, draws, 0.01));

  // B^2 ~ chi^2(n-1): mean n-1 within 3 SE
  const double mean_b2 = testutil::mean_of(b_sq);
  const double se = std::sqrt(2.0 * (n - 1.0) / draws);
  CHECK(std::fabs(mean_b2 - (n - 1.0)) <= 3.0 * se);
}

TEST_CASE("normalized coupling distance is dimension-free") {
  // 0.99-quantiles across n in {128, 512, 2048} stay within x1.5, and the
  // moment growth (E|Y-Z|^p)^(1/p) sqrt(n)/gamma is sub-Gaussian in p.
  RngStream rng(83);
  const int draws = 2000;
  std::vector<double> q99s;
  double fitted_c = 0.0;
  for (int n : {128, 512, 2048}) {
    const double gamma = std::sqrt(1.0 * n);
    const auto cfg = SphericalCodeConfig::matched(n, 1.0, gamma);
    std::vector<double> stat(draws);
    for (int t = 0; t < draws; ++t) {
      const CoupledScalars cs = sample_coupled_scalars(cfg, gamma, rng);
      stat[t] = std::sqrt(1.0 * n) / gamma * cs.distance;
    }
    std::sort(stat.begin(), stat.end());
    q99s.push_back(stat[static_cast<int>(0.99 * draws)]);
    for (double p : {1.0, 2.0, 4.0}) {
      double acc = 0.0;
      for (double v : stat) acc += std::pow(v, p);
      const double moment = std::pow(acc / draws, 1.0 / p) / std::sqrt(p);
      if (fitted_c == 0.0) fitted_c = moment;
      CHECK(moment <= 1.5 * fitted_c);
    }
  }
  const auto [lo, hi] = std::minmax_element(q99s.begin(), q99s.end());
  CHECK(*hi / *lo < 1.5);
}

TEST_CASE("sin component converges to 2^{-R}") {
  RngStream rng(97);
  const auto law = specfun::SphereCapLaw::from_rate(2048, 1.0);
  const int draws = 10000;
  double mean_sin = 0.0;
  for (int t = 0; t < draws; ++t) {
    const double s = specfun::sample_max_cosine(law, rng.uniform01());
    mean_sin += std::sqrt(1.0 - s * s);
  }
  mean_sin /= draws;
  CHECK(std::fabs(mean_sin - 0.5) < 0.01);
}

TEST_CASE("index dump format") {
  std::ostringstream os;
  write_index_dump_line(os, 123456789ULL, 42);
  write_index_dump_line(os, 7, 0);
  CHECK(os.str() == "123456789 42\n7 0\n");
}
