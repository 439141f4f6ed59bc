#include "sphercomp/prior.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "sphercomp/quadrature.hpp"

namespace sphercomp {

ScalarPrior::ScalarPrior(Kind kind, std::vector<double> support,
                         std::vector<double> weights)
    : kind_(kind), support_(std::move(support)), weights_(std::move(weights)) {
  if (support_.empty() || support_.size() != weights_.size()) {
    throw std::invalid_argument("prior needs matching nonempty support/weights");
  }
  double total = 0.0;
  for (double w : weights_) {
    if (!(w >= 0.0)) throw std::invalid_argument("prior weights must be >= 0");
    total += w;
  }
  if (!(total > 0.0)) throw std::invalid_argument("prior weights sum to zero");
  cdf_.reserve(weights_.size());
  double acc = 0.0;
  for (auto& w : weights_) {
    w /= total;
    acc += w;
    cdf_.push_back(acc);
  }
  cdf_.back() = 1.0;
  for (std::size_t i = 0; i < support_.size(); ++i) {
    mean_ += weights_[i] * support_[i];
    second_moment_ += weights_[i] * support_[i] * support_[i];
    support_radius_ = std::max(support_radius_, std::fabs(support_[i]));
  }
}

ScalarPrior ScalarPrior::atoms(std::vector<double> values,
                               std::vector<double> probabilities) {
  return ScalarPrior(Kind::kAtoms, std::move(values), std::move(probabilities));
}

ScalarPrior ScalarPrior::gridded(const std::vector<double>& abscissae,
                                 const std::vector<double>& density) {
  if (abscissae.size() < 2 || abscissae.size() != density.size()) {
    throw std::invalid_argument("gridded prior needs >= 2 matching points");
  }
  const std::size_t m = abscissae.size();
  std::vector<double> weights(m, 0.0);
  for (std::size_t i = 0; i + 1 < m; ++i) {
    const double dx = abscissae[i + 1] - abscissae[i];
    if (!(dx > 0.0)) {
      throw std::invalid_argument("grid abscissae must be increasing");
    }
    weights[i] += 0.5 * dx * density[i];
    weights[i + 1] += 0.5 * dx * density[i + 1];
  }
  return ScalarPrior(Kind::kGrid, abscissae, std::move(weights));
}

ScalarPrior ScalarPrior::rademacher(double magnitude) {
  return atoms({-magnitude, magnitude}, {0.5, 0.5});
}

ScalarPrior ScalarPrior::gaussian(double variance, int points,
                                  double half_width_sds) {
  if (!(variance > 0.0)) throw std::invalid_argument("variance must be > 0");
  const double sd = std::sqrt(variance);
  std::vector<double> x(points), density(points);
  for (int i = 0; i < points; ++i) {
    const double t = -half_width_sds + 2.0 * half_width_sds * i / (points - 1);
    x[i] = sd * t;
    density[i] = std::exp(-0.5 * t * t);
  }
  return gridded(x, density);
}

ScalarPrior ScalarPrior::bernoulli_gaussian(double sparsity,
                                            double spike_variance,
                                            int hermite_nodes) {
  if (!(sparsity >= 0.0 && sparsity <= 1.0)) {
    throw std::invalid_argument("sparsity must lie in [0, 1]");
  }
  const GaussHermite& gh = gauss_hermite(hermite_nodes);
  const double sd = std::sqrt(spike_variance);
  std::vector<double> values{0.0};
  std::vector<double> probs{1.0 - sparsity};
  const double inv_sqrt_pi = 1.0 / std::sqrt(M_PI);
  for (int j = 0; j < hermite_nodes; ++j) {
    values.push_back(sd * M_SQRT2 * gh.nodes[j]);
    probs.push_back(sparsity * gh.weights[j] * inv_sqrt_pi);
  }
  return atoms(std::move(values), std::move(probs));
}

double ScalarPrior::sample(RngStream& rng) const {
  const double u = rng.uniform01();
  const auto it = std::lower_bound(cdf_.begin(), cdf_.end(), u);
  const std::size_t idx = std::min<std::size_t>(it - cdf_.begin(),
                                                support_.size() - 1);
  return support_[idx];
}

}  // namespace sphercomp
