#pragma once

#include <vector>

#include "sphercomp/rng.hpp"

namespace sphercomp {

/// One-dimensional source/parameter distribution: either discrete atoms or
/// a gridded density with trapezoid weights. Drives the Bayes estimators,
/// the MMSE functions, state evolution and Blahut-Arimoto.
class ScalarPrior {
 public:
  enum class Kind { kAtoms, kGrid };

  static ScalarPrior atoms(std::vector<double> values,
                           std::vector<double> probabilities);
  static ScalarPrior gridded(const std::vector<double>& abscissae,
                             const std::vector<double>& density);

  static ScalarPrior rademacher(double magnitude = 1.0);
  /// Zero-mean Gaussian on a dense grid (trapezoid weights).
  static ScalarPrior gaussian(double variance, int points = 2001,
                              double half_width_sds = 10.0);
  /// (1 - sparsity) point mass at 0 plus sparsity times a zero-mean
  /// Gaussian spike, the spike atomized on Gauss-Hermite nodes.
  static ScalarPrior bernoulli_gaussian(double sparsity, double spike_variance,
                                        int hermite_nodes = 129);

  Kind kind() const { return kind_; }
  const std::vector<double>& support() const { return support_; }
  const std::vector<double>& weights() const { return weights_; }

  double mean() const { return mean_; }
  double second_moment() const { return second_moment_; }
  double variance() const { return second_moment_ - mean_ * mean_; }
  double support_radius() const { return support_radius_; }

  /// Inverse-CDF draw over the weighted support.
  double sample(RngStream& rng) const;

 private:
  ScalarPrior(Kind kind, std::vector<double> support,
              std::vector<double> weights);

  Kind kind_;
  std::vector<double> support_;
  std::vector<double> weights_;
  std::vector<double> cdf_;
  double mean_ = 0.0;
  double second_moment_ = 0.0;
  double support_radius_ = 0.0;
};

}  // namespace sphercomp
