#pragma once

#include <Eigen/Dense>

#include "sphercomp/prior.hpp"

namespace sphercomp {

/// lambda* = kappa^2 / (kappa^2 + eps^2 + sigma^2), the minimax-optimal
/// linear shrinkage over the ball of radius kappa sqrt(n).
double optimal_linear_coefficient(double kappa2, double eps2, double sigma2);

double soft_threshold(double z, double lambda);
Eigen::VectorXd soft_threshold(const Eigen::VectorXd& z, double lambda);

/// Exact risk of soft thresholding at threshold lambda on theta + tau W:
/// E[(eta_lambda(theta + tau W) - theta)^2], W ~ N(0,1).
double soft_threshold_risk(double lambda, double tau, double theta);

struct Beta0Result {
  double value;
  double lambda;  // minimizing threshold in noise units
};

/// Univariate minimax risk of soft thresholding at sparsity fraction nu:
/// inf over lambda >= 0 of
///   (1-nu) [2 (1+lambda^2) Phi(-lambda) - 2 lambda phi(lambda)]
///   + nu (1+lambda^2).
Beta0Result beta0_minimax(double nu);
double beta0(double nu);

struct PosteriorMoments {
  double mean;
  double second;  // E[theta^2 | z]
  double variance() const { return second - mean * mean; }
};

/// Posterior moments of theta given theta + sigma W = z, W ~ N(0,1);
/// exact sums over atoms, weighted quadrature over grids, stabilized by
/// subtracting the max log-likelihood.
PosteriorMoments posterior_moments(const ScalarPrior& prior, double sigma,
                                   double z);
double posterior_mean_scalar(const ScalarPrior& prior, double sigma, double z);

/// d/dz E[theta | z] = Var(theta | z) / sigma^2.
double posterior_mean_derivative(const ScalarPrior& prior, double sigma,
                                 double z);

/// Scalar minimum MSE E[(theta - E[theta | theta + sigma W])^2] by
/// Gauss-Hermite quadrature over W composed with the prior sum.
double scalar_mmse(const ScalarPrior& prior, double sigma,
                   int hermite_order = 201);

}  // namespace sphercomp
