#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sphercomp/prior.hpp"

namespace sphercomp {

/// Memoryless joint source (U, X): a scalar prior for U and a channel from
/// U to X, either AWGN at level eps or an explicit discrete kernel over an
/// x alphabet.
class JointScalarSource {
 public:
  static JointScalarSource awgn(ScalarPrior u_prior, double eps);
  static JointScalarSource discrete_kernel(ScalarPrior u_prior,
                                           std::vector<double> x_values,
                                           Eigen::MatrixXd p_x_given_u);

  const ScalarPrior& u_prior() const { return u_prior_; }
  bool is_awgn() const { return is_awgn_; }
  double eps() const;

  double cross_moment() const { return cross_moment_; }      // E[U X]
  double x_second_moment() const { return x_second_moment_; }  // E[X^2]

  double cond_mean_u(double x) const;    // E[U | X = x]
  double cond_second_u(double x) const;  // E[U^2 | X = x]

  /// Probability weights of X restricted to the grid (normalized).
  std::vector<double> x_probabilities(const std::vector<double>& x_grid) const;
  /// Equispaced grid spanning +/- spread_sds standard deviations of X.
  std::vector<double> default_x_grid(int points = 1201,
                                     double spread_sds = 8.0) const;

  const std::vector<double>& kernel_x_values() const { return x_values_; }

 private:
  JointScalarSource(ScalarPrior u_prior);
  ScalarPrior u_prior_;
  bool is_awgn_ = true;
  double eps_ = 0.0;
  std::vector<double> x_values_;   // discrete kernel alphabet
  Eigen::MatrixXd p_x_given_u_;    // rows: prior atoms, cols: x alphabet
  double cross_moment_ = 0.0;
  double x_second_moment_ = 0.0;
};

/// Shannon distortion-rate function of a variance-var Gaussian source.
double gaussian_drf_direct(double var, double rate);

/// Gaussian indirect DRF: E[U^2] - (E[UX]^2 / E[X^2]) (1 - 2^(-2R)).
double gaussian_idrf(const JointScalarSource& source, double rate);

/// Linear decoding coefficient alpha_R = (1 - 2^(-2R)) E[UX] / E[X^2].
double alpha_r(const JointScalarSource& source, double rate);

/// AWGN-equivalent noise level sigma_R^2 = E[X^2] / (2^(2R) - 1).
double awgn_equivalent_variance(const JointScalarSource& source, double rate);

struct RateDistortionCurve {
  struct Point {
    double rate;
    double distortion;
  };
  std::vector<Point> points;
  std::string method;

  /// Distortion must be nonincreasing in rate (after sorting by rate).
  void validate(double tol = 1e-9) const;
};

/// M(sigma_R^2) curve: scalar MMSE at the combined noise eps^2 + sigma_R^2.
/// Requires the AWGN channel.
RateDistortionCurve mmse_equivalent_curve(const JointScalarSource& source,
                                          const std::vector<double>& rates);

struct BaResult {
  double rate_bits;
  double distortion;
  int iterations;
  double final_gap;
  std::vector<double> lagrangian_trace;
};

/// Fixed-slope Blahut-Arimoto for the memoryless indirect distortion-rate
/// function, on the reduced distortion d(x, xhat) = E[U^2|X=x]
/// - 2 xhat E[U|X=x] + xhat^2. The slope is the Lagrange multiplier on
/// distortion (nats); larger slopes trace out larger rates. Stops when the
/// duality gap (an upper bound on the remaining Lagrangian decrease, hence
/// on slope times the distortion suboptimality at the achieved rate) falls
/// below tol.
BaResult blahut_arimoto_indirect(const JointScalarSource& source,
                                 const std::vector<double>& x_grid,
                                 const std::vector<double>& xhat_grid,
                                 double slope, double tol = 2.5e-4,
                                 int max_iter = 20000);

/// Reproduction grid spanning the posterior-mean range over the x grid.
std::vector<double> default_xhat_grid(const JointScalarSource& source,
                                      const std::vector<double>& x_grid,
                                      int points = 201);

/// Bisection on the slope until the achieved rate matches target_rate_bits.
BaResult blahut_arimoto_at_rate(const JointScalarSource& source,
                                double target_rate_bits,
                                double rate_tol_bits = 2e-3);

RateDistortionCurve blahut_arimoto_curve(const JointScalarSource& source,
                                         const std::vector<double>& rates);

}  // namespace sphercomp
