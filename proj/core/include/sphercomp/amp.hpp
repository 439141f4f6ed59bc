#pragma once

#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "sphercomp/estimators.hpp"
#include "sphercomp/prior.hpp"

namespace sphercomp {

/// Per-iteration scalar denoiser family: soft thresholding with the
/// SE-consistent rule lambda_t = alpha * tau_t, or the Bayes posterior
/// mean for a scalar prior. Both are Lipschitz with a declared constant.
class Denoiser {
 public:
  enum class Family { kSoftThreshold, kBayes };

  static Denoiser soft(double alpha);
  static Denoiser bayes(ScalarPrior prior);

  Family family() const { return family_; }
  double alpha() const { return alpha_; }
  const ScalarPrior& prior() const;

  double eval(double v, double tau) const;
  double derivative(double v, double tau) const;
  double lipschitz(double tau) const;

 private:
  Denoiser() = default;
  Family family_ = Family::kSoftThreshold;
  double alpha_ = 0.0;
  std::optional<ScalarPrior> prior_;
};

/// E[(eta(theta0 + tau W) - theta0)^2] for theta0 ~ signal: closed form
/// for soft thresholding, Gauss-Hermite quadrature for Bayes denoisers.
double denoiser_mse(const Denoiser& denoiser, const ScalarPrior& signal,
                    double tau, int hermite_order = 201);

struct AmpConfig {
  int iterations;      // T >= 1
  Denoiser denoiser;
  double delta;        // sampling ratio n/d
  double xi2;          // effective channel noise
  double tau0_sq;      // initial SE variance; < 0 selects xi2 + E[theta0^2]/delta
  std::optional<ScalarPrior> signal_prior;  // SE signal law; defaults to the
                                            // Bayes denoiser's prior

  static AmpConfig bayes(ScalarPrior prior, int iterations, double delta,
                         double xi2);
  static AmpConfig soft(ScalarPrior signal_prior, double alpha, int iterations,
                        double delta, double xi2);

  const ScalarPrior& resolved_signal_prior() const;
  double resolved_tau0_sq(const ScalarPrior& prior) const;
  void validate() const;
};

struct StateEvolutionTrace {
  // tau_sq[t] is the effective noise entering denoiser eta_t;
  // predicted_mse[t] = E[(eta_t(theta0 + tau_t W) - theta0)^2], so that
  // tau_sq[t+1] = xi2 + predicted_mse[t] / delta.
  std::vector<double> tau_sq;
  std::vector<double> predicted_mse;
  double final_mse() const { return predicted_mse.back(); }
};

StateEvolutionTrace state_evolution(const ScalarPrior& prior,
                                    const AmpConfig& config);

struct AmpResult {
  Eigen::VectorXd theta_hat;
  std::vector<double> residual_trace;     // ||r^t||^2 / n per iteration
  std::vector<Eigen::VectorXd> iterates;  // theta_hat after each iteration
  StateEvolutionTrace se;                 // schedule the run used
};

/// AMP iterations theta^{t+1} = eta_t(A^T r^t + theta^t) with the Onsager
/// correction r^t = z - A theta^t + r^{t-1} (1/n) sum_i eta'_{t-1}(...),
/// thresholds/noise levels taken from the state-evolution schedule.
AmpResult amp_run(const Eigen::MatrixXd& a_matrix, const Eigen::VectorXd& z,
                  const AmpConfig& config);

}  // namespace sphercomp
