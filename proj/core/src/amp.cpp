#include "sphercomp/amp.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "sphercomp/quadrature.hpp"

namespace sphercomp {

Denoiser Denoiser::soft(double alpha) {
  if (!(alpha >= 0.0)) throw std::invalid_argument("alpha must be >= 0");
  Denoiser d;
  d.family_ = Family::kSoftThreshold;
  d.alpha_ = alpha;
  return d;
}

Denoiser Denoiser::bayes(ScalarPrior prior) {
  Denoiser d;
  d.family_ = Family::kBayes;
  d.prior_ = std::move(prior);
  return d;
}

const ScalarPrior& Denoiser::prior() const {
  if (!prior_) throw std::logic_error("soft-threshold denoiser has no prior");
  return *prior_;
}

double Denoiser::eval(double v, double tau) const {
  if (family_ == Family::kSoftThreshold) {
    return soft_threshold(v, alpha_ * tau);
  }
  return posterior_mean_scalar(*prior_, tau, v);
}

double Denoiser::derivative(double v, double tau) const {
  if (family_ == Family::kSoftThreshold) {
    return std::fabs(v) > alpha_ * tau ? 1.0 : 0.0;
  }
  return posterior_mean_derivative(*prior_, tau, v);
}

double Denoiser::lipschitz(double tau) const {
  if (family_ == Family::kSoftThreshold) return 1.0;
  const double r = prior_->support_radius();
  return r * r / (tau * tau);
}

double denoiser_mse(const Denoiser& denoiser, const ScalarPrior& signal,
                    double tau, int hermite_order) {
  const auto& x = signal.support();
  const auto& w = signal.weights();
  if (denoiser.family() == Denoiser::Family::kSoftThreshold) {
    double mse = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      mse += w[i] * soft_threshold_risk(denoiser.alpha() * tau, tau, x[i]);
    }
    return mse;
  }
  const GaussHermite& gh = gauss_hermite(hermite_order);
  const double inv_sqrt_pi = 1.0 / std::sqrt(M_PI);
  double mse = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (w[i] <= 0.0) continue;
    double inner = 0.0;
    for (int j = 0; j < hermite_order; ++j) {
      const double v = x[i] + tau * M_SQRT2 * gh.nodes[j];
      const double e = denoiser.eval(v, tau) - x[i];
      inner += gh.weights[j] * e * e;
    }
    mse += w[i] * inner * inv_sqrt_pi;
  }
  return mse;
}

AmpConfig AmpConfig::bayes(ScalarPrior prior, int iterations, double delta,
                           double xi2) {
  AmpConfig cfg{iterations, Denoiser::bayes(std::move(prior)), delta, xi2,
                -1.0, std::nullopt};
  cfg.validate();
  return cfg;
}

AmpConfig AmpConfig::soft(ScalarPrior signal_prior, double alpha,
                          int iterations, double delta, double xi2) {
  AmpConfig cfg{iterations, Denoiser::soft(alpha), delta, xi2, -1.0,
                std::move(signal_prior)};
  cfg.validate();
  return cfg;
}

const ScalarPrior& AmpConfig::resolved_signal_prior() const {
  if (signal_prior) return *signal_prior;
  if (denoiser.family() == Denoiser::Family::kBayes) return denoiser.prior();
  throw std::invalid_argument(
      "soft-threshold AMP needs a signal prior for its SE schedule");
}

double AmpConfig::resolved_tau0_sq(const ScalarPrior& prior) const {
  if (tau0_sq >= 0.0) return tau0_sq;
  return xi2 + prior.second_moment() / delta;
}

void AmpConfig::validate() const {
  if (iterations < 1) throw std::invalid_argument("AMP needs T >= 1");
  if (!(delta > 0.0)) throw std::invalid_argument("delta must be positive");
  if (!(xi2 >= 0.0)) throw std::invalid_argument("xi2 must be >= 0");
}

StateEvolutionTrace state_evolution(const ScalarPrior& prior,
                                    const AmpConfig& config) {
  config.validate();
  StateEvolutionTrace trace;
  double tau_sq = config.resolved_tau0_sq(prior);
  for (int t = 0; t < config.iterations; ++t) {
    trace.tau_sq.push_back(tau_sq);
    const double tau = std::sqrt(std::max(tau_sq, 1e-300));
    const double mse = denoiser_mse(config.denoiser, prior, tau);
    if (!std::isfinite(mse)) {
      throw std::runtime_error("state evolution quadrature did not converge");
    }
    trace.predicted_mse.push_back(mse);
    tau_sq = config.xi2 + mse / config.delta;
  }
  return trace;
}

AmpResult amp_run(const Eigen::MatrixXd& a_matrix, const Eigen::VectorXd& z,
                  const AmpConfig& config) {
  config.validate();
  const auto n = a_matrix.rows();
  const auto d = a_matrix.cols();
  if (z.size() != n) {
    throw std::invalid_argument("AMP dimension mismatch: z vs rows of A");
  }

  AmpResult result;
  result.se = state_evolution(config.resolved_signal_prior(), config);

  Eigen::VectorXd theta = Eigen::VectorXd::Zero(d);
  Eigen::VectorXd r = z;  // r^0 = z - A theta^0, Onsager term zero at t = 0
  for (int t = 0; t < config.iterations; ++t) {
    const double tau = std::sqrt(std::max(result.se.tau_sq[t], 1e-300));
    const Eigen::VectorXd v = a_matrix.transpose() * r + theta;
    Eigen::VectorXd theta_next(d);
    double deriv_sum = 0.0;
    for (Eigen::Index i = 0; i < d; ++i) {
      theta_next[i] = config.denoiser.eval(v[i], tau);
      deriv_sum += config.denoiser.derivative(v[i], tau);
    }
    if (!theta_next.allFinite()) {
      throw std::runtime_error("AMP produced a non-finite iterate at t = " +
                               std::to_string(t + 1));
    }
    const double onsager = deriv_sum / static_cast<double>(n);
    r = z - a_matrix * theta_next + onsager * r;
    theta = std::move(theta_next);
    result.iterates.push_back(theta);
    result.residual_trace.push_back(r.squaredNorm() / static_cast<double>(n));
  }
  result.theta_hat = theta;
  return result;
}

}  // namespace sphercomp
