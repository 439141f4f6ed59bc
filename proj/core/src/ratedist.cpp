#include "sphercomp/ratedist.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

#include "sphercomp/estimators.hpp"

namespace sphercomp {

namespace {

double one_minus_exp2_neg2r(double rate) {
  return -std::expm1(-2.0 * M_LN2 * rate);  // 1 - 2^(-2R)
}

double exp2_2r_minus_one(double rate) {
  return std::expm1(2.0 * M_LN2 * rate);  // 2^(2R) - 1
}

}  // namespace

JointScalarSource::JointScalarSource(ScalarPrior u_prior)
    : u_prior_(std::move(u_prior)) {}

JointScalarSource JointScalarSource::awgn(ScalarPrior u_prior, double eps) {
  if (!(eps >= 0.0)) throw std::invalid_argument("eps must be >= 0");
  JointScalarSource s(std::move(u_prior));
  s.is_awgn_ = true;
  s.eps_ = eps;
  s.cross_moment_ = s.u_prior_.second_moment();  // X = U + eps W'
  s.x_second_moment_ = s.u_prior_.second_moment() + eps * eps;
  return s;
}

JointScalarSource JointScalarSource::discrete_kernel(
    ScalarPrior u_prior, std::vector<double> x_values,
    Eigen::MatrixXd p_x_given_u) {
  JointScalarSource s(std::move(u_prior));
  s.is_awgn_ = false;
  s.x_values_ = std::move(x_values);
  s.p_x_given_u_ = std::move(p_x_given_u);
  const auto& u = s.u_prior_.support();
  const auto& w = s.u_prior_.weights();
  if (s.p_x_given_u_.rows() != static_cast<Eigen::Index>(u.size()) ||
      s.p_x_given_u_.cols() != static_cast<Eigen::Index>(s.x_values_.size())) {
    throw std::invalid_argument("kernel shape must be (atoms) x (alphabet)");
  }
  for (Eigen::Index i = 0; i < s.p_x_given_u_.rows(); ++i) {
    double row = 0.0;
    for (Eigen::Index j = 0; j < s.p_x_given_u_.cols(); ++j) {
      if (!(s.p_x_given_u_(i, j) >= 0.0)) {
        throw std::invalid_argument("kernel entries must be >= 0");
      }
      row += s.p_x_given_u_(i, j);
    }
    if (std::fabs(row - 1.0) > 1e-9) {
      throw std::invalid_argument("kernel rows must sum to 1");
    }
  }
  for (std::size_t i = 0; i < u.size(); ++i) {
    for (std::size_t j = 0; j < s.x_values_.size(); ++j) {
      const double p = w[i] * s.p_x_given_u_(i, j);
      s.cross_moment_ += p * u[i] * s.x_values_[j];
      s.x_second_moment_ += p * s.x_values_[j] * s.x_values_[j];
    }
  }
  return s;
}

double JointScalarSource::eps() const {
  if (!is_awgn_) throw std::logic_error("eps undefined for a discrete kernel");
  return eps_;
}

double JointScalarSource::cond_mean_u(double x) const {
  if (is_awgn_) {
    if (eps_ == 0.0) return x;  // X = U
    return posterior_moments(u_prior_, eps_, x).mean;
  }
  // Nearest alphabet point; the kernel is defined on its own alphabet.
  const auto it = std::lower_bound(x_values_.begin(), x_values_.end(), x);
  std::size_t j = std::min<std::size_t>(it - x_values_.begin(),
                                        x_values_.size() - 1);
  if (j > 0 && std::fabs(x_values_[j - 1] - x) < std::fabs(x_values_[j] - x)) {
    --j;
  }
  const auto& u = u_prior_.support();
  const auto& w = u_prior_.weights();
  double norm = 0.0, m1 = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double p = w[i] * p_x_given_u_(i, j);
    norm += p;
    m1 += p * u[i];
  }
  if (!(norm > 0.0)) return 0.0;
  return m1 / norm;
}

double JointScalarSource::cond_second_u(double x) const {
  if (is_awgn_) {
    if (eps_ == 0.0) return x * x;
    return posterior_moments(u_prior_, eps_, x).second;
  }
  const auto it = std::lower_bound(x_values_.begin(), x_values_.end(), x);
  std::size_t j = std::min<std::size_t>(it - x_values_.begin(),
                                        x_values_.size() - 1);
  if (j > 0 && std::fabs(x_values_[j - 1] - x) < std::fabs(x_values_[j] - x)) {
    --j;
  }
  const auto& u = u_prior_.support();
  const auto& w = u_prior_.weights();
  double norm = 0.0, m2 = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double p = w[i] * p_x_given_u_(i, j);
    norm += p;
    m2 += p * u[i] * u[i];
  }
  if (!(norm > 0.0)) return 0.0;
  return m2 / norm;
}

std::vector<double> JointScalarSource::x_probabilities(
    const std::vector<double>& x_grid) const {
  std::vector<double> p(x_grid.size(), 0.0);
  if (is_awgn_) {
    const auto& u = u_prior_.support();
    const auto& w = u_prior_.weights();
    const double inv_two_var = eps_ > 0.0 ? 0.5 / (eps_ * eps_) : 0.0;
    for (std::size_t j = 0; j < x_grid.size(); ++j) {
      double acc = 0.0;
      for (std::size_t i = 0; i < u.size(); ++i) {
        if (eps_ > 0.0) {
          const double d = x_grid[j] - u[i];
          acc += w[i] * std::exp(-d * d * inv_two_var);
        }
      }
      p[j] = acc;
    }
    if (eps_ == 0.0) {
      // X = U: put each atom's mass on the nearest grid point.
      for (std::size_t i = 0; i < u.size(); ++i) {
        std::size_t best = 0;
        for (std::size_t j = 1; j < x_grid.size(); ++j) {
          if (std::fabs(x_grid[j] - u[i]) < std::fabs(x_grid[best] - u[i])) {
            best = j;
          }
        }
        p[best] += w[i];
      }
    }
  } else {
    const auto& w = u_prior_.weights();
    for (std::size_t j = 0; j < x_grid.size() && j < x_values_.size(); ++j) {
      for (std::size_t i = 0; i < w.size(); ++i) {
        p[j] += w[i] * p_x_given_u_(i, j);
      }
    }
  }
  double total = 0.0;
  for (double v : p) total += v;
  if (!(total > 0.0)) {
    throw std::invalid_argument("x grid carries no probability mass");
  }
  for (double& v : p) v /= total;
  return p;
}

std::vector<double> JointScalarSource::default_x_grid(int points,
                                                      double spread_sds) const {
  if (!is_awgn_) return x_values_;
  const double sd = std::sqrt(x_second_moment_);
  std::vector<double> grid(points);
  for (int j = 0; j < points; ++j) {
    grid[j] = -spread_sds * sd + 2.0 * spread_sds * sd * j / (points - 1);
  }
  return grid;
}

double gaussian_drf_direct(double var, double rate) {
  if (!(var >= 0.0) || !(rate >= 0.0)) {
    throw std::invalid_argument("variance and rate must be >= 0");
  }
  return var * std::exp2(-2.0 * rate);
}

double gaussian_idrf(const JointScalarSource& source, double rate) {
  if (!(rate >= 0.0)) throw std::invalid_argument("rate must be >= 0");
  const double exu2 = source.u_prior().second_moment();
  const double cross = source.cross_moment();
  return exu2 -
         cross * cross / source.x_second_moment() * one_minus_exp2_neg2r(rate);
}

double alpha_r(const JointScalarSource& source, double rate) {
  if (!(rate >= 0.0)) throw std::invalid_argument("rate must be >= 0");
  if (!(source.x_second_moment() > 0.0)) {
    throw std::invalid_argument("alpha_R undefined for E[X^2] = 0");
  }
  return one_minus_exp2_neg2r(rate) * source.cross_moment() /
         source.x_second_moment();
}

double awgn_equivalent_variance(const JointScalarSource& source, double rate) {
  if (!(rate > 0.0)) throw std::invalid_argument("rate must be positive");
  return source.x_second_moment() / exp2_2r_minus_one(rate);
}

void RateDistortionCurve::validate(double tol) const {
  auto sorted = points;
  std::sort(sorted.begin(), sorted.end(),
            [](const Point& a, const Point& b) { return a.rate < b.rate; });
  for (std::size_t i = 1; i < sorted.size(); ++i) {
    if (sorted[i].distortion > sorted[i - 1].distortion + tol) {
      throw std::runtime_error("distortion must be nonincreasing in rate");
    }
  }
}

RateDistortionCurve mmse_equivalent_curve(const JointScalarSource& source,
                                          const std::vector<double>& rates) {
  if (!source.is_awgn()) {
    throw std::invalid_argument(
        "mmse_equivalent_curve needs the AWGN observation channel");
  }
  RateDistortionCurve curve;
  curve.method = "mmse_equivalent";
  const double eps2 = source.eps() * source.eps();
  for (double rate : rates) {
    const double sigma2 = awgn_equivalent_variance(source, rate);
    const double d = scalar_mmse(source.u_prior(), std::sqrt(eps2 + sigma2));
    curve.points.push_back({rate, d});
  }
  curve.validate(1e-9);
  return curve;
}

std::vector<double> default_xhat_grid(const JointScalarSource& source,
                                      const std::vector<double>& x_grid,
                                      int points) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (double x : x_grid) {
    const double m = source.cond_mean_u(x);
    lo = std::min(lo, m);
    hi = std::max(hi, m);
  }
  if (!(hi > lo)) {
    hi = lo + 1e-9;
  }
  std::vector<double> grid(points);
  for (int k = 0; k < points; ++k) {
    grid[k] = lo + (hi - lo) * k / (points - 1);
  }
  return grid;
}

BaResult blahut_arimoto_indirect(const JointScalarSource& source,
                                 const std::vector<double>& x_grid,
                                 const std::vector<double>& xhat_grid,
                                 double slope, double tol, int max_iter) {
  if (!(slope > 0.0)) throw std::invalid_argument("slope must be positive");
  if (x_grid.empty() || xhat_grid.empty()) {
    throw std::invalid_argument("grids must be nonempty");
  }
  const auto nx = static_cast<Eigen::Index>(x_grid.size());
  const auto nk = static_cast<Eigen::Index>(xhat_grid.size());

  const std::vector<double> probs = source.x_probabilities(x_grid);
  Eigen::VectorXd p(nx);
  for (Eigen::Index j = 0; j < nx; ++j) p[j] = probs[j];

  // Reduced distortion d(x, xhat) = E[U^2|x] - 2 xhat E[U|x] + xhat^2.
  Eigen::MatrixXd dist(nx, nk);
  for (Eigen::Index j = 0; j < nx; ++j) {
    const double m1 = source.cond_mean_u(x_grid[j]);
    const double m2 = source.cond_second_u(x_grid[j]);
    for (Eigen::Index k = 0; k < nk; ++k) {
      const double xh = xhat_grid[k];
      dist(j, k) = m2 - 2.0 * xh * m1 + xh * xh;
    }
  }
  // Row-stabilized kernel: exp(-slope (d - min_k d)) keeps every row's
  // largest entry at 1, so large slopes cannot underflow a whole row.
  // The shift moves the Lagrangian by a constant and leaves the channel,
  // the rate and the distortion unchanged.
  Eigen::MatrixXd kernel(nx, nk);
  for (Eigen::Index j = 0; j < nx; ++j) {
    const double row_min = dist.row(j).minCoeff();
    for (Eigen::Index k = 0; k < nk; ++k) {
      kernel(j, k) = std::exp(-slope * (dist(j, k) - row_min));
    }
  }

  Eigen::VectorXd q = Eigen::VectorXd::Constant(nk, 1.0 / nk);
  BaResult result;
  double gap = std::numeric_limits<double>::infinity();
  bool converged = false;
  int iter = 0;
  for (; iter < max_iter; ++iter) {
    const Eigen::VectorXd c = kernel * q;  // c_j = sum_k q_k e^{-slope d}
    const double f = -(p.array() * c.array().log()).sum();
    result.lagrangian_trace.push_back(f);
    const Eigen::VectorXd mass =
        kernel.transpose() * (p.array() / c.array()).matrix();
    // Duality gap: the optimal Lagrangian satisfies F* >= F - log(max mass),
    // so the bound on the remaining decrease is the stopping quantity.
    gap = std::log(mass.maxCoeff());
    if (gap < tol) {
      converged = true;
      break;
    }
    q = (q.array() * mass.array()).matrix();
    q /= q.sum();
  }
  if (!converged) {
    char msg[128];
    std::snprintf(msg, sizeof(msg),
                  "Blahut-Arimoto did not converge; duality gap %.3e", gap);
    throw std::runtime_error(msg);
  }

  // Final channel w(k|j) = q_k e^{-slope d} / c_j; rate and distortion.
  const Eigen::VectorXd c = kernel * q;
  double rate_nats = 0.0, distortion = 0.0;
  for (Eigen::Index j = 0; j < nx; ++j) {
    if (p[j] <= 0.0) continue;
    for (Eigen::Index k = 0; k < nk; ++k) {
      const double w = q[k] * kernel(j, k) / c[j];
      if (w <= 0.0) continue;
      rate_nats += p[j] * w * std::log(w / q[k]);
      distortion += p[j] * w * dist(j, k);
    }
  }
  result.rate_bits = std::max(0.0, rate_nats / M_LN2);
  result.distortion = distortion;
  result.iterations = iter;
  result.final_gap = gap;
  return result;
}

BaResult blahut_arimoto_at_rate(const JointScalarSource& source,
                                double target_rate_bits,
                                double rate_tol_bits) {
  const auto x_grid = source.default_x_grid();
  const auto xhat_grid = default_xhat_grid(source, x_grid);
  double lo = 1e-4, hi = 512.0;
  BaResult best = blahut_arimoto_indirect(source, x_grid, xhat_grid, hi);
  if (best.rate_bits < target_rate_bits) return best;  // grid ceiling
  for (int iter = 0; iter < 60; ++iter) {
    const double mid = std::sqrt(lo * hi);
    BaResult r = blahut_arimoto_indirect(source, x_grid, xhat_grid, mid);
    if (std::fabs(r.rate_bits - target_rate_bits) < rate_tol_bits) return r;
    if (r.rate_bits > target_rate_bits) {
      hi = mid;
    } else {
      lo = mid;
    }
    best = std::move(r);
  }
  return best;
}

RateDistortionCurve blahut_arimoto_curve(const JointScalarSource& source,
                                         const std::vector<double>& rates) {
  RateDistortionCurve curve;
  curve.method = "blahut_arimoto";
  for (double rate : rates) {
    const BaResult r = blahut_arimoto_at_rate(source, rate);
    curve.points.push_back({rate, r.distortion});
  }
  curve.validate(1e-6);
  return curve;
}

}  // namespace sphercomp
