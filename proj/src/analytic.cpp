#include "prolearn/analytic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace prolearn {

namespace {

void require_probability(double p, const char* name) {
  if (!(p >= 0.0 && p <= 1.0)) {
    throw std::invalid_argument(std::string(name) + " must lie in [0, 1], got " + std::to_string(p));
  }
}

}  // namespace

TransitionModel::TransitionModel(double t0, double t1) : theta0(t0), theta1(t1) {
  require_probability(t0, "theta0");
  require_probability(t1, "theta1");
}

Matrix2 TransitionModel::matrix() const {
  return {{{theta0, 1.0 - theta0}, {1.0 - theta1, theta1}}};
}

Dist2 TransitionModel::stationary() const {
  double z = (1.0 - theta0) + (1.0 - theta1);
  return {(1.0 - theta1) / z, (1.0 - theta0) / z};
}

double bernoulli_bayes_risk(double p) {
  require_probability(p, "p");
  return std::min(p, 1.0 - p);
}

Dist2 markov_n_step_dist(const TransitionModel& m, int y, long n) {
  if (y != 0 && y != 1) throw std::invalid_argument("label must be 0 or 1");
  if (n < 0) throw std::invalid_argument("step count must be non-negative");
  Dist2 onehot = {y == 0 ? 1.0 : 0.0, y == 1 ? 1.0 : 0.0};
  double a = 1.0 - m.theta0;
  double b = 1.0 - m.theta1;
  // Identity chain: lambda2 = 1 and the closed form below would divide by zero.
  if (a + b == 0.0 || n == 0) return onehot;

  double decay = std::pow(m.lambda2(), static_cast<double>(n));
  double coef = decay * (a * onehot[0] - b * onehot[1]) / (a + b);
  double p0 = b / (a + b) + coef;
  p0 = std::clamp(p0, 0.0, 1.0);
  return {p0, 1.0 - p0};
}

double markov_average_bayes_risk(const TransitionModel& m) {
  double a = 1.0 - m.theta0;
  double b = 1.0 - m.theta1;
  if (a + b == 0.0) return 0.0;
  return std::min(a, b) / (a + b);
}

double markov_discounted_bayes_risk(double theta, double gamma) {
  require_probability(theta, "theta");
  if (!(gamma >= 0.0 && gamma < 1.0)) throw std::invalid_argument("gamma must lie in [0, 1)");
  double lam = std::abs(2.0 * theta - 1.0);
  // (1 - g) * sum_k g^(k-1) (1 - lam^k) / 2
  return 0.5 - (1.0 - gamma) * lam / (2.0 * (1.0 - lam * gamma));
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

FldRiskLimits fld_risk_limits(double mu, double sigma, double delta, long t) {
  if (!(sigma > 0.0)) throw std::invalid_argument("sigma must be positive");
  if (t <= 0 || t % 2 != 0) throw std::invalid_argument("t must be a positive even integer");
  double half = static_cast<double>(t) / 2.0;
  FldRiskLimits out{};
  out.time_agnostic_limit = 0.5 * (normal_cdf(delta / (2.0 * sigma) - mu / sigma) +
                                   normal_cdf(-delta / (2.0 * sigma) - mu / sigma));
  out.prospective_at_t =
      normal_cdf(-static_cast<double>(t) * mu / (2.0 * sigma) / std::sqrt(half * (half + 1.0)));
  out.prospective_limit = normal_cdf(-mu / sigma);
  return out;
}

double chance_risk(std::span<const int> class_counts) {
  if (class_counts.empty()) throw std::invalid_argument("class_counts must be non-empty");
  double acc = 0.0;
  for (int k : class_counts) {
    if (k <= 0) throw std::invalid_argument("class counts must be positive");
    acc += 1.0 / k;
  }
  return 1.0 - acc / static_cast<double>(class_counts.size());
}

}  // namespace prolearn
