#pragma once

#include <array>
#include <span>

namespace prolearn {

using Dist2 = std::array<double, 2>;
using Matrix2 = std::array<std::array<double, 2>, 2>;

/// Two-state chain with stay probabilities theta0 (state 0) and theta1 (state 1):
///   Gamma = [[theta0, 1 - theta0], [1 - theta1, theta1]].
struct TransitionModel {
  double theta0 = 0.5;
  double theta1 = 0.5;

  TransitionModel() = default;
  TransitionModel(double theta0, double theta1);

  double lambda2() const { return theta0 + theta1 - 1.0; }
  Matrix2 matrix() const;
  // Only meaningful when theta0 + theta1 < 2.
  Dist2 stationary() const;

  bool operator==(const TransitionModel&) const = default;
};

double bernoulli_bayes_risk(double p);

/// Distribution of the state n steps after observing y.  Uses the eigen
/// decomposition of Gamma: the component along the second eigenvector decays
/// as lambda2^n.
Dist2 markov_n_step_dist(const TransitionModel& model, int y, long n);

/// Long-run average Bayes risk; 0 for the absorbing chain theta0 + theta1 = 2.
double markov_average_bayes_risk(const TransitionModel& model);

/// Discounted Bayes risk of the symmetric chain theta0 = theta1 = theta.
double markov_discounted_bayes_risk(double theta, double gamma);

struct FldRiskLimits {
  double time_agnostic_limit;
  double prospective_at_t;
  double prospective_limit;
};

/// Risk limits for the two-class Gaussian problem whose class means shift by
/// delta at odd times.  t must be a positive even integer.
FldRiskLimits fld_risk_limits(double mu, double sigma, double delta, long t);

/// Error of a uniform-random predictor averaged over an equal-weight mixture of
/// tasks with the given class counts.
double chance_risk(std::span<const int> class_counts);

double normal_cdf(double x);

}  // namespace prolearn
