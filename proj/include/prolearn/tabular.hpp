#pragma once

#include <array>
#include <span>
#include <vector>

#include "prolearn/analytic.hpp"
#include "prolearn/predictor.hpp"
#include "prolearn/process.hpp"

namespace prolearn {

// Label sequences below are indexed from time 1: labels[i] is y_{i+1}, so the
// training cutoff is t = labels.size().

struct BetaPrior {
  double alpha = 1.0;
  double beta = 1.0;

  /// Requires alpha, beta > 0 and alpha + beta > 2.
  BetaPrior(double alpha, double beta);

  bool operator==(const BetaPrior&) const = default;
};

/// Constant-in-time threshold of the empirical mean.
PredictorSequence fit_mle_threshold(std::span<const int> labels);

/// (alpha + sum y - 1) / (alpha + beta + t - 2)
double map_estimate(std::span<const int> labels, const BetaPrior& prior);
PredictorSequence fit_map(std::span<const int> labels, const BetaPrior& prior);

/// Extrapolates the MAP estimate's drift: p_hat + sum_{s=t}^{t'-1} dp(s), with
///   dp(s) = (a + s p) / (a + b + s) - (a + (s-1) p) / (a + b + s - 1),
/// a = alpha - 1, b = beta - 1 and p = p_hat held fixed.  Clamped to [0, 1].
/// t' = t returns p_hat; t' < t is an error.
double prospective_map_forecast(double p_hat, long t, long t_prime, const BetaPrior& prior);
PredictorSequence fit_prospective_map(std::span<const int> labels, const BetaPrior& prior);

/// Scenario 2 learner.  tie_known pools odd-time labels with flipped even-time
/// labels into one estimate; otherwise each parity gets its own estimate.
PredictorSequence fit_parity_mle(std::span<const int> labels, bool tie_known);

/// Add-one smoothed stay probabilities (n_kk + 1) / (n_k + 2).
TransitionModel estimate_transition(std::span<const int> labels);
/// Thresholds the n-step forecast of the fitted chain from the last label.
PredictorSequence fit_markov_mle(std::span<const int> labels);

struct QTable {
  Matrix2 q{};  // q[y][h]
  double gamma = 0.0;
  int iterations = 0;
  std::vector<double> residuals;  // sup-norm differences of successive iterates
};

/// Value iteration for Q(y,h) = sum_y' G_h[y][y'] (1{h = y'} + gamma max_a Q(y',a)),
/// where G_h is the transition law when action h is taken.  Stops when the
/// returned table is within tol of the fixed point.
QTable q_value_iteration(const TransitionModel& action0, const TransitionModel& action1, double gamma,
                         double tol = 1e-10, int max_iters = 100000);

struct MdpTransition {
  int y = 0;       // state before the action
  int action = 0;  // action (prediction) taken
  int y_next = 0;  // resulting state, which is also the label the action is scored on
};

struct QAgentModel {
  TransitionModel action0;
  TransitionModel action1;
  QTable q;
};

/// Laplace-smoothed per-action stay probabilities and their Q table.
QAgentModel fit_q_model(std::span<const MdpTransition> history, double gamma);

/// Greedy action in state y, ties broken by `tiebreak`.
int greedy_action(const QTable& q, int y, Rng& tiebreak);

/// Rolls the fitted model forward from y_t = history.back().y_next at time t.
/// The decision for time s+1 maximizes pi_s^T Q(., h), and the belief moves
/// to pi_{s+1} = pi_s^T G_h for that decision.  Times up to t map to the first
/// rolled-out decision.
PredictorSequence fit_q_agent(std::span<const MdpTransition> history, double gamma, long t, Rng tiebreak);

/// Lookup-table hypothesis over a finite input alphabet (first input coordinate).
struct TableHypothesis {
  std::vector<double> support;
  std::vector<int> labels;
  int operator()(double x) const;
};

PredictorSequence table_predictor(TableHypothesis h, std::string kind);

/// The constant-in-time class {0, 1, 1{x > 0}, 1{x < 0}}.
std::vector<PredictorSequence> sign_threshold_class();

/// Every labeling of `support`, as constant-in-time predictors.
std::vector<PredictorSequence> all_table_hypotheses(const std::vector<double>& support);

/// ERM over all lookup tables on the observed inputs (per-input majority vote,
/// ties and unseen inputs broken by `tiebreak` at predict time).  With
/// per_parity the tables for odd and even times are fitted separately.
PredictorSequence fit_table_erm(const Realization& data, bool per_parity);

}  // namespace prolearn
