#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "prolearn/rng.hpp"

namespace prolearn {

// ---------------------------------------------------------------------------
// Task distributions: distributions over (x, y) used as building blocks of the
// task-switching processes.

// x uniform on [-2,-1] u [1,2]; task 1 labels y = 1{x < 0}, task 2 flips them.
struct Flip1D {
  int task_id = 1;
  bool operator==(const Flip1D&) const = default;
};

// x uniform over four unit squares S1=(+,+), S2=(+,-), S3=(-,-), S4=(-,+)
// (coordinates of magnitude in [1,2]); labels[k] is the class of square k+1.
struct Quadrant2D {
  int task_id = 1;
  std::array<int, 4> labels{};
  bool operator==(const Quadrant2D&) const = default;
};

// Default square labels for tasks 1..4: task k labels squares k and k+1
// (cyclically) as class 1, i.e. the decision boundary rotates by 90 degrees.
std::array<int, 4> default_quadrant_labels(int task_id);
Quadrant2D make_quadrant_task(int task_id);

// The two distributions of the learnability counterexamples.  Two-point support
// {-1, 1} or three-point support {-1, 0, 1}, x uniform.
//   which=1: P(y=1|x=1) = theta, P(y=1|x=-1) = 1-theta            (two-point)
//            P(y=1|x) = theta for x <= 0, 1-theta for x = 1        (three-point)
//   which=2: labels flipped relative to which=1 on the two-point support;
//            P(y=1|x) = 1-theta for x >= 0, theta for x = -1       (three-point)
struct Prop1Task {
  int which = 1;
  double theta = 0.0;
  bool three_point = false;
  bool operator==(const Prop1Task&) const = default;
};

// y ~ Bernoulli(1/2); x ~ Normal(s*mu + delta*parity, sigma^2), s = 2y-1.
struct GaussianFld {
  double mu = 1.0;
  double sigma = 1.0;
  double delta = 0.0;
  int parity = 0;
  bool operator==(const GaussianFld&) const = default;
};

using TaskDistribution = std::variant<Flip1D, Quadrant2D, Prop1Task, GaussianFld>;

int class_count(const TaskDistribution& task);
int input_dim(const TaskDistribution& task);
void validate(const TaskDistribution& task, std::vector<std::string>& errors);

/// Draw one (x, y) pair.
std::pair<std::vector<double>, int> sample_task_datum(const TaskDistribution& task, Rng& rng);

/// Draw a label for a given input (deterministic for Flip1D / Quadrant2D).
int sample_label(const TaskDistribution& task, std::span<const double> x, Rng& rng);

/// P(y = 1 | x) under the task.
double label_probability(const TaskDistribution& task, std::span<const double> x);

/// P(y = 1) under the task, marginalizing over x.
double label_marginal(const TaskDistribution& task);

// ---------------------------------------------------------------------------
// Process kinds.

struct IidBernoulli {
  double p = 0.5;
  bool operator==(const IidBernoulli&) const = default;
};

// Odd t ~ Bernoulli(p), even t ~ Bernoulli(1-p).
struct AlternatingBernoulli {
  double p = 0.5;
  bool operator==(const AlternatingBernoulli&) const = default;
};

struct TwoStateMarkov {
  double theta0 = 0.5;
  double theta1 = 0.5;
  bool operator==(const TwoStateMarkov&) const = default;
};

// Stay probability depends on the learner's action (see mdp_step).
struct ControlledMarkov {
  double theta0 = 0.5;
  double theta1 = 0.5;
  bool operator==(const ControlledMarkov&) const = default;
};

// Task index ((t-1) / dwell) mod tasks.size().
struct PeriodicTasks {
  std::vector<TaskDistribution> tasks;
  int dwell = 1;
  bool operator==(const PeriodicTasks&) const = default;
};

// One regime of a hidden Markov task schedule: a row-stochastic transition
// matrix over local states, and the task index used in each local state.
struct TaskRegime {
  std::vector<std::vector<double>> transition;
  std::vector<int> tasks;
  bool operator==(const TaskRegime&) const = default;
};

// A Markov chain over local states selects the task at each step.  With
// regime_switch_period set, regime ((t-1) / period) mod regimes.size() supplies
// the transition law at step t, and the local state carries over a switch.
// With reset_period set, the local state returns to 0 at t = 1 + k*period.
struct HiddenMarkovTasks {
  std::vector<TaskDistribution> tasks;
  std::vector<TaskRegime> regimes;
  std::optional<int> regime_switch_period;
  std::optional<int> reset_period;
  bool operator==(const HiddenMarkovTasks&) const = default;
};

// Odd t draws from Prop1Task{1, theta}, even t from Prop1Task{2, theta}.
struct Prop1Flip {
  double theta = 0.0;
  bool operator==(const Prop1Flip&) const = default;
};

struct Prop1ThreePoint {
  double theta = 0.0;
  bool operator==(const Prop1ThreePoint&) const = default;
};

using ProcessKind = std::variant<IidBernoulli, AlternatingBernoulli, TwoStateMarkov, ControlledMarkov,
                                 PeriodicTasks, HiddenMarkovTasks, Prop1Flip, Prop1ThreePoint>;

struct ProcessSpec {
  ProcessKind kind;
  int samples_per_step = 1;
  long horizon = 1;
  bool operator==(const ProcessSpec&) const = default;
};

std::string kind_name(const ProcessKind& kind);
bool is_label_only(const ProcessKind& kind);
bool is_markov(const ProcessKind& kind);
int class_count(const ProcessSpec& spec);
int input_dim(const ProcessSpec& spec);

/// Every problem with the spec, one message per offending field.
std::vector<std::string> validation_errors(const ProcessSpec& spec);
/// Throws std::invalid_argument listing all validation errors.
void validate(const ProcessSpec& spec);

// ---------------------------------------------------------------------------
// Realizations.

struct TimeIndexedSample {
  std::vector<double> x;
  int y = 0;
  long t = 1;
  bool operator==(const TimeIndexedSample&) const = default;
};

/// Samples of a realized process, stored flat.  Every step holds exactly
/// samples_per_step samples, so step t occupies [(t-1)N, tN).
/// `state` records the latent state per step (previous label for Markov kinds,
/// task index for task kinds); it exists for simulation and must not be used by
/// learners.
struct Realization {
  int dim = 1;
  int samples_per_step = 1;
  long first_time = 1;
  std::vector<double> x;
  std::vector<int> y;
  std::vector<int> state;

  std::size_t size() const { return y.size(); }
  long steps() const { return static_cast<long>(state.size()); }
  long last_time() const { return first_time + steps() - 1; }
  long time_of(std::size_t i) const { return first_time + static_cast<long>(i) / samples_per_step; }
  std::span<const double> input(std::size_t i) const { return {x.data() + i * dim, static_cast<std::size_t>(dim)}; }
  TimeIndexedSample operator[](std::size_t i) const;
  // Index of the first sample at time t.
  std::size_t offset(long t) const { return static_cast<std::size_t>(t - first_time) * samples_per_step; }
  /// Labels, one per sample, in time order.
  std::span<const int> labels() const { return y; }

  /// Copy of the steps with time <= t.
  Realization prefix(long t) const;
  /// Copy of the steps with time > t.
  Realization suffix(long t) const;
};

/// Steps 1..horizon.  Pure function of (spec, seed): step t draws from the
/// stream (seed, data, t).
Realization sample_realization(const ProcessSpec& spec, std::uint64_t seed);

struct LabelCondition {
  int label = 0;
  long time = 0;
};

/// Label distribution at time t.  Markov kinds need the label observed at an
/// earlier time when t > 1.
std::vector<double> marginal(const ProcessSpec& spec, long t, std::optional<LabelCondition> condition = {});

/// Next state of the controlled chain: stays with probability theta_action.
int mdp_step(const ControlledMarkov& chain, int y_current, int action, Rng& rng);
int mdp_step(const ProcessSpec& spec, int y_current, int action, Rng& rng);

/// Task index active at time t for PeriodicTasks.
int periodic_task_index(const PeriodicTasks& p, long t);
/// Regime index active at time t for HiddenMarkovTasks.
int hmm_regime_index(const HiddenMarkovTasks& h, long t);

}  // namespace prolearn
