#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "prolearn/neural.hpp"
#include "prolearn/predictor.hpp"
#include "prolearn/process.hpp"
#include "prolearn/tabular.hpp"

namespace prolearn {

// ---------------------------------------------------------------------------
// Risk estimators.  All of them score zero-one loss and consume `tiebreak` in
// time order.

/// Mean error over every sample with time in (t, T].
double prospective_risk_hat(const PredictorSequence& pred, const Realization& data, long t, long T, Rng& tiebreak);

/// Normalized geometric weights mu_k proportional to gamma^(k-1), k = 1..tau.
std::vector<double> discount_weights(double gamma, long tau);

/// sum_k mu_k * (mean error at time t + k).
double discounted_risk_hat(const PredictorSequence& pred, const Realization& data, long t, double gamma, long tau,
                           Rng& tiebreak);

/// Mean error over the samples at time `step`.
double instantaneous_risk_hat(const PredictorSequence& pred, const Realization& data, long step, Rng& tiebreak);

/// Per-step mean errors for times t+1..t+count.
std::vector<double> step_errors(const PredictorSequence& pred, const Realization& data, long t, long count,
                                Rng& tiebreak);

// ---------------------------------------------------------------------------
// Experiments

enum class LearnerKind {
  mle,
  map,
  prospective_map,
  parity_mle,
  markov_mle,
  q_agent,
  chance,
  prospective_erm,
  follow_the_leader,
  online_sgd,
  table_erm,
  parity_table_erm,
};

std::string learner_kind_name(LearnerKind kind);
std::optional<LearnerKind> parse_learner_kind(const std::string& name);

struct LearnerConfig {
  LearnerKind kind = LearnerKind::mle;
  double alpha = 12.0;  // Beta prior for map / prospective_map
  double beta = 16.0;
  bool tie_known = true;  // parity_mle
  double epsilon = 0.1;   // q_agent exploration while collecting history
  TrainConfig train;
  TimeEmbeddingConfig embed;
  int online_window = 8;
  bool operator==(const LearnerConfig&) const = default;
};

/// Identifier used in result files, e.g. "parity_mle" or "parity_mle_untied".
std::string learner_id(const LearnerConfig& learner);

struct ExperimentConfig {
  std::string scenario = "experiment";
  ProcessSpec process;
  LearnerConfig learner;
  std::vector<long> cutoffs;
  std::vector<std::uint64_t> seeds;
  std::optional<double> gamma;  // discounted risk when set
  std::optional<long> tau;      // truncation; defaults to min(200, T - t)
  std::uint64_t master_seed = 0;
  bool operator==(const ExperimentConfig&) const = default;
};

std::vector<std::string> validation_errors(const ExperimentConfig& cfg);

struct RiskPoint {
  long t = 0;
  double mean = 0.0;
  double std = 0.0;
  int n_seeds = 0;
  bool operator==(const RiskPoint&) const = default;
};

struct RiskCurve {
  std::string scenario;
  std::string learner;
  std::vector<RiskPoint> points;
  std::optional<double> gamma;
  bool operator==(const RiskCurve&) const = default;
};

struct CellContext {
  long cutoff = 0;
  std::uint64_t seed = 0;       // seed as listed in the config
  std::uint64_t data_seed = 0;  // realization seed, from (master_seed, seed)
  std::uint64_t cell_seed = 0;  // learner / tie-break seed, from (data_seed, cutoff)
};

struct CellResult {
  long cutoff = 0;
  std::uint64_t seed = 0;
  double risk = 0.0;
};

/// Fits a learner on the data up to the cutoff.  The realization passed in
/// never contains samples after the cutoff.
using LearnerFactory = std::function<PredictorSequence(const Realization& prefix, const CellContext& ctx)>;

/// The built-in learners.
PredictorSequence fit_learner(const LearnerConfig& learner, const Realization& prefix, const CellContext& ctx);

CellContext make_cell_context(const ExperimentConfig& cfg, long cutoff, std::uint64_t seed);

/// Risk of every (cutoff, seed) cell, in cutoff-major order of the config.
/// The parallel variant spreads cells over OpenMP threads; results are
/// identical to the serial variant.
std::vector<CellResult> run_cells(const ExperimentConfig& cfg, const LearnerFactory& factory);
std::vector<CellResult> run_cells_serial(const ExperimentConfig& cfg, const LearnerFactory& factory);

/// Mean and sample standard deviation per cutoff.  Independent of the order of
/// the cells.
RiskCurve aggregate(const ExperimentConfig& cfg, const std::vector<CellResult>& cells);

RiskCurve run_experiment(const ExperimentConfig& cfg);
RiskCurve run_experiment(const ExperimentConfig& cfg, const LearnerFactory& factory);
RiskCurve run_experiment_serial(const ExperimentConfig& cfg);
RiskCurve run_experiment_serial(const ExperimentConfig& cfg, const LearnerFactory& factory);

/// Raised when a cell fails; the message names the cutoff and seed.
class ExperimentError : public std::runtime_error {
 public:
  ExperimentError(long cutoff, std::uint64_t seed, const std::string& what);
  long cutoff() const { return cutoff_; }
  std::uint64_t seed() const { return seed_; }

 private:
  long cutoff_;
  std::uint64_t seed_;
};

/// Closed-loop evaluation on a controlled chain: the state after the cutoff
/// evolves under the predictor's own decisions.  Step s draws from the stream
/// (data_seed, data, s).
double closed_loop_risk(const PredictorSequence& pred, const ControlledMarkov& chain, int y_t, long t, long T,
                        std::optional<double> gamma, std::optional<long> tau, std::uint64_t data_seed, Rng& tiebreak);

/// History of a controlled chain up to time t.  y_1 ~ Bernoulli(1/2); the
/// behaviour policy is epsilon-greedy on the refitted Q table when `q_agent`,
/// otherwise uniformly random.
std::vector<MdpTransition> collect_mdp_history(const ControlledMarkov& chain, long t, double gamma, bool q_agent,
                                               double epsilon, std::uint64_t data_seed, std::uint64_t cell_seed);

}  // namespace prolearn
