#include "prolearn/eval.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

#include "prolearn/tabular.hpp"

namespace prolearn {

namespace {

void check_window(const Realization& data, long first, long last) {
  if (last < first) throw std::invalid_argument("empty evaluation window");
  if (first < data.first_time || last > data.last_time()) {
    throw std::invalid_argument("realization does not cover the evaluation window");
  }
}

// Errors per sample for times first..last, predicted in one batch.
std::vector<int> errors_between(const PredictorSequence& pred, const Realization& data, long first, long last,
                                Rng& tiebreak) {
  std::size_t begin = data.offset(first);
  std::size_t end = data.offset(last + 1);
  std::vector<long> times(end - begin);
  for (std::size_t i = begin; i < end; ++i) times[i - begin] = data.time_of(i);
  std::vector<int> out(end - begin);
  std::span<const double> inputs(data.x.data() + begin * data.dim, (end - begin) * data.dim);
  pred.predict_batch(times, inputs, data.dim, tiebreak, out);
  for (std::size_t i = begin; i < end; ++i) out[i - begin] = out[i - begin] != data.y[i] ? 1 : 0;
  return out;
}

}  // namespace

double prospective_risk_hat(const PredictorSequence& pred, const Realization& data, long t, long T, Rng& tiebreak) {
  check_window(data, t + 1, T);
  auto errs = errors_between(pred, data, t + 1, T, tiebreak);
  long wrong = 0;
  for (int e : errs) wrong += e;
  return static_cast<double>(wrong) / static_cast<double>(errs.size());
}

std::vector<double> step_errors(const PredictorSequence& pred, const Realization& data, long t, long count,
                                Rng& tiebreak) {
  check_window(data, t + 1, t + count);
  auto errs = errors_between(pred, data, t + 1, t + count, tiebreak);
  const auto n = static_cast<std::size_t>(data.samples_per_step);
  std::vector<double> out(static_cast<std::size_t>(count));
  for (std::size_t k = 0; k < out.size(); ++k) {
    long wrong = 0;
    for (std::size_t i = 0; i < n; ++i) wrong += errs[k * n + i];
    out[k] = static_cast<double>(wrong) / static_cast<double>(n);
  }
  return out;
}

std::vector<double> discount_weights(double gamma, long tau) {
  if (!(gamma >= 0.0 && gamma < 1.0)) throw std::invalid_argument("gamma must lie in [0, 1)");
  if (tau < 1) throw std::invalid_argument("tau must be >= 1");
  std::vector<double> w(static_cast<std::size_t>(tau));
  double g = 1.0, total = 0.0;
  for (auto& v : w) {
    v = g;
    total += g;
    g *= gamma;
  }
  // Dividing by the computed sum equals the closed form (1 - gamma) / (1 - gamma^tau)
  // and keeps the total at 1 up to rounding.
  for (auto& v : w) v /= total;
  return w;
}

double discounted_risk_hat(const PredictorSequence& pred, const Realization& data, long t, double gamma, long tau,
                           Rng& tiebreak) {
  auto w = discount_weights(gamma, tau);
  auto e = step_errors(pred, data, t, tau, tiebreak);
  double acc = 0.0;
  for (std::size_t k = 0; k < w.size(); ++k) acc += w[k] * e[k];
  return acc;
}

double instantaneous_risk_hat(const PredictorSequence& pred, const Realization& data, long step, Rng& tiebreak) {
  return step_errors(pred, data, step - 1, 1, tiebreak)[0];
}

// ---------------------------------------------------------------------------

namespace {

constexpr std::pair<LearnerKind, const char*> kLearnerNames[] = {
    {LearnerKind::mle, "mle"},
    {LearnerKind::map, "map"},
    {LearnerKind::prospective_map, "prospective_map"},
    {LearnerKind::parity_mle, "parity_mle"},
    {LearnerKind::markov_mle, "markov_mle"},
    {LearnerKind::q_agent, "q_agent"},
    {LearnerKind::chance, "chance"},
    {LearnerKind::prospective_erm, "prospective_erm"},
    {LearnerKind::follow_the_leader, "follow_the_leader"},
    {LearnerKind::online_sgd, "online_sgd"},
    {LearnerKind::table_erm, "table_erm"},
    {LearnerKind::parity_table_erm, "parity_table_erm"},
};

bool is_neural(LearnerKind k) {
  return k == LearnerKind::prospective_erm || k == LearnerKind::follow_the_leader || k == LearnerKind::online_sgd;
}

}  // namespace

std::string learner_kind_name(LearnerKind kind) {
  for (const auto& [k, name] : kLearnerNames) {
    if (k == kind) return name;
  }
  throw std::logic_error("unknown learner kind");
}

std::optional<LearnerKind> parse_learner_kind(const std::string& name) {
  for (const auto& [k, n] : kLearnerNames) {
    if (name == n) return k;
  }
  return std::nullopt;
}

std::string learner_id(const LearnerConfig& learner) {
  std::string id = learner_kind_name(learner.kind);
  if (learner.kind == LearnerKind::parity_mle && !learner.tie_known) id += "_untied";
  return id;
}

std::vector<std::string> validation_errors(const ExperimentConfig& cfg) {
  std::vector<std::string> errors = validation_errors(cfg.process);
  const long T = cfg.process.horizon;
  const bool controlled = std::holds_alternative<ControlledMarkov>(cfg.process.kind);
  const auto& L = cfg.learner;

  if (cfg.cutoffs.empty()) errors.push_back("cutoffs: at least one cutoff is required");
  std::set<long> seen;
  for (long t : cfg.cutoffs) {
    if (t < 1 || t >= T) {
      errors.push_back("cutoffs: " + std::to_string(t) + " must lie in [1, horizon)");
    } else if (!seen.insert(t).second) {
      errors.push_back("cutoffs: duplicate cutoff " + std::to_string(t));
    }
  }
  if (cfg.seeds.empty()) errors.push_back("seeds: at least one seed is required");
  if (std::set<std::uint64_t>(cfg.seeds.begin(), cfg.seeds.end()).size() != cfg.seeds.size()) {
    errors.push_back("seeds: duplicate seeds");
  }
  if (cfg.gamma && !(*cfg.gamma >= 0.0 && *cfg.gamma < 1.0)) errors.push_back("gamma: must lie in [0, 1)");
  if (cfg.tau) {
    if (*cfg.tau < 1) errors.push_back("tau: must be >= 1");
    if (!cfg.gamma) errors.push_back("tau: only meaningful with gamma");
    for (long t : cfg.cutoffs) {
      if (t >= 1 && t < T && *cfg.tau > T - t) {
        errors.push_back("tau: exceeds horizon - cutoff for cutoff " + std::to_string(t));
        break;
      }
    }
  }

  if (L.kind == LearnerKind::map || L.kind == LearnerKind::prospective_map) {
    if (!(L.alpha > 0.0 && L.beta > 0.0 && L.alpha + L.beta > 2.0)) {
      errors.push_back("alpha/beta: need alpha, beta > 0 and alpha + beta > 2");
    }
  }
  if (L.kind == LearnerKind::q_agent) {
    if (!controlled) errors.push_back("learner: q_agent needs a controlled_markov process");
    if (!cfg.gamma) errors.push_back("gamma: q_agent needs a discount");
    if (!(L.epsilon >= 0.0 && L.epsilon <= 1.0)) errors.push_back("epsilon: must lie in [0, 1]");
    for (long t : cfg.cutoffs) {
      if (t < 2) {
        errors.push_back("cutoffs: q_agent needs cutoffs >= 2");
        break;
      }
    }
  }
  if (controlled && L.kind != LearnerKind::q_agent && L.kind != LearnerKind::mle &&
      L.kind != LearnerKind::markov_mle && L.kind != LearnerKind::chance) {
    errors.push_back("learner: controlled_markov supports q_agent, mle, markov_mle and chance");
  }
  if (L.kind == LearnerKind::markov_mle) {
    if (!is_markov(cfg.process.kind)) errors.push_back("learner: markov_mle needs a Markov label process");
    for (long t : cfg.cutoffs) {
      if (t < 2) {
        errors.push_back("cutoffs: markov_mle needs cutoffs >= 2");
        break;
      }
    }
  }
  if ((L.kind == LearnerKind::parity_mle || L.kind == LearnerKind::mle || L.kind == LearnerKind::map ||
       L.kind == LearnerKind::prospective_map) &&
      !is_label_only(cfg.process.kind)) {
    errors.push_back("learner: " + learner_kind_name(L.kind) + " needs a label-only process");
  }
  if (is_neural(L.kind)) {
    const auto& tc = L.train;
    if (!(tc.learning_rate > 0.0)) errors.push_back("lr: must be positive");
    if (tc.epochs < 1) errors.push_back("epochs: must be >= 1");
    if (tc.batch_size < 1) errors.push_back("batch_size: must be >= 1");
    if (!(tc.momentum >= 0.0 && tc.momentum < 1.0)) errors.push_back("momentum: must lie in [0, 1)");
    if (!(tc.weight_decay >= 0.0)) errors.push_back("weight_decay: must be non-negative");
    if (!(tc.lr_floor_fraction >= 0.0 && tc.lr_floor_fraction <= 1.0)) errors.push_back("lr_floor: must lie in [0, 1]");
    for (int h : tc.hidden) {
      if (h < 1) {
        errors.push_back("hidden: layer widths must be positive");
        break;
      }
    }
    if (L.embed.d < 0 || L.embed.d % 2 != 0) errors.push_back("embed_dim: must be even and non-negative");
    if (L.online_window < 1) errors.push_back("online_window: must be >= 1");
    if (controlled) errors.push_back("learner: neural learners need an uncontrolled process");
  }
  return errors;
}

CellContext make_cell_context(const ExperimentConfig& cfg, long cutoff, std::uint64_t seed) {
  CellContext ctx;
  ctx.cutoff = cutoff;
  ctx.seed = seed;
  ctx.data_seed = hash_combine(cfg.master_seed, seed);
  ctx.cell_seed = hash_combine(ctx.data_seed, static_cast<std::uint64_t>(cutoff));
  return ctx;
}

PredictorSequence fit_learner(const LearnerConfig& L, const Realization& prefix, const CellContext& ctx) {
  auto labels = prefix.labels();
  switch (L.kind) {
    case LearnerKind::mle: return fit_mle_threshold(labels);
    case LearnerKind::map: return fit_map(labels, BetaPrior(L.alpha, L.beta));
    case LearnerKind::prospective_map: return fit_prospective_map(labels, BetaPrior(L.alpha, L.beta));
    case LearnerKind::parity_mle: return fit_parity_mle(labels, L.tie_known);
    case LearnerKind::markov_mle: return fit_markov_mle(labels);
    case LearnerKind::chance: return chance_predictor(2);
    case LearnerKind::table_erm: return fit_table_erm(prefix, false);
    case LearnerKind::parity_table_erm: return fit_table_erm(prefix, true);
    case LearnerKind::prospective_erm:
    case LearnerKind::follow_the_leader: {
      TrainConfig tc = L.train;
      tc.seed = hash_combine(ctx.cell_seed, L.train.seed);
      auto mode = L.kind == LearnerKind::prospective_erm ? ErmMode::prospective : ErmMode::time_agnostic;
      return train_erm(prefix, mode, tc, L.embed);
    }
    case LearnerKind::online_sgd: {
      TrainConfig tc = L.train;
      tc.seed = hash_combine(ctx.cell_seed, L.train.seed);
      return train_online_sgd(prefix, tc, L.online_window);
    }
    case LearnerKind::q_agent: throw std::invalid_argument("q_agent is fitted through interaction, not from a realization");
  }
  throw std::logic_error("unknown learner kind");
}

ExperimentError::ExperimentError(long cutoff, std::uint64_t seed, const std::string& what)
    : std::runtime_error("cell (cutoff " + std::to_string(cutoff) + ", seed " + std::to_string(seed) + "): " + what),
      cutoff_(cutoff),
      seed_(seed) {}

// ---------------------------------------------------------------------------
// Controlled chains

std::vector<MdpTransition> collect_mdp_history(const ControlledMarkov& chain, long t, double gamma, bool q_agent,
                                               double epsilon, std::uint64_t data_seed, std::uint64_t cell_seed) {
  Rng first = Rng::stream(data_seed, StreamTag::data, 1);
  int y = first.bernoulli(0.5) ? 1 : 0;
  Rng explore = Rng::stream(cell_seed, StreamTag::explore);
  Rng tiebreak = Rng::stream(cell_seed, StreamTag::tiebreak, 1);
  std::vector<MdpTransition> history;
  history.reserve(static_cast<std::size_t>(std::max(t - 1, 0L)));
  for (long s = 2; s <= t; ++s) {
    int action;
    if (q_agent && !explore.bernoulli(epsilon)) {
      QAgentModel m = fit_q_model(history, gamma);
      action = greedy_action(m.q, y, tiebreak);
    } else {
      action = explore.bernoulli(0.5) ? 1 : 0;
    }
    Rng step = Rng::stream(data_seed, StreamTag::data, static_cast<std::uint64_t>(s));
    int next = mdp_step(chain, y, action, step);
    history.push_back({y, action, next});
    y = next;
  }
  return history;
}

double closed_loop_risk(const PredictorSequence& pred, const ControlledMarkov& chain, int y_t, long t, long T,
                        std::optional<double> gamma, std::optional<long> tau, std::uint64_t data_seed, Rng& tiebreak) {
  long steps = gamma ? tau.value_or(std::min(200L, T - t)) : T - t;
  if (steps < 1) throw std::invalid_argument("empty evaluation window");
  std::vector<double> w = gamma ? discount_weights(*gamma, steps) : std::vector<double>();
  const double one[1] = {1.0};
  int y = y_t;
  double acc = 0.0;
  for (long k = 1; k <= steps; ++k) {
    long s = t + k;
    int h = pred.predict(s, one, tiebreak);
    Rng step = Rng::stream(data_seed, StreamTag::data, static_cast<std::uint64_t>(s));
    y = mdp_step(chain, y, h, step);
    double err = h != y ? 1.0 : 0.0;
    acc += gamma ? w[static_cast<std::size_t>(k - 1)] * err : err;
  }
  return gamma ? acc : acc / static_cast<double>(steps);
}

}  // namespace prolearn
