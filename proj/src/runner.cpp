#include <algorithm>
#include <cmath>
#include <exception>
#include <map>

#include "prolearn/eval.hpp"

namespace prolearn {

namespace {

struct Grid {
  std::vector<std::pair<long, std::uint64_t>> cells;  // cutoff-major
};

Grid make_grid(const ExperimentConfig& cfg) {
  Grid g;
  for (long t : cfg.cutoffs)
    for (auto s : cfg.seeds) g.cells.emplace_back(t, s);
  return g;
}

void check_config(const ExperimentConfig& cfg) {
  auto errors = validation_errors(cfg);
  if (errors.empty()) return;
  std::string msg = "invalid experiment '" + cfg.scenario + "':";
  for (const auto& e : errors) msg += "\n  " + e;
  throw std::invalid_argument(msg);
}

double evaluate_cell(const ExperimentConfig& cfg, const LearnerFactory& factory, const Realization* full, long cutoff,
                     std::uint64_t seed) {
  CellContext ctx = make_cell_context(cfg, cutoff, seed);
  Rng tiebreak = Rng::stream(ctx.cell_seed, StreamTag::tiebreak);
  const long T = cfg.process.horizon;

  if (const auto* chain = std::get_if<ControlledMarkov>(&cfg.process.kind)) {
    bool q = cfg.learner.kind == LearnerKind::q_agent;
    double gamma = cfg.gamma.value_or(0.0);
    auto history = collect_mdp_history(*chain, cutoff, gamma, q, cfg.learner.epsilon, ctx.data_seed, ctx.cell_seed);
    int y_t;
    if (history.empty()) {
      Rng first = Rng::stream(ctx.data_seed, StreamTag::data, 1);
      y_t = first.bernoulli(0.5) ? 1 : 0;
    } else {
      y_t = history.back().y_next;
    }
    std::optional<PredictorSequence> pred;
    if (q) {
      pred.emplace(fit_q_agent(history, gamma, cutoff, Rng::stream(ctx.cell_seed, StreamTag::tiebreak, 2)));
    } else {
      Realization labels;
      labels.first_time = 1;
      labels.y.push_back(history.empty() ? y_t : history.front().y);
      for (const auto& tr : history) labels.y.push_back(tr.y_next);
      labels.x.assign(labels.y.size(), 1.0);
      labels.state = labels.y;
      pred.emplace(factory(labels, ctx));
    }
    return closed_loop_risk(*pred, *chain, y_t, cutoff, T, cfg.gamma, cfg.tau, ctx.data_seed, tiebreak);
  }

  Realization prefix = full->prefix(cutoff);
  PredictorSequence pred = factory(prefix, ctx);
  if (cfg.gamma) {
    long tau = cfg.tau.value_or(std::min(200L, T - cutoff));
    return discounted_risk_hat(pred, *full, cutoff, *cfg.gamma, tau, tiebreak);
  }
  return prospective_risk_hat(pred, *full, cutoff, T, tiebreak);
}

std::vector<CellResult> run_grid(const ExperimentConfig& cfg, const LearnerFactory& factory, bool parallel) {
  check_config(cfg);
  const bool controlled = std::holds_alternative<ControlledMarkov>(cfg.process.kind);
  const auto n_seeds = static_cast<long>(cfg.seeds.size());

  // One realization per seed, shared read-only by every cutoff.
  std::vector<Realization> realizations(controlled ? 0 : cfg.seeds.size());
  std::vector<std::exception_ptr> seed_errors(cfg.seeds.size());
  if (!controlled) {
#pragma omp parallel for schedule(dynamic) if (parallel)
    for (long i = 0; i < n_seeds; ++i) {
      try {
        realizations[i] = sample_realization(cfg.process, hash_combine(cfg.master_seed, cfg.seeds[i]));
      } catch (...) {
        seed_errors[i] = std::current_exception();
      }
    }
    for (auto& e : seed_errors) {
      if (e) std::rethrow_exception(e);
    }
  }

  Grid grid = make_grid(cfg);
  const auto n_cells = static_cast<long>(grid.cells.size());
  std::vector<CellResult> results(grid.cells.size());
  std::vector<std::exception_ptr> errors(grid.cells.size());
#pragma omp parallel for schedule(dynamic) if (parallel)
  for (long c = 0; c < n_cells; ++c) {
    auto [cutoff, seed] = grid.cells[c];
    long seed_index = c % n_seeds;
    try {
      const Realization* full = controlled ? nullptr : &realizations[seed_index];
      results[c] = {cutoff, seed, evaluate_cell(cfg, factory, full, cutoff, seed)};
    } catch (const std::exception& ex) {
      errors[c] = std::make_exception_ptr(ExperimentError(cutoff, seed, ex.what()));
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return results;
}

LearnerFactory builtin_factory(const ExperimentConfig& cfg) {
  LearnerConfig learner = cfg.learner;
  return [learner](const Realization& prefix, const CellContext& ctx) { return fit_learner(learner, prefix, ctx); };
}

}  // namespace

std::vector<CellResult> run_cells(const ExperimentConfig& cfg, const LearnerFactory& factory) {
  return run_grid(cfg, factory, true);
}

std::vector<CellResult> run_cells_serial(const ExperimentConfig& cfg, const LearnerFactory& factory) {
  return run_grid(cfg, factory, false);
}

RiskCurve aggregate(const ExperimentConfig& cfg, const std::vector<CellResult>& cells) {
  std::map<long, std::vector<std::pair<std::uint64_t, double>>> by_cutoff;
  for (const auto& c : cells) by_cutoff[c.cutoff].emplace_back(c.seed, c.risk);

  RiskCurve curve;
  curve.scenario = cfg.scenario;
  curve.learner = learner_id(cfg.learner);
  curve.gamma = cfg.gamma;
  for (auto& [t, runs] : by_cutoff) {
    // Sorting by seed fixes the summation order.
    std::sort(runs.begin(), runs.end());
    double sum = 0.0;
    for (const auto& r : runs) sum += r.second;
    const auto n = static_cast<double>(runs.size());
    double mean = sum / n;
    double ss = 0.0;
    for (const auto& r : runs) ss += (r.second - mean) * (r.second - mean);
    double sd = runs.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
    curve.points.push_back({t, mean, sd, static_cast<int>(runs.size())});
  }
  return curve;
}

RiskCurve run_experiment(const ExperimentConfig& cfg) { return run_experiment(cfg, builtin_factory(cfg)); }

RiskCurve run_experiment(const ExperimentConfig& cfg, const LearnerFactory& factory) {
  return aggregate(cfg, run_cells(cfg, factory));
}

RiskCurve run_experiment_serial(const ExperimentConfig& cfg) {
  return run_experiment_serial(cfg, builtin_factory(cfg));
}

RiskCurve run_experiment_serial(const ExperimentConfig& cfg, const LearnerFactory& factory) {
  return aggregate(cfg, run_cells_serial(cfg, factory));
}

}  // namespace prolearn
