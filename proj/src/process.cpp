#include "prolearn/process.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "overloaded.hpp"
#include "prolearn/analytic.hpp"

namespace prolearn {

namespace {

bool is_probability(double p) { return p >= 0.0 && p <= 1.0; }

void check_probability(double p, const std::string& field, std::vector<std::string>& errors) {
  if (!is_probability(p)) {
    std::ostringstream os;
    os << field << ": probability must lie in [0, 1], got " << p;
    errors.push_back(os.str());
  }
}

// Square index 0..3 for S1=(+,+), S2=(+,-), S3=(-,-), S4=(-,+).
int quadrant_square(std::span<const double> x) {
  bool right = x[0] > 0.0;
  bool up = x[1] > 0.0;
  if (right) return up ? 0 : 1;
  return up ? 3 : 2;
}

double prop1_probability(const Prop1Task& task, double x) {
  double th = task.theta;
  if (!task.three_point) {
    double p_pos = task.which == 1 ? th : 1.0 - th;  // P(y=1 | x=1)
    return x > 0.0 ? p_pos : 1.0 - p_pos;
  }
  if (task.which == 1) return x <= 0.0 ? th : 1.0 - th;
  return x >= 0.0 ? 1.0 - th : th;
}

double gaussian_density_ratio(const GaussianFld& g, double x) {
  // P(y=1 | x) for equal class priors.
  double shift = g.delta * g.parity;
  double z1 = (x - (g.mu + shift)) / g.sigma;
  double z0 = (x - (-g.mu + shift)) / g.sigma;
  // 1 / (1 + exp((z1^2 - z0^2) / 2))
  return 1.0 / (1.0 + std::exp(0.5 * (z1 * z1 - z0 * z0)));
}

const TaskDistribution& prop1_task_for(long t, double theta, bool three_point, TaskDistribution& slot) {
  slot = Prop1Task{t % 2 == 1 ? 1 : 2, theta, three_point};
  return slot;
}

}  // namespace

// ---------------------------------------------------------------------------
// Task distributions

std::array<int, 4> default_quadrant_labels(int task_id) {
  switch (task_id) {
    case 1: return {1, 1, 0, 0};
    case 2: return {0, 1, 1, 0};
    case 3: return {0, 0, 1, 1};
    case 4: return {1, 0, 0, 1};
    default: throw std::invalid_argument("quadrant task id must be in 1..4");
  }
}

Quadrant2D make_quadrant_task(int task_id) { return Quadrant2D{task_id, default_quadrant_labels(task_id)}; }

int class_count(const TaskDistribution&) { return 2; }

int input_dim(const TaskDistribution& task) {
  return std::holds_alternative<Quadrant2D>(task) ? 2 : 1;
}

void validate(const TaskDistribution& task, std::vector<std::string>& errors) {
  std::visit(overloaded{
                 [&](const Flip1D& f) {
                   if (f.task_id != 1 && f.task_id != 2) errors.push_back("flip1d: task id must be 1 or 2");
                 },
                 [&](const Quadrant2D& q) {
                   if (q.task_id < 1 || q.task_id > 4) errors.push_back("quadrant2d: task id must be in 1..4");
                   for (int l : q.labels) {
                     if (l != 0 && l != 1) {
                       errors.push_back("quadrant2d: square labels must be 0 or 1");
                       break;
                     }
                   }
                 },
                 [&](const Prop1Task& p) {
                   if (p.which != 1 && p.which != 2) errors.push_back("prop1: distribution must be 1 or 2");
                   check_probability(p.theta, "prop1.theta", errors);
                 },
                 [&](const GaussianFld& g) {
                   if (!(g.sigma > 0.0)) errors.push_back("fld: sigma must be positive");
                   if (g.parity != 0 && g.parity != 1) errors.push_back("fld: parity must be 0 or 1");
                   if (!std::isfinite(g.mu) || !std::isfinite(g.delta)) errors.push_back("fld: mu and delta must be finite");
                 },
             },
             task);
}

double label_probability(const TaskDistribution& task, std::span<const double> x) {
  return std::visit(overloaded{
                        [&](const Flip1D& f) {
                          bool neg = x[0] < 0.0;
                          return (f.task_id == 1) == neg ? 1.0 : 0.0;
                        },
                        [&](const Quadrant2D& q) { return static_cast<double>(q.labels[quadrant_square(x)]); },
                        [&](const Prop1Task& p) { return prop1_probability(p, x[0]); },
                        [&](const GaussianFld& g) { return gaussian_density_ratio(g, x[0]); },
                    },
                    task);
}

double label_marginal(const TaskDistribution& task) {
  return std::visit(overloaded{
                        [](const Flip1D&) { return 0.5; },
                        [](const Quadrant2D& q) {
                          return (q.labels[0] + q.labels[1] + q.labels[2] + q.labels[3]) / 4.0;
                        },
                        [](const Prop1Task& p) {
                          if (!p.three_point) return 0.5;
                          double s = 0.0;
                          for (double xv : {-1.0, 0.0, 1.0}) s += prop1_probability(p, xv);
                          return s / 3.0;
                        },
                        [](const GaussianFld&) { return 0.5; },
                    },
                    task);
}

int sample_label(const TaskDistribution& task, std::span<const double> x, Rng& rng) {
  if (std::holds_alternative<Flip1D>(task) || std::holds_alternative<Quadrant2D>(task)) {
    return label_probability(task, x) > 0.5 ? 1 : 0;
  }
  return rng.bernoulli(label_probability(task, x)) ? 1 : 0;
}

std::pair<std::vector<double>, int> sample_task_datum(const TaskDistribution& task, Rng& rng) {
  return std::visit(overloaded{
                        [&](const Flip1D& f) -> std::pair<std::vector<double>, int> {
                          double mag = rng.uniform(1.0, 2.0);
                          bool neg = rng.bernoulli(0.5);
                          int y = (f.task_id == 1) == neg ? 1 : 0;
                          return {{neg ? -mag : mag}, y};
                        },
                        [&](const Quadrant2D& q) -> std::pair<std::vector<double>, int> {
                          static constexpr double sx[4] = {1.0, 1.0, -1.0, -1.0};
                          static constexpr double sy[4] = {1.0, -1.0, -1.0, 1.0};
                          int sq = rng.uniform_int(4);
                          double a = rng.uniform(1.0, 2.0);
                          double b = rng.uniform(1.0, 2.0);
                          return {{sx[sq] * a, sy[sq] * b}, q.labels[sq]};
                        },
                        [&](const Prop1Task& p) -> std::pair<std::vector<double>, int> {
                          double xv = p.three_point ? rng.uniform_int(3) - 1.0 : (rng.bernoulli(0.5) ? 1.0 : -1.0);
                          int y = rng.bernoulli(prop1_probability(p, xv)) ? 1 : 0;
                          return {{xv}, y};
                        },
                        [&](const GaussianFld& g) -> std::pair<std::vector<double>, int> {
                          int y = rng.bernoulli(0.5) ? 1 : 0;
                          double s = y == 1 ? 1.0 : -1.0;
                          double xv = s * g.mu + g.delta * g.parity + g.sigma * rng.normal();
                          return {{xv}, y};
                        },
                    },
                    task);
}

// ---------------------------------------------------------------------------
// Process specs

std::string kind_name(const ProcessKind& kind) {
  return std::visit(overloaded{
                        [](const IidBernoulli&) { return std::string("iid_bernoulli"); },
                        [](const AlternatingBernoulli&) { return std::string("alternating_bernoulli"); },
                        [](const TwoStateMarkov&) { return std::string("two_state_markov"); },
                        [](const ControlledMarkov&) { return std::string("controlled_markov"); },
                        [](const PeriodicTasks&) { return std::string("periodic_tasks"); },
                        [](const HiddenMarkovTasks&) { return std::string("hidden_markov_tasks"); },
                        [](const Prop1Flip&) { return std::string("prop1_flip"); },
                        [](const Prop1ThreePoint&) { return std::string("prop1_three_point"); },
                    },
                    kind);
}

bool is_label_only(const ProcessKind& kind) {
  return std::holds_alternative<IidBernoulli>(kind) || std::holds_alternative<AlternatingBernoulli>(kind) ||
         std::holds_alternative<TwoStateMarkov>(kind) || std::holds_alternative<ControlledMarkov>(kind);
}

bool is_markov(const ProcessKind& kind) {
  return std::holds_alternative<TwoStateMarkov>(kind) || std::holds_alternative<ControlledMarkov>(kind);
}

int class_count(const ProcessSpec&) { return 2; }

int input_dim(const ProcessSpec& spec) {
  if (const auto* p = std::get_if<PeriodicTasks>(&spec.kind); p && !p->tasks.empty()) return input_dim(p->tasks[0]);
  if (const auto* h = std::get_if<HiddenMarkovTasks>(&spec.kind); h && !h->tasks.empty()) {
    return input_dim(h->tasks[0]);
  }
  return 1;
}

namespace {

void validate_task_list(const std::vector<TaskDistribution>& tasks, std::vector<std::string>& errors) {
  if (tasks.empty()) {
    errors.push_back("tasks: at least one task is required");
    return;
  }
  for (const auto& t : tasks) validate(t, errors);
  for (const auto& t : tasks) {
    if (input_dim(t) != input_dim(tasks[0])) {
      errors.push_back("tasks: all tasks must share the input dimension");
      break;
    }
  }
}

}  // namespace

std::vector<std::string> validation_errors(const ProcessSpec& spec) {
  std::vector<std::string> errors;
  if (spec.samples_per_step < 1) errors.push_back("samples_per_step: must be >= 1");
  if (spec.horizon < 1) errors.push_back("horizon: must be >= 1");

  std::visit(overloaded{
                 [&](const IidBernoulli& k) { check_probability(k.p, "p", errors); },
                 [&](const AlternatingBernoulli& k) { check_probability(k.p, "p", errors); },
                 [&](const TwoStateMarkov& k) {
                   check_probability(k.theta0, "theta0", errors);
                   check_probability(k.theta1, "theta1", errors);
                   if (spec.samples_per_step != 1) errors.push_back("samples_per_step: Markov chains emit one label per step");
                 },
                 [&](const ControlledMarkov& k) {
                   check_probability(k.theta0, "theta0", errors);
                   check_probability(k.theta1, "theta1", errors);
                   if (spec.samples_per_step != 1) errors.push_back("samples_per_step: Markov chains emit one label per step");
                 },
                 [&](const PeriodicTasks& k) {
                   validate_task_list(k.tasks, errors);
                   if (k.dwell < 1) errors.push_back("dwell: must be >= 1");
                 },
                 [&](const HiddenMarkovTasks& k) {
                   validate_task_list(k.tasks, errors);
                   if (k.regimes.empty()) errors.push_back("regimes: at least one regime is required");
                   std::size_t n_states = k.regimes.empty() ? 0 : k.regimes[0].tasks.size();
                   for (std::size_t r = 0; r < k.regimes.size(); ++r) {
                     const auto& reg = k.regimes[r];
                     std::string name = "regime" + std::to_string(r + 1);
                     if (reg.tasks.empty()) errors.push_back(name + ".tasks: at least one state is required");
                     if (reg.tasks.size() != n_states) errors.push_back(name + ".tasks: every regime needs the same number of states");
                     for (int ti : reg.tasks) {
                       if (ti < 0 || ti >= static_cast<int>(k.tasks.size())) {
                         errors.push_back(name + ".tasks: task index out of range");
                         break;
                       }
                     }
                     if (reg.transition.size() != reg.tasks.size()) {
                       errors.push_back(name + ".transition: must be square with one row per state");
                       continue;
                     }
                     for (const auto& row : reg.transition) {
                       double sum = 0.0;
                       bool ok = row.size() == reg.tasks.size();
                       for (double v : row) {
                         ok = ok && is_probability(v);
                         sum += v;
                       }
                       if (!ok || std::abs(sum - 1.0) > 1e-12) {
                         errors.push_back(name + ".transition: rows must be probability vectors summing to 1");
                         break;
                       }
                     }
                   }
                   if (k.regime_switch_period && *k.regime_switch_period < 1) errors.push_back("regime_switch_period: must be >= 1");
                   if (k.reset_period && *k.reset_period < 1) errors.push_back("reset_period: must be >= 1");
                 },
                 [&](const Prop1Flip& k) { check_probability(k.theta, "theta", errors); },
                 [&](const Prop1ThreePoint& k) { check_probability(k.theta, "theta", errors); },
             },
             spec.kind);
  return errors;
}

void validate(const ProcessSpec& spec) {
  auto errors = validation_errors(spec);
  if (errors.empty()) return;
  std::string msg = "invalid process spec:";
  for (const auto& e : errors) msg += "\n  " + e;
  throw std::invalid_argument(msg);
}

int periodic_task_index(const PeriodicTasks& p, long t) {
  return static_cast<int>(((t - 1) / p.dwell) % static_cast<long>(p.tasks.size()));
}

int hmm_regime_index(const HiddenMarkovTasks& h, long t) {
  if (!h.regime_switch_period) return 0;
  return static_cast<int>(((t - 1) / *h.regime_switch_period) % static_cast<long>(h.regimes.size()));
}

// ---------------------------------------------------------------------------
// Realizations

TimeIndexedSample Realization::operator[](std::size_t i) const {
  auto in = input(i);
  return TimeIndexedSample{std::vector<double>(in.begin(), in.end()), y[i], time_of(i)};
}

Realization Realization::prefix(long t) const {
  Realization out;
  out.dim = dim;
  out.samples_per_step = samples_per_step;
  out.first_time = first_time;
  long keep = std::clamp(t - first_time + 1, 0L, steps());
  std::size_t n = static_cast<std::size_t>(keep) * samples_per_step;
  out.x.assign(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(n * dim));
  out.y.assign(y.begin(), y.begin() + static_cast<std::ptrdiff_t>(n));
  out.state.assign(state.begin(), state.begin() + keep);
  return out;
}

Realization Realization::suffix(long t) const {
  Realization out;
  out.dim = dim;
  out.samples_per_step = samples_per_step;
  long skip = std::clamp(t - first_time + 1, 0L, steps());
  out.first_time = first_time + skip;
  std::size_t n = static_cast<std::size_t>(skip) * samples_per_step;
  out.x.assign(x.begin() + static_cast<std::ptrdiff_t>(n * dim), x.end());
  out.y.assign(y.begin() + static_cast<std::ptrdiff_t>(n), y.end());
  out.state.assign(state.begin() + skip, state.end());
  return out;
}

namespace {

void push_task_samples(const TaskDistribution& task, int n, Rng& rng, Realization& out) {
  for (int i = 0; i < n; ++i) {
    auto [xv, yv] = sample_task_datum(task, rng);
    out.x.insert(out.x.end(), xv.begin(), xv.end());
    out.y.push_back(yv);
  }
}

int hmm_next_state(const HiddenMarkovTasks& h, long t, int prev, Rng& rng) {
  if (t == 1) return 0;
  if (h.reset_period && (t - 1) % *h.reset_period == 0) return 0;
  const auto& row = h.regimes[hmm_regime_index(h, t)].transition[prev];
  double u = rng.uniform();
  double acc = 0.0;
  for (std::size_t j = 0; j < row.size(); ++j) {
    acc += row[j];
    if (u < acc) return static_cast<int>(j);
  }
  // Rounding in the row sum; fall back to the last state with positive mass.
  for (std::size_t j = row.size(); j-- > 0;) {
    if (row[j] > 0.0) return static_cast<int>(j);
  }
  return prev;
}

}  // namespace

Realization sample_realization(const ProcessSpec& spec, std::uint64_t seed) {
  if (std::holds_alternative<ControlledMarkov>(spec.kind)) {
    throw std::invalid_argument("controlled_markov depends on actions; use mdp_step");
  }
  validate(spec);

  Realization out;
  out.dim = input_dim(spec);
  out.samples_per_step = spec.samples_per_step;
  out.first_time = 1;
  const int n = spec.samples_per_step;
  const auto total = static_cast<std::size_t>(spec.horizon) * n;
  out.x.reserve(total * out.dim);
  out.y.reserve(total);
  out.state.reserve(spec.horizon);

  int prev = 0;
  TaskDistribution prop1_slot;
  for (long t = 1; t <= spec.horizon; ++t) {
    Rng rng = Rng::stream(seed, StreamTag::data, static_cast<std::uint64_t>(t));
    std::visit(overloaded{
                   [&](const IidBernoulli& k) {
                     for (int i = 0; i < n; ++i) {
                       out.x.push_back(1.0);
                       out.y.push_back(rng.bernoulli(k.p) ? 1 : 0);
                     }
                     out.state.push_back(0);
                   },
                   [&](const AlternatingBernoulli& k) {
                     double q = t % 2 == 1 ? k.p : 1.0 - k.p;
                     for (int i = 0; i < n; ++i) {
                       out.x.push_back(1.0);
                       out.y.push_back(rng.bernoulli(q) ? 1 : 0);
                     }
                     out.state.push_back(0);
                   },
                   [&](const TwoStateMarkov& k) {
                     int yv;
                     if (t == 1) {
                       double q = k.theta0 == k.theta1 ? k.theta0 : 0.5;
                       yv = rng.bernoulli(q) ? 1 : 0;
                     } else {
                       double stay = prev == 0 ? k.theta0 : k.theta1;
                       yv = rng.bernoulli(stay) ? prev : 1 - prev;
                     }
                     out.x.push_back(1.0);
                     out.y.push_back(yv);
                     out.state.push_back(yv);
                     prev = yv;
                   },
                   [&](const ControlledMarkov&) {},
                   [&](const PeriodicTasks& k) {
                     int ti = periodic_task_index(k, t);
                     push_task_samples(k.tasks[ti], n, rng, out);
                     out.state.push_back(ti);
                   },
                   [&](const HiddenMarkovTasks& k) {
                     int local = hmm_next_state(k, t, prev, rng);
                     int ti = k.regimes[hmm_regime_index(k, t)].tasks[local];
                     push_task_samples(k.tasks[ti], n, rng, out);
                     out.state.push_back(ti);
                     prev = local;
                   },
                   [&](const Prop1Flip& k) {
                     push_task_samples(prop1_task_for(t, k.theta, false, prop1_slot), n, rng, out);
                     out.state.push_back(t % 2 == 1 ? 0 : 1);
                   },
                   [&](const Prop1ThreePoint& k) {
                     push_task_samples(prop1_task_for(t, k.theta, true, prop1_slot), n, rng, out);
                     out.state.push_back(t % 2 == 1 ? 0 : 1);
                   },
               },
               spec.kind);
  }
  return out;
}

std::vector<double> marginal(const ProcessSpec& spec, long t, std::optional<LabelCondition> condition) {
  validate(spec);
  if (t < 1) throw std::invalid_argument("t must be >= 1");
  auto binary = [](double q) { return std::vector<double>{1.0 - q, q}; };

  return std::visit(
      overloaded{
          [&](const IidBernoulli& k) { return binary(k.p); },
          [&](const AlternatingBernoulli& k) { return binary(t % 2 == 1 ? k.p : 1.0 - k.p); },
          [&](const TwoStateMarkov& k) {
            if (t == 1) return binary(k.theta0 == k.theta1 ? k.theta0 : 0.5);
            if (!condition) throw std::invalid_argument("two_state_markov: marginal at t > 1 needs a conditioning label");
            if (condition->time >= t || condition->time < 1) {
              throw std::invalid_argument("conditioning time must lie in [1, t)");
            }
            auto d = markov_n_step_dist(TransitionModel(k.theta0, k.theta1), condition->label, t - condition->time);
            return std::vector<double>{d[0], d[1]};
          },
          [&](const ControlledMarkov&) -> std::vector<double> {
            throw std::invalid_argument("controlled_markov: marginal depends on the actions taken");
          },
          [&](const PeriodicTasks& k) { return binary(label_marginal(k.tasks[periodic_task_index(k, t)])); },
          [&](const HiddenMarkovTasks& k) {
            std::size_t m = k.regimes[0].tasks.size();
            std::vector<double> dist(m, 0.0);
            dist[0] = 1.0;
            for (long s = 2; s <= t; ++s) {
              std::vector<double> next(m, 0.0);
              if (k.reset_period && (s - 1) % *k.reset_period == 0) {
                next[0] = 1.0;
              } else {
                const auto& tr = k.regimes[hmm_regime_index(k, s)].transition;
                for (std::size_t i = 0; i < m; ++i)
                  for (std::size_t j = 0; j < m; ++j) next[j] += dist[i] * tr[i][j];
              }
              dist = std::move(next);
            }
            const auto& reg = k.regimes[hmm_regime_index(k, t)];
            double q = 0.0;
            for (std::size_t i = 0; i < m; ++i) q += dist[i] * label_marginal(k.tasks[reg.tasks[i]]);
            return binary(q);
          },
          [&](const Prop1Flip& k) { return binary(label_marginal(Prop1Task{t % 2 == 1 ? 1 : 2, k.theta, false})); },
          [&](const Prop1ThreePoint& k) {
            return binary(label_marginal(Prop1Task{t % 2 == 1 ? 1 : 2, k.theta, true}));
          },
      },
      spec.kind);
}

int mdp_step(const ControlledMarkov& chain, int y_current, int action, Rng& rng) {
  if ((y_current != 0 && y_current != 1) || (action != 0 && action != 1)) {
    throw std::invalid_argument("mdp_step: state and action must be 0 or 1");
  }
  double stay = action == 0 ? chain.theta0 : chain.theta1;
  return rng.bernoulli(stay) ? y_current : 1 - y_current;
}

int mdp_step(const ProcessSpec& spec, int y_current, int action, Rng& rng) {
  const auto* chain = std::get_if<ControlledMarkov>(&spec.kind);
  if (!chain) throw std::invalid_argument("mdp_step requires a controlled_markov process");
  return mdp_step(*chain, y_current, action, rng);
}

}  // namespace prolearn
