#include "prolearn/tabular.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <string>

namespace prolearn {

namespace {

long count_ones(std::span<const int> labels) {
  long ones = 0;
  for (int y : labels) ones += y;
  return ones;
}

// Threshold ones/n at 1/2 using exact integer comparison.
int threshold_counts(long ones, long n, Rng& tiebreak) {
  if (2 * ones > n) return 1;
  if (2 * ones < n) return 0;
  return tiebreak.bernoulli(0.5) ? 1 : 0;
}

}  // namespace

BetaPrior::BetaPrior(double a, double b) : alpha(a), beta(b) {
  if (!(a > 0.0 && b > 0.0)) throw std::invalid_argument("beta prior parameters must be positive");
  if (!(a + b > 2.0)) throw std::invalid_argument("beta prior needs alpha + beta > 2");
}

PredictorSequence fit_mle_threshold(std::span<const int> labels) {
  if (labels.empty()) throw std::invalid_argument("fit_mle_threshold: no labels");
  long ones = count_ones(labels);
  long n = static_cast<long>(labels.size());
  return make_predictor([ones, n](long, std::span<const double>, Rng& rng) { return threshold_counts(ones, n, rng); },
                        {"mle", {{"p_hat", static_cast<double>(ones) / n}}});
}

double map_estimate(std::span<const int> labels, const BetaPrior& prior) {
  double t = static_cast<double>(labels.size());
  return (prior.alpha + count_ones(labels) - 1.0) / (prior.alpha + prior.beta + t - 2.0);
}

PredictorSequence fit_map(std::span<const int> labels, const BetaPrior& prior) {
  double p = map_estimate(labels, prior);
  return make_predictor([p](long, std::span<const double>, Rng& rng) { return threshold_half(p, rng); },
                        {"map", {{"p_hat", p}, {"alpha", prior.alpha}, {"beta", prior.beta}}});
}

double prospective_map_forecast(double p_hat, long t, long t_prime, const BetaPrior& prior) {
  if (t < 1) throw std::invalid_argument("prospective_map_forecast: t must be >= 1");
  if (t_prime < t) throw std::invalid_argument("prospective_map_forecast: t' must not precede t");
  double a = prior.alpha - 1.0;
  double b = prior.beta - 1.0;
  // The increments telescope: sum_{s=t}^{t'-1} dp(s) = f(t'-1) - f(t-1).
  auto f = [&](double s) { return (a + s * p_hat) / (a + b + s); };
  double forecast = p_hat + f(static_cast<double>(t_prime - 1)) - f(static_cast<double>(t - 1));
  return std::clamp(forecast, 0.0, 1.0);
}

PredictorSequence fit_prospective_map(std::span<const int> labels, const BetaPrior& prior) {
  if (labels.empty()) throw std::invalid_argument("fit_prospective_map: no labels");
  double p = map_estimate(labels, prior);
  long t = static_cast<long>(labels.size());
  return make_predictor(
      [p, t, prior](long tp, std::span<const double>, Rng& rng) {
        double q = tp <= t ? p : prospective_map_forecast(p, t, tp, prior);
        return threshold_half(q, rng);
      },
      {"prospective_map", {{"p_hat", p}, {"alpha", prior.alpha}, {"beta", prior.beta}}});
}

PredictorSequence fit_parity_mle(std::span<const int> labels, bool tie_known) {
  long ones_odd = 0, n_odd = 0, ones_even = 0, n_even = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (i % 2 == 0) {  // time i+1 is odd
      ones_odd += labels[i];
      ++n_odd;
    } else {
      ones_even += labels[i];
      ++n_even;
    }
  }
  if (tie_known) {
    long pooled = ones_odd + (n_even - ones_even);
    long n = n_odd + n_even;
    return make_predictor(
        [pooled, n](long tp, std::span<const double>, Rng& rng) {
          int odd = threshold_counts(pooled, n, rng);
          return tp % 2 == 1 ? odd : 1 - odd;
        },
        {"parity_mle", {{"tie_known", 1.0}, {"p_hat", n > 0 ? static_cast<double>(pooled) / n : 0.5}}});
  }
  return make_predictor(
      [=](long tp, std::span<const double>, Rng& rng) {
        return tp % 2 == 1 ? threshold_counts(ones_odd, n_odd, rng) : threshold_counts(ones_even, n_even, rng);
      },
      {"parity_mle",
       {{"tie_known", 0.0},
        {"p_hat_odd", n_odd > 0 ? static_cast<double>(ones_odd) / n_odd : 0.5},
        {"p_hat_even", n_even > 0 ? static_cast<double>(ones_even) / n_even : 0.5}}});
}

TransitionModel estimate_transition(std::span<const int> labels) {
  // Smoothing keeps this defined with no transitions at all.
  long n[2] = {0, 0}, stay[2] = {0, 0};
  for (std::size_t i = 0; i + 1 < labels.size(); ++i) {
    int from = labels[i];
    if ((from != 0 && from != 1) || (labels[i + 1] != 0 && labels[i + 1] != 1)) {
      throw std::invalid_argument("estimate_transition: labels must be 0 or 1");
    }
    ++n[from];
    if (labels[i + 1] == from) ++stay[from];
  }
  return TransitionModel((stay[0] + 1.0) / (n[0] + 2.0), (stay[1] + 1.0) / (n[1] + 2.0));
}

PredictorSequence fit_markov_mle(std::span<const int> labels) {
  if (labels.empty()) throw std::invalid_argument("fit_markov_mle: no labels");
  TransitionModel model = estimate_transition(labels);
  int y_t = labels.back();
  long t = static_cast<long>(labels.size());
  return make_predictor(
      [model, y_t, t](long tp, std::span<const double>, Rng& rng) {
        Dist2 pi = markov_n_step_dist(model, y_t, std::max(tp - t, 0L));
        return threshold_half(pi[1], rng);
      },
      {"markov_mle", {{"theta0_hat", model.theta0}, {"theta1_hat", model.theta1}}});
}

// ---------------------------------------------------------------------------
// Q agent

namespace {

Matrix2 bellman(const Matrix2& m0, const Matrix2& m1, const Matrix2& q, double gamma) {
  const Matrix2* law[2] = {&m0, &m1};
  double v[2] = {std::max(q[0][0], q[0][1]), std::max(q[1][0], q[1][1])};
  Matrix2 out{};
  for (int y = 0; y < 2; ++y) {
    for (int h = 0; h < 2; ++h) {
      double acc = 0.0;
      for (int yn = 0; yn < 2; ++yn) acc += (*law[h])[y][yn] * ((h == yn ? 1.0 : 0.0) + gamma * v[yn]);
      out[y][h] = acc;
    }
  }
  return out;
}

double sup_diff(const Matrix2& a, const Matrix2& b) {
  double d = 0.0;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) d = std::max(d, std::abs(a[i][j] - b[i][j]));
  return d;
}

}  // namespace

QTable q_value_iteration(const TransitionModel& action0, const TransitionModel& action1, double gamma, double tol,
                         int max_iters) {
  if (!(gamma >= 0.0 && gamma < 1.0)) throw std::invalid_argument("q_value_iteration: gamma must lie in [0, 1)");
  if (!(tol > 0.0)) throw std::invalid_argument("q_value_iteration: tol must be positive");
  // ||Q_{k+1} - Q*|| <= gamma / (1 - gamma) ||Q_{k+1} - Q_k||
  double stop = gamma > 0.0 ? tol * std::min(1.0, (1.0 - gamma) / gamma) : tol;
  Matrix2 m0 = action0.matrix(), m1 = action1.matrix();
  QTable out;
  out.gamma = gamma;
  Matrix2 q{};
  for (int k = 1; k <= max_iters; ++k) {
    Matrix2 next = bellman(m0, m1, q, gamma);
    double r = sup_diff(next, q);
    q = next;
    out.residuals.push_back(r);
    if (r <= stop) {
      out.q = q;
      out.iterations = k;
      return out;
    }
  }
  throw std::runtime_error("q_value_iteration: no convergence within " + std::to_string(max_iters) + " iterations");
}

QAgentModel fit_q_model(std::span<const MdpTransition> history, double gamma) {
  long n[2] = {0, 0}, stay[2] = {0, 0};
  for (const auto& tr : history) {
    ++n[tr.action];
    if (tr.y_next == tr.y) ++stay[tr.action];
  }
  double th0 = (stay[0] + 1.0) / (n[0] + 2.0);
  double th1 = (stay[1] + 1.0) / (n[1] + 2.0);
  QAgentModel m{TransitionModel(th0, th0), TransitionModel(th1, th1), {}};
  m.q = q_value_iteration(m.action0, m.action1, gamma);
  return m;
}

int greedy_action(const QTable& q, int y, Rng& tiebreak) { return argmax2(q.q[y][0], q.q[y][1], tiebreak); }

namespace {

class QAgentPredictor final : public Predictor {
 public:
  QAgentPredictor(QAgentModel model, int y_t, long t, Rng tiebreak) : model_(std::move(model)), t_(t) {
    belief_ = {y_t == 0 ? 1.0 : 0.0, y_t == 1 ? 1.0 : 0.0};
    rng_ = tiebreak;
    decisions_.reserve(kCached);
    for (int k = 0; k < kCached; ++k) decisions_.push_back(advance(belief_, rng_));
  }

  int predict(long tp, std::span<const double>, Rng&) const override {
    long k = std::max(tp - t_ - 1, 0L);
    if (k < kCached) return decisions_[k];
    Dist2 pi = belief_;
    Rng rng = rng_;
    int d = 0;
    for (long j = kCached; j <= k; ++j) d = advance(pi, rng);
    return d;
  }

 private:
  static constexpr int kCached = 4096;

  int advance(Dist2& pi, Rng& rng) const {
    const Matrix2& q = model_.q.q;
    double v0 = pi[0] * q[0][0] + pi[1] * q[1][0];
    double v1 = pi[0] * q[0][1] + pi[1] * q[1][1];
    int h = argmax2(v0, v1, rng);
    Matrix2 g = (h == 0 ? model_.action0 : model_.action1).matrix();
    pi = {pi[0] * g[0][0] + pi[1] * g[1][0], pi[0] * g[0][1] + pi[1] * g[1][1]};
    return h;
  }

  QAgentModel model_;
  long t_;
  Dist2 belief_{};
  Rng rng_;
  std::vector<int> decisions_;
};

}  // namespace

PredictorSequence fit_q_agent(std::span<const MdpTransition> history, double gamma, long t, Rng tiebreak) {
  if (history.empty()) throw std::invalid_argument("fit_q_agent: empty history");
  QAgentModel model = fit_q_model(history, gamma);
  LearnerInfo info{"q_agent",
                   {{"theta0_hat", model.action0.theta0}, {"theta1_hat", model.action1.theta0}, {"gamma", gamma}}};
  return PredictorSequence(std::make_shared<QAgentPredictor>(std::move(model), history.back().y_next, t, tiebreak),
                           std::move(info));
}

// ---------------------------------------------------------------------------
// Finite input alphabets

int TableHypothesis::operator()(double x) const {
  for (std::size_t i = 0; i < support.size(); ++i) {
    if (support[i] == x) return labels[i];
  }
  throw std::out_of_range("input outside the hypothesis support");
}

PredictorSequence table_predictor(TableHypothesis h, std::string kind) {
  LearnerInfo info{std::move(kind), {}};
  for (std::size_t i = 0; i < h.support.size(); ++i) {
    info.params.emplace_back("h(" + std::to_string(h.support[i]) + ")", h.labels[i]);
  }
  return make_predictor([h = std::move(h)](long, std::span<const double> x, Rng&) { return h(x[0]); },
                        std::move(info));
}

std::vector<PredictorSequence> sign_threshold_class() {
  std::vector<PredictorSequence> out;
  out.push_back(make_predictor([](long, std::span<const double>, Rng&) { return 0; }, {"predict_0", {}}));
  out.push_back(make_predictor([](long, std::span<const double>, Rng&) { return 1; }, {"predict_1", {}}));
  out.push_back(
      make_predictor([](long, std::span<const double> x, Rng&) { return x[0] > 0.0 ? 1 : 0; }, {"sign", {}}));
  out.push_back(
      make_predictor([](long, std::span<const double> x, Rng&) { return x[0] < 0.0 ? 1 : 0; }, {"neg_sign", {}}));
  return out;
}

std::vector<PredictorSequence> all_table_hypotheses(const std::vector<double>& support) {
  std::vector<PredictorSequence> out;
  std::size_t m = support.size();
  for (std::size_t mask = 0; mask < (std::size_t{1} << m); ++mask) {
    TableHypothesis h{support, std::vector<int>(m)};
    for (std::size_t i = 0; i < m; ++i) h.labels[i] = static_cast<int>((mask >> i) & 1U);
    out.push_back(table_predictor(std::move(h), "table"));
  }
  return out;
}

namespace {

struct Counts {
  long ones = 0;
  long n = 0;
};

class TableErmPredictor final : public Predictor {
 public:
  TableErmPredictor(std::array<std::map<double, Counts>, 2> tables, bool per_parity)
      : tables_(std::move(tables)), per_parity_(per_parity) {}

  int predict(long t, std::span<const double> x, Rng& rng) const override {
    const auto& table = tables_[per_parity_ ? static_cast<std::size_t>(t % 2) : 0];
    auto it = table.find(x[0]);
    if (it == table.end()) return rng.bernoulli(0.5) ? 1 : 0;
    return threshold_counts(it->second.ones, it->second.n, rng);
  }

 private:
  std::array<std::map<double, Counts>, 2> tables_;
  bool per_parity_;
};

}  // namespace

PredictorSequence fit_table_erm(const Realization& data, bool per_parity) {
  std::array<std::map<double, Counts>, 2> tables;
  for (std::size_t i = 0; i < data.size(); ++i) {
    std::size_t slot = per_parity ? static_cast<std::size_t>(data.time_of(i) % 2) : 0;
    auto& c = tables[slot][data.input(i)[0]];
    c.ones += data.y[i];
    ++c.n;
  }
  return PredictorSequence(std::make_shared<TableErmPredictor>(std::move(tables), per_parity),
                           {per_parity ? "parity_table_erm" : "table_erm", {}});
}

}  // namespace prolearn
