#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "prolearn/eval.hpp"
#include "prolearn/tabular.hpp"

using namespace prolearn;

namespace {

const std::vector<double> one{1.0};

std::vector<int> predictions(const PredictorSequence& p, long from, long to, std::uint64_t seed = 1) {
  Rng tb(seed);
  std::vector<int> out;
  for (long t = from; t <= to; ++t) out.push_back(p(t, one, tb));
  return out;
}

std::vector<int> repeat(const std::vector<int>& v, int times) {
  std::vector<int> out;
  for (int r = 0; r < times; ++r) out.insert(out.end(), v.begin(), v.end());
  return out;
}

// Bellman operator written out longhand.
Matrix2 bellman(const Matrix2& q, double t0, double t1, double gamma) {
  double stay[2] = {t0, t1};
  Matrix2 out{};
  for (int y = 0; y < 2; ++y) {
    for (int h = 0; h < 2; ++h) {
      double v = 0.0;
      for (int yn = 0; yn < 2; ++yn) {
        double pr = yn == y ? stay[h] : 1.0 - stay[h];
        v += pr * ((h == yn ? 1.0 : 0.0) + gamma * std::max(q[yn][0], q[yn][1]));
      }
      out[y][h] = v;
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

TEST_CASE("mle threshold") {
  auto all_ones = fit_mle_threshold(std::vector<int>{1, 1, 1, 1});
  CHECK(predictions(all_ones, 5, 50) == std::vector<int>(46, 1));

  auto tie = fit_mle_threshold(std::vector<int>{1, 0, 1, 0});
  auto a = predictions(tie, 5, 4004, 3);
  auto b = predictions(tie, 5, 4004, 3);
  CHECK(a == b);
  double ones = 0;
  for (int v : a) ones += v;
  CHECK(std::abs(ones / a.size() - 0.5) < 3 * std::sqrt(0.25 / a.size()));
}

TEST_CASE("scaling counts leaves threshold predictions unchanged") {
  const BetaPrior prior(1.5, 1.5);
  for (const auto& labels : {std::vector<int>{1, 0, 0}, std::vector<int>{1, 0, 1, 0}, std::vector<int>{1, 1, 0, 1, 1}}) {
    for (int c : {2, 5}) {
      auto big = repeat(labels, c);
      CHECK(predictions(fit_mle_threshold(labels), 100, 300) == predictions(fit_mle_threshold(big), 100, 300));
    }
  }
  // parity learner: scale each parity's counts by repeating the sequence
  for (const auto& labels : {std::vector<int>{1, 0, 0, 1}, std::vector<int>{1, 1, 0, 0}}) {
    for (bool tied : {true, false}) {
      CHECK(predictions(fit_parity_mle(labels, tied), 100, 300) ==
            predictions(fit_parity_mle(repeat(labels, 3), tied), 100, 300));
    }
  }
  (void)prior;
}

TEST_CASE("map estimate") {
  BetaPrior prior(12, 16);
  CHECK(map_estimate(std::vector<int>{}, prior) == doctest::Approx(11.0 / 26.0));
  CHECK(map_estimate(std::vector<int>{1, 1, 0}, prior) == doctest::Approx((12.0 + 2 - 1) / (12 + 16 + 3 - 2)));
  const double eps = 1e-9;
  std::vector<int> labels{1, 0, 1, 1, 0, 1, 1};
  CHECK(map_estimate(labels, BetaPrior(1 + eps, 1 + eps)) == doctest::Approx(5.0 / 7.0).epsilon(1e-8));
  CHECK_THROWS_AS(BetaPrior(1.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(BetaPrior(0.0, 5.0), std::invalid_argument);
}

TEST_CASE("map converges more slowly than mle when the prior points the wrong way") {
  // The Beta(12,16) mode 11/26 sits below 1/2, so a p = 0.8 process is where
  // the prior hurts.  Constant prediction h has risk p if h = 0, 1 - p if h = 1.
  const double p = 0.8;
  BetaPrior prior(12, 16);
  for (long t : {4L, 10L, 20L}) {
    double mle = 0, map = 0;
    const int seeds = 4000;
    for (int s = 0; s < seeds; ++s) {
      auto r = sample_realization(ProcessSpec{IidBernoulli{p}, 1, t}, static_cast<std::uint64_t>(s));
      Rng tb(static_cast<std::uint64_t>(s));
      mle += fit_mle_threshold(r.y)(t + 1, one, tb) == 1 ? 1 - p : p;
      map += fit_map(r.y, prior)(t + 1, one, tb) == 1 ? 1 - p : p;
    }
    CHECK(map / seeds > mle / seeds + 0.01);
  }
}

TEST_CASE("prospective map forecast") {
  BetaPrior prior(12, 16);
  CHECK(prospective_map_forecast(0.37, 25, 25, prior) == 0.37);
  double expected = 0.5 + (11.0 + 5.0) / 36.0 - (11.0 + 4.5) / 35.0;
  CHECK(prospective_map_forecast(0.5, 10, 11, prior) == doctest::Approx(expected).epsilon(1e-14));
  CHECK_THROWS_AS(prospective_map_forecast(0.5, 10, 9, prior), std::invalid_argument);

  // telescoped sum equals the step-by-step sum
  double p = 0.3, acc = p;
  for (long s = 40; s < 90; ++s) {
    acc += (11 + s * p) / (26 + s) - (11 + (s - 1) * p) / (26 + s - 1);
  }
  CHECK(prospective_map_forecast(p, 40, 90, prior) == doctest::Approx(acc).epsilon(1e-12));

  // increments vanish for large t
  CHECK(std::abs(prospective_map_forecast(0.3, 1000000, 1000100, prior) - 0.3) < 1e-6);

  // near the alpha = beta = 1 limit the forecast is constant
  BetaPrior flat(1 + 1e-9, 1 + 1e-9);
  for (long tp : {10L, 100L, 10000L}) CHECK(std::abs(prospective_map_forecast(0.7, 10, tp, flat) - 0.7) < 1e-8);

  // clamped to the unit interval
  for (long tp : {2L, 5L, 100L}) {
    double f = prospective_map_forecast(1.0, 1, tp, BetaPrior(20, 2));
    CHECK(f >= 0.0);
    CHECK(f <= 1.0);
    double g = prospective_map_forecast(0.0, 1, tp, BetaPrior(2, 20));
    CHECK(g >= 0.0);
  }
}

TEST_CASE("parity mle") {
  std::vector<int> alt;
  for (int t = 1; t <= 20; ++t) alt.push_back(t % 2);
  for (bool tied : {true, false}) {
    auto p = fit_parity_mle(alt, tied);
    auto pred = predictions(p, 21, 60);
    for (std::size_t i = 0; i < pred.size(); ++i) CHECK(pred[i] == ((21 + static_cast<long>(i)) % 2 == 1 ? 1 : 0));
  }
  CHECK(fit_parity_mle(alt, true).info().kind == "parity_mle");
}

TEST_CASE("markov mle examples") {
  std::vector<int> zeros{0, 0, 0, 0};
  auto m = estimate_transition(zeros);
  CHECK(m.theta0 == doctest::Approx(0.8));
  CHECK(m.theta1 == doctest::Approx(0.5));
  CHECK(predictions(fit_markov_mle(zeros), 5, 100) == std::vector<int>(96, 0));

  std::vector<int> alt{0, 1, 0, 1, 0};
  auto a = estimate_transition(alt);
  CHECK(a.theta0 == doctest::Approx(0.25));
  CHECK(a.theta1 == doctest::Approx(0.25));
  auto pred = predictions(fit_markov_mle(alt), 6, 15);
  CHECK(pred == std::vector<int>{1, 0, 1, 0, 1, 0, 1, 0, 1, 0});
}

TEST_CASE("forecast distribution stays valid") {
  for (const auto& labels : {std::vector<int>{0, 0, 1}, std::vector<int>{1, 1, 1, 1, 1, 0}, std::vector<int>{0}}) {
    auto m = estimate_transition(labels);
    for (long n = 0; n < 2000; n += 7) {
      auto d = markov_n_step_dist(m, labels.back(), n);
      CHECK(d[0] >= 0.0);
      CHECK(d[1] >= 0.0);
      CHECK(std::abs(d[0] + d[1] - 1.0) <= 1e-12);
    }
  }
}

TEST_CASE("estimated transitions concentrate around the truth") {
  const double t0 = 0.3, t1 = 0.8;
  int checks = 0, outside = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    auto r = sample_realization(ProcessSpec{TwoStateMarkov{t0, t1}, 1, 2000}, seed);
    double n0 = 0, n1 = 0;
    for (std::size_t i = 0; i + 1 < r.y.size(); ++i) (r.y[i] == 0 ? n0 : n1) += 1;
    auto m = estimate_transition(r.y);
    outside += std::abs(m.theta0 - t0) > 3 * std::sqrt(t0 * (1 - t0) / n0);
    outside += std::abs(m.theta1 - t1) > 3 * std::sqrt(t1 * (1 - t1) / n1);
    checks += 2;
  }
  // 3 sigma bands: about 0.3% of draws fall outside by chance
  CHECK(outside <= checks / 50);
}

TEST_CASE("q value iteration") {
  TransitionModel m(0.1, 0.1);
  // gamma = 0: one-step reward only
  for (auto [a0, a1] : {std::pair{0.1, 0.1}, std::pair{0.3, 0.9}}) {
    auto q = q_value_iteration({a0, a0}, {a1, a1}, 0.0);
    CHECK(q.q[0][0] == doctest::Approx(a0));
    CHECK(q.q[0][1] == doctest::Approx(1 - a1));
    CHECK(q.q[1][1] == doctest::Approx(a1));
    CHECK(q.q[1][0] == doctest::Approx(1 - a0));
  }

  auto q = q_value_iteration(m, m, 0.9);
  CHECK(q.q[0][0] == doctest::Approx(q.q[1][1]).epsilon(1e-12));
  CHECK(q.q[0][1] == doctest::Approx(q.q[1][0]).epsilon(1e-12));

  // brute force: a million plain Bellman sweeps
  Matrix2 brute{};
  for (int i = 0; i < 1000000; ++i) brute = bellman(brute, 0.1, 0.1, 0.9);
  CHECK(sup_diff(q.q, brute) < 1e-8);

  for (auto [a0, a1, g] : {std::tuple{0.1, 0.1, 0.9}, std::tuple{0.7, 0.2, 0.95}, std::tuple{0.5, 0.5, 0.5}}) {
    double tol = 1e-10;
    auto r = q_value_iteration({a0, a0}, {a1, a1}, g, tol);
    for (std::size_t i = 1; i < r.residuals.size(); ++i) CHECK(r.residuals[i] <= r.residuals[i - 1] + 1e-15);
    CHECK(sup_diff(bellman(r.q, a0, a1, g), r.q) <= tol);
  }

  CHECK_THROWS_AS(q_value_iteration(m, m, 0.99, 1e-14, 5), std::runtime_error);
  CHECK_THROWS_AS(q_value_iteration(m, m, 1.0), std::invalid_argument);
}

TEST_CASE("q agent on a deterministic chain") {
  // action 0 keeps the state, action 1 flips it
  ControlledMarkov chain{1.0, 0.0};
  std::vector<MdpTransition> history;
  Rng rng(5);
  int y = 0;
  for (int i = 0; i < 2000; ++i) {
    int a = rng.bernoulli(0.5) ? 1 : 0;
    int next = mdp_step(chain, y, a, rng);
    history.push_back({y, a, next});
    y = next;
  }
  history.push_back({1, 1, 0});  // make sure the last state is 0
  auto agent = fit_q_agent(history, 0.9, static_cast<long>(history.size()) + 1, Rng(1));
  Rng tb(2);
  double risk = closed_loop_risk(agent, chain, 0, static_cast<long>(history.size()) + 1,
                                 static_cast<long>(history.size()) + 301, std::nullopt, std::nullopt, 9, tb);
  CHECK(risk == 0.0);
}

TEST_CASE("q agent ties under a uniform belief") {
  // no data: both actions look like fair coins and every Q entry ties
  std::vector<MdpTransition> none;
  auto model = fit_q_model(none, 0.9);
  CHECK(model.q.q[0][0] == doctest::Approx(model.q.q[0][1]));
  Rng tb(4);
  double ones = 0;
  const int n = 4000;
  for (int i = 0; i < n; ++i) ones += greedy_action(model.q, 0, tb);
  CHECK(std::abs(ones / n - 0.5) < 3 * std::sqrt(0.25 / n));
}

TEST_CASE("q agent approaches the discounted bayes risk") {
  ControlledMarkov chain{0.1, 0.1};
  const long t = 500;
  double sum = 0;
  const int seeds = 1000;
  for (int s = 0; s < seeds; ++s) {
    std::uint64_t data_seed = hash_combine(99, static_cast<std::uint64_t>(s));
    auto history = collect_mdp_history(chain, t, 0.9, true, 0.1, data_seed, data_seed + 1);
    auto agent = fit_q_agent(history, 0.9, t, Rng(data_seed + 2));
    Rng tb(data_seed + 3);
    sum += closed_loop_risk(agent, chain, history.back().y_next, t, t + 200, 0.9, std::nullopt, data_seed, tb);
  }
  CHECK(std::abs(sum / seeds - markov_discounted_bayes_risk(0.1, 0.9)) < 0.03);
}

TEST_CASE("table erm") {
  auto cls = sign_threshold_class();
  REQUIRE(cls.size() == 4);
  std::vector<double> pos{1.0}, neg{-1.0};
  Rng tb(1);
  CHECK(cls[0](3, pos, tb) == 0);
  CHECK(cls[1](3, neg, tb) == 1);
  CHECK(cls[2](3, pos, tb) == 1);
  CHECK(cls[2](3, neg, tb) == 0);
  CHECK(cls[3](3, neg, tb) == 1);

  CHECK(all_table_hypotheses({-1.0, 0.0, 1.0}).size() == 8);

  // majority per input; per-parity tables split odd and even times
  Realization r;
  r.dim = 1;
  r.samples_per_step = 2;
  // t=1: x=-1 y=1, x=1 y=0 ; t=2: x=-1 y=0, x=1 y=1 ; t=3 like t=1
  r.x = {-1, 1, -1, 1, -1, 1};
  r.y = {1, 0, 0, 1, 1, 0};
  r.state = {0, 1, 0};
  auto pooled = fit_table_erm(r, false);
  CHECK(pooled(9, neg, tb) == 1);
  CHECK(pooled(9, pos, tb) == 0);
  auto parity = fit_table_erm(r, true);
  CHECK(parity(10, neg, tb) == 0);
  CHECK(parity(10, pos, tb) == 1);
  CHECK(parity(11, neg, tb) == 1);
}
