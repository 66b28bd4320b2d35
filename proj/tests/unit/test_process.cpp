#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "prolearn/analytic.hpp"
#include "prolearn/process.hpp"

using namespace prolearn;

namespace {

ProcessSpec label_spec(ProcessKind kind, long horizon) { return ProcessSpec{std::move(kind), 1, horizon}; }

HiddenMarkovTasks quadrant_hmm() {
  HiddenMarkovTasks h;
  for (int k = 1; k <= 4; ++k) h.tasks.push_back(make_quadrant_task(k));
  std::vector<std::vector<double>> g2{{0.2, 0.8}, {0.6, 0.4}};
  h.regimes = {TaskRegime{g2, {0, 1}}, TaskRegime{g2, {2, 3}}};
  h.regime_switch_period = 10;
  return h;
}

// |freq - p| within 3 standard errors of n Bernoulli(p) draws.
void check_frequency(double hits, double n, double p) {
  double se = std::sqrt(std::max(p * (1 - p), 1e-12) / n);
  INFO("freq=" << hits / n << " p=" << p << " n=" << n);
  CHECK(std::abs(hits / n - p) <= 3 * se + 1e-12);
}

}  // namespace

TEST_CASE("sample_realization examples") {
  auto iid = sample_realization(label_spec(IidBernoulli{0.0}, 5), 1);
  CHECK(iid.y == std::vector<int>{0, 0, 0, 0, 0});
  CHECK(iid.x == std::vector<double>(5, 1.0));

  auto alt = sample_realization(label_spec(AlternatingBernoulli{0.0}, 4), 9);
  CHECK(alt.y == std::vector<int>{0, 1, 0, 1});

  CHECK_THROWS_AS(sample_realization(label_spec(ControlledMarkov{0.1, 0.1}, 4), 1), std::invalid_argument);
  CHECK_THROWS_AS(sample_realization(label_spec(IidBernoulli{1.2}, 4), 1), std::invalid_argument);
}

TEST_CASE("markov self-transition frequency") {
  auto r = sample_realization(label_spec(TwoStateMarkov{0.1, 0.1}, 100000), 3);
  double stays = 0, n = 0;
  for (std::size_t i = 1; i < r.size(); ++i, ++n) stays += r.y[i] == r.y[i - 1];
  check_frequency(stays, n, 0.1);
}

TEST_CASE("realizations are a pure function of (spec, seed)") {
  std::vector<ProcessSpec> specs{
      label_spec(IidBernoulli{0.3}, 200),
      label_spec(TwoStateMarkov{0.2, 0.7}, 200),
      ProcessSpec{PeriodicTasks{{Flip1D{1}, Flip1D{2}}, 20}, 20, 100},
      ProcessSpec{quadrant_hmm(), 20, 100},
      ProcessSpec{Prop1ThreePoint{0.0}, 5, 50},
  };
  for (const auto& s : specs) {
    auto a = sample_realization(s, 42);
    auto b = sample_realization(s, 42);
    auto c = sample_realization(s, 43);
    CHECK(a.x == b.x);
    CHECK(a.y == b.y);
    CHECK(a.state == b.state);
    CHECK(a.size() == static_cast<std::size_t>(s.horizon * s.samples_per_step));
    CHECK(a.x.size() == a.size() * static_cast<std::size_t>(input_dim(s)));
    CHECK((a.x != c.x || a.y != c.y));
    for (int y : a.y) CHECK((y >= 0 && y < class_count(s)));
  }
}

TEST_CASE("marginal examples") {
  auto alt = label_spec(AlternatingBernoulli{0.2}, 10);
  CHECK(marginal(alt, 3)[1] == doctest::Approx(0.2));
  CHECK(marginal(alt, 4)[1] == doctest::Approx(0.8));

  auto memoryless = label_spec(TwoStateMarkov{0.5, 0.5}, 10);
  for (long t : {2L, 5L}) {
    for (int y : {0, 1}) {
      auto m = marginal(memoryless, t, LabelCondition{y, 1});
      CHECK(m[0] == doctest::Approx(0.5));
    }
  }

  // three explicit matrix multiplications
  auto chain = label_spec(TwoStateMarkov{0.9, 0.5}, 10);
  double g[2][2] = {{0.9, 0.1}, {0.5, 0.5}};
  double p[2] = {0.0, 1.0};
  for (int k = 0; k < 3; ++k) {
    double q0 = p[0] * g[0][0] + p[1] * g[1][0];
    double q1 = p[0] * g[0][1] + p[1] * g[1][1];
    p[0] = q0;
    p[1] = q1;
  }
  auto m = marginal(chain, 5, LabelCondition{1, 2});
  CHECK(m[0] == doctest::Approx(p[0]).epsilon(1e-12));
  CHECK(m[1] == doctest::Approx(p[1]).epsilon(1e-12));

  CHECK_THROWS_AS(marginal(chain, 3), std::invalid_argument);
  CHECK_THROWS_AS(marginal(label_spec(ControlledMarkov{0.1, 0.1}, 3), 1), std::invalid_argument);
}

TEST_CASE("marginals sum to one") {
  std::vector<ProcessSpec> specs{
      label_spec(IidBernoulli{0.3}, 50),         label_spec(AlternatingBernoulli{0.1}, 50),
      ProcessSpec{quadrant_hmm(), 20, 50},       ProcessSpec{Prop1Flip{0.25}, 1, 50},
      ProcessSpec{Prop1ThreePoint{0.25}, 1, 50}, ProcessSpec{PeriodicTasks{{Flip1D{1}, Flip1D{2}}, 3}, 1, 50},
  };
  for (const auto& s : specs) {
    for (long t = 1; t <= 50; ++t) {
      auto m = marginal(s, t);
      CHECK(m[0] >= 0.0);
      CHECK(m[1] >= 0.0);
      CHECK(std::abs(m[0] + m[1] - 1.0) <= 1e-12);
    }
  }
}

TEST_CASE("empirical label frequencies match marginal") {
  const int reps = 100000;
  const long T = 6;
  std::vector<ProcessSpec> unconditional{
      label_spec(IidBernoulli{0.3}, T),
      label_spec(AlternatingBernoulli{0.2}, T),
      ProcessSpec{PeriodicTasks{{Prop1Task{1, 0.3, false}, Flip1D{2}}, 2}, 1, T},
      ProcessSpec{Prop1Flip{0.3}, 1, T},
      ProcessSpec{Prop1ThreePoint{0.2}, 1, T},
  };
  {
    // HMM over Prop1 tasks so the label marginal actually depends on the hidden state
    HiddenMarkovTasks h;
    h.tasks = {Prop1Task{1, 0.1, true}, Prop1Task{2, 0.1, true}, Prop1Task{1, 0.4, false}};
    h.regimes = {TaskRegime{{{0.2, 0.8}, {0.6, 0.4}}, {0, 1}}, TaskRegime{{{0.7, 0.3}, {0.1, 0.9}}, {2, 0}}};
    h.regime_switch_period = 2;
    h.reset_period = 5;
    unconditional.push_back(ProcessSpec{h, 1, T});
  }
  for (const auto& spec : unconditional) {
    INFO(kind_name(spec.kind));
    std::vector<double> ones(T, 0.0);
    for (int r = 0; r < reps; ++r) {
      auto real = sample_realization(spec, static_cast<std::uint64_t>(r));
      for (long t = 1; t <= T; ++t) ones[t - 1] += real.y[t - 1];
    }
    for (long t = 1; t <= T; ++t) check_frequency(ones[t - 1], reps, marginal(spec, t)[1]);
  }

  // Markov: condition on the label at time 1.
  for (auto kind : {TwoStateMarkov{0.1, 0.1}, TwoStateMarkov{0.9, 0.5}}) {
    auto spec = label_spec(kind, T);
    std::vector<double> first(2, 0.0);
    std::vector<std::vector<double>> ones(2, std::vector<double>(T, 0.0));
    for (int r = 0; r < reps; ++r) {
      auto real = sample_realization(spec, static_cast<std::uint64_t>(r));
      int y1 = real.y[0];
      first[y1] += 1;
      for (long t = 2; t <= T; ++t) ones[y1][t - 1] += real.y[t - 1];
    }
    check_frequency(first[1], reps, marginal(spec, 1)[1]);
    for (int c = 0; c < 2; ++c) {
      for (long t = 2; t <= T; ++t) check_frequency(ones[c][t - 1], first[c], marginal(spec, t, LabelCondition{c, 1})[1]);
    }
  }
}

TEST_CASE("symmetric chain starts from Bernoulli(theta)") {
  auto spec = label_spec(TwoStateMarkov{0.1, 0.1}, 1);
  double ones = 0;
  for (int r = 0; r < 20000; ++r) ones += sample_realization(spec, static_cast<std::uint64_t>(r)).y[0];
  check_frequency(ones, 20000, 0.1);
}

TEST_CASE("periodic schedule switches every dwell steps") {
  PeriodicTasks p{{Flip1D{1}, Flip1D{2}}, 20};
  for (long t = 2; t <= 200; ++t) {
    bool changed = periodic_task_index(p, t) != periodic_task_index(p, t - 1);
    CHECK(changed == ((t - 1) % 20 == 0));
  }
  auto r = sample_realization(ProcessSpec{p, 3, 100}, 5);
  for (long t = 1; t <= 100; ++t) CHECK(r.state[t - 1] == periodic_task_index(p, t));
}

TEST_CASE("hidden markov tasks") {
  auto h = quadrant_hmm();
  CHECK(hmm_regime_index(h, 1) == 0);
  CHECK(hmm_regime_index(h, 10) == 0);
  CHECK(hmm_regime_index(h, 11) == 1);
  CHECK(hmm_regime_index(h, 21) == 0);
  auto r = sample_realization(ProcessSpec{h, 20, 200}, 3);
  // state holds the task index; regime A uses tasks 0,1 and regime B 2,3
  CHECK(r.state[0] == 0);
  for (long t = 1; t <= 200; ++t) {
    int regime = hmm_regime_index(h, t);
    CHECK((r.state[t - 1] / 2) == regime);
  }
  // every label agrees with the quadrant table of its task
  for (std::size_t i = 0; i < r.size(); ++i) {
    int task = r.state[static_cast<std::size_t>(r.time_of(i) - 1)];
    CHECK(r.y[i] == static_cast<int>(label_probability(h.tasks[task], r.input(i))));
  }

  HiddenMarkovTasks reset;
  reset.tasks = {Flip1D{1}, Flip1D{2}};
  reset.regimes = {TaskRegime{{{0.0, 1.0}, {0.0, 1.0}}, {0, 1}}};
  reset.reset_period = 4;
  auto rr = sample_realization(ProcessSpec{reset, 1, 12}, 1);
  CHECK(rr.state == std::vector<int>{0, 1, 1, 1, 0, 1, 1, 1, 0, 1, 1, 1});
}

TEST_CASE("task distributions") {
  std::vector<double> pos{1.5}, neg{-1.5};
  CHECK(label_probability(Flip1D{1}, pos) == 0.0);
  CHECK(label_probability(Flip1D{1}, neg) == 1.0);
  CHECK(label_probability(Flip1D{2}, pos) == 1.0);
  Rng rng(1);
  CHECK(sample_label(Flip1D{1}, pos, rng) == 0);
  CHECK(sample_label(Flip1D{2}, pos, rng) == 1);

  std::vector<double> m1{-1.0};
  for (int i = 0; i < 100; ++i) CHECK(sample_label(Prop1Task{2, 0.0, false}, m1, rng) == 0);

  for (const TaskDistribution& task :
       {TaskDistribution{Flip1D{1}}, TaskDistribution{make_quadrant_task(3)}, TaskDistribution{Prop1Task{1, 0.2, true}},
        TaskDistribution{GaussianFld{1.0, 1.0, 2.0, 1}}}) {
    for (int i = 0; i < 200; ++i) {
      auto [x, y] = sample_task_datum(task, rng);
      CHECK(static_cast<int>(x.size()) == input_dim(task));
      CHECK((y >= 0 && y < class_count(task)));
    }
  }

  // Flip1D inputs live on [-2,-1] u [1,2]
  for (int i = 0; i < 1000; ++i) {
    auto [x, y] = sample_task_datum(Flip1D{1}, rng);
    CHECK(std::abs(x[0]) >= 1.0);
    CHECK(std::abs(x[0]) <= 2.0);
    CHECK(y == (x[0] < 0 ? 1 : 0));
  }

  // the four default quadrant tasks rotate class 1 around the squares
  CHECK(default_quadrant_labels(1) == std::array<int, 4>{1, 1, 0, 0});
  CHECK(default_quadrant_labels(2) == std::array<int, 4>{0, 1, 1, 0});
  CHECK(default_quadrant_labels(3) == std::array<int, 4>{0, 0, 1, 1});
  CHECK(default_quadrant_labels(4) == std::array<int, 4>{1, 0, 0, 1});
}

TEST_CASE("prop1 flip marginals are complementary") {
  for (double theta : {0.0, 0.1, 0.37, 0.5, 1.0}) {
    auto spec = ProcessSpec{Prop1Flip{theta}, 1, 10};
    for (long t = 1; t <= 8; t += 2) CHECK(marginal(spec, t)[1] + marginal(spec, t + 1)[1] == 1.0);
    std::vector<double> xs{1.0}, xm{-1.0};
    CHECK(label_probability(Prop1Task{1, theta, false}, xs) + label_probability(Prop1Task{2, theta, false}, xs) ==
          1.0);
    CHECK(label_probability(Prop1Task{1, theta, false}, xm) + label_probability(Prop1Task{2, theta, false}, xm) ==
          1.0);
  }
}

TEST_CASE("mdp_step") {
  Rng rng(7);
  ControlledMarkov absorbing{1.0, 1.0};
  for (int a : {0, 1}) CHECK(mdp_step(absorbing, 0, a, rng) == 0);
  ControlledMarkov mixed{1.0, 0.0};
  for (int i = 0; i < 10; ++i) CHECK(mdp_step(mixed, 1, 1, rng) == 0);
  CHECK_THROWS_AS(mdp_step(mixed, 2, 0, rng), std::invalid_argument);
  CHECK_THROWS_AS(mdp_step(mixed, 0, -1, rng), std::invalid_argument);

  ControlledMarkov chain{0.1, 0.1};
  for (int a : {0, 1}) {
    double stays = 0;
    int y = 0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
      int next = mdp_step(chain, y, a, rng);
      stays += next == y;
      y = next;
    }
    check_frequency(stays, n, 0.1);
  }
}

TEST_CASE("validation reports every bad field") {
  PeriodicTasks bad{{Flip1D{3}, Quadrant2D{7, {0, 2, 0, 0}}}, 0};
  auto errs = validation_errors(ProcessSpec{bad, 0, 0});
  CHECK(errs.size() >= 5);

  HiddenMarkovTasks h = quadrant_hmm();
  h.regimes[1].transition[0] = {0.5, 0.6};
  h.regimes[0].tasks = {0, 9};
  CHECK(validation_errors(ProcessSpec{h, 20, 10}).size() >= 2);

  CHECK(validation_errors(label_spec(TwoStateMarkov{0.1, 0.1}, 10)).empty());
  CHECK_FALSE(validation_errors(ProcessSpec{TwoStateMarkov{0.1, 0.1}, 3, 10}).empty());
  CHECK_THROWS_AS(validate(label_spec(IidBernoulli{-0.1}, 10)), std::invalid_argument);
}

TEST_CASE("prefix and suffix split by time") {
  auto r = sample_realization(ProcessSpec{PeriodicTasks{{Flip1D{1}, Flip1D{2}}, 2}, 3, 10}, 1);
  auto pre = r.prefix(4);
  auto post = r.suffix(4);
  CHECK(pre.steps() == 4);
  CHECK(pre.last_time() == 4);
  CHECK(post.first_time == 5);
  CHECK(post.last_time() == 10);
  CHECK(pre.size() + post.size() == r.size());
  for (std::size_t i = 0; i < post.size(); ++i) {
    CHECK(post[i] == r[i + pre.size()]);
    CHECK(post.time_of(i) > 4);
  }
  CHECK(r.offset(5) == 12);
  CHECK(r[12].t == 5);
}
