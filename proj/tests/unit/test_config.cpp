#include <doctest.h>

#include <algorithm>
#include <string>

#include "prolearn/config.hpp"

using namespace prolearn;

namespace {

const char* kFull = R"(; a bit of everything
[run]
master_seed = 42
output_dir = out/x

[iid]
scenario = s1
process = iid_bernoulli
p = 0.2
horizon = 500
learner = map
alpha = 3
beta = 5.5
cutoffs = 10:50:10, 100
seeds = 0:4

[markov]
process = two_state_markov
theta0 = 0.9
theta1 = 0.25
horizon = 400
learner = markov_mle
cutoffs = 20, 50
seeds = 3, 1, 7
gamma = 0.8
tau = 30

[hmm]
process = hidden_markov_tasks
tasks = quadrant2d:1, quadrant2d:2, quadrant2d:3:1010, quadrant2d:4
regime1.transition = 0.2 0.8 | 0.6 0.4
regime1.tasks = 1 2
regime2.transition = 0.2, 0.8 | 0.6, 0.4
regime2.tasks = 3 4
regime_switch_period = 10
reset_period = 100
samples_per_step = 5
horizon = 300
learner = prospective_erm
hidden = 16, 8
embed_dim = 10
epochs = 3
lr = 0.05
cutoffs = 100
seeds = 0

[flip]
process = periodic_tasks
tasks = flip1d:1, flip1d:2
dwell = 20
horizon = 300
learner = online_sgd
hidden = none
online_window = 4
cutoffs = 50, 100
seeds = 0:1

[q]
process = controlled_markov
theta = 0.1
horizon = 300
learner = q_agent
epsilon = 0.2
gamma = 0.9
cutoffs = 10
seeds = 0

[parity]
process = alternating_bernoulli
p = 0.3
horizon = 100
learner = parity_mle
tie_known = no
cutoffs = 10
seeds = 0
)";

std::string minimal(const std::string& body) {
  return "[run]\nmaster_seed = 1\n\n[e]\n" + body;
}

bool mentions(const ConfigError& e, const std::string& needle) {
  return std::any_of(e.errors().begin(), e.errors().end(),
                     [&](const std::string& s) { return s.find(needle) != std::string::npos; });
}

}  // namespace

TEST_CASE("parse the full example") {
  RunConfig c = parse_config(kFull);
  CHECK(c.master_seed == 42);
  REQUIRE(c.output_dir);
  CHECK(*c.output_dir == "out/x");
  REQUIRE(c.experiments.size() == 6);

  const auto& iid = c.experiments[0].second;
  CHECK(c.experiments[0].first == "iid");
  CHECK(iid.scenario == "s1");
  CHECK(std::get<IidBernoulli>(iid.process.kind).p == 0.2);
  CHECK(iid.process.samples_per_step == 1);
  CHECK(iid.learner.kind == LearnerKind::map);
  CHECK(iid.learner.alpha == 3.0);
  CHECK(iid.learner.beta == 5.5);
  CHECK(iid.cutoffs == std::vector<long>{10, 20, 30, 40, 50, 100});
  CHECK(iid.seeds == std::vector<std::uint64_t>{0, 1, 2, 3, 4});
  CHECK(iid.master_seed == 42);
  CHECK_FALSE(iid.gamma);

  const auto& mk = c.experiments[1].second;
  CHECK(mk.scenario == "markov");  // defaults to the section name
  CHECK(std::get<TwoStateMarkov>(mk.process.kind) == TwoStateMarkov{0.9, 0.25});
  CHECK(mk.seeds == std::vector<std::uint64_t>{3, 1, 7});
  CHECK(*mk.gamma == 0.8);
  CHECK(*mk.tau == 30);

  const auto& hmm = c.experiments[2].second;
  const auto& h = std::get<HiddenMarkovTasks>(hmm.process.kind);
  REQUIRE(h.tasks.size() == 4);
  CHECK(std::get<Quadrant2D>(h.tasks[2]).labels == std::array<int, 4>{1, 0, 1, 0});
  CHECK(std::get<Quadrant2D>(h.tasks[0]).labels == default_quadrant_labels(1));
  REQUIRE(h.regimes.size() == 2);
  CHECK(h.regimes[1].tasks == std::vector<int>{2, 3});
  CHECK(h.regimes[1].transition == h.regimes[0].transition);
  CHECK(h.regimes[0].transition[1][0] == 0.6);
  CHECK(*h.regime_switch_period == 10);
  CHECK(*h.reset_period == 100);
  CHECK(hmm.process.samples_per_step == 5);
  CHECK(hmm.learner.train.hidden == std::vector<int>{16, 8});
  CHECK(hmm.learner.embed.d == 10);
  CHECK(hmm.learner.train.epochs == 3);
  CHECK(hmm.learner.train.learning_rate == 0.05);

  const auto& flip = c.experiments[3].second;
  CHECK(std::get<PeriodicTasks>(flip.process.kind).dwell == 20);
  CHECK(flip.process.samples_per_step == 20);
  CHECK(flip.learner.train.hidden.empty());
  CHECK(flip.learner.online_window == 4);

  const auto& q = c.experiments[4].second;
  CHECK(std::get<ControlledMarkov>(q.process.kind) == ControlledMarkov{0.1, 0.1});
  CHECK(q.learner.epsilon == 0.2);

  CHECK_FALSE(c.experiments[5].second.learner.tie_known);
}

TEST_CASE("serialize round trip") {
  RunConfig c = parse_config(kFull);
  std::string text = serialize_config(c);
  RunConfig back = parse_config(text);
  CHECK(back == c);
  CHECK(serialize_config(back) == text);
  CHECK(config_hash(back) == config_hash(c));

  // progressions are written compactly
  CHECK(text.find("cutoffs = 10:50:10, 100") != std::string::npos);
  CHECK(text.find("seeds = 0:4") != std::string::npos);
}

TEST_CASE("doubles round trip through text") {
  for (double v : {0.1, 0.2, 1.0 / 3.0, 1e-5, 0.7 + 1e-16, 0.0, 5e-324}) {
    RunConfig c = parse_config(minimal("process = iid_bernoulli\np = 0.5\nhorizon = 50\nlearner = mle\ncutoffs = 5\nseeds = 0\n"));
    auto& e = c.experiments[0].second;
    e.process.kind = IidBernoulli{v};
    CHECK(parse_config(serialize_config(c)) == c);
  }
}

TEST_CASE("hash tracks content") {
  RunConfig a = parse_config(kFull);
  RunConfig b = a;
  std::get<IidBernoulli>(b.experiments[0].second.process.kind).p = 0.21;
  CHECK(config_hash(a) != config_hash(b));
  CHECK(hex64(0xabcULL) == "0000000000000abc");
  // comments and spacing do not matter
  std::string spaced = std::string("\n; header\n") + kFull;
  CHECK(config_hash(parse_config(spaced)) == config_hash(a));
}

TEST_CASE("all errors are reported together") {
  std::string text = minimal(
      "process = iid_bernoulli\n"
      "p = 1.5\n"
      "horizon = 100\n"
      "learner = mle\n"
      "cutoffs = 0, 200\n"
      "seeds = 0\n"
      "colour = blue\n");
  try {
    parse_config(text);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(mentions(e, "colour"));
    // semantic checks wait until the section parses cleanly
    CHECK_FALSE(mentions(e, "cutoffs"));
  }

  text = minimal(
      "process = iid_bernoulli\n"
      "p = 1.5\n"
      "horizon = 100\n"
      "learner = mle\n"
      "cutoffs = 0, 200\n"
      "seeds = 0\n"
      "gamma = 1\n");
  try {
    parse_config(text);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(e.errors().size() >= 4);
    CHECK(mentions(e, "p"));
    CHECK(mentions(e, "cutoffs: 0"));
    CHECK(mentions(e, "cutoffs: 200"));
    CHECK(mentions(e, "gamma"));
    CHECK(std::string(e.what()).find("configuration errors:") == 0);
  }
}

TEST_CASE("syntax and structure errors") {
  CHECK_THROWS_AS(parse_config("[run]\nmaster_seed = 1\n[e\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[e]\nprocess = iid_bernoulli\nlearner = mle\ncutoffs = 1\nseeds = 0\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[run]\nmaster_seed = 1\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[run]\nmaster_seed = seven\n[e]\nprocess = iid_bernoulli\nlearner = mle\n"
                               "cutoffs = 1\nseeds = 0\n"),
                  ConfigError);
}

TEST_CASE("field level errors") {
  auto fails_on = [](const std::string& body, const std::string& needle) {
    try {
      parse_config(minimal(body));
    } catch (const ConfigError& e) {
      return mentions(e, needle);
    }
    return false;
  };
  const std::string tail = "horizon = 100\ncutoffs = 10\nseeds = 0\n";
  CHECK(fails_on("process = nonsense\nlearner = mle\n" + tail, "unknown process kind"));
  CHECK(fails_on("process = iid_bernoulli\np = 0.2\nlearner = ouija\n" + tail, "unknown learner"));
  CHECK(fails_on("process = iid_bernoulli\np = abc\nlearner = mle\n" + tail, "[e] p"));
  CHECK(fails_on("learner = mle\n" + tail, "process"));
  CHECK(fails_on("process = iid_bernoulli\np = 0.2\nlearner = mle\nhorizon = 100\nseeds = 0\n", "cutoffs"));
  CHECK(fails_on("process = iid_bernoulli\np = 0.2\nlearner = mle\nhorizon = 100\ncutoffs = 10, 10\nseeds = 0\n",
                 "duplicate cutoff"));
  CHECK(fails_on("process = iid_bernoulli\np = 0.2\nlearner = mle\nhorizon = 100\ncutoffs = 10\nseeds = 1, 1\n",
                 "duplicate seeds"));
  CHECK(fails_on("process = periodic_tasks\ntasks = flip1d:1, flip1d:2\ndwell = 5\nlearner = prospective_erm\n"
                 "embed_dim = 7\n" + tail,
                 "embed_dim"));
  CHECK(fails_on("process = periodic_tasks\ntasks = flip1d:1, warp:9\nlearner = follow_the_leader\n" + tail, "tasks"));
  CHECK(fails_on("process = iid_bernoulli\np = 0.2\nlearner = q_agent\ngamma = 0.9\n" + tail, "controlled_markov"));
  CHECK(fails_on("process = two_state_markov\ntheta = 0.1\nlearner = markov_mle\ntau = 5\n" + tail,
                 "only meaningful with gamma"));
  // keys that belong to a different learner are flagged, not silently dropped
  CHECK(fails_on("process = iid_bernoulli\np = 0.2\nlearner = mle\nalpha = 2\n" + tail, "alpha"));
  CHECK(fails_on("process = iid_bernoulli\np = 0.2\nlearner = parity_mle\ntie_known = maybe\n" + tail, "tie_known"));
}

TEST_CASE("integer list forms") {
  auto cut = [](const std::string& spec) {
    return parse_config(minimal("process = iid_bernoulli\np = 0.2\nhorizon = 1000\nlearner = mle\ncutoffs = " + spec +
                                "\nseeds = 0\n"))
        .experiments[0]
        .second.cutoffs;
  };
  CHECK(cut("5") == std::vector<long>{5});
  CHECK(cut("1:3") == std::vector<long>{1, 2, 3});
  CHECK(cut("100:400:100, 999") == std::vector<long>{100, 200, 300, 400, 999});
  CHECK(cut("7 8 9") == std::vector<long>{7, 8, 9});
  CHECK_THROWS_AS(cut("5:1"), ConfigError);
  CHECK_THROWS_AS(cut("1:10:0"), ConfigError);
}

TEST_CASE("task tokens") {
  CHECK(std::get<Flip1D>(parse_task("flip1d:2")).task_id == 2);
  auto q = std::get<Quadrant2D>(parse_task("quadrant2d:3"));
  CHECK(q.labels == default_quadrant_labels(3));
  auto p = std::get<Prop1Task>(parse_task("prop1_3pt:2:0.25"));
  CHECK(p.which == 2);
  CHECK(p.theta == 0.25);
  CHECK(p.three_point);
  auto g = std::get<GaussianFld>(parse_task("fld:1.5:0.5:2:1"));
  CHECK(g == GaussianFld{1.5, 0.5, 2.0, 1});

  for (const char* tok : {"flip1d:1", "quadrant2d:2:0110", "prop1:1:0.1", "prop1_3pt:2:0", "fld:1:2:-0.5:0"}) {
    CHECK(format_task(parse_task(tok)) == format_task(parse_task(format_task(parse_task(tok)))));
    CHECK(parse_task(format_task(parse_task(tok))) == parse_task(tok));
  }
  for (const char* bad : {"", "flip1d", "flip1d:x", "quadrant2d:5", "quadrant2d:1:012", "quadrant2d:1:0120",
                          "prop1:1", "fld:1:1:1", "circle:1"}) {
    CHECK_THROWS_AS(parse_task(bad), std::invalid_argument);
  }
}

TEST_CASE("flat process keys") {
  KeyValues kv{{"process", "alternating_bernoulli"}, {"p", "0.3"}, {"horizon", "12"}};
  ProcessSpec s = parse_process(kv);
  CHECK(std::get<AlternatingBernoulli>(s.kind).p == 0.3);
  CHECK(s.horizon == 12);
  CHECK(parse_process(serialize_process(s)) == s);

  KeyValues bad{{"process", "two_state_markov"}, {"theta0", "2"}, {"theta1", "-1"}};
  try {
    parse_process(bad);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(e.errors().size() == 2);
  }
}

TEST_CASE("format_double is shortest round trip") {
  CHECK(format_double(0.1) == "0.1");
  CHECK(format_double(1.0) == "1");
  CHECK(format_double(2.5e-8) == "2.5e-08");
  for (double v : {0.1 + 0.2, 1.0 / 7.0, 1e300}) CHECK(std::stod(format_double(v)) == v);
}
