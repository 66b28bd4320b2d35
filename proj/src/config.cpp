#include "prolearn/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "overloaded.hpp"

namespace prolearn {

ConfigError::ConfigError(std::vector<std::string> errors)
    : std::runtime_error([&] {
        std::string msg = "configuration error";
        if (errors.size() != 1) msg += "s";
        msg += ":";
        for (const auto& e : errors) msg += "\n  " + e;
        return msg;
      }()),
      errors_(std::move(errors)) {}

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

namespace {

std::string trim(std::string_view s) {
  std::size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string_view::npos) return {};
  std::size_t b = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(a, b - a + 1));
}

std::vector<std::string> split(std::string_view s, std::string_view seps) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (seps.find(c) != std::string_view::npos) {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

template <class T>
std::optional<T> parse_number(const std::string& s) {
  T v{};
  const char* end = s.data() + s.size();
  auto res = std::from_chars(s.data(), end, v);
  if (res.ec != std::errc() || res.ptr != end) return std::nullopt;
  return v;
}

// Keys of one section with bookkeeping of which ones were consumed.
class Section {
 public:
  Section(std::string name, KeyValues kv, std::vector<std::string>& errors)
      : name_(std::move(name)), kv_(std::move(kv)), errors_(errors) {}

  const std::string& name() const { return name_; }

  std::optional<std::string> take(const std::string& key) {
    for (const auto& [k, v] : kv_) {
      if (k == key) {
        used_.insert(k);
        return v;
      }
    }
    return std::nullopt;
  }

  bool has(const std::string& key) const {
    for (const auto& kv : kv_) {
      if (kv.first == key) return true;
    }
    return false;
  }

  void error(const std::string& key, const std::string& msg) {
    errors_.push_back((name_.empty() ? "" : "[" + name_ + "] ") + key + ": " + msg);
  }

  std::optional<std::string> required(const std::string& key) {
    auto v = take(key);
    if (!v) error(key, "required");
    return v;
  }

  template <class T>
  std::optional<T> number(const std::string& key, bool is_required) {
    auto v = is_required ? required(key) : take(key);
    if (!v) return std::nullopt;
    auto n = parse_number<T>(trim(*v));
    if (!n) error(key, "not a valid number: '" + *v + "'");
    return n;
  }

  template <class T>
  void number_into(const std::string& key, T& out) {
    if (auto n = number<T>(key, false)) out = *n;
  }

  std::optional<bool> boolean(const std::string& key) {
    auto v = take(key);
    if (!v) return std::nullopt;
    std::string s = trim(*v);
    if (s == "true" || s == "1" || s == "yes") return true;
    if (s == "false" || s == "0" || s == "no") return false;
    error(key, "expected true or false, got '" + *v + "'");
    return std::nullopt;
  }

  // Comma/space separated integers; a:b and a:b:step expand to inclusive ranges.
  template <class T>
  std::optional<std::vector<T>> integer_list(const std::string& key, bool is_required) {
    auto v = is_required ? required(key) : take(key);
    if (!v) return std::nullopt;
    std::vector<T> out;
    for (const auto& tok : split(*v, ", \t")) {
      auto parts = split(tok, ":");
      if (parts.size() == 1) {
        auto n = parse_number<T>(parts[0]);
        if (!n) {
          error(key, "not a valid integer: '" + tok + "'");
          return std::nullopt;
        }
        out.push_back(*n);
      } else if (parts.size() == 2 || parts.size() == 3) {
        auto a = parse_number<T>(parts[0]);
        auto b = parse_number<T>(parts[1]);
        auto step = parts.size() == 3 ? parse_number<T>(parts[2]) : std::optional<T>(1);
        if (!a || !b || !step || *step <= 0 || *b < *a) {
          error(key, "bad range '" + tok + "' (expected first:last[:step])");
          return std::nullopt;
        }
        for (T x = *a; x <= *b; x += *step) out.push_back(x);
      } else {
        error(key, "bad entry '" + tok + "'");
        return std::nullopt;
      }
    }
    return out;
  }

  void report_unused() {
    for (const auto& [k, v] : kv_) {
      if (!used_.count(k)) error(k, "unknown key or not used by the chosen process/learner");
    }
  }

 private:
  std::string name_;
  KeyValues kv_;
  std::set<std::string> used_;
  std::vector<std::string>& errors_;
};

template <class T>
std::string format_integer_list(const std::vector<T>& v) {
  // Runs of three or more values in arithmetic progression collapse to a range.
  std::string s;
  std::size_t i = 0;
  while (i < v.size()) {
    std::size_t last = i;
    if (i + 1 < v.size() && v[i + 1] > v[i]) {
      T step = v[i + 1] - v[i];
      last = i + 1;
      while (last + 1 < v.size() && v[last + 1] > v[last] && v[last + 1] - v[last] == step) ++last;
    }
    if (!s.empty()) s += ", ";
    if (last - i >= 2) {
      T step = v[i + 1] - v[i];
      s += std::to_string(v[i]) + ":" + std::to_string(v[last]);
      if (step != 1) s += ":" + std::to_string(step);
      i = last + 1;
    } else {
      s += std::to_string(v[i]);
      ++i;
    }
  }
  return s;
}

std::vector<TaskDistribution> parse_task_list(Section& sec, const std::string& key) {
  std::vector<TaskDistribution> tasks;
  auto v = sec.required(key);
  if (!v) return tasks;
  for (const auto& tok : split(*v, ", \t")) {
    try {
      tasks.push_back(parse_task(tok));
    } catch (const std::invalid_argument& ex) {
      sec.error(key, ex.what());
    }
  }
  return tasks;
}

ProcessSpec parse_process_section(Section& sec) {
  ProcessSpec spec;
  auto kind = sec.required("process");
  std::string k = kind ? trim(*kind) : "iid_bernoulli";
  auto num = [&](const std::string& key) { return sec.number<double>(key, true).value_or(0.5); };

  if (k == "iid_bernoulli") {
    spec.kind = IidBernoulli{num("p")};
  } else if (k == "alternating_bernoulli") {
    spec.kind = AlternatingBernoulli{num("p")};
  } else if (k == "two_state_markov" || k == "controlled_markov") {
    double t0 = 0.5, t1 = 0.5;
    if (sec.has("theta") && !sec.has("theta0") && !sec.has("theta1")) {
      t0 = t1 = num("theta");
    } else {
      t0 = num("theta0");
      t1 = num("theta1");
    }
    if (k == "two_state_markov") {
      spec.kind = TwoStateMarkov{t0, t1};
    } else {
      spec.kind = ControlledMarkov{t0, t1};
    }
  } else if (k == "periodic_tasks") {
    PeriodicTasks p;
    p.tasks = parse_task_list(sec, "tasks");
    p.dwell = sec.number<int>("dwell", true).value_or(1);
    spec.kind = std::move(p);
  } else if (k == "hidden_markov_tasks") {
    HiddenMarkovTasks h;
    h.tasks = parse_task_list(sec, "tasks");
    for (int r = 1;; ++r) {
      std::string pre = "regime" + std::to_string(r);
      if (!sec.has(pre + ".transition") && !sec.has(pre + ".tasks")) break;
      TaskRegime reg;
      if (auto tr = sec.required(pre + ".transition")) {
        for (const auto& row : split(*tr, "|")) {
          std::vector<double> vals;
          for (const auto& tok : split(row, ", \t")) {
            auto d = parse_number<double>(tok);
            if (!d) {
              sec.error(pre + ".transition", "not a valid number: '" + tok + "'");
              d = 0.0;
            }
            vals.push_back(*d);
          }
          reg.transition.push_back(std::move(vals));
        }
      }
      if (auto ts = sec.integer_list<int>(pre + ".tasks", true)) {
        for (int ti : *ts) reg.tasks.push_back(ti - 1);  // 1-based in the file
      }
      h.regimes.push_back(std::move(reg));
    }
    if (auto v = sec.number<int>("regime_switch_period", false)) h.regime_switch_period = *v;
    if (auto v = sec.number<int>("reset_period", false)) h.reset_period = *v;
    spec.kind = std::move(h);
  } else if (k == "prop1_flip") {
    spec.kind = Prop1Flip{num("theta")};
  } else if (k == "prop1_three_point") {
    spec.kind = Prop1ThreePoint{num("theta")};
  } else {
    if (kind) sec.error("process", "unknown process kind '" + k + "'");
    spec.kind = IidBernoulli{0.5};
  }

  spec.samples_per_step = is_label_only(spec.kind) ? 1 : 20;
  sec.number_into("samples_per_step", spec.samples_per_step);
  spec.horizon = 10000;
  sec.number_into("horizon", spec.horizon);
  return spec;
}

LearnerConfig parse_learner_section(Section& sec) {
  LearnerConfig L;
  auto name = sec.required("learner");
  if (name) {
    if (auto kind = parse_learner_kind(trim(*name))) {
      L.kind = *kind;
    } else {
      sec.error("learner", "unknown learner '" + trim(*name) + "'");
    }
  }
  switch (L.kind) {
    case LearnerKind::map:
    case LearnerKind::prospective_map:
      sec.number_into("alpha", L.alpha);
      sec.number_into("beta", L.beta);
      break;
    case LearnerKind::parity_mle:
      if (auto b = sec.boolean("tie_known")) L.tie_known = *b;
      break;
    case LearnerKind::q_agent: sec.number_into("epsilon", L.epsilon); break;
    case LearnerKind::prospective_erm:
    case LearnerKind::follow_the_leader:
    case LearnerKind::online_sgd: {
      auto& tc = L.train;
      sec.number_into("lr", tc.learning_rate);
      sec.number_into("weight_decay", tc.weight_decay);
      sec.number_into("train_seed", tc.seed);
      if (sec.has("hidden")) {
        auto v = trim(*sec.take("hidden"));
        tc.hidden.clear();
        if (v != "none") {
          for (const auto& tok : split(v, ", \t")) {
            auto n = parse_number<int>(tok);
            if (!n) {
              sec.error("hidden", "not a valid layer width: '" + tok + "'");
              break;
            }
            tc.hidden.push_back(*n);
          }
        }
      }
      if (L.kind == LearnerKind::online_sgd) {
        sec.number_into("online_window", L.online_window);
      } else {
        sec.number_into("momentum", tc.momentum);
        sec.number_into("lr_floor", tc.lr_floor_fraction);
        sec.number_into("epochs", tc.epochs);
        sec.number_into("batch_size", tc.batch_size);
      }
      if (L.kind == LearnerKind::prospective_erm) sec.number_into("embed_dim", L.embed.d);
      break;
    }
    default: break;
  }
  return L;
}

void append_learner(KeyValues& kv, const LearnerConfig& L) {
  kv.emplace_back("learner", learner_kind_name(L.kind));
  const auto& tc = L.train;
  switch (L.kind) {
    case LearnerKind::map:
    case LearnerKind::prospective_map:
      kv.emplace_back("alpha", format_double(L.alpha));
      kv.emplace_back("beta", format_double(L.beta));
      break;
    case LearnerKind::parity_mle: kv.emplace_back("tie_known", L.tie_known ? "true" : "false"); break;
    case LearnerKind::q_agent: kv.emplace_back("epsilon", format_double(L.epsilon)); break;
    case LearnerKind::prospective_erm:
    case LearnerKind::follow_the_leader:
    case LearnerKind::online_sgd: {
      kv.emplace_back("lr", format_double(tc.learning_rate));
      kv.emplace_back("weight_decay", format_double(tc.weight_decay));
      kv.emplace_back("train_seed", std::to_string(tc.seed));
      std::string hidden;
      for (std::size_t i = 0; i < tc.hidden.size(); ++i) hidden += (i ? ", " : "") + std::to_string(tc.hidden[i]);
      kv.emplace_back("hidden", hidden.empty() ? "none" : hidden);
      if (L.kind == LearnerKind::online_sgd) {
        kv.emplace_back("online_window", std::to_string(L.online_window));
      } else {
        kv.emplace_back("momentum", format_double(tc.momentum));
        kv.emplace_back("lr_floor", format_double(tc.lr_floor_fraction));
        kv.emplace_back("epochs", std::to_string(tc.epochs));
        kv.emplace_back("batch_size", std::to_string(tc.batch_size));
      }
      if (L.kind == LearnerKind::prospective_erm) kv.emplace_back("embed_dim", std::to_string(L.embed.d));
      break;
    }
    default: break;
  }
}

std::string format_row(const std::vector<double>& row) {
  std::string s;
  for (std::size_t i = 0; i < row.size(); ++i) s += (i ? " " : "") + format_double(row[i]);
  return s;
}

}  // namespace

// ---------------------------------------------------------------------------

TaskDistribution parse_task(const std::string& token) {
  auto parts = split(token, ":");
  auto bad = [&](const std::string& why) { return std::invalid_argument("bad task '" + token + "': " + why); };
  if (parts.empty()) throw bad("empty");
  auto num = [&](std::size_t i) {
    auto v = parse_number<double>(parts[i]);
    if (!v) throw bad("'" + parts[i] + "' is not a number");
    return *v;
  };
  auto integer = [&](std::size_t i) {
    auto v = parse_number<int>(parts[i]);
    if (!v) throw bad("'" + parts[i] + "' is not an integer");
    return *v;
  };
  const std::string& kind = parts[0];
  if (kind == "flip1d" && parts.size() == 2) return Flip1D{integer(1)};
  if (kind == "quadrant2d" && (parts.size() == 2 || parts.size() == 3)) {
    Quadrant2D q{integer(1), {}};
    if (parts.size() == 2) {
      if (q.task_id < 1 || q.task_id > 4) throw bad("quadrant task id must be in 1..4");
      q.labels = default_quadrant_labels(q.task_id);
    } else {
      if (parts[2].size() != 4) throw bad("quadrant labels need four digits");
      for (int i = 0; i < 4; ++i) {
        char c = parts[2][static_cast<std::size_t>(i)];
        if (c != '0' && c != '1') throw bad("quadrant labels must be 0 or 1");
        q.labels[static_cast<std::size_t>(i)] = c - '0';
      }
    }
    return q;
  }
  if ((kind == "prop1" || kind == "prop1_3pt") && parts.size() == 3) {
    return Prop1Task{integer(1), num(2), kind == "prop1_3pt"};
  }
  if (kind == "fld" && parts.size() == 5) return GaussianFld{num(1), num(2), num(3), integer(4)};
  throw bad("unknown task kind or wrong number of fields");
}

std::string format_task(const TaskDistribution& task) {
  return std::visit(overloaded{
                        [](const Flip1D& f) { return "flip1d:" + std::to_string(f.task_id); },
                        [](const Quadrant2D& q) {
                          std::string s = "quadrant2d:" + std::to_string(q.task_id) + ":";
                          for (int l : q.labels) s += static_cast<char>('0' + l);
                          return s;
                        },
                        [](const Prop1Task& p) {
                          return std::string(p.three_point ? "prop1_3pt:" : "prop1:") + std::to_string(p.which) + ":" +
                                 format_double(p.theta);
                        },
                        [](const GaussianFld& g) {
                          return "fld:" + format_double(g.mu) + ":" + format_double(g.sigma) + ":" +
                                 format_double(g.delta) + ":" + std::to_string(g.parity);
                        },
                    },
                    task);
}

ProcessSpec parse_process(const KeyValues& kv) {
  std::vector<std::string> errors;
  Section sec("", kv, errors);
  ProcessSpec spec = parse_process_section(sec);
  if (errors.empty()) errors = validation_errors(spec);
  if (!errors.empty()) throw ConfigError(errors);
  return spec;
}

KeyValues serialize_process(const ProcessSpec& spec) {
  KeyValues kv;
  kv.emplace_back("process", kind_name(spec.kind));
  auto tasks = [&](const std::vector<TaskDistribution>& ts) {
    std::string s;
    for (std::size_t i = 0; i < ts.size(); ++i) s += (i ? ", " : "") + format_task(ts[i]);
    kv.emplace_back("tasks", s);
  };
  std::visit(overloaded{
                 [&](const IidBernoulli& k) { kv.emplace_back("p", format_double(k.p)); },
                 [&](const AlternatingBernoulli& k) { kv.emplace_back("p", format_double(k.p)); },
                 [&](const TwoStateMarkov& k) {
                   kv.emplace_back("theta0", format_double(k.theta0));
                   kv.emplace_back("theta1", format_double(k.theta1));
                 },
                 [&](const ControlledMarkov& k) {
                   kv.emplace_back("theta0", format_double(k.theta0));
                   kv.emplace_back("theta1", format_double(k.theta1));
                 },
                 [&](const PeriodicTasks& k) {
                   tasks(k.tasks);
                   kv.emplace_back("dwell", std::to_string(k.dwell));
                 },
                 [&](const HiddenMarkovTasks& k) {
                   tasks(k.tasks);
                   for (std::size_t r = 0; r < k.regimes.size(); ++r) {
                     std::string pre = "regime" + std::to_string(r + 1);
                     std::string rows;
                     for (std::size_t i = 0; i < k.regimes[r].transition.size(); ++i) {
                       rows += (i ? " | " : "") + format_row(k.regimes[r].transition[i]);
                     }
                     kv.emplace_back(pre + ".transition", rows);
                     std::string ts;
                     for (std::size_t i = 0; i < k.regimes[r].tasks.size(); ++i) {
                       ts += (i ? " " : "") + std::to_string(k.regimes[r].tasks[i] + 1);
                     }
                     kv.emplace_back(pre + ".tasks", ts);
                   }
                   if (k.regime_switch_period) kv.emplace_back("regime_switch_period", std::to_string(*k.regime_switch_period));
                   if (k.reset_period) kv.emplace_back("reset_period", std::to_string(*k.reset_period));
                 },
                 [&](const Prop1Flip& k) { kv.emplace_back("theta", format_double(k.theta)); },
                 [&](const Prop1ThreePoint& k) { kv.emplace_back("theta", format_double(k.theta)); },
             },
             spec.kind);
  kv.emplace_back("samples_per_step", std::to_string(spec.samples_per_step));
  kv.emplace_back("horizon", std::to_string(spec.horizon));
  return kv;
}

RunConfig parse_config(std::string_view text) {
  boost::property_tree::ptree tree;
  std::istringstream in{std::string(text)};
  try {
    boost::property_tree::ini_parser::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& ex) {
    throw ConfigError({"line " + std::to_string(ex.line()) + ": " + ex.message()});
  }

  std::vector<std::string> errors;
  RunConfig run;
  bool have_run = false;
  std::vector<std::pair<std::string, KeyValues>> sections;
  for (const auto& [name, node] : tree) {
    if (node.empty()) {
      errors.push_back(name + ": keys must appear inside a [section]");
      continue;
    }
    KeyValues kv;
    for (const auto& [k, v] : node) kv.emplace_back(k, v.data());
    if (name == "run") {
      have_run = true;
      Section sec("run", std::move(kv), errors);
      sec.number_into("master_seed", run.master_seed);
      if (auto d = sec.take("output_dir")) run.output_dir = trim(*d);
      sec.report_unused();
    } else {
      sections.emplace_back(name, std::move(kv));
    }
  }
  if (!have_run) errors.push_back("[run]: section is required (master_seed)");
  if (sections.empty()) errors.push_back("no experiment sections");

  for (auto& [name, kv] : sections) {
    Section sec(name, std::move(kv), errors);
    std::size_t before = errors.size();
    ExperimentConfig cfg;
    cfg.scenario = sec.take("scenario").value_or(name);
    cfg.scenario = trim(cfg.scenario);
    cfg.process = parse_process_section(sec);
    cfg.learner = parse_learner_section(sec);
    if (auto c = sec.integer_list<long>("cutoffs", true)) cfg.cutoffs = *c;
    if (auto s = sec.integer_list<std::uint64_t>("seeds", true)) cfg.seeds = *s;
    if (auto g = sec.number<double>("gamma", false)) cfg.gamma = *g;
    if (auto t = sec.number<long>("tau", false)) cfg.tau = *t;
    cfg.master_seed = run.master_seed;
    sec.report_unused();
    if (errors.size() == before) {
      for (const auto& e : validation_errors(cfg)) errors.push_back("[" + name + "] " + e);
    }
    run.experiments.emplace_back(name, std::move(cfg));
  }
  if (!errors.empty()) throw ConfigError(errors);
  return run;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError({"cannot open " + path.string()});
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string serialize_config(const RunConfig& cfg) {
  std::ostringstream os;
  os << "[run]\nmaster_seed = " << cfg.master_seed << "\n";
  if (cfg.output_dir) os << "output_dir = " << *cfg.output_dir << "\n";
  for (const auto& [name, e] : cfg.experiments) {
    KeyValues kv;
    kv.emplace_back("scenario", e.scenario);
    for (auto& p : serialize_process(e.process)) kv.push_back(std::move(p));
    append_learner(kv, e.learner);
    kv.emplace_back("cutoffs", format_integer_list(e.cutoffs));
    kv.emplace_back("seeds", format_integer_list(e.seeds));
    if (e.gamma) kv.emplace_back("gamma", format_double(*e.gamma));
    if (e.tau) kv.emplace_back("tau", std::to_string(*e.tau));
    os << "\n[" << name << "]\n";
    for (const auto& [k, v] : kv) os << k << " = " << v << "\n";
  }
  return os.str();
}

std::uint64_t config_hash(const RunConfig& cfg) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : serialize_config(cfg)) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace prolearn
