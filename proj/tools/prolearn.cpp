// prolearn: run prospective-learning experiments from an ini config.
//
//   prolearn bayes --markov 0.9 0.5
//   prolearn run configs/tabular.ini --plot
//   prolearn simulate process=alternating_bernoulli p=0 horizon=4
//   prolearn plot results/*.csv

#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "prolearn/analytic.hpp"
#include "prolearn/config.hpp"
#include "prolearn/report.hpp"

namespace fs = std::filesystem;
using namespace prolearn;

namespace {

constexpr int exit_config = 2;
constexpr int exit_runtime = 3;

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

void write_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path default_out_dir(const std::optional<std::string>& from_config) {
  if (const char* env = std::getenv("PROLEARN_OUT_DIR"); env && *env) return env;
  if (from_config) return *from_config;
  return "results";
}

struct BayesArgs {
  std::vector<double> bernoulli, markov, discounted, fld;
  std::vector<int> chance;
};

int cmd_bayes(const BayesArgs& a) {
  std::vector<std::pair<std::string, double>> rows;
  if (!a.bernoulli.empty()) rows.emplace_back("bernoulli", bernoulli_bayes_risk(a.bernoulli[0]));
  if (!a.markov.empty()) rows.emplace_back("markov", markov_average_bayes_risk({a.markov[0], a.markov[1]}));
  if (!a.discounted.empty()) rows.emplace_back("discounted", markov_discounted_bayes_risk(a.discounted[0], a.discounted[1]));
  if (!a.chance.empty()) rows.emplace_back("chance", chance_risk(a.chance));
  if (!a.fld.empty()) {
    auto lim = fld_risk_limits(a.fld[0], a.fld[1], a.fld[2], static_cast<long>(a.fld[3]));
    rows.emplace_back("fld_time_agnostic_limit", lim.time_agnostic_limit);
    rows.emplace_back("fld_prospective_at_t", lim.prospective_at_t);
    rows.emplace_back("fld_prospective_limit", lim.prospective_limit);
  }
  if (rows.empty()) throw std::invalid_argument("bayes: give at least one of --bernoulli --markov --discounted --chance --fld");
  // a lone value prints bare so it can be used in scripts
  if (rows.size() == 1) {
    std::cout << fmt(rows[0].second) << "\n";
  } else {
    for (const auto& [k, v] : rows) std::cout << k << " " << fmt(v) << "\n";
  }
  return 0;
}

struct RunArgs {
  std::string config;
  std::string out;
  bool plot = false;
  bool serial = false;
  int precision = 6;
};

int cmd_run(const RunArgs& a) {
  RunConfig cfg = load_config(a.config);
  fs::path out = a.out.empty() ? default_out_dir(cfg.output_dir) : fs::path(a.out);
  const std::uint64_t hash = config_hash(cfg);

  // Everything runs before anything is written, so a failure leaves no partial output.
  std::vector<std::pair<std::string, std::string>> files;
  for (const auto& [name, e] : cfg.experiments) {
    std::cerr << "running " << name << " (" << e.cutoffs.size() << " cutoffs x " << e.seeds.size() << " seeds)\n";
    RiskCurve curve = a.serial ? run_experiment_serial(e) : run_experiment(e);
    FileStamp stamp{version_string, cfg.master_seed, hash, analytic_bayes_risk(e)};
    std::string stem = csv_file_stem(curve);
    std::string csv = format_csv(curve, stamp, a.precision);
    // plot from the CSV text so `prolearn plot` on the file gives the same SVG
    if (a.plot) files.emplace_back(stem + ".svg", render_svg(parse_csv(csv)));
    files.emplace(files.end() - (a.plot ? 1 : 0), stem + ".csv", std::move(csv));
  }
  for (const auto& [file, text] : files) {
    write_file(out / file, text);
    std::cout << (out / file).string() << "\n";
  }
  return 0;
}

struct SimulateArgs {
  std::vector<std::string> keys;
  std::uint64_t seed = 0;
  std::uint64_t master_seed = 0;
  std::string out;
  int precision = 6;
};

int cmd_simulate(const SimulateArgs& a) {
  KeyValues kv;
  for (const auto& s : a.keys) {
    auto eq = s.find('=');
    if (eq == std::string::npos) throw ConfigError({"expected key=value, got '" + s + "'"});
    kv.emplace_back(s.substr(0, eq), s.substr(eq + 1));
  }
  ProcessSpec spec = parse_process(kv);
  if (std::holds_alternative<ControlledMarkov>(spec.kind)) {
    throw ConfigError({"process: controlled_markov depends on the agent and cannot be simulated open loop"});
  }
  // Same data stream the runner uses for this (master_seed, seed).
  Realization data = sample_realization(spec, hash_combine(a.master_seed, a.seed));
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& [k, v] : serialize_process(spec)) {
    for (unsigned char c : k + "=" + v + "\n") {
      h ^= c;
      h *= 0x100000001b3ULL;
    }
  }
  std::string text = format_realization_csv(data, FileStamp{version_string, a.master_seed, h, std::nullopt}, a.precision);
  if (a.out.empty() || a.out == "-") {
    std::cout << text;
  } else {
    write_file(a.out, text);
  }
  return 0;
}

int cmd_plot(const std::vector<std::string>& csvs, const std::string& out) {
  for (const auto& f : csvs) {
    CsvDocument doc = parse_csv(read_file(f));
    fs::path target = out.empty() ? fs::path(f).replace_extension(".svg") : fs::path(out) / (csv_file_stem(doc.curve) + ".svg");
    write_file(target, render_svg(doc));
    std::cout << target.string() << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"prospective learning experiments"};
  app.set_version_flag("--version", std::string("prolearn ") + version_string);
  app.require_subcommand(1);

  BayesArgs bayes;
  auto* b = app.add_subcommand("bayes", "print analytic Bayes and chance risks");
  b->add_option("--bernoulli", bayes.bernoulli, "P")->expected(1);
  b->add_option("--markov", bayes.markov, "THETA0 THETA1: average Bayes risk")->expected(2);
  b->add_option("--discounted", bayes.discounted, "THETA GAMMA: symmetric chain")->expected(2);
  b->add_option("--chance", bayes.chance, "K1 K2 ...: class counts of the tasks")->expected(1, 64);
  b->add_option("--fld", bayes.fld, "MU SIGMA DELTA T: Gaussian FLD limits")->expected(4);

  RunArgs run;
  auto* r = app.add_subcommand("run", "run every experiment in a config, write CSV (and SVG)");
  r->add_option("config", run.config)->required()->check(CLI::ExistingFile);
  r->add_option("-o,--out", run.out, "output directory (default $PROLEARN_OUT_DIR, then output_dir, then ./results)");
  r->add_flag("--plot", run.plot, "also write an SVG per CSV");
  r->add_flag("--serial", run.serial, "single-threaded reference runner");
  r->add_option("--precision", run.precision, "significant digits in CSV (17 = exact)")->check(CLI::Range(1, 17));

  SimulateArgs sim;
  auto* s = app.add_subcommand("simulate", "dump one realization as CSV");
  s->add_option("keys", sim.keys, "process keys, e.g. process=iid_bernoulli p=0.2 horizon=100")->required();
  s->add_option("--seed", sim.seed);
  s->add_option("--master-seed", sim.master_seed);
  s->add_option("-o,--out", sim.out, "output file (default stdout)");
  s->add_option("--precision", sim.precision)->check(CLI::Range(1, 17));

  std::vector<std::string> plot_csvs;
  std::string plot_out;
  auto* p = app.add_subcommand("plot", "re-render SVGs from result CSVs");
  p->add_option("csv", plot_csvs)->required()->check(CLI::ExistingFile);
  p->add_option("-o,--out", plot_out, "output directory (default: next to each CSV)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : exit_config;
  }

  try {
    if (*b) return cmd_bayes(bayes);
    if (*r) return cmd_run(run);
    if (*s) return cmd_simulate(sim);
    if (*p) return cmd_plot(plot_csvs, plot_out);
  } catch (const ConfigError& e) {
    std::cerr << e.what() << "\n";
    return exit_config;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_config;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_runtime;
  }
  return 0;
}
