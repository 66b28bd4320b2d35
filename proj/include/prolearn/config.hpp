#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "prolearn/eval.hpp"

namespace prolearn {

/// A run: shared settings from the [run] section plus one experiment per other
/// section.  Example:
///
///   [run]
///   master_seed = 7
///
///   [scenario1_mle]
///   scenario = scenario1
///   process = iid_bernoulli
///   p = 0.2
///   learner = mle
///   cutoffs = 10, 50, 100, 500
///   seeds = 0:4
struct RunConfig {
  std::uint64_t master_seed = 0;
  std::optional<std::string> output_dir;
  std::vector<std::pair<std::string, ExperimentConfig>> experiments;  // (section name, experiment)
  bool operator==(const RunConfig&) const = default;
};

/// Carries every validation problem found, not just the first.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(std::vector<std::string> errors);
  const std::vector<std::string>& errors() const { return errors_; }

 private:
  std::vector<std::string> errors_;
};

using KeyValues = std::vector<std::pair<std::string, std::string>>;

RunConfig parse_config(std::string_view text);
RunConfig load_config(const std::filesystem::path& path);
/// Canonical text form; parse_config(serialize_config(c)) == c.
std::string serialize_config(const RunConfig& cfg);

/// FNV-1a hash of the canonical text form.
std::uint64_t config_hash(const RunConfig& cfg);
std::string hex64(std::uint64_t v);

/// Process description from flat keys (process, p, theta0, ..., horizon).
/// Keys not describing a process are ignored.  Throws ConfigError.
ProcessSpec parse_process(const KeyValues& kv);
KeyValues serialize_process(const ProcessSpec& spec);

/// Task token syntax: flip1d:ID, quadrant2d:ID[:LLLL], prop1:WHICH:THETA,
/// prop1_3pt:WHICH:THETA, fld:MU:SIGMA:DELTA:PARITY.
TaskDistribution parse_task(const std::string& token);
std::string format_task(const TaskDistribution& task);

/// Shortest text that parses back to the same double.
std::string format_double(double v);

}  // namespace prolearn
