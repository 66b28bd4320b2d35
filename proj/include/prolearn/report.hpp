#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "prolearn/eval.hpp"

namespace prolearn {

inline constexpr const char* version_string = "0.3.1";

/// Fields of the comment line that opens every output file.
struct FileStamp {
  std::string version = version_string;
  std::uint64_t master_seed = 0;
  std::uint64_t config_hash = 0;
  std::optional<double> bayes_risk;
  bool operator==(const FileStamp&) const = default;
};

/// "prolearn 0.3.1 master_seed=7 config_hash=... bayes_risk=0.2"
std::string stamp_text(const FileStamp& stamp);

inline constexpr const char* csv_header = "scenario,learner,t,mean_risk,std_risk,n_seeds,gamma";

/// One CSV per (scenario, learner).  `precision` is the number of significant
/// digits for risks; 17 round-trips exactly.
std::string format_csv(const RiskCurve& curve, const FileStamp& stamp, int precision = 6);

struct CsvDocument {
  FileStamp stamp;
  RiskCurve curve;
};

/// Inverse of format_csv (up to printed precision).  Throws std::runtime_error.
CsvDocument parse_csv(std::string_view text);

std::string csv_file_stem(const RiskCurve& curve);

/// Risk against t with a +-1 std band and, when known, a dashed Bayes line.
std::string render_svg(const CsvDocument& doc);

/// Realization dump: t,sample_index,x0..x{d-1},y.
std::string format_realization_csv(const Realization& data, const FileStamp& stamp, int precision = 6);

/// Closed-form Bayes risk of the evaluated quantity when one is known.
std::optional<double> analytic_bayes_risk(const ExperimentConfig& cfg);

}  // namespace prolearn
