#include "prolearn/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

#include "prolearn/analytic.hpp"
#include "prolearn/config.hpp"

namespace prolearn {

namespace {

std::string fmt_g(double v, int precision) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", precision, v);
  return buf;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

double to_double(const std::string& s, const char* what) {
  try {
    std::size_t pos = 0;
    double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw std::runtime_error(std::string("csv: bad ") + what + " '" + s + "'");
  }
}

FileStamp parse_stamp(const std::string& line) {
  // "# prolearn VERSION key=value ..."
  std::istringstream in(line);
  std::string hash, name;
  FileStamp st;
  in >> hash >> name >> st.version;
  if (hash != "#" || name != "prolearn" || st.version.empty()) {
    throw std::runtime_error("csv: missing '# prolearn' stamp line");
  }
  std::string kv;
  while (in >> kv) {
    auto eq = kv.find('=');
    if (eq == std::string::npos) continue;
    std::string k = kv.substr(0, eq), v = kv.substr(eq + 1);
    if (k == "master_seed") {
      st.master_seed = std::stoull(v);
    } else if (k == "config_hash") {
      st.config_hash = std::stoull(v, nullptr, 16);
    } else if (k == "bayes_risk") {
      st.bayes_risk = to_double(v, "bayes_risk");
    }
  }
  return st;
}

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

// 1, 2, 5 x 10^k spacing giving roughly `target` ticks.
double nice_step(double range, int target) {
  double raw = range / target;
  double mag = std::pow(10.0, std::floor(std::log10(raw)));
  for (double m : {1.0, 2.0, 5.0, 10.0}) {
    if (m * mag >= raw) return m * mag;
  }
  return 10.0 * mag;
}

}  // namespace

std::string stamp_text(const FileStamp& st) {
  std::string s = "prolearn " + st.version + " master_seed=" + std::to_string(st.master_seed) +
                  " config_hash=" + hex64(st.config_hash);
  if (st.bayes_risk) s += " bayes_risk=" + format_double(*st.bayes_risk);
  return s;
}

std::string csv_file_stem(const RiskCurve& curve) { return curve.scenario + "__" + curve.learner; }

std::string format_csv(const RiskCurve& curve, const FileStamp& stamp, int precision) {
  if (precision < 1 || precision > 17) throw std::invalid_argument("precision must be in 1..17");
  std::string out = "# " + stamp_text(stamp) + "\n" + csv_header + "\n";
  std::string gamma = curve.gamma ? fmt_g(*curve.gamma, precision) : "";
  for (const auto& p : curve.points) {
    out += curve.scenario + "," + curve.learner + "," + std::to_string(p.t) + "," + fmt_g(p.mean, precision) + "," +
           fmt_g(p.std, precision) + "," + std::to_string(p.n_seeds) + "," + gamma + "\n";
  }
  return out;
}

CsvDocument parse_csv(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  CsvDocument doc;
  if (!std::getline(in, line)) throw std::runtime_error("csv: empty input");
  doc.stamp = parse_stamp(line);
  if (!std::getline(in, line) || line != csv_header) throw std::runtime_error("csv: unexpected header");
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto f = split_csv_line(line);
    if (f.size() != 7) throw std::runtime_error("csv: expected 7 fields in '" + line + "'");
    if (first) {
      doc.curve.scenario = f[0];
      doc.curve.learner = f[1];
      if (!f[6].empty()) doc.curve.gamma = to_double(f[6], "gamma");
      first = false;
    } else if (f[0] != doc.curve.scenario || f[1] != doc.curve.learner) {
      throw std::runtime_error("csv: rows from more than one (scenario, learner)");
    }
    RiskPoint p;
    p.t = static_cast<long>(to_double(f[2], "t"));
    p.mean = to_double(f[3], "mean_risk");
    p.std = to_double(f[4], "std_risk");
    p.n_seeds = static_cast<int>(to_double(f[5], "n_seeds"));
    doc.curve.points.push_back(p);
  }
  return doc;
}

std::string render_svg(const CsvDocument& doc) {
  const auto& pts = doc.curve.points;
  const double W = 640, H = 400, left = 64, right = 24, top = 36, bottom = 52;
  const double pw = W - left - right, ph = H - top - bottom;

  double tmin = pts.empty() ? 0.0 : static_cast<double>(pts.front().t);
  double tmax = pts.empty() ? 1.0 : static_cast<double>(pts.back().t);
  if (tmax <= tmin) tmax = tmin + 1.0;
  double ymax = 0.0;
  for (const auto& p : pts) ymax = std::max(ymax, p.mean + p.std);
  if (doc.stamp.bayes_risk) ymax = std::max(ymax, *doc.stamp.bayes_risk);
  ymax = std::max(0.1, std::min(1.0, ymax * 1.1));

  auto X = [&](double t) { return left + (t - tmin) / (tmax - tmin) * pw; };
  auto Y = [&](double r) { return top + (1.0 - std::clamp(r, 0.0, ymax) / ymax) * ph; };
  auto num = [](double v) { return fmt_g(v, 6); };

  std::ostringstream os;
  os << "<!-- " << stamp_text(doc.stamp) << " -->\n";
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" viewBox=\"0 0 " << W
     << " " << H << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << W / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">"
     << xml_escape(doc.curve.scenario + " / " + doc.curve.learner) << "</text>\n";

  // axes and ticks
  os << "<g stroke=\"black\" fill=\"none\"><path d=\"M" << left << " " << top << " V" << top + ph << " H" << left + pw
     << "\"/></g>\n";
  double ys = nice_step(ymax, 5);
  for (double r = 0.0; r <= ymax + 1e-12; r += ys) {
    os << "<line x1=\"" << left - 4 << "\" x2=\"" << left + pw << "\" y1=\"" << num(Y(r)) << "\" y2=\"" << num(Y(r))
       << "\" stroke=\"#ddd\"/><text x=\"" << left - 8 << "\" y=\"" << num(Y(r) + 4) << "\" text-anchor=\"end\">"
       << num(r) << "</text>\n";
  }
  double xs = nice_step(tmax - tmin, 6);
  for (double t = std::ceil(tmin / xs) * xs; t <= tmax + 1e-9; t += xs) {
    os << "<line x1=\"" << num(X(t)) << "\" x2=\"" << num(X(t)) << "\" y1=\"" << top + ph << "\" y2=\"" << top + ph + 4
       << "\" stroke=\"black\"/><text x=\"" << num(X(t)) << "\" y=\"" << top + ph + 18
       << "\" text-anchor=\"middle\">" << num(t) << "</text>\n";
  }
  os << "<text x=\"" << left + pw / 2 << "\" y=\"" << H - 12 << "\" text-anchor=\"middle\">t</text>\n";
  os << "<text transform=\"translate(16 " << top + ph / 2 << ") rotate(-90)\" text-anchor=\"middle\">"
     << (doc.curve.gamma ? "discounted risk" : "prospective risk") << "</text>\n";

  if (!pts.empty()) {
    // +-1 std band, then the mean
    os << "<polygon fill=\"#1f77b4\" fill-opacity=\"0.2\" stroke=\"none\" points=\"";
    for (const auto& p : pts) os << num(X(p.t)) << "," << num(Y(p.mean + p.std)) << " ";
    for (auto it = pts.rbegin(); it != pts.rend(); ++it) os << num(X(it->t)) << "," << num(Y(it->mean - it->std)) << " ";
    os << "\"/>\n<polyline fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"2\" points=\"";
    for (const auto& p : pts) os << num(X(p.t)) << "," << num(Y(p.mean)) << " ";
    os << "\"/>\n";
  }
  if (doc.stamp.bayes_risk) {
    double y = Y(*doc.stamp.bayes_risk);
    os << "<line x1=\"" << left << "\" x2=\"" << left + pw << "\" y1=\"" << num(y) << "\" y2=\"" << num(y)
       << "\" stroke=\"#d62728\" stroke-dasharray=\"6 4\"/>\n";
    os << "<text x=\"" << left + pw - 4 << "\" y=\"" << num(y - 6) << "\" text-anchor=\"end\" fill=\"#d62728\">Bayes "
       << num(*doc.stamp.bayes_risk) << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

std::string format_realization_csv(const Realization& data, const FileStamp& stamp, int precision) {
  std::string out = "# " + stamp_text(stamp) + "\nt,sample_index";
  for (int j = 0; j < data.dim; ++j) out += ",x" + std::to_string(j);
  out += ",y\n";
  for (std::size_t i = 0; i < data.size(); ++i) {
    out += std::to_string(data.time_of(i)) + "," + std::to_string(i % static_cast<std::size_t>(data.samples_per_step));
    for (double v : data.input(i)) out += "," + fmt_g(v, precision);
    out += "," + std::to_string(data.y[i]) + "\n";
  }
  return out;
}

std::optional<double> analytic_bayes_risk(const ExperimentConfig& cfg) {
  const auto& k = cfg.process.kind;
  if (const auto* b = std::get_if<IidBernoulli>(&k)) return bernoulli_bayes_risk(b->p);
  // Known parity makes every step an iid Bernoulli with p or 1-p.
  if (const auto* b = std::get_if<AlternatingBernoulli>(&k)) return bernoulli_bayes_risk(b->p);
  std::optional<TransitionModel> chain;
  if (const auto* m = std::get_if<TwoStateMarkov>(&k)) chain.emplace(m->theta0, m->theta1);
  if (const auto* m = std::get_if<ControlledMarkov>(&k)) chain.emplace(m->theta0, m->theta1);
  if (chain) {
    if (!cfg.gamma) return markov_average_bayes_risk(*chain);
    if (chain->theta0 == chain->theta1) return markov_discounted_bayes_risk(chain->theta0, *cfg.gamma);
  }
  return std::nullopt;
}

}  // namespace prolearn
