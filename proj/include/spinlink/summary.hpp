#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "spinlink/analysis.hpp"
#include "spinlink/errors.hpp"

namespace spinlink {

// Summary document: `key: value` provenance lines followed by `metric NAME:`
// blocks with two-space-indented fields. Insertion order is preserved and
// formatting is fixed so identical runs serialize byte-identically.
class Summary {
 public:
  struct Metric {
    double value = 0.0;
    double stderr = 0.0;
    bool defined = true;
    std::int64_t count = -1;  // optional supporting-event count
  };

  void set_meta(const std::string& key, const std::string& value) {
    if (!meta_index_.count(key)) {
      meta_index_[key] = meta_.size();
      meta_.push_back({key, value});
    } else {
      meta_[meta_index_[key]].second = value;
    }
  }

  std::string meta(const std::string& key) const {
    const auto it = meta_index_.find(key);
    if (it == meta_index_.end()) throw DataIntegrityError("summary: missing meta key " + key);
    return meta_[it->second].second;
  }

  bool has_meta(const std::string& key) const { return meta_index_.count(key) != 0; }

  void set_metric(const std::string& name, const Metric& m) {
    if (!metric_index_.count(name)) {
      metric_index_[name] = metrics_.size();
      metrics_.push_back({name, m});
    } else {
      metrics_[metric_index_[name]].second = m;
    }
  }

  void set_metric(const std::string& name, const CorrelationEstimate& est,
                  std::int64_t count = -1) {
    set_metric(name, Metric{est.value, est.stderr, est.defined, count});
  }

  std::optional<Metric> metric(const std::string& name) const {
    const auto it = metric_index_.find(name);
    if (it == metric_index_.end()) return std::nullopt;
    return metrics_[it->second].second;
  }

  const std::vector<std::pair<std::string, Metric>>& metrics() const { return metrics_; }

  std::string to_text() const {
    std::string out;
    char buf[128];
    for (const auto& [k, v] : meta_) out += k + ": " + v + "\n";
    for (const auto& [name, m] : metrics_) {
      out += "metric " + name + ":\n";
      std::snprintf(buf, sizeof buf, "  value: %.9g\n", m.value);
      out += buf;
      std::snprintf(buf, sizeof buf, "  stderr: %.9g\n", m.stderr);
      out += buf;
      std::snprintf(buf, sizeof buf, "  defined: %d\n", m.defined ? 1 : 0);
      out += buf;
      if (m.count >= 0) {
        std::snprintf(buf, sizeof buf, "  count: %lld\n", static_cast<long long>(m.count));
        out += buf;
      }
    }
    return out;
  }

  void write(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write summary file: " + path);
    out << to_text();
  }

  static Summary from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataIntegrityError("cannot open summary file: " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return from_text(buf.str());
  }

  static Summary from_text(const std::string& text) {
    Summary s;
    std::istringstream in(text);
    std::string line;
    std::string current_metric;
    Metric current;
    const auto flush = [&] {
      if (!current_metric.empty()) s.set_metric(current_metric, current);
      current_metric.clear();
      current = Metric{};
    };
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      if (line.rfind("metric ", 0) == 0 && line.back() == ':') {
        flush();
        current_metric = line.substr(7, line.size() - 8);
        continue;
      }
      if (line.rfind("  ", 0) == 0) {
        if (current_metric.empty()) throw DataIntegrityError("summary: stray indented line");
        const auto colon = line.find(':');
        if (colon == std::string::npos) throw DataIntegrityError("summary: bad metric field");
        const std::string key = line.substr(2, colon - 2);
        const std::string value = line.substr(colon + 2);
        if (key == "value") current.value = std::stod(value);
        else if (key == "stderr") current.stderr = std::stod(value);
        else if (key == "defined") current.defined = value != "0";
        else if (key == "count") current.count = std::stoll(value);
        continue;
      }
      flush();
      const auto colon = line.find(':');
      if (colon == std::string::npos) throw DataIntegrityError("summary: bad meta line: " + line);
      s.set_meta(line.substr(0, colon), line.substr(colon + 2));
    }
    flush();
    return s;
  }

 private:
  std::vector<std::pair<std::string, std::string>> meta_;
  std::map<std::string, std::size_t> meta_index_;
  std::vector<std::pair<std::string, Metric>> metrics_;
  std::map<std::string, std::size_t> metric_index_;
};

// Reference file: CSV rows `metric,value,uncertainty` ('#' comments allowed;
// the uncertainty field may be empty when the source quotes none).
struct ReferenceValue {
  std::string metric;
  double value = 0.0;
  double uncertainty = 0.0;
  bool has_uncertainty = false;
};

inline std::vector<ReferenceValue> read_reference_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataIntegrityError("cannot open reference file: " + path);
  std::vector<ReferenceValue> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string metric, value, unc;
    if (!std::getline(row, metric, ',') || !std::getline(row, value, ','))
      throw DataIntegrityError("reference file: bad row at line " + std::to_string(lineno));
    std::getline(row, unc, ',');
    ReferenceValue rv;
    rv.metric = metric;
    try {
      rv.value = std::stod(value);
      if (!unc.empty()) {
        rv.uncertainty = std::stod(unc);
        rv.has_uncertainty = true;
      }
    } catch (const std::exception&) {
      throw DataIntegrityError("reference file: bad number at line " + std::to_string(lineno));
    }
    out.push_back(rv);
  }
  if (out.empty()) throw DataIntegrityError("reference file holds no rows: " + path);
  return out;
}

struct ComparisonRow {
  std::string metric;
  bool present = false;
  double computed = 0.0;
  double computed_stderr = 0.0;
  double reference = 0.0;
  double reference_uncertainty = 0.0;
  double z = 0.0;
  bool pass = false;
};

struct ComparisonReport {
  std::vector<ComparisonRow> rows;
  double z_threshold = 3.0;
  bool all_pass = false;

  std::string to_csv() const {
    std::string out = "metric,computed,computed_stderr,reference,reference_uncertainty,z,status\n";
    char buf[256];
    for (const auto& r : rows) {
      if (!r.present) {
        std::snprintf(buf, sizeof buf, "%s,absent,,%.9g,%.9g,,FAIL\n", r.metric.c_str(),
                      r.reference, r.reference_uncertainty);
      } else {
        std::snprintf(buf, sizeof buf, "%s,%.9g,%.9g,%.9g,%.9g,%.4g,%s\n", r.metric.c_str(),
                      r.computed, r.computed_stderr, r.reference, r.reference_uncertainty, r.z,
                      r.pass ? "PASS" : "FAIL");
      }
      out += buf;
    }
    return out;
  }
};

// Per-metric z-distance between a summary and a reference table. The z score
// combines the reference uncertainty and the computed standard error in
// quadrature; metrics missing from the summary (or flagged undefined) fail.
inline ComparisonReport compare_to_reference(const Summary& summary,
                                             const std::vector<ReferenceValue>& reference,
                                             double z_threshold = 3.0) {
  if (!(z_threshold > 0.0)) throw ConfigError("z threshold must be positive");
  ComparisonReport report;
  report.z_threshold = z_threshold;
  report.all_pass = true;
  for (const auto& ref : reference) {
    ComparisonRow row;
    row.metric = ref.metric;
    row.reference = ref.value;
    row.reference_uncertainty = ref.uncertainty;
    const auto metric = summary.metric(ref.metric);
    if (!metric || !metric->defined) {
      row.present = false;
      report.all_pass = false;
      report.rows.push_back(row);
      continue;
    }
    row.present = true;
    row.computed = metric->value;
    row.computed_stderr = metric->stderr;
    const double spread =
        std::sqrt(ref.uncertainty * ref.uncertainty + metric->stderr * metric->stderr);
    const double diff = std::abs(metric->value - ref.value);
    if (spread > 0.0) {
      row.z = diff / spread;
    } else {
      row.z = diff == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
    }
    row.pass = row.z <= z_threshold;
    if (!row.pass) report.all_pass = false;
    report.rows.push_back(row);
  }
  return report;
}

}  // namespace spinlink
