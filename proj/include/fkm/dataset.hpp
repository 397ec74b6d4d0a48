#pragma once

// Sparse longitudinal datasets: one record per subject holding irregular
// (time, value) observations on a shared domain, plus CSV ingestion and
// time normalization onto the unit interval.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <istream>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace fkm {

struct SubjectRecord {
  std::string id;
  std::vector<double> times;
  std::vector<double> values;

  std::size_t size() const { return times.size(); }
};

// Affine map between an observation window [lo, hi] and the unit interval.
struct TimeTransform {
  double lo = 0.0;
  double hi = 1.0;

  double to_unit(double t) const { return (t - lo) / (hi - lo); }
  double from_unit(double u) const { return lo + u * (hi - lo); }
  bool is_identity() const { return lo == 0.0 && hi == 1.0; }
};

struct SparseFunctionalDataset {
  std::vector<SubjectRecord> subjects;
  double t_lo = 0.0;
  double t_hi = 1.0;

  std::size_t n() const { return subjects.size(); }

  std::size_t total_observations() const {
    std::size_t total = 0;
    for (const auto& s : subjects) total += s.size();
    return total;
  }

  // N-bar, the average number of observations per subject.
  double mean_observations() const {
    if (subjects.empty()) return 0.0;
    return static_cast<double>(total_observations()) / static_cast<double>(n());
  }

  // Subject subset sharing this dataset's domain (no re-normalization).
  SparseFunctionalDataset subset(const std::vector<int>& indices) const {
    SparseFunctionalDataset out;
    out.t_lo = t_lo;
    out.t_hi = t_hi;
    out.subjects.reserve(indices.size());
    for (int i : indices) out.subjects.push_back(subjects.at(static_cast<std::size_t>(i)));
    return out;
  }
};

struct csv_schema_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct csv_parse_error : std::runtime_error {
  csv_parse_error(const std::string& msg, std::size_t row_number)
      : std::runtime_error(msg + " (row " + std::to_string(row_number) + ")"), row(row_number) {}
  std::size_t row;
};

struct empty_data_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct validation_error : std::runtime_error {
  validation_error(std::string msg, std::vector<std::string> found)
      : std::runtime_error(std::move(msg)), issues(std::move(found)) {}
  std::vector<std::string> issues;
};

struct CsvColumns {
  std::string subject = "id";
  std::string time = "time";
  std::string value = "value";
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  fields.push_back(cur);
  return fields;
}

inline std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

inline bool parse_number(const std::string& field, double& out) {
  const std::string s = trim(field);
  if (s.empty()) return false;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc{} && ptr == last;
}

}  // namespace detail

// Structural checks for the dataset invariants; returns human-readable
// violation descriptions, empty when the dataset is well formed.
inline std::vector<std::string> collect_issues(const SparseFunctionalDataset& ds) {
  std::vector<std::string> issues;
  if (ds.subjects.empty()) issues.push_back("empty dataset (no subjects)");
  if (!(ds.t_lo <= ds.t_hi)) issues.push_back("domain lower bound exceeds upper bound");
  for (std::size_t i = 0; i < ds.subjects.size(); ++i) {
    const auto& s = ds.subjects[i];
    const std::string who = "subject '" + s.id + "' (index " + std::to_string(i) + ")";
    if (s.times.size() != s.values.size()) {
      issues.push_back(who + ": times/values length mismatch");
      continue;
    }
    if (s.times.empty()) {
      issues.push_back(who + ": empty subject");
      continue;
    }
    for (std::size_t j = 0; j < s.times.size(); ++j) {
      if (!std::isfinite(s.times[j])) {
        issues.push_back(who + ": non-finite time at observation " + std::to_string(j));
      } else if (s.times[j] < ds.t_lo || s.times[j] > ds.t_hi) {
        issues.push_back(who + ": time outside domain at observation " + std::to_string(j));
      }
      if (!std::isfinite(s.values[j])) {
        issues.push_back(who + ": non-finite value at observation " + std::to_string(j));
      }
    }
  }
  return issues;
}

inline void validate(const SparseFunctionalDataset& ds) {
  auto issues = collect_issues(ds);
  if (issues.empty()) return;
  std::string msg = "invalid dataset:";
  for (const auto& issue : issues) msg += "\n  - " + issue;
  throw validation_error(msg, std::move(issues));
}

// Reads a long-format CSV (header row, one observation per row). Rows are
// grouped by subject in first-appearance order and sorted by time within a
// subject (ties keep input order). The domain is the observed time range.
inline SparseFunctionalDataset load_csv_stream(std::istream& in, const CsvColumns& cols = {}) {
  std::string line;
  if (!std::getline(in, line)) throw empty_data_error("empty input: no header row");

  const auto header = detail::split_csv_line(line);
  auto find_col = [&](const std::string& name) -> int {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (detail::trim(header[i]) == name) return static_cast<int>(i);
    }
    return -1;
  };
  const int id_col = find_col(cols.subject);
  const int time_col = find_col(cols.time);
  const int value_col = find_col(cols.value);
  {
    std::string missing;
    if (id_col < 0) missing += " '" + cols.subject + "'";
    if (time_col < 0) missing += " '" + cols.time + "'";
    if (value_col < 0) missing += " '" + cols.value + "'";
    if (!missing.empty()) throw csv_schema_error("missing column(s):" + missing);
  }
  const std::size_t need = static_cast<std::size_t>(std::max({id_col, time_col, value_col})) + 1;

  SparseFunctionalDataset ds;
  std::unordered_map<std::string, std::size_t> index_of;
  std::size_t row = 1;  // header was row 1
  while (std::getline(in, line)) {
    ++row;
    if (line.empty() || line == "\r") continue;
    const auto fields = detail::split_csv_line(line);
    if (fields.size() < need) throw csv_parse_error("too few fields", row);

    double t = 0.0, x = 0.0;
    if (!detail::parse_number(fields[static_cast<std::size_t>(time_col)], t)) {
      throw csv_parse_error("non-numeric time '" + detail::trim(fields[static_cast<std::size_t>(time_col)]) + "'", row);
    }
    if (!detail::parse_number(fields[static_cast<std::size_t>(value_col)], x)) {
      throw csv_parse_error("non-numeric value '" + detail::trim(fields[static_cast<std::size_t>(value_col)]) + "'", row);
    }
    if (!std::isfinite(t)) throw csv_parse_error("non-finite time", row);
    if (!std::isfinite(x)) throw csv_parse_error("non-finite value", row);

    const std::string id = detail::trim(fields[static_cast<std::size_t>(id_col)]);
    auto [it, inserted] = index_of.try_emplace(id, ds.subjects.size());
    if (inserted) ds.subjects.push_back(SubjectRecord{id, {}, {}});
    auto& rec = ds.subjects[it->second];
    rec.times.push_back(t);
    rec.values.push_back(x);
  }
  if (ds.subjects.empty()) throw empty_data_error("empty input: no data rows");

  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (auto& rec : ds.subjects) {
    // stable sort by time; ties keep input order
    std::vector<std::size_t> order(rec.times.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return rec.times[a] < rec.times[b]; });
    std::vector<double> ts(order.size()), xs(order.size());
    for (std::size_t j = 0; j < order.size(); ++j) {
      ts[j] = rec.times[order[j]];
      xs[j] = rec.values[order[j]];
    }
    rec.times = std::move(ts);
    rec.values = std::move(xs);
    lo = std::min(lo, rec.times.front());
    hi = std::max(hi, rec.times.back());
  }
  ds.t_lo = lo;
  ds.t_hi = hi;
  return ds;
}

inline SparseFunctionalDataset load_csv(const std::string& path, const CsvColumns& cols = {}) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open file: " + path);
  return load_csv_stream(in, cols);
}

// Maps all observation times onto [0, 1] via the dataset domain; returns the
// transform needed to report results back on the original scale.
inline std::pair<SparseFunctionalDataset, TimeTransform> normalize_time(const SparseFunctionalDataset& ds) {
  if (!(ds.t_hi > ds.t_lo)) {
    throw std::invalid_argument("degenerate time domain: all observation times coincide");
  }
  TimeTransform tf{ds.t_lo, ds.t_hi};
  SparseFunctionalDataset out = ds;
  out.t_lo = 0.0;
  out.t_hi = 1.0;
  for (auto& rec : out.subjects) {
    for (auto& t : rec.times) t = tf.to_unit(t);
  }
  return {std::move(out), tf};
}

}  // namespace fkm
