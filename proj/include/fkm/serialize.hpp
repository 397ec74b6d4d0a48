#pragma once

// JSON and CSV serialization for fit results, models, label files, center
// grids and the simulated datasets. All numeric text is written with
// shortest round-trip formatting, so re-running with the same seed
// reproduces output files byte for byte.

#include <charconv>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "fkm/basis.hpp"
#include "fkm/dataset.hpp"
#include "fkm/model_selection.hpp"
#include "fkm/simulation.hpp"
#include "fkm/solver.hpp"
#include "fkm/version.hpp"

namespace fkm::io {

using json = nlohmann::json;

inline std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc{}) throw std::runtime_error("number formatting failed");
  return std::string(buf, ptr);
}

inline std::string weight_scheme_name(WeightScheme scheme) {
  return scheme == WeightScheme::Subject ? "subj" : "obs";
}

inline WeightScheme weight_scheme_from_name(const std::string& name) {
  if (name == "subj") return WeightScheme::Subject;
  if (name == "obs") return WeightScheme::Observation;
  throw std::invalid_argument("unknown weight scheme: " + name);
}

inline std::string basis_kind_name(BasisKind kind) {
  return kind == BasisKind::Fourier ? "fourier" : "bspline";
}

inline BasisKind basis_kind_from_name(const std::string& name) {
  if (name == "fourier") return BasisKind::Fourier;
  if (name == "bspline") return BasisKind::BSpline;
  throw std::invalid_argument("unknown basis kind: " + name);
}

inline json basis_to_json(const BasisSystem& basis) {
  json j;
  j["kind"] = basis_kind_name(basis.kind());
  j["m"] = basis.size();
  if (basis.kind() == BasisKind::BSpline) {
    j["order"] = basis.order();
    j["knots"] = basis.knots();
  }
  return j;
}

inline BasisSystem basis_from_json(const json& j) {
  const auto kind = basis_kind_from_name(j.at("kind").get<std::string>());
  const int m = j.at("m").get<int>();
  if (kind == BasisKind::Fourier) return BasisSystem::fourier(m);
  return BasisSystem::bspline(m, j.at("order").get<int>());
}

inline json config_to_json(const FitConfig& config) {
  json j;
  j["k"] = config.k;
  j["basis"] = {{"kind", basis_kind_name(config.basis.kind)}, {"m", config.basis.m}};
  if (config.basis.kind == BasisKind::BSpline) j["basis"]["order"] = config.basis.order;
  j["lambdas"] = config.lambdas;
  j["weights"] = weight_scheme_name(config.weights);
  j["restarts"] = config.restarts;
  j["max_iter"] = config.max_iter;
  j["seed"] = config.seed;
  return j;
}

inline json fit_result_to_json(const FitResult& result, const FitConfig& config,
                               const std::vector<std::string>& subject_ids) {
  json j;
  j["tool"] = {{"name", kToolName}, {"version", kToolVersion}};
  j["config"] = config_to_json(config);
  j["basis"] = basis_to_json(result.model.basis);
  j["transform"] = {{"t_lo", result.model.transform.lo}, {"t_hi", result.model.transform.hi}};
  json coeffs = json::array();
  for (const auto& beta : result.model.coefficients) {
    coeffs.push_back(std::vector<double>(beta.data(), beta.data() + beta.size()));
  }
  j["coefficients"] = std::move(coeffs);
  json labels = json::object();
  for (std::size_t i = 0; i < subject_ids.size(); ++i) {
    labels[subject_ids[i]] = result.labels[i] + 1;  // external labels are 1-based
  }
  j["labels"] = std::move(labels);
  j["empirical_loss"] = result.empirical_loss;
  j["penalized_objective"] = result.penalized_objective;
  j["iterations"] = result.iterations;
  j["restart_index"] = result.restart_index;
  j["converged"] = result.converged;
  j["objective_trace"] = result.objective_trace;
  j["timing_ms"] = result.fit_ms;
  return j;
}

inline ClusterModel model_from_json(const json& j) {
  ClusterModel model{basis_from_json(j.at("basis")), {}, TimeTransform{}};
  model.transform.lo = j.at("transform").at("t_lo").get<double>();
  model.transform.hi = j.at("transform").at("t_hi").get<double>();
  for (const auto& row : j.at("coefficients")) {
    const auto vals = row.get<std::vector<double>>();
    Eigen::VectorXd beta(static_cast<Eigen::Index>(vals.size()));
    for (std::size_t i = 0; i < vals.size(); ++i) beta[static_cast<Eigen::Index>(i)] = vals[i];
    model.coefficients.push_back(std::move(beta));
  }
  if (model.coefficients.empty()) throw std::invalid_argument("model has no clusters");
  for (const auto& beta : model.coefficients) {
    if (beta.size() != model.basis.size()) throw std::invalid_argument("coefficient/basis size mismatch");
  }
  return model;
}

inline json lambda_selection_to_json(const LambdaSelection& sel) {
  json j;
  j["tool"] = {{"name", kToolName}, {"version", kToolVersion}};
  j["candidates"] = sel.candidates;
  j["instability"] = sel.instability;
  j["chosen"] = sel.chosen;
  j["replicates"] = sel.replicates;
  j["seed"] = sel.seed;
  return j;
}

inline void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write file: " + path);
  out << content;
}

inline void write_json_file(const std::string& path, const json& j) {
  write_text_file(path, j.dump(2) + "\n");
}

inline json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open file: " + path);
  return json::parse(in);
}

// --- label CSV (id,cluster; 1-based clusters) ---

inline void write_labels_csv(const std::string& path, const std::vector<std::string>& ids,
                             const std::vector<int>& labels) {
  std::ostringstream out;
  out << "id,cluster\n";
  for (std::size_t i = 0; i < ids.size(); ++i) out << ids[i] << "," << labels[i] + 1 << "\n";
  write_text_file(path, out.str());
}

inline std::vector<std::pair<std::string, int>> read_labels_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open file: " + path);
  std::string line;
  if (!std::getline(in, line)) throw empty_data_error("empty label file: " + path);
  std::vector<std::pair<std::string, int>> out;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty() || line == "\r") continue;
    const auto fields = fkm::detail::split_csv_line(line);
    if (fields.size() < 2) throw csv_parse_error("expected id,cluster", row);
    double lab = 0.0;
    if (!fkm::detail::parse_number(fields[1], lab) || lab != static_cast<int>(lab)) {
      throw csv_parse_error("non-integer cluster label '" + fkm::detail::trim(fields[1]) + "'", row);
    }
    out.emplace_back(fkm::detail::trim(fields[0]), static_cast<int>(lab));
  }
  if (out.empty()) throw empty_data_error("label file has no rows: " + path);
  return out;
}

// --- long-format dataset CSV ---

inline void write_dataset_csv(const std::string& path, const SparseFunctionalDataset& ds,
                              const CsvColumns& cols = {}) {
  std::ostringstream out;
  out << cols.subject << "," << cols.time << "," << cols.value << "\n";
  for (const auto& rec : ds.subjects) {
    for (std::size_t j = 0; j < rec.size(); ++j) {
      out << rec.id << "," << format_double(rec.times[j]) << "," << format_double(rec.values[j]) << "\n";
    }
  }
  write_text_file(path, out.str());
}

// --- center grid CSV (t,f1,...,fK) ---

inline void write_centers_csv(const std::string& path, const Eigen::VectorXd& grid,
                              const Eigen::MatrixXd& centers) {
  std::ostringstream out;
  out << "t";
  for (Eigen::Index c = 0; c < centers.rows(); ++c) out << ",f" << c + 1;
  out << "\n";
  for (Eigen::Index g = 0; g < grid.size(); ++g) {
    out << format_double(grid[g]);
    for (Eigen::Index c = 0; c < centers.rows(); ++c) out << "," << format_double(centers(c, g));
    out << "\n";
  }
  write_text_file(path, out.str());
}

inline std::pair<Eigen::VectorXd, Eigen::MatrixXd> read_centers_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open file: " + path);
  std::string line;
  if (!std::getline(in, line)) throw empty_data_error("empty centers file: " + path);
  const auto header = fkm::detail::split_csv_line(line);
  if (header.size() < 2 || fkm::detail::trim(header[0]) != "t") {
    throw csv_schema_error("centers file must start with a 't' column");
  }
  const std::size_t k = header.size() - 1;
  std::vector<double> ts;
  std::vector<std::vector<double>> rows;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty() || line == "\r") continue;
    const auto fields = fkm::detail::split_csv_line(line);
    if (fields.size() != k + 1) throw csv_parse_error("wrong field count", row);
    std::vector<double> vals(k + 1);
    for (std::size_t c = 0; c < fields.size(); ++c) {
      if (!fkm::detail::parse_number(fields[c], vals[c])) throw csv_parse_error("non-numeric field", row);
    }
    ts.push_back(vals[0]);
    rows.push_back(std::vector<double>(vals.begin() + 1, vals.end()));
  }
  if (ts.empty()) throw empty_data_error("centers file has no rows: " + path);
  Eigen::VectorXd grid(static_cast<Eigen::Index>(ts.size()));
  Eigen::MatrixXd centers(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(ts.size()));
  for (std::size_t g = 0; g < ts.size(); ++g) {
    grid[static_cast<Eigen::Index>(g)] = ts[g];
    for (std::size_t c = 0; c < k; ++c) {
      centers(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(g)) = rows[g][c];
    }
  }
  return {std::move(grid), std::move(centers)};
}

}  // namespace fkm::io
