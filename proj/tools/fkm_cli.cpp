// Command-line interface for functional k-means on sparse longitudinal
// data: fitting, prediction, synthetic benchmarks, clustering metrics and
// smoothing-parameter selection. Every seeded subcommand is reproducible
// byte for byte apart from timing fields.

#include <CLI11.hpp>

#include <chrono>
#include <cstdint>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "fkm/fkm.hpp"

namespace {

using fkm::io::json;

struct Stopwatch {
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
  double ms() const {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  }
};

void write_manifest(const std::string& main_artifact, const std::string& subcommand, const json& options,
                    std::uint64_t seed, double wall_ms, const std::vector<std::string>& artifacts) {
  json manifest;
  manifest["tool"] = {{"name", fkm::kToolName}, {"version", fkm::kToolVersion}};
  manifest["subcommand"] = subcommand;
  manifest["options"] = options;
  manifest["seed"] = seed;
  manifest["wall_ms"] = wall_ms;
  manifest["artifacts"] = artifacts;
  fkm::io::write_json_file(main_artifact + ".manifest.json", manifest);
}

std::string labels_path_for(const std::string& out, const std::string& explicit_path) {
  if (!explicit_path.empty()) return explicit_path;
  const auto dot = out.rfind('.');
  const auto slash = out.find_last_of("/\\");
  const bool has_ext = dot != std::string::npos && (slash == std::string::npos || dot > slash);
  return (has_ext ? out.substr(0, dot) : out) + "_labels.csv";
}

struct DatasetFlags {
  std::string input;
  std::string id_col = "id";
  std::string time_col = "time";
  std::string value_col = "value";

  void attach(CLI::App* cmd) {
    cmd->add_option("--input", input, "long-format CSV with one observation per row")->required();
    cmd->add_option("--id-col", id_col, "subject id column name");
    cmd->add_option("--time-col", time_col, "time column name");
    cmd->add_option("--value-col", value_col, "value column name");
  }

  fkm::SparseFunctionalDataset load() const {
    auto ds = fkm::load_csv(input, fkm::CsvColumns{id_col, time_col, value_col});
    fkm::validate(ds);
    return ds;
  }

  json echo() const {
    return {{"input", input}, {"id_col", id_col}, {"time_col", time_col}, {"value_col", value_col}};
  }
};

struct FitFlags {
  int k = 2;
  std::string basis = "fourier";
  int nbasis = 15;
  int order = 4;
  std::vector<double> lambdas = {0.0};
  std::string weights = "subj";
  int restarts = 100;
  int max_iter = 100;
  std::uint64_t seed = 0;
  int threads = 1;

  void attach(CLI::App* cmd, bool with_restarts = true, bool with_seed = true) {
    cmd->add_option("--k", k, "number of clusters")->check(CLI::PositiveNumber);
    cmd->add_option("--basis", basis, "basis kind")->check(CLI::IsMember({"fourier", "bspline"}));
    cmd->add_option("--nbasis", nbasis, "number of basis functions")->check(CLI::PositiveNumber);
    cmd->add_option("--order", order, "B-spline order (4 = cubic)")->check(CLI::PositiveNumber);
    cmd->add_option("--lambda", lambdas, "smoothing parameter(s), one value or one per cluster")
        ->delimiter(',');
    cmd->add_option("--weights", weights, "per-subject (subj) or per-observation (obs) weighting")
        ->check(CLI::IsMember({"subj", "obs"}));
    if (with_restarts) cmd->add_option("--restarts", restarts, "random restarts")->check(CLI::PositiveNumber);
    cmd->add_option("--max-iter", max_iter, "iteration cap per restart")->check(CLI::PositiveNumber);
    if (with_seed) cmd->add_option("--seed", seed, "rng seed");
    cmd->add_option("--threads", threads, "worker threads for restarts (capped by FKM_THREADS)");
  }

  fkm::FitConfig config() const {
    fkm::FitConfig cfg;
    cfg.k = k;
    cfg.basis = fkm::BasisSpec{fkm::io::basis_kind_from_name(basis), nbasis, order};
    cfg.lambdas = lambdas;
    cfg.weights = fkm::io::weight_scheme_from_name(weights);
    cfg.restarts = restarts;
    cfg.max_iter = max_iter;
    cfg.seed = seed;
    cfg.threads = threads;
    return cfg;
  }
};

std::vector<std::string> subject_ids(const fkm::SparseFunctionalDataset& ds) {
  std::vector<std::string> ids;
  ids.reserve(ds.n());
  for (const auto& rec : ds.subjects) ids.push_back(rec.id);
  return ids;
}

// --- subcommand bodies ---

int cmd_fit(const DatasetFlags& data, const FitFlags& flags, const std::string& out,
            const std::string& labels_out, std::optional<double> domain_lo, std::optional<double> domain_hi) {
  Stopwatch watch;
  auto ds = data.load();
  if (domain_lo) ds.t_lo = *domain_lo;
  if (domain_hi) ds.t_hi = *domain_hi;
  fkm::validate(ds);  // re-check observations against any domain override

  const auto cfg = flags.config();
  const auto result = fkm::fit(ds, cfg);

  const auto ids = subject_ids(ds);
  fkm::io::write_json_file(out, fkm::io::fit_result_to_json(result, cfg, ids));
  const std::string labels_path = labels_path_for(out, labels_out);
  fkm::io::write_labels_csv(labels_path, ids, result.labels);

  json options = data.echo();
  options["fit"] = fkm::io::config_to_json(cfg);
  if (domain_lo) options["domain_lo"] = *domain_lo;
  if (domain_hi) options["domain_hi"] = *domain_hi;
  write_manifest(out, "fit", options, cfg.seed, watch.ms(), {out, labels_path});

  std::cout << "fit: n=" << ds.n() << " loss=" << fkm::io::format_double(result.empirical_loss)
            << " iterations=" << result.iterations << " converged=" << (result.converged ? "yes" : "no")
            << " -> " << out << "\n";
  return 0;
}

int cmd_predict(const std::string& model_path, const DatasetFlags& data, const std::string& out) {
  Stopwatch watch;
  const auto model = fkm::io::model_from_json(fkm::io::read_json_file(model_path));
  const auto ds = data.load();
  std::vector<int> labels(ds.n());
  for (std::size_t i = 0; i < ds.n(); ++i) labels[i] = fkm::predict(model, ds.subjects[i]);
  fkm::io::write_labels_csv(out, subject_ids(ds), labels);

  json options = data.echo();
  options["model"] = model_path;
  write_manifest(out, "predict", options, 0, watch.ms(), {out});
  std::cout << "predict: " << ds.n() << " subjects -> " << out << "\n";
  return 0;
}

int cmd_simulate(int n, int ntp, double sigma, std::uint64_t seed, const std::string& out,
                 const std::string& labels_out) {
  Stopwatch watch;
  fkm::sim::SimConfig cfg;
  cfg.n = n;
  cfg.n_tp = ntp;
  cfg.sigma = sigma;
  cfg.seed = seed;
  const auto [ds, truth] = fkm::sim::generate(cfg);
  fkm::io::write_dataset_csv(out, ds);
  const std::string labels_path = labels_path_for(out, labels_out);
  fkm::io::write_labels_csv(labels_path, subject_ids(ds), truth);

  const json options = {{"n", n}, {"ntp", ntp}, {"sigma", sigma}, {"seed", seed}};
  write_manifest(out, "simulate", options, seed, watch.ms(), {out, labels_path});
  std::cout << "simulate: " << ds.n() << " subjects, " << ds.total_observations() << " observations -> "
            << out << "\n";
  return 0;
}

// Aligns two label files by id (order taken from the first file).
std::pair<std::vector<int>, std::vector<int>> aligned_labels(const std::string& true_path,
                                                             const std::string& pred_path) {
  const auto truth = fkm::io::read_labels_csv(true_path);
  const auto pred = fkm::io::read_labels_csv(pred_path);
  std::map<std::string, int> pred_by_id(pred.begin(), pred.end());
  if (pred_by_id.size() != pred.size()) throw std::runtime_error("duplicate ids in " + pred_path);
  {
    std::map<std::string, int> truth_by_id(truth.begin(), truth.end());
    if (truth_by_id.size() != truth.size()) throw std::runtime_error("duplicate ids in " + true_path);
  }
  std::vector<int> a, b;
  a.reserve(truth.size());
  b.reserve(truth.size());
  for (const auto& [id, lab] : truth) {
    const auto it = pred_by_id.find(id);
    if (it == pred_by_id.end()) throw std::runtime_error("id '" + id + "' missing from " + pred_path);
    a.push_back(lab);
    b.push_back(it->second);
  }
  if (truth.size() != pred.size()) throw std::runtime_error("label files cover different subjects");
  return {std::move(a), std::move(b)};
}

int cmd_evaluate(const std::string& true_path, const std::string& pred_path, const std::string& out) {
  Stopwatch watch;
  const auto [truth, pred] = aligned_labels(true_path, pred_path);
  json report;
  report["ccr"] = fkm::metrics::ccr(truth, pred);
  report["ari"] = fkm::metrics::adjusted_rand_index(truth, pred);
  std::cout << report.dump() << "\n";
  if (!out.empty()) {
    fkm::io::write_json_file(out, report);
    write_manifest(out, "evaluate", {{"true", true_path}, {"pred", pred_path}}, 0, watch.ms(), {out});
  }
  return 0;
}

int cmd_select_lambda(const DatasetFlags& data, const FitFlags& flags, const std::vector<double>& candidates,
                      int replicates, int sel_restarts, const std::string& out) {
  Stopwatch watch;
  const auto ds = data.load();
  const auto sel = fkm::select_lambda(ds, flags.config(), candidates, replicates, flags.seed, sel_restarts);
  fkm::io::write_json_file(out, fkm::io::lambda_selection_to_json(sel));

  json options = data.echo();
  options["fit"] = fkm::io::config_to_json(flags.config());
  options["candidates"] = candidates;
  options["replicates"] = replicates;
  options["selection_restarts"] = sel_restarts;
  write_manifest(out, "select-lambda", options, flags.seed, watch.ms(), {out});
  std::cout << "select-lambda: chosen=" << fkm::io::format_double(sel.chosen) << " -> " << out << "\n";
  return 0;
}

int cmd_population_centers(int nlarge, int grid, std::uint64_t seed, int restarts, const std::string& out) {
  Stopwatch watch;
  const auto pop = fkm::sim::population_centers(nlarge, grid, seed, restarts);
  fkm::io::write_centers_csv(out, pop.grid, pop.centers);
  const json options = {{"nlarge", nlarge}, {"grid", grid}, {"seed", seed}, {"restarts", restarts}};
  write_manifest(out, "population-centers", options, seed, watch.ms(), {out});
  std::cout << "population-centers: " << grid << " grid points -> " << out << "\n";
  return 0;
}

int cmd_benchmark(int n, int ntp, double sigma, const FitFlags& flags, int reps, std::uint64_t seed,
                  const std::string& pop_path, const std::string& out_prefix) {
  Stopwatch watch;
  fkm::sim::SimConfig data_cfg;
  data_cfg.n = n;
  data_cfg.n_tp = ntp;
  data_cfg.sigma = sigma;

  std::optional<fkm::sim::PopulationCenters> population;
  if (!pop_path.empty()) {
    auto [grid, centers] = fkm::io::read_centers_csv(pop_path);
    population = fkm::sim::PopulationCenters{std::move(grid), std::move(centers)};
  }

  const auto result = fkm::bench::run(data_cfg, flags.config(), reps, seed, population);

  json summary;
  summary["mean_ccr"] = result.mean_ccr();
  summary["median_ccr"] = result.median_ccr();
  summary["mean_ari"] = result.mean_ari();
  summary["median_fit_ms"] = result.median_fit_ms();
  if (population) summary["median_hausdorff"] = result.median_hausdorff();

  json reps_json = json::array();
  std::ostringstream csv;
  csv << "rep,data_seed,ccr,ari,fit_ms" << (population ? ",hausdorff" : "") << "\n";
  for (const auto& r : result.reps) {
    json row = {{"rep", r.rep}, {"data_seed", r.data_seed}, {"ccr", r.ccr}, {"ari", r.ari}, {"fit_ms", r.fit_ms}};
    csv << r.rep << "," << r.data_seed << "," << fkm::io::format_double(r.ccr) << ","
        << fkm::io::format_double(r.ari) << "," << fkm::io::format_double(r.fit_ms);
    if (r.hausdorff) {
      row["hausdorff"] = *r.hausdorff;
      csv << "," << fkm::io::format_double(*r.hausdorff);
    }
    csv << "\n";
    reps_json.push_back(std::move(row));
  }

  json report;
  report["tool"] = {{"name", fkm::kToolName}, {"version", fkm::kToolVersion}};
  report["cell"] = {{"n", n}, {"ntp", ntp}, {"sigma", sigma}, {"reps", reps}, {"seed", seed}};
  report["fit"] = fkm::io::config_to_json(flags.config());
  report["summary"] = summary;
  report["reps"] = std::move(reps_json);

  const std::string json_path = out_prefix + ".json";
  const std::string csv_path = out_prefix + ".csv";
  fkm::io::write_json_file(json_path, report);
  fkm::io::write_text_file(csv_path, csv.str());

  json options = report["cell"];
  options["fit"] = report["fit"];
  if (!pop_path.empty()) options["pop_centers"] = pop_path;
  write_manifest(json_path, "benchmark", options, seed, watch.ms(), {json_path, csv_path});

  std::cout << "benchmark: mean CCR=" << fkm::io::format_double(result.mean_ccr())
            << " mean ARI=" << fkm::io::format_double(result.mean_ari());
  if (population) std::cout << " median hausdorff=" << fkm::io::format_double(result.median_hausdorff());
  std::cout << " -> " << json_path << "\n";
  return 0;
}

int cmd_center_distance(const std::string& path_a, const std::string& path_b, int grid, const std::string& out) {
  Stopwatch watch;
  const auto model_a = fkm::io::model_from_json(fkm::io::read_json_file(path_a));
  const auto model_b = fkm::io::model_from_json(fkm::io::read_json_file(path_b));
  if (std::abs(model_a.transform.lo - model_b.transform.lo) > 1e-9 ||
      std::abs(model_a.transform.hi - model_b.transform.hi) > 1e-9) {
    throw std::runtime_error("models live on different time domains");
  }
  Eigen::VectorXd unit_grid(grid);
  for (int g = 0; g < grid; ++g) unit_grid[g] = (static_cast<double>(g) + 0.5) / grid;
  const double d = fkm::metrics::hausdorff_centers(model_a.centers_on_grid(unit_grid),
                                                   model_b.centers_on_grid(unit_grid));
  json report;
  report["hausdorff"] = d;
  report["grid"] = grid;
  std::cout << report.dump() << "\n";
  if (!out.empty()) {
    fkm::io::write_json_file(out, report);
    write_manifest(out, "center-distance", {{"a", path_a}, {"b", path_b}, {"grid", grid}}, 0, watch.ms(), {out});
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"functional k-means clustering for sparsely observed longitudinal data"};
  app.require_subcommand(1);

  // fit
  DatasetFlags fit_data;
  FitFlags fit_flags;
  std::string fit_out = "fit.json";
  std::string fit_labels_out;
  double fit_domain_lo = 0.0, fit_domain_hi = 0.0;
  auto* fit_cmd = app.add_subcommand("fit", "fit cluster centers to a dataset");
  fit_data.attach(fit_cmd);
  fit_flags.attach(fit_cmd);
  fit_cmd->add_option("--out", fit_out, "fit result JSON path");
  fit_cmd->add_option("--labels-out", fit_labels_out, "labels CSV path");
  auto* lo_opt = fit_cmd->add_option("--domain-lo", fit_domain_lo, "override inferred domain lower bound");
  auto* hi_opt = fit_cmd->add_option("--domain-hi", fit_domain_hi, "override inferred domain upper bound");

  // predict
  DatasetFlags predict_data;
  std::string predict_model;
  std::string predict_out = "predicted_labels.csv";
  auto* predict_cmd = app.add_subcommand("predict", "label subjects with a fitted model");
  predict_cmd->add_option("--model", predict_model, "fit result JSON")->required();
  predict_data.attach(predict_cmd);
  predict_cmd->add_option("--out", predict_out, "labels CSV path");

  // simulate
  int sim_n = 50, sim_ntp = 3;
  double sim_sigma = 0.1;
  std::uint64_t sim_seed = 0;
  std::string sim_out = "simulated.csv", sim_labels_out;
  auto* sim_cmd = app.add_subcommand("simulate", "generate a synthetic two-cluster dataset");
  sim_cmd->add_option("--n", sim_n, "subjects (even)")->check(CLI::PositiveNumber);
  sim_cmd->add_option("--ntp", sim_ntp, "expected measurements per subject");
  sim_cmd->add_option("--sigma", sim_sigma, "noise standard deviation");
  sim_cmd->add_option("--seed", sim_seed, "rng seed");
  sim_cmd->add_option("--out", sim_out, "dataset CSV path");
  sim_cmd->add_option("--labels-out", sim_labels_out, "true labels CSV path");

  // evaluate
  std::string eval_true, eval_pred, eval_out;
  auto* eval_cmd = app.add_subcommand("evaluate", "compare two label files (CCR, ARI)");
  eval_cmd->add_option("--true", eval_true, "reference labels CSV")->required();
  eval_cmd->add_option("--pred", eval_pred, "predicted labels CSV")->required();
  eval_cmd->add_option("--out", eval_out, "optional JSON output path");

  // select-lambda
  DatasetFlags sel_data;
  FitFlags sel_flags;
  std::vector<double> sel_candidates;
  int sel_replicates = 20;
  int sel_restarts = fkm::kDefaultSelectionRestarts;
  std::string sel_out = "lambda_selection.json";
  auto* sel_cmd = app.add_subcommand("select-lambda", "pick a smoothing parameter by stability CV");
  sel_data.attach(sel_cmd);
  sel_flags.attach(sel_cmd, /*with_restarts=*/false);
  sel_cmd->add_option("--candidates", sel_candidates, "candidate lambda values")->delimiter(',')->required();
  sel_cmd->add_option("--replicates", sel_replicates, "half-split replicates per candidate");
  sel_cmd->add_option("--restarts", sel_restarts, "restarts for each half fit");
  sel_cmd->add_option("--out", sel_out, "selection JSON path");

  // population-centers
  int pop_nlarge = 10000, pop_grid = 400, pop_restarts = 50;
  std::uint64_t pop_seed = 0;
  std::string pop_out = "population_centers.csv";
  auto* pop_cmd = app.add_subcommand("population-centers", "dense-data oracle for optimal centers");
  pop_cmd->add_option("--nlarge", pop_nlarge, "dense sample size (even, >= 1000)");
  pop_cmd->add_option("--grid", pop_grid, "grid size (>= 100)");
  pop_cmd->add_option("--seed", pop_seed, "rng seed");
  pop_cmd->add_option("--restarts", pop_restarts, "k-means restarts");
  pop_cmd->add_option("--out", pop_out, "centers CSV path");

  // benchmark
  int bench_n = 200, bench_ntp = 10, bench_reps = 20;
  double bench_sigma = 0.1;
  std::uint64_t bench_seed = 0;
  FitFlags bench_flags;
  bench_flags.restarts = 20;
  std::string bench_pop, bench_out = "benchmark";
  auto* bench_cmd = app.add_subcommand("benchmark", "simulate-and-fit replications with recovery metrics");
  bench_cmd->add_option("--n", bench_n, "subjects per replication")->check(CLI::PositiveNumber);
  bench_cmd->add_option("--ntp", bench_ntp, "expected measurements per subject");
  bench_cmd->add_option("--sigma", bench_sigma, "noise standard deviation");
  bench_flags.attach(bench_cmd, /*with_restarts=*/true, /*with_seed=*/false);
  bench_cmd->add_option("--reps", bench_reps, "replications")->check(CLI::PositiveNumber);
  bench_cmd->add_option("--bench-seed", bench_seed, "seed for the replication streams");
  bench_cmd->add_option("--pop-centers", bench_pop, "population centers CSV for Hausdorff tracking");
  bench_cmd->add_option("--out", bench_out, "output path prefix");

  // center-distance
  std::string dist_a, dist_b, dist_out;
  int dist_grid = 1024;
  auto* dist_cmd = app.add_subcommand("center-distance", "Hausdorff distance between two fitted center sets");
  dist_cmd->add_option("--a", dist_a, "first fit result JSON")->required();
  dist_cmd->add_option("--b", dist_b, "second fit result JSON")->required();
  dist_cmd->add_option("--grid", dist_grid, "quadrature grid size");
  dist_cmd->add_option("--out", dist_out, "optional JSON output path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: usage: " << e.what() << "\n";
    return 2;
  }

  try {
    if (fit_cmd->parsed()) {
      return cmd_fit(fit_data, fit_flags, fit_out, fit_labels_out,
                     lo_opt->count() ? std::optional<double>(fit_domain_lo) : std::nullopt,
                     hi_opt->count() ? std::optional<double>(fit_domain_hi) : std::nullopt);
    }
    if (predict_cmd->parsed()) return cmd_predict(predict_model, predict_data, predict_out);
    if (sim_cmd->parsed()) return cmd_simulate(sim_n, sim_ntp, sim_sigma, sim_seed, sim_out, sim_labels_out);
    if (eval_cmd->parsed()) return cmd_evaluate(eval_true, eval_pred, eval_out);
    if (sel_cmd->parsed()) {
      return cmd_select_lambda(sel_data, sel_flags, sel_candidates, sel_replicates, sel_restarts, sel_out);
    }
    if (pop_cmd->parsed()) return cmd_population_centers(pop_nlarge, pop_grid, pop_seed, pop_restarts, pop_out);
    if (bench_cmd->parsed()) {
      return cmd_benchmark(bench_n, bench_ntp, bench_sigma, bench_flags, bench_reps, bench_seed, bench_pop,
                           bench_out);
    }
    if (dist_cmd->parsed()) return cmd_center_distance(dist_a, dist_b, dist_grid, dist_out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
