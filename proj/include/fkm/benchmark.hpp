#pragma once

// Benchmark runner: repeatedly simulate a dataset cell, fit it, and score
// cluster recovery (CCR, ARI) plus optionally the Hausdorff distance of the
// fitted centers to a set of population-optimal centers.

#include <Eigen/Dense>

#include <algorithm>
#include <cstdint>
#include <optional>
#include <vector>

#include "fkm/metrics.hpp"
#include "fkm/rng.hpp"
#include "fkm/simulation.hpp"
#include "fkm/solver.hpp"

namespace fkm::bench {

struct RepResult {
  int rep = 0;
  std::uint64_t data_seed = 0;
  double ccr = 0.0;
  double ari = 0.0;
  double fit_ms = 0.0;
  std::optional<double> hausdorff;
};

struct BenchmarkResult {
  std::vector<RepResult> reps;

  template <typename Get>
  double mean(Get get) const {
    double total = 0.0;
    for (const auto& r : reps) total += get(r);
    return total / static_cast<double>(reps.size());
  }

  template <typename Get>
  double median(Get get) const {
    std::vector<double> vals;
    vals.reserve(reps.size());
    for (const auto& r : reps) vals.push_back(get(r));
    std::sort(vals.begin(), vals.end());
    const std::size_t n = vals.size();
    return n % 2 == 1 ? vals[n / 2] : 0.5 * (vals[n / 2 - 1] + vals[n / 2]);
  }

  double mean_ccr() const { return mean([](const RepResult& r) { return r.ccr; }); }
  double mean_ari() const { return mean([](const RepResult& r) { return r.ari; }); }
  double median_ccr() const { return median([](const RepResult& r) { return r.ccr; }); }
  double median_fit_ms() const { return median([](const RepResult& r) { return r.fit_ms; }); }
  double median_hausdorff() const {
    return median([](const RepResult& r) { return r.hausdorff.value(); });
  }
};

// Runs `reps` independent replications of simulate-then-fit. Replication r
// derives data and fit seeds from (seed, r), so cells are reproducible and
// order-independent.
inline BenchmarkResult run(const sim::SimConfig& data_cfg, const FitConfig& fit_cfg, int reps,
                           std::uint64_t seed,
                           const std::optional<sim::PopulationCenters>& population = std::nullopt) {
  if (reps < 1) throw std::invalid_argument("reps must be positive");
  BenchmarkResult out;
  out.reps.reserve(static_cast<std::size_t>(reps));
  for (int r = 0; r < reps; ++r) {
    RepResult row;
    row.rep = r;
    row.data_seed = rng::mix(seed, static_cast<std::uint64_t>(r), 1);

    sim::SimConfig cell = data_cfg;
    cell.seed = row.data_seed;
    auto [ds, truth] = sim::generate(cell);

    FitConfig cfg = fit_cfg;
    cfg.seed = rng::mix(seed, static_cast<std::uint64_t>(r), 2);
    const FitResult fit_res = fit(ds, cfg);

    row.fit_ms = fit_res.fit_ms;
    row.ccr = metrics::ccr(truth, fit_res.labels);
    row.ari = metrics::adjusted_rand_index(truth, fit_res.labels);
    if (population) {
      const Eigen::MatrixXd fitted = fit_res.model.centers_on_grid(population->grid);
      row.hausdorff = metrics::hausdorff_centers(fitted, population->centers);
    }
    out.reps.push_back(std::move(row));
  }
  return out;
}

}  // namespace fkm::bench
