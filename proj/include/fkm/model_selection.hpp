#pragma once

// Smoothing-parameter selection by clustering-stability cross-validation:
// for each candidate lambda, repeatedly split subjects into halves, fit on
// each half, cross-label the full dataset with both models and measure the
// disagreement after the best bijective relabeling. The candidate with the
// smallest average disagreement wins (ties to the smaller lambda).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "fkm/dataset.hpp"
#include "fkm/metrics.hpp"
#include "fkm/rng.hpp"
#include "fkm/solver.hpp"

namespace fkm {

struct LambdaSelection {
  std::vector<double> candidates;
  std::vector<double> instability;  // aligned with candidates, each in [0,1]
  double chosen = 0.0;
  int replicates = 0;
  std::uint64_t seed = 0;
};

// Restart count used for the half fits; selection needs a ranking, not the
// global optimum, so this defaults well below a production fit.
inline constexpr int kDefaultSelectionRestarts = 10;

inline LambdaSelection select_lambda(const SparseFunctionalDataset& ds, const FitConfig& base_config,
                                     const std::vector<double>& candidates, int replicates, std::uint64_t seed,
                                     int selection_restarts = kDefaultSelectionRestarts) {
  if (candidates.empty()) throw std::invalid_argument("no candidate lambdas");
  for (double c : candidates) {
    if (!(c >= 0.0)) throw std::invalid_argument("candidate lambda must be nonnegative");
  }
  if (replicates < 1) throw std::invalid_argument("replicates must be positive");
  if (selection_restarts < 1) throw std::invalid_argument("selection restarts must be positive");
  const int k = base_config.k;
  if (ds.n() < 2 * static_cast<std::size_t>(k)) {
    throw std::invalid_argument("need at least 2K subjects for half-split selection");
  }

  SparseFunctionalDataset unit_ds;
  if (ds.t_lo == 0.0 && ds.t_hi == 1.0) {
    unit_ds = ds;
  } else {
    unit_ds = normalize_time(ds).first;
  }
  const auto n = static_cast<int>(unit_ds.n());

  LambdaSelection out;
  out.candidates = candidates;
  out.instability.assign(candidates.size(), 0.0);
  out.replicates = replicates;
  out.seed = seed;

  for (std::size_t ci = 0; ci < candidates.size(); ++ci) {
    double total = 0.0;
    for (int r = 0; r < replicates; ++r) {
      rng::Rng cell_rng(rng::mix(seed, static_cast<std::uint64_t>(ci), static_cast<std::uint64_t>(r)));
      std::vector<int> perm(static_cast<std::size_t>(n));
      std::iota(perm.begin(), perm.end(), 0);
      cell_rng.shuffle(perm);
      const int half = (n + 1) / 2;
      const std::vector<int> idx_a(perm.begin(), perm.begin() + half);
      const std::vector<int> idx_b(perm.begin() + half, perm.end());

      FitConfig cfg = base_config;
      cfg.lambdas = {candidates[ci]};
      cfg.restarts = selection_restarts;

      cfg.seed = cell_rng.next_u64();
      const FitResult fit_a = fit(unit_ds.subset(idx_a), cfg);
      cfg.seed = cell_rng.next_u64();
      const FitResult fit_b = fit(unit_ds.subset(idx_b), cfg);

      std::vector<int> labels_a(unit_ds.n()), labels_b(unit_ds.n());
      for (std::size_t i = 0; i < unit_ds.n(); ++i) {
        labels_a[i] = predict(fit_a.model, unit_ds.subjects[i]);
        labels_b[i] = predict(fit_b.model, unit_ds.subjects[i]);
      }
      total += 1.0 - metrics::best_match_rate(labels_a, labels_b, k);
    }
    out.instability[ci] = total / static_cast<double>(replicates);
  }

  std::size_t best = 0;
  for (std::size_t ci = 1; ci < candidates.size(); ++ci) {
    const bool better = out.instability[ci] < out.instability[best];
    const bool tie_smaller = out.instability[ci] == out.instability[best] && candidates[ci] < candidates[best];
    if (better || tie_smaller) best = ci;
  }
  out.chosen = candidates[best];
  return out;
}

}  // namespace fkm
