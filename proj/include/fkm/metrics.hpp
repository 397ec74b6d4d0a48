#pragma once

// Clustering evaluation: correct classification rate under the best label
// mapping, the adjusted Rand index, and the Hausdorff distance between two
// finite sets of center curves in the L2 norm on [0,1].

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <stdexcept>
#include <vector>

namespace fkm::metrics {

struct ConfusionTable {
  std::vector<std::vector<long long>> counts;  // rows: first labeling, cols: second
  long long n = 0;

  std::size_t rows() const { return counts.size(); }
  std::size_t cols() const { return counts.empty() ? 0 : counts[0].size(); }
};

namespace detail {

// Distinct labels mapped to dense indices in sorted order.
inline std::vector<int> dense_labels(const std::vector<int>& labels, std::size_t& k_out) {
  std::map<int, int> index;
  for (int lab : labels) index.emplace(lab, 0);
  int next = 0;
  for (auto& [lab, idx] : index) idx = next++;
  std::vector<int> out(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) out[i] = index[labels[i]];
  k_out = index.size();
  return out;
}

// Exact minimum-cost assignment on a square matrix (Hungarian algorithm
// with potentials, O(s^3)).
inline long long min_cost_assignment(const std::vector<std::vector<long long>>& cost) {
  const int s = static_cast<int>(cost.size());
  const long long kInf = std::numeric_limits<long long>::max() / 4;
  std::vector<long long> u(static_cast<std::size_t>(s) + 1, 0), v(static_cast<std::size_t>(s) + 1, 0);
  std::vector<int> match(static_cast<std::size_t>(s) + 1, 0), way(static_cast<std::size_t>(s) + 1, 0);
  for (int i = 1; i <= s; ++i) {
    match[0] = i;
    int j0 = 0;
    std::vector<long long> minv(static_cast<std::size_t>(s) + 1, kInf);
    std::vector<char> used(static_cast<std::size_t>(s) + 1, 0);
    do {
      used[static_cast<std::size_t>(j0)] = 1;
      const int i0 = match[static_cast<std::size_t>(j0)];
      long long delta = kInf;
      int j1 = -1;
      for (int j = 1; j <= s; ++j) {
        if (used[static_cast<std::size_t>(j)]) continue;
        const long long cur = cost[static_cast<std::size_t>(i0 - 1)][static_cast<std::size_t>(j - 1)] -
                              u[static_cast<std::size_t>(i0)] - v[static_cast<std::size_t>(j)];
        if (cur < minv[static_cast<std::size_t>(j)]) {
          minv[static_cast<std::size_t>(j)] = cur;
          way[static_cast<std::size_t>(j)] = j0;
        }
        if (minv[static_cast<std::size_t>(j)] < delta) {
          delta = minv[static_cast<std::size_t>(j)];
          j1 = j;
        }
      }
      for (int j = 0; j <= s; ++j) {
        if (used[static_cast<std::size_t>(j)]) {
          u[static_cast<std::size_t>(match[static_cast<std::size_t>(j)])] += delta;
          v[static_cast<std::size_t>(j)] -= delta;
        } else {
          minv[static_cast<std::size_t>(j)] -= delta;
        }
      }
      j0 = j1;
    } while (match[static_cast<std::size_t>(j0)] != 0);
    do {
      const int j1 = way[static_cast<std::size_t>(j0)];
      match[static_cast<std::size_t>(j0)] = match[static_cast<std::size_t>(j1)];
      j0 = j1;
    } while (j0 != 0);
  }
  long long total = 0;
  for (int j = 1; j <= s; ++j) {
    total += cost[static_cast<std::size_t>(match[static_cast<std::size_t>(j)] - 1)][static_cast<std::size_t>(j - 1)];
  }
  return total;
}

// Maximum total over injective label mappings; the table is padded square so
// the smaller side injects into the larger.
inline long long best_injection_matches(const ConfusionTable& table) {
  const std::size_t s = std::max(table.rows(), table.cols());
  std::vector<std::vector<long long>> cost(s, std::vector<long long>(s, 0));
  for (std::size_t r = 0; r < table.rows(); ++r) {
    for (std::size_t c = 0; c < table.cols(); ++c) cost[r][c] = -table.counts[r][c];
  }
  return -min_cost_assignment(cost);
}

inline long long pairs2(long long x) { return x * (x - 1) / 2; }

}  // namespace detail

inline ConfusionTable confusion(const std::vector<int>& a, const std::vector<int>& b) {
  if (a.size() != b.size()) throw std::invalid_argument("label vectors differ in length");
  if (a.empty()) throw std::invalid_argument("empty label vectors");
  std::size_t ka = 0, kb = 0;
  const auto da = detail::dense_labels(a, ka);
  const auto db = detail::dense_labels(b, kb);
  ConfusionTable table;
  table.n = static_cast<long long>(a.size());
  table.counts.assign(ka, std::vector<long long>(kb, 0));
  for (std::size_t i = 0; i < a.size(); ++i) {
    ++table.counts[static_cast<std::size_t>(da[i])][static_cast<std::size_t>(db[i])];
  }
  return table;
}

// Correct classification rate in percent: the matched fraction maximized
// over injective mappings between the two label alphabets.
inline double ccr(const std::vector<int>& truth, const std::vector<int>& predicted) {
  const auto table = confusion(truth, predicted);
  const long long matched = detail::best_injection_matches(table);
  return 100.0 * static_cast<double>(matched) / static_cast<double>(table.n);
}

// Adjusted Rand index. When every pair is concordant by construction (the
// chance-corrected denominator vanishes) the index is 1 for identical
// partitions and 0 otherwise.
inline double adjusted_rand_index(const std::vector<int>& a, const std::vector<int>& b) {
  const auto table = confusion(a, b);
  long long sum_cells = 0;
  std::vector<long long> row_tot(table.rows(), 0), col_tot(table.cols(), 0);
  for (std::size_t r = 0; r < table.rows(); ++r) {
    for (std::size_t c = 0; c < table.cols(); ++c) {
      sum_cells += detail::pairs2(table.counts[r][c]);
      row_tot[r] += table.counts[r][c];
      col_tot[c] += table.counts[r][c];
    }
  }
  long long sum_rows = 0, sum_cols = 0;
  for (long long t : row_tot) sum_rows += detail::pairs2(t);
  for (long long t : col_tot) sum_cols += detail::pairs2(t);
  const double total_pairs = static_cast<double>(detail::pairs2(table.n));
  const double expected = total_pairs > 0.0 ? static_cast<double>(sum_rows) * static_cast<double>(sum_cols) / total_pairs : 0.0;
  const double maximum = 0.5 * static_cast<double>(sum_rows + sum_cols);
  if (maximum == expected) {
    // degenerate: compare partitions directly
    bool one_to_one = true;
    for (std::size_t r = 0; r < table.rows() && one_to_one; ++r) {
      int nonzero = 0;
      for (std::size_t c = 0; c < table.cols(); ++c) nonzero += table.counts[r][c] > 0 ? 1 : 0;
      one_to_one = nonzero == 1;
    }
    return (one_to_one && table.rows() == table.cols()) ? 1.0 : 0.0;
  }
  return (static_cast<double>(sum_cells) - expected) / (maximum - expected);
}

// Best bijective agreement rate between two labelings over a fixed label
// alphabet {0..k-1}; used by stability-based model selection.
inline double best_match_rate(const std::vector<int>& a, const std::vector<int>& b, int k) {
  if (a.size() != b.size()) throw std::invalid_argument("label vectors differ in length");
  if (a.empty()) throw std::invalid_argument("empty label vectors");
  ConfusionTable table;
  table.n = static_cast<long long>(a.size());
  table.counts.assign(static_cast<std::size_t>(k), std::vector<long long>(static_cast<std::size_t>(k), 0));
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] < 0 || a[i] >= k || b[i] < 0 || b[i] >= k) throw std::invalid_argument("label out of range");
    ++table.counts[static_cast<std::size_t>(a[i])][static_cast<std::size_t>(b[i])];
  }
  return static_cast<double>(detail::best_injection_matches(table)) / static_cast<double>(table.n);
}

// Hausdorff distance between two finite sets of curves sampled on a common
// grid; the norm is the root mean square over grid columns.
inline double hausdorff_centers(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  if (a.rows() == 0 || b.rows() == 0) throw std::invalid_argument("empty center set");
  if (a.cols() != b.cols()) throw std::invalid_argument("center sets sampled on different grids");
  const double scale = 1.0 / static_cast<double>(a.cols());
  auto directed = [&](const Eigen::MatrixXd& from, const Eigen::MatrixXd& to) {
    double worst = 0.0;
    for (Eigen::Index i = 0; i < from.rows(); ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (Eigen::Index j = 0; j < to.rows(); ++j) {
        best = std::min(best, (from.row(i) - to.row(j)).squaredNorm() * scale);
      }
      worst = std::max(worst, best);
    }
    return worst;
  };
  return std::sqrt(std::max(directed(a, b), directed(b, a)));
}

// Convenience overload for callable curves; sampling uses grid midpoints
// (i + 1/2)/G, a second-order quadrature for the L2 norm on [0,1].
inline double hausdorff_centers(const std::vector<std::function<double(double)>>& a,
                                const std::vector<std::function<double(double)>>& b, int grid_size = 1024) {
  if (a.empty() || b.empty()) throw std::invalid_argument("empty center set");
  if (grid_size < 1) throw std::invalid_argument("grid_size must be positive");
  Eigen::MatrixXd ma(static_cast<Eigen::Index>(a.size()), grid_size);
  Eigen::MatrixXd mb(static_cast<Eigen::Index>(b.size()), grid_size);
  for (int g = 0; g < grid_size; ++g) {
    const double t = (static_cast<double>(g) + 0.5) / static_cast<double>(grid_size);
    for (std::size_t i = 0; i < a.size(); ++i) ma(static_cast<Eigen::Index>(i), g) = a[i](t);
    for (std::size_t i = 0; i < b.size(); ++i) mb(static_cast<Eigen::Index>(i), g) = b[i](t);
  }
  return hausdorff_centers(ma, mb);
}

}  // namespace fkm::metrics
