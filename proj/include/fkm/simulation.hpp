#pragma once

// Synthetic two-cluster generator for sparse longitudinal benchmarks, plus
// a dense-data oracle for the population-optimal cluster centers. Subjects
// follow a 40-term sine expansion whose coefficients carry independent
// centered exponential disturbances with scale 1/u, plus Gaussian
// observation noise; time points are uniform on [0,1] and the per-subject
// count is Binomial(2*N_tp, 1/2) clamped below at 2.

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "fkm/dataset.hpp"
#include "fkm/rng.hpp"

namespace fkm::sim {

inline constexpr int kNumTerms = 40;

namespace detail {
inline constexpr double kPi = 3.141592653589793238462643383279502884;
}  // namespace detail

struct SimConfig {
  int n = 50;          // subjects, split evenly between the two clusters
  int n_tp = 3;        // expected measurements per subject
  double sigma = 0.1;  // noise standard deviation
  std::uint64_t seed = 0;
  std::optional<double> fix_z;  // test hook: pins every coefficient draw Z_iu
};

inline void validate(const SimConfig& cfg) {
  if (cfg.n < 2 || cfg.n % 2 != 0) throw std::invalid_argument("n must be even and >= 2");
  if (cfg.n_tp < 2) throw std::invalid_argument("expected measurement count must be >= 2");
  if (!(cfg.sigma >= 0.0)) throw std::invalid_argument("sigma must be nonnegative");
}

// Cluster mean coefficients on the sqrt(2)*sin(pi*u*t) expansion.
inline const std::array<double, kNumTerms>& mu(int cluster_index) {
  static const std::array<double, kNumTerms> mu1 = [] {
    std::array<double, kNumTerms> a{};
    a[0] = 0.5; a[1] = -0.2; a[2] = 1.0; a[3] = -0.5; a[4] = 0.0; a[5] = -0.7;
    return a;
  }();
  static const std::array<double, kNumTerms> mu2 = [] {
    std::array<double, kNumTerms> a{};
    a[0] = 0.0; a[1] = -0.75; a[2] = 0.75; a[3] = -0.15; a[4] = 1.4; a[5] = 0.1;
    return a;
  }();
  if (cluster_index == 0) return mu1;
  if (cluster_index == 1) return mu2;
  throw std::invalid_argument("cluster index must be 0 or 1");
}

// Per-subject coefficient vector: coeff_u = (z_u - 1)/u + mu_ku, where the
// z_u are independent Exponential(1) draws.
inline std::array<double, kNumTerms> subject_coefficients(int cluster_index, rng::Rng& rng,
                                                          std::optional<double> fix_z = std::nullopt) {
  const auto& m = mu(cluster_index);
  std::array<double, kNumTerms> coeff{};
  for (int u = 1; u <= kNumTerms; ++u) {
    const double draw = rng.exponential(1.0);
    const double z = fix_z.value_or(draw);
    coeff[static_cast<std::size_t>(u - 1)] = (z - 1.0) / static_cast<double>(u) + m[static_cast<std::size_t>(u - 1)];
  }
  return coeff;
}

// Noiseless curve for a coefficient vector: sum_u coeff_u sqrt(2) sin(pi u t).
inline double curve_value(const std::array<double, kNumTerms>& coeff, double t) {
  double acc = 0.0;
  for (int u = 1; u <= kNumTerms; ++u) {
    acc += coeff[static_cast<std::size_t>(u - 1)] * std::sqrt(2.0) * std::sin(detail::kPi * static_cast<double>(u) * t);
  }
  return acc;
}

// Cluster mean curve: every disturbance at its expectation (z = 1).
inline double mean_curve(int cluster_index, double t) {
  const auto& m = mu(cluster_index);
  double acc = 0.0;
  for (int u = 1; u <= kNumTerms; ++u) {
    acc += m[static_cast<std::size_t>(u - 1)] * std::sqrt(2.0) * std::sin(detail::kPi * static_cast<double>(u) * t);
  }
  return acc;
}

// Generates the dataset (domain [0,1]) and the planted 0-based labels:
// subjects 0..n/2-1 belong to cluster 0, the rest to cluster 1. Each subject
// draws from its own rng substream, so output is independent of generation
// order.
inline std::pair<SparseFunctionalDataset, std::vector<int>> generate(const SimConfig& cfg) {
  validate(cfg);
  SparseFunctionalDataset ds;
  ds.t_lo = 0.0;
  ds.t_hi = 1.0;
  ds.subjects.resize(static_cast<std::size_t>(cfg.n));
  std::vector<int> labels(static_cast<std::size_t>(cfg.n));

  const int width = static_cast<int>(std::to_string(cfg.n).size());
  for (int i = 0; i < cfg.n; ++i) {
    const int cluster = i < cfg.n / 2 ? 0 : 1;
    labels[static_cast<std::size_t>(i)] = cluster;
    rng::Rng rng(rng::mix(cfg.seed, static_cast<std::uint64_t>(i)));

    int n_obs = rng.binomial_half(2 * cfg.n_tp);
    if (n_obs < 2) n_obs = 2;
    const auto coeff = subject_coefficients(cluster, rng, cfg.fix_z);

    std::vector<std::pair<double, double>> obs(static_cast<std::size_t>(n_obs));
    for (auto& o : obs) o.first = rng.uniform01();
    for (auto& o : obs) {
      const double eps = cfg.sigma > 0.0 ? rng.normal(0.0, cfg.sigma) : 0.0;
      o.second = curve_value(coeff, o.first) + eps;
    }
    std::stable_sort(obs.begin(), obs.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });

    auto& rec = ds.subjects[static_cast<std::size_t>(i)];
    std::string id = std::to_string(i + 1);
    rec.id = "s" + std::string(static_cast<std::size_t>(width) - std::min(id.size(), static_cast<std::size_t>(width)), '0') + id;
    rec.times.reserve(static_cast<std::size_t>(n_obs));
    rec.values.reserve(static_cast<std::size_t>(n_obs));
    for (const auto& o : obs) {
      rec.times.push_back(o.first);
      rec.values.push_back(o.second);
    }
  }
  return {std::move(ds), std::move(labels)};
}

struct PopulationCenters {
  Eigen::VectorXd grid;     // shared time grid on [0,1]
  Eigen::MatrixXd centers;  // 2 x G; row 0 matches cluster 0's mean curve
};

namespace detail {

// Plain Lloyd iterations on dense grid vectors; random initial assignments,
// empty clusters repaired with the farthest point.
inline std::pair<Eigen::MatrixXd, double> dense_kmeans_once(const Eigen::MatrixXd& points, int k,
                                                            rng::Rng& rng, int max_iter = 100) {
  const Eigen::Index n = points.rows();
  std::vector<int> labels(static_cast<std::size_t>(n));
  for (auto& lab : labels) lab = rng.uniform_int(0, k - 1);
  // ensure nonempty
  for (int c = 0; c < k; ++c) {
    if (std::count(labels.begin(), labels.end(), c) == 0) {
      labels[static_cast<std::size_t>(rng.uniform_index(static_cast<std::uint64_t>(n)))] = c;
    }
  }
  Eigen::MatrixXd centroids(k, points.cols());
  std::vector<int> next(static_cast<std::size_t>(n));
  std::vector<double> best_d(static_cast<std::size_t>(n));
  for (int iter = 0; iter < max_iter; ++iter) {
    centroids.setZero();
    Eigen::VectorXd count = Eigen::VectorXd::Zero(k);
    for (Eigen::Index i = 0; i < n; ++i) {
      centroids.row(labels[static_cast<std::size_t>(i)]) += points.row(i);
      count[labels[static_cast<std::size_t>(i)]] += 1.0;
    }
    for (int c = 0; c < k; ++c) centroids.row(c) /= count[c];

    for (Eigen::Index i = 0; i < n; ++i) {
      double best = std::numeric_limits<double>::infinity();
      int best_c = 0;
      for (int c = 0; c < k; ++c) {
        const double d = (points.row(i) - centroids.row(c)).squaredNorm();
        if (d < best) {
          best = d;
          best_c = c;
        }
      }
      next[static_cast<std::size_t>(i)] = best_c;
      best_d[static_cast<std::size_t>(i)] = best;
    }
    if (next == labels) break;
    labels = next;
    for (int c = 0; c < k; ++c) {
      if (std::count(labels.begin(), labels.end(), c) > 0) continue;
      const auto far = std::max_element(best_d.begin(), best_d.end()) - best_d.begin();
      labels[static_cast<std::size_t>(far)] = c;
      best_d[static_cast<std::size_t>(far)] = -1.0;
    }
  }
  double sse = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    sse += (points.row(i) - centroids.row(labels[static_cast<std::size_t>(i)])).squaredNorm();
  }
  return {std::move(centroids), sse};
}

}  // namespace detail

// Population-optimal centers: k-means (K = 2, multi-restart) on n_large
// noiseless dense curves sampled on an equispaced grid. Row 0 of the result
// is the centroid closer to cluster 0's mean curve.
inline PopulationCenters population_centers(int n_large, int grid_size, std::uint64_t seed, int restarts = 50) {
  if (n_large < 1000 || n_large % 2 != 0) throw std::invalid_argument("n_large must be even and >= 1000");
  if (grid_size < 100) throw std::invalid_argument("grid_size must be >= 100");
  if (restarts < 1) throw std::invalid_argument("restarts must be positive");

  PopulationCenters out;
  out.grid.resize(grid_size);
  for (int g = 0; g < grid_size; ++g) {
    out.grid[g] = static_cast<double>(g) / static_cast<double>(grid_size - 1);
  }

  // sine table: S(u-1, g) = sqrt(2) sin(pi u t_g)
  Eigen::MatrixXd sine(kNumTerms, grid_size);
  for (int u = 1; u <= kNumTerms; ++u) {
    for (int g = 0; g < grid_size; ++g) {
      sine(u - 1, g) = std::sqrt(2.0) * std::sin(detail::kPi * static_cast<double>(u) * out.grid[g]);
    }
  }

  Eigen::MatrixXd points(n_large, grid_size);
  for (int i = 0; i < n_large; ++i) {
    const int cluster = i < n_large / 2 ? 0 : 1;
    rng::Rng rng(rng::mix(seed, static_cast<std::uint64_t>(i)));
    const auto coeff = subject_coefficients(cluster, rng);
    Eigen::Map<const Eigen::VectorXd> cvec(coeff.data(), kNumTerms);
    points.row(i) = cvec.transpose() * sine;
  }

  Eigen::MatrixXd best_centroids;
  double best_sse = std::numeric_limits<double>::infinity();
  for (int r = 0; r < restarts; ++r) {
    rng::Rng rng(rng::mix(seed, 0x6b6d65616e73ULL, static_cast<std::uint64_t>(r)));
    auto [centroids, sse] = detail::dense_kmeans_once(points, 2, rng);
    if (sse < best_sse) {
      best_sse = sse;
      best_centroids = std::move(centroids);
    }
  }

  // orient rows so row 0 is nearer the cluster-0 mean curve
  Eigen::VectorXd mean0(grid_size), mean1(grid_size);
  for (int g = 0; g < grid_size; ++g) {
    mean0[g] = mean_curve(0, out.grid[g]);
    mean1[g] = mean_curve(1, out.grid[g]);
  }
  const double straight = (best_centroids.row(0).transpose() - mean0).squaredNorm() +
                          (best_centroids.row(1).transpose() - mean1).squaredNorm();
  const double flipped = (best_centroids.row(0).transpose() - mean1).squaredNorm() +
                         (best_centroids.row(1).transpose() - mean0).squaredNorm();
  out.centers.resize(2, grid_size);
  if (straight <= flipped) {
    out.centers = best_centroids;
  } else {
    out.centers.row(0) = best_centroids.row(1);
    out.centers.row(1) = best_centroids.row(0);
  }
  return out;
}

}  // namespace fkm::sim
