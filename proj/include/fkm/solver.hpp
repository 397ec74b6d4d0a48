#pragma once

// Functional k-means for sparsely observed longitudinal data. Cluster
// centers are basis expansions fit by penalized weighted least squares;
// subjects are reassigned to the nearest center at their own observation
// times; the two steps alternate until the assignment stabilizes. Multiple
// random restarts are run and the result with the smallest empirical loss
// is kept.

#include <Eigen/Dense>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <limits>
#include <stdexcept>
#include <string>
#include <thread>
#include <tuple>
#include <utility>
#include <vector>

#include "fkm/basis.hpp"
#include "fkm/dataset.hpp"
#include "fkm/rng.hpp"

namespace fkm {

enum class WeightScheme {
  Subject,      // each subject weighted 1/N_i
  Observation,  // each subject weighted 1/N-bar
};

struct FitConfig {
  int k = 2;
  BasisSpec basis{};
  std::vector<double> lambdas = {0.0};  // one value broadcasts to all clusters
  WeightScheme weights = WeightScheme::Subject;
  int restarts = 1;
  int max_iter = 100;
  std::uint64_t seed = 0;
  int threads = 1;  // restart-level parallelism; results do not depend on it
};

using Assignment = std::vector<int>;  // 0-based cluster labels, one per subject

struct ClusterModel {
  BasisSystem basis;
  std::vector<Eigen::VectorXd> coefficients;  // K vectors of length m
  TimeTransform transform{};

  int k() const { return static_cast<int>(coefficients.size()); }

  // Center value f_k(u) at unit-scale time u.
  double center(int cluster, double u) const {
    return coefficients[static_cast<std::size_t>(cluster)].dot(basis.evaluate(u));
  }

  // K x G matrix of center values on a unit-scale grid.
  Eigen::MatrixXd centers_on_grid(const Eigen::VectorXd& unit_grid) const {
    Eigen::MatrixXd out(k(), unit_grid.size());
    for (Eigen::Index g = 0; g < unit_grid.size(); ++g) {
      const Eigen::VectorXd phi = basis.evaluate(unit_grid[g]);
      for (int c = 0; c < k(); ++c) out(c, g) = coefficients[static_cast<std::size_t>(c)].dot(phi);
    }
    return out;
  }
};

struct FitResult {
  ClusterModel model;
  Assignment labels;
  double empirical_loss = 0.0;
  double penalized_objective = 0.0;
  int iterations = 0;
  int restart_index = 0;
  bool converged = false;
  std::vector<double> objective_trace;
  double fit_ms = 0.0;
};

namespace detail {

// Relative eigenvalue cutoff for rank decisions in the center update.
inline constexpr double kRankTolerance = 1e-10;

// Plateau guard: stop when the objective improves by less than
// kFlatTolerance * (1 + |objective|) for kFlatRounds consecutive iterations.
inline constexpr double kFlatTolerance = 1e-12;
inline constexpr int kFlatRounds = 3;

inline void check_unit_domain(const SparseFunctionalDataset& ds) {
  if (ds.t_lo < -kDomainSlack || ds.t_hi > 1.0 + kDomainSlack) {
    throw std::invalid_argument("dataset is not normalized to [0,1]; call normalize_time first");
  }
}

inline double subject_weight(WeightScheme scheme, std::size_t n_obs, double mean_obs) {
  return scheme == WeightScheme::Subject ? 1.0 / static_cast<double>(n_obs) : 1.0 / mean_obs;
}

// Per-subject sufficient statistics. With G_i = sum_j phi(t_ij) phi(t_ij)^T,
// h_i = sum_j x_ij phi(t_ij) and s_i = sum_j x_ij^2, every center update and
// every subject-to-center distance reduces to O(m^2) work independent of N_i.
struct SubjectStats {
  Eigen::MatrixXd gram;    // m x m
  Eigen::VectorXd moment;  // m
  double sq_sum = 0.0;
  std::size_t n_obs = 0;
};

inline std::vector<SubjectStats> compute_stats(const SparseFunctionalDataset& ds, const BasisSystem& basis) {
  std::vector<SubjectStats> stats(ds.n());
  const int m = basis.size();
  for (std::size_t i = 0; i < ds.n(); ++i) {
    const auto& rec = ds.subjects[i];
    SubjectStats st;
    st.gram = Eigen::MatrixXd::Zero(m, m);
    st.moment = Eigen::VectorXd::Zero(m);
    st.n_obs = rec.size();
    for (std::size_t j = 0; j < rec.size(); ++j) {
      const Eigen::VectorXd phi = basis.evaluate(rec.times[j]);
      st.gram.selfadjointView<Eigen::Lower>().rankUpdate(phi, 1.0);
      st.moment += rec.values[j] * phi;
      st.sq_sum += rec.values[j] * rec.values[j];
    }
    st.gram.triangularView<Eigen::StrictlyUpper>() = st.gram.transpose();
    stats[i] = std::move(st);
  }
  return stats;
}

// Squared distance from subject i to center beta at the subject's own times.
inline double subject_distance(const SubjectStats& st, const Eigen::VectorXd& beta) {
  const double d = st.sq_sum - 2.0 * beta.dot(st.moment) + beta.dot(st.gram * beta);
  return d > 0.0 ? d : 0.0;
}

// Minimum-norm solution of the (possibly singular) symmetric PSD system
// A beta = b via a rank-revealing eigendecomposition.
inline Eigen::VectorXd solve_penalized_system(const Eigen::MatrixXd& normal, const Eigen::VectorXd& rhs) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(normal);
  const Eigen::VectorXd& evals = es.eigenvalues();
  const double cutoff = kRankTolerance * std::max(evals.cwiseAbs().maxCoeff(), 0.0);
  Eigen::VectorXd inv = Eigen::VectorXd::Zero(evals.size());
  for (Eigen::Index i = 0; i < evals.size(); ++i) {
    if (evals[i] > cutoff) inv[i] = 1.0 / evals[i];
  }
  return es.eigenvectors() * (inv.asDiagonal() * (es.eigenvectors().transpose() * rhs));
}

inline std::vector<double> broadcast_lambdas(const std::vector<double>& lambdas, int k) {
  if (lambdas.size() != 1 && lambdas.size() != static_cast<std::size_t>(k)) {
    throw std::invalid_argument("lambdas must hold one value or one per cluster");
  }
  for (double l : lambdas) {
    if (!(l >= 0.0)) throw std::invalid_argument("smoothing parameters must be nonnegative");
  }
  if (lambdas.size() == static_cast<std::size_t>(k)) return lambdas;
  return std::vector<double>(static_cast<std::size_t>(k), lambdas[0]);
}

inline void check_assignment(const Assignment& labels, std::size_t n, int k) {
  if (labels.size() != n) throw std::invalid_argument("assignment length does not match subject count");
  for (int lab : labels) {
    if (lab < 0 || lab >= k) throw std::invalid_argument("assignment label out of range");
  }
}

inline std::vector<Eigen::VectorXd> update_centers_from_stats(const std::vector<SubjectStats>& stats,
                                                              const Assignment& labels, int k,
                                                              const BasisSystem& basis,
                                                              const std::vector<double>& lambdas,
                                                              WeightScheme scheme, double mean_obs) {
  const int m = basis.size();
  std::vector<Eigen::MatrixXd> normals(static_cast<std::size_t>(k), Eigen::MatrixXd::Zero(m, m));
  std::vector<Eigen::VectorXd> rhs(static_cast<std::size_t>(k), Eigen::VectorXd::Zero(m));
  std::vector<std::size_t> obs_count(static_cast<std::size_t>(k), 0);
  for (std::size_t i = 0; i < stats.size(); ++i) {
    const auto c = static_cast<std::size_t>(labels[i]);
    const double w = subject_weight(scheme, stats[i].n_obs, mean_obs);
    normals[c] += w * stats[i].gram;
    rhs[c] += w * stats[i].moment;
    obs_count[c] += stats[i].n_obs;
  }
  std::vector<Eigen::VectorXd> centers(static_cast<std::size_t>(k));
  for (int c = 0; c < k; ++c) {
    if (obs_count[static_cast<std::size_t>(c)] == 0) {
      throw std::invalid_argument("cluster " + std::to_string(c + 1) + " has no observations");
    }
    if (lambdas[static_cast<std::size_t>(c)] > 0.0) {
      normals[static_cast<std::size_t>(c)] += lambdas[static_cast<std::size_t>(c)] * basis.roughness();
    }
    centers[static_cast<std::size_t>(c)] =
        solve_penalized_system(normals[static_cast<std::size_t>(c)], rhs[static_cast<std::size_t>(c)]);
  }
  return centers;
}

}  // namespace detail

// Empirical loss: average over subjects of the best-cluster weighted squared
// discrepancy at the observed points. Under the subject scheme the weight is
// 1/N_i; under the observation scheme it is 1/N-bar.
inline double empirical_loss(const SparseFunctionalDataset& ds, const ClusterModel& model,
                             WeightScheme scheme = WeightScheme::Subject) {
  if (model.k() < 1) throw std::invalid_argument("model has no clusters");
  if (ds.n() == 0) throw std::invalid_argument("empty dataset");
  for (const auto& beta : model.coefficients) {
    if (beta.size() != model.basis.size()) {
      throw std::invalid_argument("coefficient length does not match basis size");
    }
  }
  detail::check_unit_domain(ds);
  const double mean_obs = ds.mean_observations();
  double total = 0.0;
  for (const auto& rec : ds.subjects) {
    double best = std::numeric_limits<double>::infinity();
    for (int c = 0; c < model.k(); ++c) {
      double acc = 0.0;
      for (std::size_t j = 0; j < rec.size(); ++j) {
        const double r = rec.values[j] - model.center(c, rec.times[j]);
        acc += r * r;
      }
      best = std::min(best, acc);
    }
    total += detail::subject_weight(scheme, rec.size(), mean_obs) * best;
  }
  return total / static_cast<double>(ds.n());
}

// Sum over clusters of the weighted within-cluster squared error plus the
// curvature penalty lambda_k * beta_k^T R beta_k. This is the quantity the
// alternation decreases.
inline double penalized_objective(const SparseFunctionalDataset& ds, const ClusterModel& model,
                                  const Assignment& labels, const std::vector<double>& lambdas,
                                  WeightScheme scheme = WeightScheme::Subject) {
  detail::check_unit_domain(ds);
  const int k = model.k();
  detail::check_assignment(labels, ds.n(), k);
  const auto lam = detail::broadcast_lambdas(lambdas, k);
  const double mean_obs = ds.mean_observations();
  double total = 0.0;
  for (std::size_t i = 0; i < ds.n(); ++i) {
    const auto& rec = ds.subjects[i];
    double acc = 0.0;
    for (std::size_t j = 0; j < rec.size(); ++j) {
      const double r = rec.values[j] - model.center(labels[i], rec.times[j]);
      acc += r * r;
    }
    total += detail::subject_weight(scheme, rec.size(), mean_obs) * acc;
  }
  for (int c = 0; c < k; ++c) {
    if (lam[static_cast<std::size_t>(c)] > 0.0) {
      const auto& beta = model.coefficients[static_cast<std::size_t>(c)];
      total += lam[static_cast<std::size_t>(c)] * beta.dot(model.basis.roughness() * beta);
    }
  }
  return total;
}

// Penalized weighted least-squares center update: for each cluster solve
// (Phi^T W Phi + lambda R) beta = Phi^T W x over the cluster's observations.
// Rank-deficient systems (possible at lambda = 0 with few observations)
// yield the minimum-norm solution.
inline std::vector<Eigen::VectorXd> update_centers(const SparseFunctionalDataset& ds, const Assignment& labels,
                                                   int k, const BasisSystem& basis,
                                                   const std::vector<double>& lambdas,
                                                   WeightScheme scheme = WeightScheme::Subject) {
  detail::check_unit_domain(ds);
  detail::check_assignment(labels, ds.n(), k);
  const auto lam = detail::broadcast_lambdas(lambdas, k);
  const auto stats = detail::compute_stats(ds, basis);
  return detail::update_centers_from_stats(stats, labels, k, basis, lam, scheme, ds.mean_observations());
}

// Nearest-center assignment: label_i = argmin_l sum_j (x_ij - f_l(t_ij))^2,
// ties toward the smaller cluster index. The per-subject weight is a positive
// factor common to all clusters, so the argmin is weight-scheme invariant.
inline Assignment assign_subjects(const SparseFunctionalDataset& ds, const ClusterModel& model) {
  detail::check_unit_domain(ds);
  if (model.k() < 1) throw std::invalid_argument("model has no clusters");
  Assignment labels(ds.n(), 0);
  for (std::size_t i = 0; i < ds.n(); ++i) {
    const auto& rec = ds.subjects[i];
    double best = std::numeric_limits<double>::infinity();
    int best_c = 0;
    for (int c = 0; c < model.k(); ++c) {
      double acc = 0.0;
      for (std::size_t j = 0; j < rec.size(); ++j) {
        const double r = rec.values[j] - model.center(c, rec.times[j]);
        acc += r * r;
      }
      if (acc < best) {
        best = acc;
        best_c = c;
      }
    }
    labels[i] = best_c;
  }
  return labels;
}

// Uniform random labels, then repaired so every cluster is nonempty: each
// empty cluster steals one random subject from a cluster of size >= 2.
inline Assignment random_initial_assignment(std::size_t n, int k, rng::Rng& rng) {
  if (k < 1) throw std::invalid_argument("need at least one cluster");
  if (n < static_cast<std::size_t>(k)) {
    throw std::invalid_argument("need at least as many subjects as clusters");
  }
  Assignment labels(n);
  std::vector<std::size_t> count(static_cast<std::size_t>(k), 0);
  for (std::size_t i = 0; i < n; ++i) {
    labels[i] = rng.uniform_int(0, k - 1);
    ++count[static_cast<std::size_t>(labels[i])];
  }
  for (int c = 0; c < k; ++c) {
    if (count[static_cast<std::size_t>(c)] > 0) continue;
    std::vector<std::size_t> movable;
    for (std::size_t i = 0; i < n; ++i) {
      if (count[static_cast<std::size_t>(labels[i])] >= 2) movable.push_back(i);
    }
    const std::size_t pick = movable[rng.uniform_index(movable.size())];
    --count[static_cast<std::size_t>(labels[pick])];
    labels[pick] = c;
    ++count[static_cast<std::size_t>(c)];
  }
  return labels;
}

namespace detail {

// Moves the worst-fitting subject (from a cluster of size >= 2) into each
// empty cluster so the next center update is well posed.
inline void repair_empty_clusters(Assignment& labels, std::vector<double>& min_dists, int k) {
  std::vector<std::size_t> count(static_cast<std::size_t>(k), 0);
  for (int lab : labels) ++count[static_cast<std::size_t>(lab)];
  for (int c = 0; c < k; ++c) {
    if (count[static_cast<std::size_t>(c)] > 0) continue;
    double worst = -1.0;
    std::size_t pick = labels.size();
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (count[static_cast<std::size_t>(labels[i])] < 2) continue;
      if (min_dists[i] > worst) {
        worst = min_dists[i];
        pick = i;
      }
    }
    --count[static_cast<std::size_t>(labels[pick])];
    labels[pick] = c;
    ++count[static_cast<std::size_t>(c)];
    min_dists[pick] = -1.0;  // now anchors the repaired cluster
  }
}

struct CoreResult {
  std::vector<Eigen::VectorXd> centers;
  Assignment labels;
  int iterations = 0;
  bool converged = false;
  std::vector<double> objective_trace;
};

// One run of the alternation from a given initial assignment. The trace
// records the penalized objective after each full iteration (centers from
// the current labels, then nearest-center labels); empty clusters are
// repaired before the next center update.
inline CoreResult fit_once_core(const std::vector<SubjectStats>& stats, const BasisSystem& basis,
                                const std::vector<double>& lambdas, WeightScheme scheme, double mean_obs,
                                int k, int max_iter, const Assignment& init) {
  const std::size_t n = stats.size();
  {
    std::vector<std::size_t> count(static_cast<std::size_t>(k), 0);
    for (int lab : init) ++count[static_cast<std::size_t>(lab)];
    for (int c = 0; c < k; ++c) {
      if (count[static_cast<std::size_t>(c)] == 0) {
        throw std::invalid_argument("initial assignment leaves cluster " + std::to_string(c + 1) + " empty");
      }
    }
  }

  CoreResult res;
  Assignment cur = init;
  Assignment next(n);
  std::vector<double> min_dists(n);
  double last_obj = std::numeric_limits<double>::infinity();
  int flat_rounds = 0;

  for (int iter = 1; iter <= max_iter; ++iter) {
    res.iterations = iter;
    res.centers = update_centers_from_stats(stats, cur, k, basis, lambdas, scheme, mean_obs);

    double data_term = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double best = std::numeric_limits<double>::infinity();
      int best_c = 0;
      for (int c = 0; c < k; ++c) {
        const double d = subject_distance(stats[i], res.centers[static_cast<std::size_t>(c)]);
        if (d < best) {
          best = d;
          best_c = c;
        }
      }
      next[i] = best_c;
      min_dists[i] = best;
      data_term += subject_weight(scheme, stats[i].n_obs, mean_obs) * best;
    }
    double obj = data_term;
    for (int c = 0; c < k; ++c) {
      if (lambdas[static_cast<std::size_t>(c)] > 0.0) {
        const auto& beta = res.centers[static_cast<std::size_t>(c)];
        obj += lambdas[static_cast<std::size_t>(c)] * beta.dot(basis.roughness() * beta);
      }
    }
    res.objective_trace.push_back(obj);

    if (next == cur) {
      res.converged = true;
      break;
    }
    if (last_obj - obj < kFlatTolerance * (1.0 + std::abs(obj))) {
      if (++flat_rounds >= kFlatRounds) {
        cur = next;
        res.converged = true;
        break;
      }
    } else {
      flat_rounds = 0;
    }
    last_obj = obj;
    cur = next;
    repair_empty_clusters(cur, min_dists, k);
  }
  res.labels = cur;
  return res;
}

inline FitResult finalize_result(const SparseFunctionalDataset& unit_ds, CoreResult&& core,
                                 const BasisSystem& basis, const TimeTransform& tf, const FitConfig& config,
                                 const std::vector<double>& lambdas, int restart_index) {
  FitResult out;
  out.model = ClusterModel{basis, std::move(core.centers), tf};
  out.labels = std::move(core.labels);
  out.iterations = core.iterations;
  out.converged = core.converged;
  out.objective_trace = std::move(core.objective_trace);
  out.restart_index = restart_index;
  out.empirical_loss = empirical_loss(unit_ds, out.model, config.weights);
  out.penalized_objective = penalized_objective(unit_ds, out.model, out.labels, lambdas, config.weights);
  return out;
}

inline int resolve_threads(int requested) {
  int threads = requested > 0 ? requested : 1;
  if (const char* cap = std::getenv("FKM_THREADS")) {
    const int c = std::atoi(cap);
    if (c > 0) threads = std::min(threads, c);
  }
  return threads;
}

}  // namespace detail

// One run of the alternation from an explicit initial assignment. The
// dataset must already live on [0,1].
inline FitResult fit_once(const SparseFunctionalDataset& ds, const FitConfig& config, const Assignment& init) {
  detail::check_unit_domain(ds);
  detail::check_assignment(init, ds.n(), config.k);
  if (config.max_iter < 1) throw std::invalid_argument("max_iter must be positive");
  const BasisSystem basis = BasisSystem::make(config.basis);
  const auto lambdas = detail::broadcast_lambdas(config.lambdas, config.k);
  const auto stats = detail::compute_stats(ds, basis);
  auto core = detail::fit_once_core(stats, basis, lambdas, config.weights, ds.mean_observations(), config.k,
                                    config.max_iter, init);
  return detail::finalize_result(ds, std::move(core), basis, TimeTransform{}, config, lambdas, 0);
}

// Full fit: normalizes time if needed, runs `restarts` independent
// alternations from seeded random initial assignments and keeps the result
// with the smallest empirical loss (ties to the smaller restart index).
// Restart r draws its own rng stream from (seed, r), so the selected result
// does not depend on thread count.
inline FitResult fit(const SparseFunctionalDataset& ds, const FitConfig& config) {
  const auto start = std::chrono::steady_clock::now();
  if (config.k < 1) throw std::invalid_argument("need at least one cluster");
  if (ds.n() < static_cast<std::size_t>(config.k)) {
    throw std::invalid_argument("need at least as many subjects as clusters");
  }
  if (config.restarts < 1) throw std::invalid_argument("restarts must be positive");
  if (config.max_iter < 1) throw std::invalid_argument("max_iter must be positive");

  SparseFunctionalDataset unit_ds;
  TimeTransform tf;
  if (ds.t_lo == 0.0 && ds.t_hi == 1.0) {
    unit_ds = ds;
  } else {
    std::tie(unit_ds, tf) = normalize_time(ds);
  }

  const BasisSystem basis = BasisSystem::make(config.basis);
  const auto lambdas = detail::broadcast_lambdas(config.lambdas, config.k);
  const auto stats = detail::compute_stats(unit_ds, basis);
  const double mean_obs = unit_ds.mean_observations();

  std::vector<detail::CoreResult> results(static_cast<std::size_t>(config.restarts));
  auto run_restart = [&](int r) {
    rng::Rng rng(rng::mix(config.seed, static_cast<std::uint64_t>(r)));
    const Assignment init = random_initial_assignment(unit_ds.n(), config.k, rng);
    results[static_cast<std::size_t>(r)] = detail::fit_once_core(stats, basis, lambdas, config.weights, mean_obs,
                                                                 config.k, config.max_iter, init);
  };

  const int threads = detail::resolve_threads(config.threads);
  if (threads <= 1 || config.restarts == 1) {
    for (int r = 0; r < config.restarts; ++r) run_restart(r);
  } else {
    std::vector<std::thread> pool;
    std::atomic<int> next_restart{0};
    const int workers = std::min(threads, config.restarts);
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (int r = next_restart.fetch_add(1); r < config.restarts; r = next_restart.fetch_add(1)) {
          run_restart(r);
        }
      });
    }
    for (auto& th : pool) th.join();
  }

  int best = 0;
  double best_loss = std::numeric_limits<double>::infinity();
  std::vector<double> losses(static_cast<std::size_t>(config.restarts));
  for (int r = 0; r < config.restarts; ++r) {
    ClusterModel candidate{basis, results[static_cast<std::size_t>(r)].centers, tf};
    losses[static_cast<std::size_t>(r)] = empirical_loss(unit_ds, candidate, config.weights);
    if (losses[static_cast<std::size_t>(r)] < best_loss) {
      best_loss = losses[static_cast<std::size_t>(r)];
      best = r;
    }
  }
  FitResult out = detail::finalize_result(unit_ds, std::move(results[static_cast<std::size_t>(best)]), basis, tf,
                                          config, lambdas, best);
  out.fit_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return out;
}

// Nearest-center label for one subject with times on the original scale.
inline int predict(const ClusterModel& model, const SubjectRecord& subject) {
  if (subject.size() == 0) throw std::invalid_argument("empty subject");
  if (subject.times.size() != subject.values.size()) {
    throw std::invalid_argument("times/values length mismatch");
  }
  double best = std::numeric_limits<double>::infinity();
  int best_c = 0;
  for (int c = 0; c < model.k(); ++c) {
    double acc = 0.0;
    for (std::size_t j = 0; j < subject.size(); ++j) {
      const double r = subject.values[j] - model.center(c, model.transform.to_unit(subject.times[j]));
      acc += r * r;
    }
    if (acc < best) {
      best = acc;
      best_c = c;
    }
  }
  return best_c;
}

// Center curves evaluated on a grid given in original time units.
inline Eigen::MatrixXd evaluate_centers(const ClusterModel& model, const std::vector<double>& grid) {
  Eigen::MatrixXd out(model.k(), static_cast<Eigen::Index>(grid.size()));
  for (std::size_t g = 0; g < grid.size(); ++g) {
    const double u = model.transform.to_unit(grid[g]);
    const Eigen::VectorXd phi = model.basis.evaluate(u);  // throws outside [0,1]
    for (int c = 0; c < model.k(); ++c) {
      out(c, static_cast<Eigen::Index>(g)) = model.coefficients[static_cast<std::size_t>(c)].dot(phi);
    }
  }
  return out;
}

}  // namespace fkm
