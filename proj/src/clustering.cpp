#include "geoclust/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <map>
#include <sstream>

#include "geoclust/errors.hpp"
#include "geoclust/linalg.hpp"
#include "geoclust/rng.hpp"

namespace geoclust {

namespace {
constexpr double kPi = 3.14159265358979323846;
constexpr double kHalfPi = 1.57079632679489661923;
}  // namespace

void GCTConfig::validate(std::size_t n_points) const {
  if (clusters < 1) throw ConfigError("GCTConfig: clusters must be >= 1");
  if (n_nn < 2 || static_cast<std::size_t>(n_nn) >= n_points) {
    throw ConfigError("GCTConfig: need 2 <= n_nn < number of points");
  }
  if (!(eta > 0.0 && eta < 1.0)) throw ConfigError("GCTConfig: eta must lie in (0,1)");
  if (!(sigma_d > 0.0) || !(sigma_a > 0.0)) {
    throw ConfigError("GCTConfig: sigma_d and sigma_a must be positive");
  }
}

Eigen::MatrixXd pairwise_distances(const ManifoldView& points) {
  const std::size_t n = points.size();
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double v = points.distance(i, j);
      d(i, j) = v;
      d(j, i) = v;
    }
  }
  return d;
}

namespace {

// Quantizes distances to a 1e-12 relative grid before sorting so that
// mathematically tied values (equal up to rounding) break by lower index.
std::vector<std::size_t> select_neighbors(const std::vector<double>& dist_to_t,
                                          std::size_t t, std::size_t n_nn) {
  const std::size_t n = dist_to_t.size();
  if (n_nn >= n) throw ConfigError("nearest_neighbors: n_nn must be < number of points");
  double dmax = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    if (j != t) dmax = std::max(dmax, dist_to_t[j]);
  }
  const double quantum = dmax > 0.0 ? dmax * 1e-12 : 1.0;
  std::vector<std::pair<long long, std::size_t>> order;
  order.reserve(n - 1);
  for (std::size_t j = 0; j < n; ++j) {
    if (j != t) order.emplace_back(std::llround(dist_to_t[j] / quantum), j);
  }
  std::sort(order.begin(), order.end());
  std::vector<std::size_t> out(n_nn);
  for (std::size_t k = 0; k < n_nn; ++k) out[k] = order[k].second;
  return out;
}

}  // namespace

std::vector<std::size_t> nearest_neighbors(const Eigen::MatrixXd& dist, std::size_t t,
                                           std::size_t n_nn) {
  std::vector<double> row(dist.rows());
  for (Eigen::Index j = 0; j < dist.rows(); ++j) row[j] = dist(t, j);
  return select_neighbors(row, t, n_nn);
}

std::vector<std::size_t> nearest_neighbors(const ManifoldView& points, std::size_t t,
                                           std::size_t n_nn) {
  const std::size_t n = points.size();
  std::vector<double> row(n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    if (j != t) row[j] = points.distance(t, j);
  }
  return select_neighbors(row, t, n_nn);
}

SparseCode local_sparse_code(const Eigen::MatrixXd& tangents, double sigma_d,
                             const SparseCodeOptions& options) {
  const Eigen::Index p = tangents.cols();
  if (p < 1) throw ConfigError("local_sparse_code: no neighbors");
  Eigen::VectorXd weights(p);
  for (Eigen::Index i = 0; i < p; ++i) {
    weights(i) = options.penalty_multiplier * std::exp(tangents.col(i).norm() / sigma_d);
  }
  auto objective_at = [&](const Eigen::VectorXd& a) {
    return (tangents * a).squaredNorm() + weights.dot(a.cwiseAbs());
  };
  if (p == 1) {
    Eigen::VectorXd a = Eigen::VectorXd::Ones(1);
    return SparseCode{a, objective_at(a), 0};
  }

  // Exact optimality test on the affine set {1^T a = 1}: every direction
  // e_i - e_j must have a nonnegative one-sided derivative (the
  // max-violating-pair criterion for the split-variable formulation).
  auto kkt_satisfied = [&](const Eigen::MatrixXd& gram_m, const Eigen::VectorXd& a,
                           double tol) {
    const Eigen::VectorXd ga = gram_m * a;
    double up_min = std::numeric_limits<double>::infinity();   // min over i of
    double down_max = -std::numeric_limits<double>::infinity();  // .. and j
    for (Eigen::Index i = 0; i < a.size(); ++i) {
      const double u = (a(i) < 0.0) ? -1.0 : 1.0;
      up_min = std::min(up_min, 2.0 * ga(i) + weights(i) * u);
      const double v = (a(i) > 0.0) ? -1.0 : 1.0;
      down_max = std::max(down_max, 2.0 * ga(i) - weights(i) * v);
    }
    return up_min - down_max >= -tol;
  };

  // ADMM on  min ||V a||^2 + sum w_i |z_i|  s.t.  1^T a = 1,  a = z.
  const Eigen::MatrixXd gram = tangents.transpose() * tangents;
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(p);
  double rho = std::max(1.0, gram.trace() / static_cast<double>(p));
  Eigen::LDLT<Eigen::MatrixXd> solver(
      (2.0 * gram + rho * Eigen::MatrixXd::Identity(p, p)));
  Eigen::VectorXd h_ones = solver.solve(ones);
  double ones_h_ones = ones.dot(h_ones);

  Eigen::VectorXd z = ones / static_cast<double>(p);
  Eigen::VectorXd u = Eigen::VectorXd::Zero(p);
  Eigen::VectorXd a = z;
  int it = 0;
  bool converged = false;
  for (; it < options.max_iterations; ++it) {
    // Equality-constrained quadratic step via its KKT system.
    const Eigen::VectorXd rhs = rho * (z - u);
    const Eigen::VectorXd h_rhs = solver.solve(rhs);
    const double lambda = (ones.dot(h_rhs) - 1.0) / ones_h_ones;
    a = h_rhs - lambda * h_ones;
    const Eigen::VectorXd z_prev = z;
    const Eigen::VectorXd v = a + u;
    for (Eigen::Index i = 0; i < p; ++i) {
      const double thr = weights(i) / rho;
      z(i) = std::max(0.0, std::abs(v(i)) - thr) * (v(i) < 0.0 ? -1.0 : 1.0);
    }
    u += a - z;
    const double primal = (a - z).lpNorm<Eigen::Infinity>();
    const double dual = rho * (z - z_prev).lpNorm<Eigen::Infinity>();
    if (primal < options.tolerance && dual < options.tolerance) {
      converged = true;
      break;
    }
    if (it % 50 == 49) {
      // the thresholded iterate often reaches exact optimality long before the
      // ADMM residuals flatline; accept it once its KKT conditions hold
      if (std::abs(z.sum() - 1.0) < 1e-9) {
        const Eigen::VectorXd cand = z / z.sum();
        if (kkt_satisfied(gram, cand, 1e-9 * (1.0 + objective_at(cand)))) {
          return SparseCode{cand, objective_at(cand), it + 1};
        }
      }
      if (primal > 10.0 * dual || dual > 10.0 * primal) {
        rho *= (primal > dual) ? 2.0 : 0.5;
        u *= (primal > dual) ? 0.5 : 2.0;
        solver.compute(2.0 * gram + rho * Eigen::MatrixXd::Identity(p, p));
        h_ones = solver.solve(ones);
        ones_h_ones = ones.dot(h_ones);
      }
    }
  }
  if (!converged) {
    const double gap = std::abs(objective_at(a) - objective_at(z / z.sum()));
    std::ostringstream os;
    os << "local_sparse_code: ADMM did not converge in " << options.max_iterations
       << " iterations (objective gap " << gap << ")";
    throw SolverError(os.str(), gap);
  }
  // Polish: z carries the exact sparsity pattern; rescaling it restores exact
  // feasibility and drops the thresholded leakage from the weighted-l1 term.
  if (std::abs(z.sum() - 1.0) < 1e-6) {
    const Eigen::VectorXd polished = z / z.sum();
    if (objective_at(polished) <= objective_at(a)) {
      return SparseCode{polished, objective_at(polished), it + 1};
    }
  }
  return SparseCode{a, objective_at(a), it + 1};
}

Eigen::MatrixXd local_pca(const Eigen::MatrixXd& tangents, double eta) {
  if (!(eta > 0.0 && eta < 1.0)) throw ConfigError("local_pca: eta must lie in (0,1)");
  const Eigen::Index p = tangents.cols();
  if (p < 2) throw ConfigError("local_pca: need at least two neighbors");
  // Eigenpairs of (1/(p-1)) V V^T through the small Gram matrix V^T V; the
  // eta test is scale-invariant so the 1/(p-1) factor drops out.
  const Eigen::MatrixXd gram = tangents.transpose() * tangents;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram);
  const Eigen::VectorXd& lam = eig.eigenvalues();  // ascending
  const double lam_max = lam(p - 1);
  if (lam_max <= 0.0) {
    throw RankError("local_pca: all neighbor tangents vanish (dimension-0 estimate)", {});
  }
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = p - 1; i >= 0; --i) {
    if (lam(i) >= eta * lam_max) keep.push_back(i);
  }
  Eigen::MatrixXd basis(tangents.rows(), static_cast<Eigen::Index>(keep.size()));
  for (std::size_t k = 0; k < keep.size(); ++k) {
    basis.col(k) = tangents * eig.eigenvectors().col(keep[k]) / std::sqrt(lam(keep[k]));
  }
  fix_column_signs(basis);
  return basis;
}

double geodesic_angle(const Eigen::VectorXd& v, const Eigen::MatrixXd& basis) {
  const double norm = v.norm();
  if (norm == 0.0) return 0.0;  // coincident points
  const double proj = (basis.transpose() * v).norm();
  return std::acos(std::clamp(proj / norm, 0.0, 1.0));
}

Eigen::MatrixXd gct_affinity(const Eigen::MatrixXd& alpha, const Eigen::MatrixXd& theta,
                             const Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>& is_neighbor,
                             double sigma_a) {
  const Eigen::Index n = alpha.rows();
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index t = 0; t < n; ++t) {
    for (Eigen::Index s = t + 1; s < n; ++s) {
      if (!is_neighbor(t, s) && !is_neighbor(s, t)) continue;
      const double value = std::exp(std::abs(alpha(t, s)) + std::abs(alpha(s, t))) *
                           std::exp(-(theta(t, s) + theta(s, t)) / sigma_a);
      w(t, s) = value;
      w(s, t) = value;
    }
  }
  return w;
}

std::vector<int> kmeans(const Eigen::MatrixXd& data, int clusters, int restarts,
                        std::uint64_t seed) {
  const Eigen::Index n = data.rows();
  if (clusters < 1) throw ConfigError("kmeans: clusters must be >= 1");
  if (n == 0) return {};
  const int k = std::min<Eigen::Index>(clusters, n);

  std::vector<int> best_assign(n, 0);
  double best_inertia = std::numeric_limits<double>::infinity();
  for (int restart = 0; restart < restarts; ++restart) {
    Rng rng(Rng::derive(seed, restart));
    // kmeans++ seeding
    Eigen::MatrixXd centers(k, data.cols());
    std::vector<double> d2(n, std::numeric_limits<double>::infinity());
    const Eigen::Index first = static_cast<Eigen::Index>(rng.uniform_index(n));
    centers.row(0) = data.row(first);
    for (int c = 1; c < k; ++c) {
      double total = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        const double d = (data.row(i) - centers.row(c - 1)).squaredNorm();
        d2[i] = std::min(d2[i], d);
        total += d2[i];
      }
      Eigen::Index chosen = 0;
      if (total > 0.0) {
        const double target = rng.uniform() * total;
        double cum = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
          cum += d2[i];
          if (cum >= target) {
            chosen = i;
            break;
          }
        }
      } else {
        chosen = static_cast<Eigen::Index>(rng.uniform_index(n));
      }
      centers.row(c) = data.row(chosen);
    }

    std::vector<int> assign(n, -1);
    for (int iter = 0; iter < 200; ++iter) {
      bool changed = false;
      for (Eigen::Index i = 0; i < n; ++i) {
        int arg = 0;
        double best = (data.row(i) - centers.row(0)).squaredNorm();
        for (int c = 1; c < k; ++c) {
          const double d = (data.row(i) - centers.row(c)).squaredNorm();
          if (d < best) {
            best = d;
            arg = c;
          }
        }
        if (assign[i] != arg) {
          assign[i] = arg;
          changed = true;
        }
      }
      if (!changed && iter > 0) break;
      // update step
      Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(k, data.cols());
      std::vector<int> counts(k, 0);
      for (Eigen::Index i = 0; i < n; ++i) {
        sums.row(assign[i]) += data.row(i);
        counts[assign[i]]++;
      }
      for (int c = 0; c < k; ++c) {
        if (counts[c] > 0) {
          centers.row(c) = sums.row(c) / counts[c];
        } else {
          // re-seed an empty cluster at the point farthest from its center
          Eigen::Index far = 0;
          double far_d = -1.0;
          for (Eigen::Index i = 0; i < n; ++i) {
            const double d = (data.row(i) - centers.row(assign[i])).squaredNorm();
            if (d > far_d) {
              far_d = d;
              far = i;
            }
          }
          centers.row(c) = data.row(far);
        }
      }
    }
    double inertia = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      inertia += (data.row(i) - centers.row(assign[i])).squaredNorm();
    }
    if (inertia < best_inertia) {
      best_inertia = inertia;
      best_assign = assign;
    }
  }
  return best_assign;
}

ClusterLabels spectral_cluster(const Eigen::MatrixXd& affinity, int clusters,
                               std::uint64_t seed, int kmeans_restarts) {
  const Eigen::Index n = affinity.rows();
  if (affinity.cols() != n) throw DimensionError("spectral_cluster: affinity not square");
  if ((affinity - affinity.transpose()).norm() >
      1e-10 * std::max(1.0, affinity.norm())) {
    throw DimensionError("spectral_cluster: affinity not symmetric");
  }
  if (clusters < 1) throw ConfigError("spectral_cluster: clusters must be >= 1");
  ClusterLabels out;
  if (clusters == 1) {
    out.labels.assign(n, 1);
    return out;
  }

  Eigen::VectorXd degree = affinity.rowwise().sum();
  Eigen::VectorXd inv_sqrt(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    inv_sqrt(i) = degree(i) > 0.0 ? 1.0 / std::sqrt(degree(i)) : 0.0;
  }
  Eigen::MatrixXd lap = -(inv_sqrt.asDiagonal() * affinity * inv_sqrt.asDiagonal());
  lap.diagonal().array() += 1.0;
  lap = symmetrize(lap);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(lap);
  const Eigen::VectorXd& lam = eig.eigenvalues();
  int zero_count = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (lam(i) < 1e-10) ++zero_count;
  }
  if (zero_count > clusters) {
    std::cerr << "warning: spectral_cluster found " << zero_count
              << " connected components with only " << clusters << " clusters\n";
  }
  Eigen::MatrixXd embed = eig.eigenvectors().leftCols(clusters);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double norm = embed.row(i).norm();
    if (norm > 0.0) embed.row(i) /= norm;
  }
  const std::vector<int> assign = kmeans(embed, clusters, kmeans_restarts, seed);
  out.labels.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) out.labels[i] = assign[i] + 1;
  return out;
}

namespace {

// Steps 1-7 of the GCT pipeline; SMC skips the PCA/angle stages.
ClusterLabels gct_pipeline(const ManifoldView& points, const GCTConfig& cfg,
                           std::uint64_t seed, bool use_angles) {
  cfg.validate(points.size());
  const std::size_t n = points.size();
  const Eigen::MatrixXd dist = pairwise_distances(points);

  Eigen::MatrixXd alpha = Eigen::MatrixXd::Zero(n, n);
  Eigen::MatrixXd theta = Eigen::MatrixXd::Constant(n, n, kHalfPi);
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> is_neighbor(n, n);
  is_neighbor.setConstant(false);

  for (std::size_t t = 0; t < n; ++t) {
    const auto hood = nearest_neighbors(dist, t, cfg.n_nn);
    Eigen::MatrixXd tangents(points.tangent_dim(), hood.size());
    for (std::size_t k = 0; k < hood.size(); ++k) {
      tangents.col(k) = points.log_at(t, hood[k]);
    }
    SparseCode code;
    try {
      code = local_sparse_code(tangents, cfg.sigma_d, cfg.sparse);
    } catch (const SolverError& e) {
      throw SolverError("gct (sparse-coding step), point " + std::to_string(t) + ": " +
                            e.what(),
                        e.worst_residual());
    }
    Eigen::MatrixXd basis;
    if (use_angles) {
      try {
        basis = local_pca(tangents, cfg.eta);
      } catch (const RankError& e) {
        throw RankError("gct (local-PCA step), point " + std::to_string(t) + ": " +
                            e.what(),
                        e.singular_values());
      }
    }
    for (std::size_t k = 0; k < hood.size(); ++k) {
      is_neighbor(t, hood[k]) = true;
      alpha(t, hood[k]) = code.alpha(k);
      if (use_angles) {
        theta(t, hood[k]) = geodesic_angle(tangents.col(k), basis);
      }
    }
  }

  Eigen::MatrixXd w;
  if (use_angles) {
    w = gct_affinity(alpha, theta, is_neighbor, cfg.sigma_a);
  } else {
    w = Eigen::MatrixXd::Zero(n, n);
    for (std::size_t t = 0; t < n; ++t) {
      for (std::size_t s = t + 1; s < n; ++s) {
        if (!is_neighbor(t, s) && !is_neighbor(s, t)) continue;
        const double v = std::exp(std::abs(alpha(t, s)) + std::abs(alpha(s, t)));
        w(t, s) = v;
        w(s, t) = v;
      }
    }
  }
  return spectral_cluster(w, cfg.clusters, seed, cfg.kmeans_restarts);
}

}  // namespace

ClusterLabels gct(const ManifoldView& points, const GCTConfig& cfg, std::uint64_t seed) {
  return gct_pipeline(points, cfg, seed, true);
}

ClusterLabels smc(const ManifoldView& points, const GCTConfig& cfg, std::uint64_t seed) {
  return gct_pipeline(points, cfg, seed, false);
}

ClusterLabels scr(const ManifoldView& points, int clusters, double sigma,
                  std::uint64_t seed, int kmeans_restarts) {
  const std::size_t n = points.size();
  const Eigen::MatrixXd dist = pairwise_distances(points);
  if (sigma <= 0.0) {
    // median heuristic over the off-diagonal distances
    std::vector<double> all;
    all.reserve(n * (n - 1) / 2);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) all.push_back(dist(i, j));
    }
    std::sort(all.begin(), all.end());
    const double median =
        all.empty() ? 1.0 : (all.size() % 2 == 1 ? all[all.size() / 2]
                                                 : 0.5 * (all[all.size() / 2 - 1] +
                                                          all[all.size() / 2]));
    sigma = median > 0.0 ? median : 1.0;
  }
  Eigen::MatrixXd w(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) {
      const double v = std::exp(-dist(i, j) * dist(i, j) / (2.0 * sigma * sigma));
      w(i, j) = v;
      w(j, i) = v;
    }
  }
  return spectral_cluster(w, clusters, seed, kmeans_restarts);
}

ClusterLabels kmeans_embedded(const ManifoldView& points, int clusters,
                              std::uint64_t seed, int restarts) {
  const std::size_t n = points.size();
  if (n == 0) return {};
  Eigen::MatrixXd data(n, points.embed(0).size());
  for (std::size_t i = 0; i < n; ++i) data.row(i) = points.embed(i).transpose();
  const std::vector<int> assign = kmeans(data, clusters, restarts, seed);
  ClusterLabels out;
  out.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) out.labels[i] = assign[i] + 1;
  return out;
}

namespace {

// Max-weight assignment (Jonker-Volgenant style shortest augmenting paths) on
// a square cost matrix; returns the minimum total cost assignment.
double hungarian_min_cost(const Eigen::MatrixXd& cost) {
  const int n = static_cast<int>(cost.rows());
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(n + 1, std::numeric_limits<double>::infinity());
    std::vector<bool> used(n + 1, false);
    do {
      used[j0] = true;
      const int i0 = p[j0];
      double delta = std::numeric_limits<double>::infinity();
      int j1 = 0;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0);
  }
  double total = 0.0;
  for (int j = 1; j <= n; ++j) {
    if (p[j] != 0) total += cost(p[j] - 1, j - 1);
  }
  return total;
}

}  // namespace

double clustering_accuracy(const std::vector<int>& predicted,
                           const std::vector<int>& truth) {
  if (predicted.size() != truth.size()) {
    throw DimensionError("clustering_accuracy: label vectors differ in length");
  }
  if (predicted.empty()) return 1.0;
  std::map<int, int> pred_ids, truth_ids;
  for (int v : predicted) pred_ids.emplace(v, static_cast<int>(pred_ids.size()));
  for (int v : truth) truth_ids.emplace(v, static_cast<int>(truth_ids.size()));
  const int k = static_cast<int>(std::max(pred_ids.size(), truth_ids.size()));
  Eigen::MatrixXd confusion = Eigen::MatrixXd::Zero(k, k);
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    confusion(pred_ids[predicted[i]], truth_ids[truth[i]]) += 1.0;
  }
  // maximize agreement == minimize (max - agreement)
  const double big = confusion.maxCoeff();
  const Eigen::MatrixXd cost = Eigen::MatrixXd::Constant(k, k, big) - confusion;
  const double min_cost = hungarian_min_cost(cost);
  const double agreement = big * k - min_cost;
  return agreement / static_cast<double>(predicted.size());
}

}  // namespace geoclust
