#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <vector>

#include "geoclust/manifold_view.hpp"

namespace geoclust {

struct SparseCodeOptions {
  double tolerance = 1e-10;   // ADMM residual target
  int max_iterations = 10000;
  double penalty_multiplier = 1.0;  // extension knob; 1 = formula as printed
};

struct GCTConfig {
  int clusters = 2;      // K
  int n_nn = 8;          // neighborhood size
  double sigma_d = 1.0;  // distance parameter
  double sigma_a = 1.0;  // angle parameter
  double eta = 0.5;      // eigenvalue threshold in (0, 1)
  SparseCodeOptions sparse;
  int kmeans_restarts = 20;

  void validate(std::size_t n_points) const;
};

struct ClusterLabels {
  std::vector<int> labels;  // 1..K
  std::optional<double> accuracy;
};

struct SparseCode {
  Eigen::VectorXd alpha;
  double objective = 0.0;
  int iterations = 0;
};

// Pairwise Riemannian distance matrix (symmetric, zero diagonal).
Eigen::MatrixXd pairwise_distances(const ManifoldView& points);

// Indices of the n_nn nearest points to t (excluding t), distance ties broken
// by lower index; `dist` is the full pairwise matrix.
std::vector<std::size_t> nearest_neighbors(const Eigen::MatrixXd& dist, std::size_t t,
                                           std::size_t n_nn);
std::vector<std::size_t> nearest_neighbors(const ManifoldView& points, std::size_t t,
                                           std::size_t n_nn);

// Affine-constrained weighted-l1 sparse coding on the tangent space at x_t:
// minimize ||sum_i alpha_i v_i||^2 + sum_i exp(||v_i||/sigma_d) |alpha_i|
// subject to sum_i alpha_i = 1, where v_i are the columns of `tangents`
// (the neighbors' log images; the coding target log x_t = 0).
SparseCode local_sparse_code(const Eigen::MatrixXd& tangents, double sigma_d,
                             const SparseCodeOptions& options = {});

// Local PCA of the neighborhood's tangent images: orthonormal eigenbasis of
// the sample correlation matrix for eigenvalues >= eta * lambda_max.
// Throws when every tangent image vanishes (dimension-0 estimate).
Eigen::MatrixXd local_pca(const Eigen::MatrixXd& tangents, double eta);

// Angle in [0, pi/2] between tangent vector v and the subspace spanned by the
// orthonormal columns of `basis`; zero tangent vectors give angle 0.
double geodesic_angle(const Eigen::VectorXd& v, const Eigen::MatrixXd& basis);

// Affinity w_tt' = exp(|a_tt'| + |a_t't|) * exp(-(theta_tt' + theta_t't)/sigma_a)
// on the symmetrized neighbor graph, zero elsewhere. `alpha` and `theta` hold
// 0 and pi/2 respectively for ordered pairs outside the neighborhoods.
Eigen::MatrixXd gct_affinity(const Eigen::MatrixXd& alpha, const Eigen::MatrixXd& theta,
                             const Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>& is_neighbor,
                             double sigma_a);

// Normalized spectral clustering (symmetric Laplacian, row-normalized
// eigenvector embedding, seeded Kmeans restarts).
ClusterLabels spectral_cluster(const Eigen::MatrixXd& affinity, int clusters,
                               std::uint64_t seed, int kmeans_restarts = 20);

// Geodesic clustering by tangent spaces.
ClusterLabels gct(const ManifoldView& points, const GCTConfig& cfg, std::uint64_t seed);

// Sparse manifold clustering: the GCT pipeline without local PCA and angles.
ClusterLabels smc(const ManifoldView& points, const GCTConfig& cfg, std::uint64_t seed);

// Spectral clustering with Riemannian metric: dense Gaussian affinity of the
// geodesic distances. sigma <= 0 requests the median-distance heuristic.
ClusterLabels scr(const ManifoldView& points, int clusters, double sigma,
                  std::uint64_t seed, int kmeans_restarts = 20);

// Euclidean-embedding Kmeans baseline.
ClusterLabels kmeans_embedded(const ManifoldView& points, int clusters,
                              std::uint64_t seed, int restarts = 20);

// Seeded Lloyd iterations with kmeans++ starts; rows of `data` are samples.
// Returns 0-based assignments.
std::vector<int> kmeans(const Eigen::MatrixXd& data, int clusters, int restarts,
                        std::uint64_t seed);

// Fraction of points whose labels agree with the ground truth under the best
// label matching (Hungarian assignment on the confusion matrix).
double clustering_accuracy(const std::vector<int>& predicted,
                           const std::vector<int>& truth);

}  // namespace geoclust
