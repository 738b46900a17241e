#pragma once

#include <Eigen/Dense>
#include <cstddef>

namespace geoclust {

// Uniform access to a homogeneous set of manifold points for the clustering
// stack: Riemannian distances, vectorized logarithm maps (coordinates whose
// Euclidean inner product equals the Frobenius one), and the Euclidean
// embedding used by the Kmeans baseline.
class ManifoldView {
 public:
  virtual ~ManifoldView() = default;

  virtual std::size_t size() const = 0;
  virtual std::size_t tangent_dim() const = 0;
  virtual double distance(std::size_t i, std::size_t j) const = 0;
  // log_{x_base}(x_target), flattened to tangent coordinates.
  virtual Eigen::VectorXd log_at(std::size_t base, std::size_t target) const = 0;
  // Euclidean embedding: Grassmann points as vec(U U^T), SPD points as the
  // scaled upper-triangular vectorization.
  virtual Eigen::VectorXd embed(std::size_t i) const = 0;
};

}  // namespace geoclust
