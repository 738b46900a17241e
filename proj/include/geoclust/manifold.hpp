#pragma once

#include <Eigen/Dense>

#include "geoclust/rng.hpp"

namespace geoclust {

// A point of Gr(n, r): an equivalence class of r-dimensional subspaces of
// R^n, carried by one orthonormal n x r representative.
class GrassmannPoint {
 public:
  // Requires basis already orthonormal within 1e-10 Frobenius and 0 < r < n.
  explicit GrassmannPoint(Eigen::MatrixXd basis);

  // Orthonormalizes an arbitrary full-column-rank matrix first.
  static GrassmannPoint from_span(const Eigen::MatrixXd& any_basis);

  static GrassmannPoint random(Eigen::Index n, Eigen::Index r, Rng& rng);

  const Eigen::MatrixXd& basis() const { return basis_; }
  Eigen::Index n() const { return basis_.rows(); }
  Eigen::Index r() const { return basis_.cols(); }

 private:
  Eigen::MatrixXd basis_;
};

// A point of PD(N). Validates symmetry and positive definiteness on
// construction and caches the eigendecomposition (and the symmetric square
// root derived from it) for the log/exp/distance maps.
class SpdPoint {
 public:
  explicit SpdPoint(Eigen::MatrixXd matrix);

  static SpdPoint random(Eigen::Index n, Rng& rng, double eig_lo = 0.5, double eig_hi = 2.0);

  const Eigen::MatrixXd& matrix() const { return matrix_; }
  Eigen::Index dim() const { return matrix_.rows(); }
  double min_eigenvalue() const { return eigenvalues_(0); }
  const Eigen::MatrixXd& sqrt() const { return sqrt_; }
  const Eigen::MatrixXd& inv_sqrt() const { return inv_sqrt_; }

 private:
  Eigen::MatrixXd matrix_;
  Eigen::VectorXd eigenvalues_;  // ascending
  Eigen::MatrixXd sqrt_;
  Eigen::MatrixXd inv_sqrt_;
};

// Horizontal lift of a Grassmann tangent vector: base^T . ambient = 0.
struct GrassmannTangent {
  GrassmannPoint base;
  Eigen::MatrixXd ambient;  // n x r

  double norm() const { return ambient.norm(); }
};

// Symmetric matrix anchored at an SPD base point.
struct SpdTangent {
  SpdPoint base;
  Eigen::MatrixXd ambient;  // N x N symmetric

  double norm() const { return ambient.norm(); }
};

// Geodesic (arc-length) distance from principal angles: ||theta||_2 with
// theta_i = arccos of the clamped singular values of a^T b.
double grassmann_distance(const GrassmannPoint& a, const GrassmannPoint& b);

// Standard SVD-based logarithm map; throws CutLocusError when the largest
// principal angle reaches pi/2 - 1e-8.
GrassmannTangent grassmann_log(const GrassmannPoint& base, const GrassmannPoint& target);

// Closed-form exponential via the thin SVD of the tangent.
GrassmannPoint grassmann_exp(const GrassmannPoint& base, const GrassmannTangent& v);

// Affine-invariant metric maps on PD(N); M = G^2 with symmetric G.
SpdTangent spd_log(const SpdPoint& base, const SpdPoint& target);
SpdPoint spd_exp(const SpdPoint& base, const SpdTangent& v);
double spd_distance(const SpdPoint& a, const SpdPoint& b);

}  // namespace geoclust
