#pragma once

#include <Eigen/Dense>

#include "geoclust/rng.hpp"

namespace geoclust {

inline Eigen::MatrixXd symmetrize(const Eigen::MatrixXd& m) {
  return 0.5 * (m + m.transpose());
}

// Moore-Penrose pseudoinverse with relative singular-value cut.
Eigen::MatrixXd pseudo_inverse(const Eigen::MatrixXd& m, double rcond = 1e-10);

// Numerical rank under the same relative cut.
Eigen::Index numerical_rank(const Eigen::MatrixXd& m, double rcond = 1e-10);

// Upper-triangular vectorization of a symmetric matrix with sqrt(2) scaling
// on the off-diagonal so Euclidean inner products equal Frobenius ones.
Eigen::VectorXd vech_scaled(const Eigen::MatrixXd& sym);
Eigen::MatrixXd unvech_scaled(const Eigen::VectorXd& v, Eigen::Index n);

// Orthonormal basis for the column space (QR with deterministic signs).
Eigen::MatrixXd orthonormalize(const Eigen::MatrixXd& m);

// Flips each column so that its largest-magnitude entry is positive
// (first occurrence wins on ties); gives reproducible SVD/eigen bases.
void fix_column_signs(Eigen::MatrixXd& m);

// Gaussian matrix with entries drawn row-major from rng.
Eigen::MatrixXd gaussian_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng);

}  // namespace geoclust
