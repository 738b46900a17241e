#include "geoclust/manifold.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "geoclust/errors.hpp"
#include "geoclust/linalg.hpp"

namespace geoclust {

namespace {

constexpr double kOrthonormalityTol = 1e-10;
constexpr double kSymmetryTol = 1e-12;
constexpr double kCutLocusMargin = 1e-8;

std::string shape_of(const Eigen::MatrixXd& m) {
  std::ostringstream os;
  os << m.rows() << "x" << m.cols();
  return os.str();
}

void require_same_grassmann(const GrassmannPoint& a, const GrassmannPoint& b,
                            const char* op) {
  if (a.n() != b.n() || a.r() != b.r()) {
    throw DimensionError(std::string(op) + ": operands live on different Grassmannians, " +
                         shape_of(a.basis()) + " vs " + shape_of(b.basis()));
  }
}

void require_same_spd(const SpdPoint& a, const SpdPoint& b, const char* op) {
  if (a.dim() != b.dim()) {
    throw DimensionError(std::string(op) + ": operands live on different PD manifolds, " +
                         shape_of(a.matrix()) + " vs " + shape_of(b.matrix()));
  }
}

// Principal angles via the mixed sine/cosine rule: cosines from svd(U^T V),
// sines from svd(V - U (U^T V)); small angles read the sine, large ones the
// cosine, which keeps full precision at both ends of [0, pi/2].
Eigen::VectorXd principal_angles(const GrassmannPoint& a, const GrassmannPoint& b) {
  const Eigen::MatrixXd m = a.basis().transpose() * b.basis();
  Eigen::JacobiSVD<Eigen::MatrixXd> cos_svd(m);
  Eigen::JacobiSVD<Eigen::MatrixXd> sin_svd(b.basis() - a.basis() * m);
  const Eigen::Index r = m.cols();
  Eigen::VectorXd angles(r);
  for (Eigen::Index i = 0; i < r; ++i) {
    const double c = std::clamp(cos_svd.singularValues()(i), 0.0, 1.0);
    // sines come out descending: pair the i-th largest cosine with the
    // i-th smallest sine
    const double s = std::clamp(sin_svd.singularValues()(r - 1 - i), 0.0, 1.0);
    angles(i) = (c * c > 0.5) ? std::asin(s) : std::acos(c);
  }
  return angles;
}

// Deterministic pair ordering so both distance functions are exactly
// symmetric in their arguments.
bool lexicographic_before(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  for (Eigen::Index j = 0; j < a.cols(); ++j) {
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
      if (a(i, j) < b(i, j)) return true;
      if (a(i, j) > b(i, j)) return false;
    }
  }
  return false;
}

}  // namespace

GrassmannPoint::GrassmannPoint(Eigen::MatrixXd basis) : basis_(std::move(basis)) {
  const Eigen::Index n = basis_.rows();
  const Eigen::Index r = basis_.cols();
  if (r <= 0 || r >= n) {
    throw DimensionError("GrassmannPoint: need 0 < r < n, got " + shape_of(basis_));
  }
  const double defect =
      (basis_.transpose() * basis_ - Eigen::MatrixXd::Identity(r, r)).norm();
  if (defect > kOrthonormalityTol) {
    std::ostringstream os;
    os << "GrassmannPoint: basis not orthonormal, defect " << defect;
    throw DimensionError(os.str());
  }
}

GrassmannPoint GrassmannPoint::from_span(const Eigen::MatrixXd& any_basis) {
  if (numerical_rank(any_basis) < any_basis.cols()) {
    throw RankError("GrassmannPoint::from_span: rank-deficient basis",
                    std::vector<double>());
  }
  return GrassmannPoint(orthonormalize(any_basis));
}

GrassmannPoint GrassmannPoint::random(Eigen::Index n, Eigen::Index r, Rng& rng) {
  return GrassmannPoint(orthonormalize(gaussian_matrix(n, r, rng)));
}

SpdPoint::SpdPoint(Eigen::MatrixXd matrix) : matrix_(std::move(matrix)) {
  if (matrix_.rows() != matrix_.cols()) {
    throw DimensionError("SpdPoint: matrix not square, " + shape_of(matrix_));
  }
  const double scale = matrix_.norm();
  const double asym = (matrix_ - matrix_.transpose()).norm();
  if (scale == 0.0 || asym > kSymmetryTol * scale) {
    std::ostringstream os;
    os << "SpdPoint: matrix not symmetric, relative defect "
       << (scale == 0.0 ? asym : asym / scale);
    throw NotSpdError(os.str(), 0.0);
  }
  matrix_ = symmetrize(matrix_);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(matrix_);
  eigenvalues_ = eig.eigenvalues();
  if (eigenvalues_(0) <= 0.0) {
    std::ostringstream os;
    os << "SpdPoint: not positive definite, min eigenvalue " << eigenvalues_(0);
    throw NotSpdError(os.str(), eigenvalues_(0));
  }
  const Eigen::MatrixXd& q = eig.eigenvectors();
  sqrt_ = q * eigenvalues_.cwiseSqrt().asDiagonal() * q.transpose();
  inv_sqrt_ = q * eigenvalues_.cwiseSqrt().cwiseInverse().asDiagonal() * q.transpose();
  sqrt_ = symmetrize(sqrt_);
  inv_sqrt_ = symmetrize(inv_sqrt_);
}

SpdPoint SpdPoint::random(Eigen::Index n, Rng& rng, double eig_lo, double eig_hi) {
  Eigen::MatrixXd q = orthonormalize(gaussian_matrix(n, n, rng));
  Eigen::VectorXd lam(n);
  for (Eigen::Index i = 0; i < n; ++i) lam(i) = rng.uniform(eig_lo, eig_hi);
  return SpdPoint(symmetrize(q * lam.asDiagonal() * q.transpose()));
}

double grassmann_distance(const GrassmannPoint& a, const GrassmannPoint& b) {
  require_same_grassmann(a, b, "grassmann_distance");
  const GrassmannPoint* first = &a;
  const GrassmannPoint* second = &b;
  if (lexicographic_before(b.basis(), a.basis())) std::swap(first, second);
  return principal_angles(*first, *second).norm();
}

GrassmannTangent grassmann_log(const GrassmannPoint& base, const GrassmannPoint& target) {
  require_same_grassmann(base, target, "grassmann_log");
  const Eigen::MatrixXd m = base.basis().transpose() * target.basis();
  Eigen::JacobiSVD<Eigen::MatrixXd> msvd(m);
  const double sigma_min = msvd.singularValues()(m.cols() - 1);
  if (sigma_min <= std::sin(kCutLocusMargin)) {
    const double angle = std::acos(std::clamp(sigma_min, 0.0, 1.0));
    throw CutLocusError("grassmann_log: largest principal angle at or beyond pi/2", angle);
  }
  // L = (I - U U^T) V (U^T V)^{-1}; its singular values are tan(theta_i).
  const Eigen::MatrixXd l =
      target.basis() * m.inverse() - base.basis();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(l, Eigen::ComputeThinU | Eigen::ComputeThinV);
  Eigen::MatrixXd w = svd.matrixU();
  Eigen::MatrixXd z = svd.matrixV();
  Eigen::VectorXd theta = svd.singularValues();
  for (Eigen::Index i = 0; i < theta.size(); ++i) theta(i) = std::atan(theta(i));
  return GrassmannTangent{base, w * theta.asDiagonal() * z.transpose()};
}

GrassmannPoint grassmann_exp(const GrassmannPoint& base, const GrassmannTangent& v) {
  if (v.base.n() != base.n() || v.base.r() != base.r() ||
      v.ambient.rows() != base.n() || v.ambient.cols() != base.r()) {
    throw DimensionError("grassmann_exp: tangent shape " + shape_of(v.ambient) +
                         " does not match base " + shape_of(base.basis()));
  }
  const double horiz = (base.basis().transpose() * v.ambient).norm();
  if (horiz > kOrthonormalityTol * std::max(1.0, v.ambient.norm())) {
    throw DimensionError("grassmann_exp: tangent is not horizontal at the base point");
  }
  if (v.ambient.norm() == 0.0) return base;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(v.ambient,
                                        Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd s = svd.singularValues();
  const Eigen::MatrixXd y =
      base.basis() * svd.matrixV() * s.array().cos().matrix().asDiagonal() *
          svd.matrixV().transpose() +
      svd.matrixU() * s.array().sin().matrix().asDiagonal() * svd.matrixV().transpose();
  // Polar re-orthonormalization absorbs rounding drift.
  Eigen::JacobiSVD<Eigen::MatrixXd> polar(y, Eigen::ComputeThinU | Eigen::ComputeThinV);
  return GrassmannPoint(polar.matrixU() * polar.matrixV().transpose());
}

SpdTangent spd_log(const SpdPoint& base, const SpdPoint& target) {
  require_same_spd(base, target, "spd_log");
  const Eigen::MatrixXd s =
      symmetrize(base.inv_sqrt() * target.matrix() * base.inv_sqrt());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(s);
  if (eig.eigenvalues()(0) <= 0.0) {
    throw NotSpdError("spd_log: whitened target lost positive definiteness",
                      eig.eigenvalues()(0));
  }
  const Eigen::MatrixXd logm = eig.eigenvectors() *
                               eig.eigenvalues().array().log().matrix().asDiagonal() *
                               eig.eigenvectors().transpose();
  return SpdTangent{base, symmetrize(base.sqrt() * logm * base.sqrt())};
}

SpdPoint spd_exp(const SpdPoint& base, const SpdTangent& v) {
  if (v.ambient.rows() != base.dim() || v.ambient.cols() != base.dim()) {
    throw DimensionError("spd_exp: tangent shape " + shape_of(v.ambient) +
                         " does not match base dimension");
  }
  const double scale = std::max(1.0, v.ambient.norm());
  if ((v.ambient - v.ambient.transpose()).norm() > kSymmetryTol * scale) {
    throw NotSpdError("spd_exp: tangent not symmetric", 0.0);
  }
  const Eigen::MatrixXd e = symmetrize(base.inv_sqrt() * v.ambient * base.inv_sqrt());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(e);
  const Eigen::MatrixXd expm = eig.eigenvectors() *
                               eig.eigenvalues().array().exp().matrix().asDiagonal() *
                               eig.eigenvectors().transpose();
  return SpdPoint(symmetrize(base.sqrt() * expm * base.sqrt()));
}

double spd_distance(const SpdPoint& a, const SpdPoint& b) {
  require_same_spd(a, b, "spd_distance");
  const SpdPoint* first = &a;
  const SpdPoint* second = &b;
  if (lexicographic_before(b.matrix(), a.matrix())) std::swap(first, second);
  const Eigen::MatrixXd s =
      symmetrize(first->inv_sqrt() * second->matrix() * first->inv_sqrt());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(s);
  double sum = 0.0;
  for (Eigen::Index i = 0; i < eig.eigenvalues().size(); ++i) {
    const double lam = eig.eigenvalues()(i);
    if (lam <= 0.0) {
      throw NotSpdError("spd_distance: whitened operand lost positive definiteness", lam);
    }
    const double l = std::log(lam);
    sum += l * l;
  }
  return std::sqrt(sum);
}

}  // namespace geoclust
