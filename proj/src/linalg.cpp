#include "geoclust/linalg.hpp"

#include <cmath>

namespace geoclust {

Eigen::MatrixXd pseudo_inverse(const Eigen::MatrixXd& m, double rcond) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  const double cut = rcond * (sv.size() > 0 ? sv(0) : 0.0);
  Eigen::VectorXd inv = Eigen::VectorXd::Zero(sv.size());
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    if (sv(i) > cut) inv(i) = 1.0 / sv(i);
  }
  return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

Eigen::Index numerical_rank(const Eigen::MatrixXd& m, double rcond) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  const auto& sv = svd.singularValues();
  if (sv.size() == 0) return 0;
  const double cut = rcond * sv(0);
  Eigen::Index rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    if (sv(i) > cut) ++rank;
  }
  return rank;
}

Eigen::VectorXd vech_scaled(const Eigen::MatrixXd& sym) {
  const Eigen::Index n = sym.rows();
  Eigen::VectorXd v(n * (n + 1) / 2);
  const double root2 = std::sqrt(2.0);
  Eigen::Index k = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    v(k++) = sym(i, i);
    for (Eigen::Index j = i + 1; j < n; ++j) v(k++) = root2 * sym(i, j);
  }
  return v;
}

Eigen::MatrixXd unvech_scaled(const Eigen::VectorXd& v, Eigen::Index n) {
  Eigen::MatrixXd m(n, n);
  const double inv_root2 = 1.0 / std::sqrt(2.0);
  Eigen::Index k = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    m(i, i) = v(k++);
    for (Eigen::Index j = i + 1; j < n; ++j) {
      m(i, j) = m(j, i) = inv_root2 * v(k++);
    }
  }
  return m;
}

Eigen::MatrixXd orthonormalize(const Eigen::MatrixXd& m) {
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(m);
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(m.rows(), m.cols());
  Eigen::MatrixXd r = qr.matrixQR().topRows(m.cols()).triangularView<Eigen::Upper>();
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    if (r(j, j) < 0.0) q.col(j) = -q.col(j);
  }
  return q;
}

void fix_column_signs(Eigen::MatrixXd& m) {
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    Eigen::Index imax = 0;
    double best = 0.0;
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      const double a = std::abs(m(i, j));
      if (a > best) {
        best = a;
        imax = i;
      }
    }
    if (m(imax, j) < 0.0) m.col(j) = -m.col(j);
  }
}

Eigen::MatrixXd gaussian_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = rng.normal();
  }
  return m;
}

}  // namespace geoclust
