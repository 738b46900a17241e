#include "geoclust/features.hpp"

#include <cmath>
#include <iostream>
#include <sstream>

#include "geoclust/errors.hpp"
#include "geoclust/linalg.hpp"

namespace geoclust {

void WindowConfig::validate(int n_nodes) const {
  if (tau_w <= 0 || m <= 0 || p <= 0 || rho <= 0 || tau_f <= 0 || tau_b <= 0) {
    throw ConfigError("WindowConfig: all parameters must be positive integers");
  }
  if (tau_w < tau_f + tau_b + m - 1) {
    std::ostringstream os;
    os << "WindowConfig: need tau_w >= tau_f + tau_b + m - 1, got " << tau_w << " < "
       << tau_f << " + " << tau_b << " + " << m << " - 1";
    throw ConfigError(os.str());
  }
  const int rank = subspace_rank();
  if (rank >= m * n_nodes) {
    throw ConfigError("WindowConfig: p*rho must be smaller than m*N");
  }
  if (rank > tau_b * n_nodes) {
    throw ConfigError("WindowConfig: p*rho exceeds the backward stack dimension");
  }
}

std::string ManifoldTag::str() const {
  std::ostringstream os;
  if (type == Type::grassmann) {
    os << "Gr(" << n << "," << r << ")";
  } else {
    os << "PD(" << n << ")";
  }
  return os.str();
}

namespace {

class GrassmannSeqView final : public ManifoldView {
 public:
  explicit GrassmannSeqView(const FeatureSequence& seq) : seq_(seq) {}
  std::size_t size() const override { return seq_.grassmann_points.size(); }
  std::size_t tangent_dim() const override {
    return static_cast<std::size_t>(seq_.tag.n) * seq_.tag.r;
  }
  double distance(std::size_t i, std::size_t j) const override {
    return grassmann_distance(seq_.grassmann_points[i], seq_.grassmann_points[j]);
  }
  Eigen::VectorXd log_at(std::size_t base, std::size_t target) const override {
    const auto t =
        grassmann_log(seq_.grassmann_points[base], seq_.grassmann_points[target]);
    return Eigen::Map<const Eigen::VectorXd>(t.ambient.data(), t.ambient.size());
  }
  Eigen::VectorXd embed(std::size_t i) const override {
    const Eigen::MatrixXd proj = seq_.grassmann_points[i].basis() *
                                 seq_.grassmann_points[i].basis().transpose();
    return Eigen::Map<const Eigen::VectorXd>(proj.data(), proj.size());
  }

 private:
  const FeatureSequence& seq_;
};

class SpdSeqView final : public ManifoldView {
 public:
  explicit SpdSeqView(const FeatureSequence& seq) : seq_(seq) {}
  std::size_t size() const override { return seq_.spd_points.size(); }
  std::size_t tangent_dim() const override {
    return static_cast<std::size_t>(seq_.tag.n) * (seq_.tag.n + 1) / 2;
  }
  double distance(std::size_t i, std::size_t j) const override {
    return spd_distance(seq_.spd_points[i], seq_.spd_points[j]);
  }
  // Tangent coordinates in a g-orthonormal basis at the base point (the
  // whitened log), so Euclidean norms equal geodesic distances.
  Eigen::VectorXd log_at(std::size_t base, std::size_t target) const override {
    const SpdPoint& b = seq_.spd_points[base];
    const Eigen::MatrixXd s =
        symmetrize(b.inv_sqrt() * seq_.spd_points[target].matrix() * b.inv_sqrt());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(s);
    if (eig.eigenvalues()(0) <= 0.0) {
      throw NotSpdError("log_at: whitened target lost positive definiteness",
                        eig.eigenvalues()(0));
    }
    const Eigen::MatrixXd logm = eig.eigenvectors() *
                                 eig.eigenvalues().array().log().matrix().asDiagonal() *
                                 eig.eigenvectors().transpose();
    return vech_scaled(logm);
  }
  Eigen::VectorXd embed(std::size_t i) const override {
    return vech_scaled(seq_.spd_points[i].matrix());
  }

 private:
  const FeatureSequence& seq_;
};

}  // namespace

std::unique_ptr<ManifoldView> FeatureSequence::view() const {
  if (tag.type == ManifoldTag::Type::grassmann) {
    return std::make_unique<GrassmannSeqView>(*this);
  }
  return std::make_unique<SpdSeqView>(*this);
}

void append_sequence(FeatureSequence& seq, const FeatureSequence& other) {
  if (seq.size() == 0 && seq.window_starts.empty()) {
    seq = other;
    return;
  }
  if (!(seq.tag == other.tag)) {
    throw DimensionError("append_sequence: manifolds differ, " + seq.tag.str() +
                         " vs " + other.tag.str());
  }
  seq.grassmann_points.insert(seq.grassmann_points.end(), other.grassmann_points.begin(),
                              other.grassmann_points.end());
  seq.spd_points.insert(seq.spd_points.end(), other.spd_points.begin(),
                        other.spd_points.end());
  seq.window_starts.insert(seq.window_starts.end(), other.window_starts.begin(),
                           other.window_starts.end());
  seq.labels.insert(seq.labels.end(), other.labels.begin(), other.labels.end());
}

Eigen::MatrixXd center_series(const Eigen::MatrixXd& series) {
  if (series.cols() < 1) throw ConfigError("center_series: empty series");
  const Eigen::VectorXd mu = series.rowwise().mean();
  return series.colwise() - mu;
}

std::pair<Eigen::MatrixXd, Eigen::MatrixXd> build_forward_backward(
    const Eigen::MatrixXd& window, const WindowConfig& cfg) {
  const int n = static_cast<int>(window.rows());
  if (window.cols() < cfg.tau_f + cfg.tau_b + cfg.m - 1) {
    std::ostringstream os;
    os << "build_forward_backward: window of " << window.cols()
       << " samples violates tau_w >= tau_f + tau_b + m - 1 = "
       << cfg.tau_f + cfg.tau_b + cfg.m - 1;
    throw ConfigError(os.str());
  }
  Eigen::MatrixXd forward(cfg.m * n, cfg.tau_f);
  Eigen::MatrixXd backward(cfg.tau_b * n, cfg.tau_f);
  for (int j = 0; j < cfg.tau_f; ++j) {
    for (int k = 0; k < cfg.m; ++k) {
      forward.block(k * n, j, n, 1) = window.col(cfg.tau_b + j + k);
    }
    for (int l = 0; l < cfg.tau_b; ++l) {
      backward.block(l * n, j, n, 1) = window.col(cfg.tau_b - 1 + j - l);
    }
  }
  return {std::move(forward), std::move(backward)};
}

GrassmannPoint estimate_observability(const Eigen::MatrixXd& window,
                                      const WindowConfig& cfg) {
  const auto [forward, backward] = build_forward_backward(window, cfg);
  const Eigen::MatrixXd cross =
      forward * backward.transpose() / static_cast<double>(cfg.tau_f);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(cross, Eigen::ComputeThinU);
  const Eigen::VectorXd& sv = svd.singularValues();
  const int rank_needed = cfg.subspace_rank();
  const double cut = 1e-10 * sv(0);
  int rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    if (sv(i) > cut) ++rank;
  }
  if (rank < rank_needed) {
    std::ostringstream os;
    os << "estimate_observability: cross-correlation rank " << rank << " below p*rho = "
       << rank_needed;
    throw RankError(os.str(), std::vector<double>(sv.data(), sv.data() + sv.size()));
  }
  if (static_cast<Eigen::Index>(rank_needed) < sv.size()) {
    const double gap = sv(rank_needed - 1) - sv(rank_needed);
    if (gap <= 1e-9 * sv(0)) {
      std::cerr << "warning: near-degenerate observability spectrum, gap " << gap
                << " at index " << rank_needed << "\n";
    }
  }
  Eigen::MatrixXd basis = svd.matrixU().leftCols(rank_needed);
  fix_column_signs(basis);
  return GrassmannPoint(basis);
}

FeatureSequence extract_grassmann_sequence(const Eigen::MatrixXd& series,
                                           const WindowConfig& cfg) {
  const int n = static_cast<int>(series.rows());
  const int total = static_cast<int>(series.cols());
  cfg.validate(n);
  if (total < cfg.tau_w) {
    throw ConfigError("extract_grassmann_sequence: series shorter than the window");
  }
  FeatureSequence seq;
  seq.tag = ManifoldTag{ManifoldTag::Type::grassmann, cfg.m * n, cfg.subspace_rank()};
  const int count = total - cfg.tau_w + 1;
  seq.grassmann_points.reserve(count);
  seq.window_starts.reserve(count);
  for (int t = 0; t < count; ++t) {
    try {
      seq.grassmann_points.push_back(
          estimate_observability(series.middleCols(t, cfg.tau_w), cfg));
    } catch (const RankError& e) {
      std::ostringstream os;
      os << "extract_grassmann_sequence: window " << t << ": " << e.what();
      throw RankError(os.str(), e.singular_values());
    }
    seq.window_starts.push_back(t);
  }
  return seq;
}

SpdPoint kpc_matrix(const KernelMatrix& k) {
  Eigen::LLT<Eigen::MatrixXd> llt(k.matrix);
  if (llt.info() != Eigen::Success) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(k.matrix, Eigen::EigenvaluesOnly);
    throw NotSpdError(
        "kpc_matrix: kernel matrix is singular; apply diagonal loading first",
        eig.eigenvalues()(0));
  }
  const Eigen::Index n = k.dim();
  const Eigen::MatrixXd inv =
      llt.solve(Eigen::MatrixXd::Identity(n, n));
  const Eigen::VectorXd d = inv.diagonal().cwiseSqrt().cwiseInverse();
  Eigen::MatrixXd gamma = d.asDiagonal() * inv * d.asDiagonal();
  gamma = symmetrize(gamma);
  gamma.diagonal().setOnes();
  return SpdPoint(gamma);
}

double kpc_schur(const KernelMatrix& k, int i, int j) {
  const Eigen::Index n = k.dim();
  if (i < 0 || j < 0 || i >= n || j >= n || i == j) {
    throw DimensionError("kpc_schur: node indices out of range or equal");
  }
  if (i > j) std::swap(i, j);  // formula symmetric; fix the evaluation order
  std::vector<Eigen::Index> rest;
  rest.reserve(n - 2);
  for (Eigen::Index v = 0; v < n; ++v) {
    if (v != i && v != j) rest.push_back(v);
  }
  const Eigen::Index r = static_cast<Eigen::Index>(rest.size());
  Eigen::MatrixXd k_rest(r, r);
  Eigen::VectorXd ki(r), kj(r);
  for (Eigen::Index a = 0; a < r; ++a) {
    ki(a) = k.matrix(i, rest[a]);
    kj(a) = k.matrix(j, rest[a]);
    for (Eigen::Index b = 0; b < r; ++b) k_rest(a, b) = k.matrix(rest[a], rest[b]);
  }
  const Eigen::MatrixXd pinv = pseudo_inverse(k_rest);
  const double s11 = k.matrix(i, i) - ki.dot(pinv * ki);
  const double s22 = k.matrix(j, j) - kj.dot(pinv * kj);
  const double s12 = k.matrix(i, j) - ki.dot(pinv * kj);
  const double floor = 1e-13 * std::max(1.0, k.matrix.trace() / static_cast<double>(n));
  if (s11 <= floor || s22 <= floor) return 0.0;  // vanishing residual
  return s12 / std::sqrt(s11 * s22);
}

SpdVariant spd_variant_from_string(const std::string& name) {
  if (name == "kPC" || name == "kpc") return SpdVariant::kpc;
  if (name == "Cov" || name == "cov") return SpdVariant::cov;
  if (name == "ICov" || name == "icov") return SpdVariant::icov;
  if (name == "Corr" || name == "corr") return SpdVariant::corr;
  throw ConfigError("unknown SPD feature variant '" + name + "'");
}

std::string to_string(SpdVariant v) {
  switch (v) {
    case SpdVariant::kpc: return "kPC";
    case SpdVariant::cov: return "Cov";
    case SpdVariant::icov: return "ICov";
    case SpdVariant::corr: return "Corr";
  }
  return "?";
}

FeatureSequence extract_spd_sequence(const Eigen::MatrixXd& series,
                                     const KernelMethod& method, SpdVariant variant,
                                     int tau_w, const LoadPolicy& policy) {
  const int n = static_cast<int>(series.rows());
  const int total = static_cast<int>(series.cols());
  if (tau_w < 1 || total < tau_w) {
    throw ConfigError("extract_spd_sequence: series shorter than the window");
  }
  if (n < 2) throw ConfigError("extract_spd_sequence: need at least two nodes");
  const Eigen::MatrixXd centered = center_series(series);
  const Eigen::MatrixXd& source =
      (variant == SpdVariant::corr) ? series : centered;

  FeatureSequence seq;
  seq.tag = ManifoldTag{ManifoldTag::Type::spd, n, 0};
  const int count = total - tau_w + 1;
  seq.spd_points.reserve(count);
  seq.window_starts.reserve(count);
  for (int t = 0; t < count; ++t) {
    const Eigen::MatrixXd rows = source.middleCols(t, tau_w);
    KernelMatrix k = method.is_sde()
                         ? sde_learn(rows, method.sde_neighbors, method.sde_options)
                         : kernel_matrix(*method.spec, rows);
    k = diagonal_load(k, policy);
    switch (variant) {
      case SpdVariant::cov:
      case SpdVariant::corr:
        seq.spd_points.emplace_back(k.matrix);
        break;
      case SpdVariant::icov: {
        const Eigen::MatrixXd inv =
            Eigen::LLT<Eigen::MatrixXd>(k.matrix).solve(Eigen::MatrixXd::Identity(n, n));
        seq.spd_points.emplace_back(symmetrize(inv));
        break;
      }
      case SpdVariant::kpc:
        seq.spd_points.push_back(kpc_matrix(k));
        break;
    }
    seq.window_starts.push_back(t);
  }
  return seq;
}

}  // namespace geoclust
