#pragma once

#include <Eigen/Dense>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "geoclust/kernels.hpp"
#include "geoclust/manifold.hpp"
#include "geoclust/manifold_view.hpp"

namespace geoclust {

// Sliding-window parameters for the observability-subspace extractor.
struct WindowConfig {
  int tau_w = 50;  // window length
  int m = 3;       // observability order
  int p = 1;       // AR order
  int rho = 3;     // ARMA model order
  int tau_f = 20;  // forward horizon
  int tau_b = 20;  // backward horizon

  int subspace_rank() const { return p * rho; }
  // Throws ConfigError unless tau_w >= tau_f + tau_b + m - 1, all entries are
  // positive, and p*rho fits the stacked dimensions for n_nodes.
  void validate(int n_nodes) const;
};

struct ManifoldTag {
  enum class Type { grassmann, spd };
  Type type = Type::spd;
  int n = 0;  // ambient dimension (Grassmann) or matrix size (SPD)
  int r = 0;  // subspace rank (Grassmann only)

  bool operator==(const ManifoldTag&) const = default;
  std::string str() const;
};

// Ordered manifold-valued features with window-start timestamps and optional
// ground-truth labels.
struct FeatureSequence {
  ManifoldTag tag;
  std::vector<GrassmannPoint> grassmann_points;
  std::vector<SpdPoint> spd_points;
  std::vector<int> window_starts;
  std::vector<int> labels;  // empty when unknown

  std::size_t size() const {
    return tag.type == ManifoldTag::Type::grassmann ? grassmann_points.size()
                                                    : spd_points.size();
  }
  std::unique_ptr<ManifoldView> view() const;
};

// Appends `other` (same manifold) to `seq`; used to pool per-subject
// sequences before clustering.
void append_sequence(FeatureSequence& seq, const FeatureSequence& other);

// Subtracts each node's mean over all T samples (global centering).
Eigen::MatrixXd center_series(const Eigen::MatrixXd& series);

// Forward/backward stacked data matrices of one window (local time indexing).
// forward: m*N x tau_f, column j stacks y[tau_b+j .. tau_b+j+m-1];
// backward: tau_b*N x tau_f, column j stacks y[tau_b-1+j], ..., y[j].
std::pair<Eigen::MatrixXd, Eigen::MatrixXd> build_forward_backward(
    const Eigen::MatrixXd& window, const WindowConfig& cfg);

// Observability-subspace estimate of one window: the span of the p*rho
// leading left singular vectors of (1/tau_f) * forward * backward^T.
GrassmannPoint estimate_observability(const Eigen::MatrixXd& window,
                                      const WindowConfig& cfg);

FeatureSequence extract_grassmann_sequence(const Eigen::MatrixXd& series,
                                           const WindowConfig& cfg);

// Kernel partial-correlation matrix Gamma = D^{-1/2} K^{-1} D^{-1/2} with
// D = diag(K^{-1}); unit diagonal, off-diagonal (i,j) = -kPC_ij. Requires K
// positive definite (diagonal-load first; no silent loading here).
SpdPoint kpc_matrix(const KernelMatrix& k);

// kPC of one pair via the generalized Schur complement (pseudoinverse route);
// returns 0 when a residual norm vanishes.
double kpc_schur(const KernelMatrix& k, int i, int j);

enum class SpdVariant { kpc, cov, icov, corr };

SpdVariant spd_variant_from_string(const std::string& name);
std::string to_string(SpdVariant v);

// Kernel-matrix construction route: a fixed kernel function or the
// semidefinite-embedding learner.
struct KernelMethod {
  std::optional<KernelSpec> spec;  // engaged unless SDE
  int sde_neighbors = 0;
  SdeOptions sde_options;

  bool is_sde() const { return !spec.has_value(); }
  static KernelMethod fixed(KernelSpec s) { return KernelMethod{std::move(s), 0, {}}; }
  static KernelMethod sde(int neighbors, SdeOptions opts = {}) {
    return KernelMethod{std::nullopt, neighbors, opts};
  }
};

// Per window: center globally, form the kernel matrix on the windowed rows
// (uncentered rows for the corr variant), load if singular, and emit the
// variant's SPD matrix.
FeatureSequence extract_spd_sequence(const Eigen::MatrixXd& series,
                                     const KernelMethod& method, SpdVariant variant,
                                     int tau_w, const LoadPolicy& policy = {});

}  // namespace geoclust
