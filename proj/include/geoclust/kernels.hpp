#pragma once

#include <Eigen/Dense>
#include <utility>
#include <vector>

#include <json.hpp>

namespace geoclust {

// Reproducing-kernel function description; serializes to/from the harness
// config file, e.g. {"kind": "gaussian", "variance": 1.0} and
// {"kind": "multi", "terms": [{"weight": w, "spec": {...}}, ...]}.
struct KernelSpec {
  enum class Kind { linear, polynomial, gaussian, multi };

  Kind kind = Kind::linear;
  int degree = 1;         // polynomial
  double variance = 1.0;  // gaussian
  std::vector<std::pair<double, KernelSpec>> terms;  // multi

  static KernelSpec linear();
  static KernelSpec polynomial(int degree);
  static KernelSpec gaussian(double variance);
  static KernelSpec multi(std::vector<std::pair<double, KernelSpec>> terms);
  // Equal-weight Gaussian grid with variances start, start+step, ...
  static KernelSpec gaussian_grid(double start, double step, int count);

  void validate() const;
  nlohmann::json to_json() const;
  static KernelSpec from_json(const nlohmann::json& j);
};

struct KernelMatrix {
  Eigen::MatrixXd matrix;
  bool loaded = false;    // whether diagonal loading was applied
  double epsilon = 0.0;   // loading magnitude

  Eigen::Index dim() const { return matrix.rows(); }
};

double kernel_eval(const KernelSpec& spec, const Eigen::RowVectorXd& y,
                   const Eigen::RowVectorXd& y2);

// Gram matrix of the rows of `rows` under `spec`; PSD by construction.
KernelMatrix kernel_matrix(const KernelSpec& spec, const Eigen::MatrixXd& rows);

// Relative loading policy: load when min eigenvalue < trigger_ratio * trace/N,
// by enough that the result's min eigenvalue is at least epsilon_ratio * trace/N.
struct LoadPolicy {
  double trigger_ratio = 1e-10;
  double epsilon_ratio = 1e-6;
};

KernelMatrix diagonal_load(const KernelMatrix& k, const LoadPolicy& policy = {});

struct SdeOptions {
  int max_iterations = 5000;
  double tolerance = 1e-7;  // ADMM residual target (Frobenius, relative to scale)
};

// Semidefinite-embedding kernel learner: maximizes trace(K) subject to
// K PSD, sum of all entries zero, and local isometry on every pair of rows
// sharing a neighborhood (P nearest neighbors per node, plus the node itself;
// distance ties break toward the lower node index).
KernelMatrix sde_learn(const Eigen::MatrixXd& rows, int neighbors,
                       const SdeOptions& options = {});

// Unordered pairs (i < j) constrained by sde_learn for the given rows;
// exposed for the feasibility checks in tests and the acceptance suite.
std::vector<std::pair<int, int>> sde_constrained_pairs(const Eigen::MatrixXd& rows,
                                                       int neighbors);

}  // namespace geoclust
