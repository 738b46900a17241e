#include "geoclust/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>
#include <sstream>

#include "geoclust/errors.hpp"
#include "geoclust/linalg.hpp"

namespace geoclust {

KernelSpec KernelSpec::linear() { return KernelSpec{Kind::linear, 1, 1.0, {}}; }

KernelSpec KernelSpec::polynomial(int degree) {
  KernelSpec s{Kind::polynomial, degree, 1.0, {}};
  s.validate();
  return s;
}

KernelSpec KernelSpec::gaussian(double variance) {
  KernelSpec s{Kind::gaussian, 1, variance, {}};
  s.validate();
  return s;
}

KernelSpec KernelSpec::multi(std::vector<std::pair<double, KernelSpec>> terms) {
  KernelSpec s{Kind::multi, 1, 1.0, std::move(terms)};
  s.validate();
  return s;
}

KernelSpec KernelSpec::gaussian_grid(double start, double step, int count) {
  std::vector<std::pair<double, KernelSpec>> terms;
  terms.reserve(count);
  for (int i = 0; i < count; ++i) {
    terms.emplace_back(1.0 / count, gaussian(start + step * i));
  }
  return multi(std::move(terms));
}

void KernelSpec::validate() const {
  switch (kind) {
    case Kind::linear:
      return;
    case Kind::polynomial:
      if (degree < 1) throw ConfigError("KernelSpec: polynomial degree must be >= 1");
      return;
    case Kind::gaussian:
      if (!(variance > 0.0)) throw ConfigError("KernelSpec: gaussian variance must be > 0");
      return;
    case Kind::multi:
      if (terms.empty()) throw ConfigError("KernelSpec: multi kernel needs terms");
      for (const auto& [w, sub] : terms) {
        if (!(w > 0.0)) throw ConfigError("KernelSpec: multi-kernel weights must be > 0");
        sub.validate();
      }
      return;
  }
}

nlohmann::json KernelSpec::to_json() const {
  nlohmann::json j;
  switch (kind) {
    case Kind::linear:
      j["kind"] = "linear";
      break;
    case Kind::polynomial:
      j["kind"] = "polynomial";
      j["degree"] = degree;
      break;
    case Kind::gaussian:
      j["kind"] = "gaussian";
      j["variance"] = variance;
      break;
    case Kind::multi: {
      j["kind"] = "multi";
      nlohmann::json arr = nlohmann::json::array();
      for (const auto& [w, sub] : terms) {
        arr.push_back({{"weight", w}, {"spec", sub.to_json()}});
      }
      j["terms"] = arr;
      break;
    }
  }
  return j;
}

KernelSpec KernelSpec::from_json(const nlohmann::json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "linear") return linear();
  if (kind == "polynomial") return polynomial(j.at("degree").get<int>());
  if (kind == "gaussian") return gaussian(j.at("variance").get<double>());
  if (kind == "multi") {
    if (j.contains("gaussian_grid")) {
      const auto& g = j.at("gaussian_grid");
      return gaussian_grid(g.at("start").get<double>(), g.at("step").get<double>(),
                           g.at("count").get<int>());
    }
    std::vector<std::pair<double, KernelSpec>> terms;
    for (const auto& t : j.at("terms")) {
      terms.emplace_back(t.at("weight").get<double>(), from_json(t.at("spec")));
    }
    return multi(std::move(terms));
  }
  throw ConfigError("KernelSpec: unknown kind '" + kind + "'");
}

double kernel_eval(const KernelSpec& spec, const Eigen::RowVectorXd& y,
                   const Eigen::RowVectorXd& y2) {
  if (y.size() != y2.size()) {
    std::ostringstream os;
    os << "kernel_eval: length mismatch " << y.size() << " vs " << y2.size();
    throw DimensionError(os.str());
  }
  switch (spec.kind) {
    case KernelSpec::Kind::linear:
      return y.dot(y2);
    case KernelSpec::Kind::polynomial:
      return std::pow(y.dot(y2) + 1.0, spec.degree);
    case KernelSpec::Kind::gaussian:
      return std::exp(-(y - y2).squaredNorm() / (2.0 * spec.variance));
    case KernelSpec::Kind::multi: {
      double sum = 0.0;
      for (const auto& [w, sub] : spec.terms) sum += w * kernel_eval(sub, y, y2);
      return sum;
    }
  }
  return 0.0;
}

KernelMatrix kernel_matrix(const KernelSpec& spec, const Eigen::MatrixXd& rows) {
  const Eigen::Index n = rows.rows();
  KernelMatrix k;
  k.matrix.resize(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i; j < n; ++j) {
      const double v = kernel_eval(spec, rows.row(i), rows.row(j));
      k.matrix(i, j) = v;
      k.matrix(j, i) = v;
    }
  }
  return k;
}

KernelMatrix diagonal_load(const KernelMatrix& k, const LoadPolicy& policy) {
  const Eigen::Index n = k.dim();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(k.matrix,
                                                     Eigen::EigenvaluesOnly);
  const double min_eig = eig.eigenvalues()(0);
  const double scale = k.matrix.trace() / static_cast<double>(n);
  if (min_eig >= policy.trigger_ratio * scale && min_eig > 0.0) {
    return k;  // already comfortably positive definite
  }
  // Load enough that the result's min eigenvalue is at least epsilon.
  const double epsilon = policy.epsilon_ratio * std::max(scale, 0.0);
  const double shift = epsilon + std::max(0.0, -min_eig);
  KernelMatrix out;
  out.matrix = k.matrix + shift * Eigen::MatrixXd::Identity(n, n);
  out.loaded = true;
  out.epsilon = shift;
  return out;
}

std::vector<std::pair<int, int>> sde_constrained_pairs(const Eigen::MatrixXd& rows,
                                                       int neighbors) {
  const int n = static_cast<int>(rows.rows());
  // Neighborhood of node v: v itself plus its `neighbors` nearest rows,
  // ties broken by lower node index.
  std::vector<std::vector<int>> hood(n);
  for (int v = 0; v < n; ++v) {
    std::vector<std::pair<double, int>> by_dist;
    by_dist.reserve(n - 1);
    for (int u = 0; u < n; ++u) {
      if (u == v) continue;
      by_dist.emplace_back((rows.row(v) - rows.row(u)).norm(), u);
    }
    std::sort(by_dist.begin(), by_dist.end());
    hood[v].push_back(v);
    for (int k = 0; k < neighbors; ++k) hood[v].push_back(by_dist[k].second);
  }
  std::vector<std::vector<bool>> shared(n, std::vector<bool>(n, false));
  for (int w = 0; w < n; ++w) {
    for (int a : hood[w]) {
      for (int b : hood[w]) {
        if (a < b) shared[a][b] = true;
      }
    }
  }
  std::vector<std::pair<int, int>> pairs;
  for (int a = 0; a < n; ++a) {
    for (int b = a + 1; b < n; ++b) {
      if (shared[a][b]) pairs.emplace_back(a, b);
    }
  }
  return pairs;
}

namespace {

bool pairs_graph_connected(int n, const std::vector<std::pair<int, int>>& pairs) {
  std::vector<std::vector<int>> adj(n);
  for (auto [a, b] : pairs) {
    adj[a].push_back(b);
    adj[b].push_back(a);
  }
  std::vector<bool> seen(n, false);
  std::queue<int> q;
  q.push(0);
  seen[0] = true;
  int count = 1;
  while (!q.empty()) {
    const int v = q.front();
    q.pop();
    for (int u : adj[v]) {
      if (!seen[u]) {
        seen[u] = true;
        ++count;
        q.push(u);
      }
    }
  }
  return count == n;
}

}  // namespace

KernelMatrix sde_learn(const Eigen::MatrixXd& rows, int neighbors,
                       const SdeOptions& options) {
  const int n = static_cast<int>(rows.rows());
  if (neighbors < 1 || neighbors >= n) {
    throw ConfigError("sde_learn: need 1 <= neighbors < number of rows");
  }
  const auto pairs = sde_constrained_pairs(rows, neighbors);
  if (!pairs_graph_connected(n, pairs)) {
    throw ConfigError(
        "sde_learn: neighborhood-sharing graph is disconnected; the trace "
        "objective is unbounded");
  }

  // Affine constraints A(K) = b: one centering row plus one isometry row per
  // constrained pair. A acts on the full n x n matrix.
  const int m = static_cast<int>(pairs.size()) + 1;
  Eigen::VectorXd b(m);
  b(0) = 0.0;  // centering
  for (int c = 0; c < static_cast<int>(pairs.size()); ++c) {
    const auto [i, j] = pairs[c];
    b(c + 1) = (rows.row(i) - rows.row(j)).squaredNorm();
  }
  const double scale = std::max(1.0, b.cwiseAbs().maxCoeff());

  auto apply_a = [&](const Eigen::MatrixXd& k) {
    Eigen::VectorXd out(m);
    out(0) = k.sum();
    for (int c = 0; c < static_cast<int>(pairs.size()); ++c) {
      const auto [i, j] = pairs[c];
      out(c + 1) = k(i, i) + k(j, j) - k(i, j) - k(j, i);
    }
    return out;
  };
  auto apply_at = [&](const Eigen::VectorXd& y) {
    Eigen::MatrixXd out = Eigen::MatrixXd::Constant(n, n, y(0));
    for (int c = 0; c < static_cast<int>(pairs.size()); ++c) {
      const auto [i, j] = pairs[c];
      out(i, i) += y(c + 1);
      out(j, j) += y(c + 1);
      out(i, j) -= y(c + 1);
      out(j, i) -= y(c + 1);
    }
    return out;
  };

  // Gram matrix of the constraint functionals (centering is orthogonal to
  // every isometry row; pair rows overlap only through shared nodes).
  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(m, m);
  gram(0, 0) = static_cast<double>(n) * n;
  for (int c = 0; c < static_cast<int>(pairs.size()); ++c) {
    for (int d = c; d < static_cast<int>(pairs.size()); ++d) {
      const auto [i, j] = pairs[c];
      const auto [k2, l] = pairs[d];
      double dot = 0.0;
      if (c == d) {
        dot = 4.0;
      } else {
        const int overlap = (i == k2) + (i == l) + (j == k2) + (j == l);
        dot = static_cast<double>(overlap);
      }
      gram(c + 1, d + 1) = dot;
      gram(d + 1, c + 1) = dot;
    }
  }
  Eigen::LDLT<Eigen::MatrixXd> gram_ldlt(gram);

  // ADMM with over-relaxation on the scale-normalized program:
  // maximize tr(K) over {affine} intersect {PSD}.
  const Eigen::VectorXd b_scaled = b / scale;
  auto constraint_ratio = [&](const Eigen::MatrixXd& cand) {
    const Eigen::VectorXd resid = apply_a(cand) - b;
    double worst = 0.0;
    for (int c = 0; c < m; ++c) {
      worst = std::max(worst, std::abs(resid(c)) / (1e-5 * (std::abs(b(c)) + 1.0)));
    }
    return worst;
  };
  auto project_affine_scaled = [&](const Eigen::MatrixXd& k) {
    const Eigen::VectorXd resid = apply_a(k) - b_scaled;
    return Eigen::MatrixXd(k - apply_at(gram_ldlt.solve(resid)));
  };

  double rho = 1.0;
  Eigen::MatrixXd z = Eigen::MatrixXd::Zero(n, n);
  Eigen::MatrixXd u = Eigen::MatrixXd::Zero(n, n);
  Eigen::MatrixXd k = z;
  const double relax = 1.6;
  double primal = 0.0;
  double dual = 0.0;
  bool converged = false;
  for (int it = 0; it < options.max_iterations; ++it) {
    k = project_affine_scaled(z - u + Eigen::MatrixXd::Identity(n, n) / rho);
    const Eigen::MatrixXd k_hat = relax * k + (1.0 - relax) * z;
    const Eigen::MatrixXd z_prev = z;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(symmetrize(k_hat + u));
    const Eigen::VectorXd lam = eig.eigenvalues().cwiseMax(0.0);
    z = symmetrize(eig.eigenvectors() * lam.asDiagonal() *
                   eig.eigenvectors().transpose());
    u += k_hat - z;
    primal = (k - z).norm();
    dual = rho * (z - z_prev).norm();
    if (primal < options.tolerance && dual < options.tolerance) {
      converged = true;
      break;
    }
    if (it % 25 == 24) {
      // accept once the PSD iterate meets the program's constraint
      // tolerances with margin and the splitting has stabilized
      if (primal < 1e-6 * n && dual < 1e-5 &&
          constraint_ratio(scale * z) < 0.5) {
        converged = true;
        break;
      }
      if (primal > 10.0 * dual) {
        rho *= 2.0;
        u /= 2.0;
      } else if (dual > 10.0 * primal) {
        rho /= 2.0;
        u *= 2.0;
      }
    }
  }

  // Report the PSD iterate; check the affine constraints on it.
  const Eigen::MatrixXd result = scale * z;
  const double worst = constraint_ratio(result);
  if (!converged || worst > 1.0) {
    std::ostringstream os;
    os << "sde_learn: solver did not meet constraint tolerances after "
       << options.max_iterations << " iterations; worst residual ratio " << worst
       << " (primal " << primal << ", dual " << dual << ")";
    throw SolverError(os.str(), worst);
  }
  KernelMatrix out;
  out.matrix = result;
  return out;
}

}  // namespace geoclust
