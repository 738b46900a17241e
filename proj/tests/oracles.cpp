#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "geoclust/linalg.hpp"
#include "geoclust/manifold.hpp"

namespace geoclust::oracles {

namespace {

double sparse_objective(const Eigen::MatrixXd& v, const Eigen::VectorXd& w,
                        const Eigen::VectorXd& a) {
  return (v * a).squaredNorm() + w.dot(a.cwiseAbs());
}

}  // namespace

double sparse_code_reference(const Eigen::MatrixXd& tangents,
                             const Eigen::VectorXd& weights,
                             Eigen::VectorXd* solution) {
  const Eigen::Index p = tangents.cols();
  const Eigen::MatrixXd gram = tangents.transpose() * tangents;
  Eigen::VectorXd a = Eigen::VectorXd::Zero(p);
  a(0) = 1.0;
  double f = sparse_objective(tangents, weights, a);

  // One exact move along e_i - e_j: objective restricted to delta is
  // q2*delta^2 + q1*delta + w_i|a_i+delta| + w_j|a_j-delta| + const,
  // piecewise quadratic with breakpoints at -a_i and a_j.
  auto best_move = [&](Eigen::Index i, Eigen::Index j, double& delta_out) {
    const double q2 = gram(i, i) - 2.0 * gram(i, j) + gram(j, j);
    const Eigen::VectorXd ga = gram * a;
    const double q1 = 2.0 * (ga(i) - ga(j));
    std::vector<double> knots{-a(i), a(j)};
    std::sort(knots.begin(), knots.end());
    double best_f = 0.0;
    double best_d = 0.0;
    auto consider = [&](double d) {
      const double val = q2 * d * d + q1 * d + weights(i) * std::abs(a(i) + d) +
                         weights(j) * std::abs(a(j) - d) - weights(i) * std::abs(a(i)) -
                         weights(j) * std::abs(a(j));
      if (val < best_f) {
        best_f = val;
        best_d = d;
      }
    };
    // candidate minima: interval interiors (stationary points of each smooth
    // piece) and the breakpoints themselves
    for (double k : knots) consider(k);
    const double lo[3] = {-1e30, knots[0], knots[1]};
    const double hi[3] = {knots[0], knots[1], 1e30};
    for (int piece = 0; piece < 3; ++piece) {
      // signs of a_i + d and a_j - d are constant on the open piece
      const double mid = std::clamp(0.5 * (std::max(lo[piece], -1e6) +
                                           std::min(hi[piece], 1e6)),
                                    -1e6, 1e6);
      const double si = (a(i) + mid) >= 0.0 ? 1.0 : -1.0;
      const double sj = (a(j) - mid) >= 0.0 ? 1.0 : -1.0;
      if (q2 <= 0.0) continue;
      const double slope_linear = q1 + weights(i) * si - weights(j) * sj;
      double d = -slope_linear / (2.0 * q2);
      d = std::clamp(d, lo[piece], hi[piece]);
      consider(d);
    }
    delta_out = best_d;
    return best_f;
  };

  for (int sweep = 0; sweep < 200000; ++sweep) {
    double improvement = 0.0;
    for (Eigen::Index i = 0; i < p; ++i) {
      for (Eigen::Index j = 0; j < p; ++j) {
        if (i == j) continue;
        double delta = 0.0;
        const double gain = best_move(i, j, delta);
        if (gain < -1e-16 * (1.0 + std::abs(f))) {
          a(i) += delta;
          a(j) -= delta;
          f += gain;
          improvement += -gain;
        }
      }
    }
    if (improvement < 1e-14 * (1.0 + std::abs(f))) break;
  }
  f = sparse_objective(tangents, weights, a);
  if (solution != nullptr) *solution = a;
  return f;
}

Eigen::MatrixXd spd_log_series(const Eigen::MatrixXd& a) {
  const Eigen::Index n = a.rows();
  const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(n, n);
  Eigen::MatrixXd x = a;
  int roots = 0;
  // Denman-Beavers square roots until x is close to the identity.
  while ((x - eye).norm() > 0.25 && roots < 60) {
    Eigen::MatrixXd y = x;
    Eigen::MatrixXd z = eye;
    for (int it = 0; it < 60; ++it) {
      const Eigen::MatrixXd y_next = 0.5 * (y + z.inverse());
      const Eigen::MatrixXd z_next = 0.5 * (z + y.inverse());
      if ((y_next - y).norm() < 1e-15 * std::max(1.0, y.norm())) {
        y = y_next;
        break;
      }
      y = y_next;
      z = z_next;
    }
    x = y;
    ++roots;
  }
  // Gregory series: log(x) = 2 * sum_j (1/(2j+1)) s^(2j+1), s = (x-I)(x+I)^-1.
  const Eigen::MatrixXd s = (x - eye) * (x + eye).inverse();
  Eigen::MatrixXd term = s;
  const Eigen::MatrixXd s2 = s * s;
  Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(n, n);
  for (int j = 0; j < 200; ++j) {
    const Eigen::MatrixXd contrib = term / (2.0 * j + 1.0);
    sum += contrib;
    if (contrib.norm() < 1e-18) break;
    term = term * s2;
  }
  return std::ldexp(2.0, roots) * sum;
}

Eigen::MatrixXd centered_gram_from_distances(const Eigen::MatrixXd& sq_dist) {
  const Eigen::Index n = sq_dist.rows();
  const Eigen::MatrixXd j =
      Eigen::MatrixXd::Identity(n, n) - Eigen::MatrixXd::Constant(n, n, 1.0 / n);
  return -0.5 * j * sq_dist * j;
}

Eigen::MatrixXd centered_gram(const Eigen::MatrixXd& rows) {
  const Eigen::MatrixXd centered = rows.rowwise() - rows.colwise().mean();
  return centered * centered.transpose();
}

double residual_partial_correlation(const Eigen::MatrixXd& rows, int i, int j) {
  const Eigen::Index n = rows.rows();
  Eigen::MatrixXd rest(n - 2, rows.cols());
  Eigen::Index r = 0;
  for (Eigen::Index v = 0; v < n; ++v) {
    if (v != i && v != j) rest.row(r++) = rows.row(v);
  }
  auto residual = [&](Eigen::Index l) {
    const Eigen::MatrixXd at = rest.transpose();  // tau x (n-2)
    const Eigen::VectorXd y = rows.row(l).transpose();
    const Eigen::VectorXd beta = at.colPivHouseholderQr().solve(y);
    return Eigen::VectorXd(y - at * beta);
  };
  const Eigen::VectorXd ri = residual(i);
  const Eigen::VectorXd rj = residual(j);
  const double ni = ri.norm();
  const double nj = rj.norm();
  if (ni == 0.0 || nj == 0.0) return 0.0;
  return ri.dot(rj) / (ni * nj);
}

StateSpace random_state_space(int nodes, int order, std::uint64_t seed) {
  Rng rng(seed);
  StateSpace ss;
  // Marginally stable block-rotation transition keeps the trajectory excited.
  ss.transition = Eigen::MatrixXd::Zero(order, order);
  int k = 0;
  int block = 0;
  while (k + 1 < order) {
    const double angle = 0.35 + 0.45 * block;
    ss.transition(k, k) = std::cos(angle);
    ss.transition(k, k + 1) = -std::sin(angle);
    ss.transition(k + 1, k) = std::sin(angle);
    ss.transition(k + 1, k + 1) = std::cos(angle);
    k += 2;
    ++block;
  }
  if (k < order) ss.transition(k, k) = -0.95;
  ss.observation = gaussian_matrix(nodes, order, rng);
  return ss;
}

Eigen::MatrixXd simulate_noiseless(const StateSpace& ss, int samples,
                                   std::uint64_t seed) {
  Rng rng(seed);
  const Eigen::Index order = ss.transition.rows();
  Eigen::VectorXd z = gaussian_matrix(order, 1, rng);
  z /= z.norm();
  Eigen::MatrixXd y(ss.observation.rows(), samples);
  for (int t = 0; t < samples; ++t) {
    z = ss.transition * z;
    y.col(t) = ss.observation * z;
  }
  return y;
}

Eigen::MatrixXd observability_matrix(const StateSpace& ss, int order_m) {
  const Eigen::Index n = ss.observation.rows();
  const Eigen::Index r = ss.transition.rows();
  Eigen::MatrixXd obs(order_m * n, r);
  Eigen::MatrixXd power = Eigen::MatrixXd::Identity(r, r);
  for (int k = 0; k < order_m; ++k) {
    obs.middleRows(k * n, n) = ss.observation * power;
    power = ss.transition * power;
  }
  return obs;
}

double permutation_accuracy(const std::vector<int>& predicted,
                            const std::vector<int>& truth) {
  std::vector<int> pred_vals(predicted), truth_vals(truth);
  std::sort(pred_vals.begin(), pred_vals.end());
  pred_vals.erase(std::unique(pred_vals.begin(), pred_vals.end()), pred_vals.end());
  std::sort(truth_vals.begin(), truth_vals.end());
  truth_vals.erase(std::unique(truth_vals.begin(), truth_vals.end()), truth_vals.end());
  std::vector<int> target(std::max(pred_vals.size(), truth_vals.size()));
  std::iota(target.begin(), target.end(), 0);
  std::vector<int> perm = target;
  double best = 0.0;
  do {
    int agree = 0;
    for (std::size_t t = 0; t < predicted.size(); ++t) {
      const auto pi = std::find(pred_vals.begin(), pred_vals.end(), predicted[t]) -
                      pred_vals.begin();
      const auto ti = std::find(truth_vals.begin(), truth_vals.end(), truth[t]) -
                      truth_vals.begin();
      if (static_cast<std::size_t>(pi) < perm.size() &&
          perm[pi] == static_cast<int>(ti)) {
        ++agree;
      }
    }
    best = std::max(best, static_cast<double>(agree) / predicted.size());
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

std::pair<FeatureSequence, std::vector<int>> crossing_curves_gr41(
    int points_per_curve, double half_length, std::uint64_t seed) {
  Rng rng(seed);
  const GrassmannPoint center = GrassmannPoint::random(4, 1, rng);
  // two orthogonal horizontal directions at the center
  Eigen::MatrixXd dir1 = gaussian_matrix(4, 1, rng);
  dir1 -= center.basis() * (center.basis().transpose() * dir1);
  dir1 /= dir1.norm();
  Eigen::MatrixXd dir2 = gaussian_matrix(4, 1, rng);
  dir2 -= center.basis() * (center.basis().transpose() * dir2);
  dir2 -= dir1 * (dir1.transpose() * dir2);
  dir2 /= dir2.norm();

  FeatureSequence seq;
  seq.tag = ManifoldTag{ManifoldTag::Type::grassmann, 4, 1};
  std::vector<int> labels;
  for (int curve = 0; curve < 2; ++curve) {
    const Eigen::MatrixXd& dir = curve == 0 ? dir1 : dir2;
    // unequal extents and jittered grids keep the two sampled arms from being
    // mirror images; neither grid puts a sample exactly on the intersection
    // (generic-position sampling of two crossing trajectories)
    const double extent = half_length * (curve == 0 ? 0.9 : 1.15);
    const int half = points_per_curve / 2;
    const double spacing = extent / half;
    for (int k = 0; k < points_per_curve; ++k) {
      const int slot = k - half;
      const double offset = (slot >= 0 ? 1.5 : -1.5) * spacing;
      const double s =
          offset + slot * spacing + 0.2 * spacing * rng.uniform(-1.0, 1.0);
      seq.grassmann_points.push_back(
          grassmann_exp(center, GrassmannTangent{center, s * dir}));
      seq.window_starts.push_back(curve * points_per_curve + k);
      labels.push_back(curve + 1);
    }
  }
  seq.labels = labels;
  return {seq, labels};
}

}  // namespace geoclust::oracles
