#include "geoclust/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "geoclust/errors.hpp"
#include "geoclust/io.hpp"
#include "geoclust/rng.hpp"

namespace geoclust {

int StateSchedule::total_samples() const {
  int total = 0;
  for (const auto& s : states) total += s.duration;
  return total;
}

void StateSchedule::validate() const {
  if (nodes < 1) throw ConfigError("StateSchedule: need at least one node");
  if (states.empty()) throw ConfigError("StateSchedule: no states");
  for (std::size_t s = 0; s < states.size(); ++s) {
    const auto& st = states[s];
    if (st.duration <= 0) throw ConfigError("StateSchedule: durations must be positive");
    if (st.groups.empty() || st.groups.size() > 3) {
      throw ConfigError("StateSchedule: each state needs 1..3 task groups");
    }
    std::vector<bool> covered(nodes, false);
    for (const auto& g : st.groups) {
      for (int v : g) {
        if (v < 0 || v >= nodes) throw ConfigError("StateSchedule: node index out of range");
        if (covered[v]) throw ConfigError("StateSchedule: node assigned twice in a state");
        covered[v] = true;
      }
    }
    if (!std::all_of(covered.begin(), covered.end(), [](bool b) { return b; })) {
      std::ostringstream os;
      os << "StateSchedule: state " << s << " does not cover all nodes";
      throw ConfigError(os.str());
    }
  }
}

Eigen::VectorXd hemodynamic_kernel(double tr_seconds, double duration_seconds) {
  if (!(tr_seconds > 0.0)) throw ConfigError("hemodynamic_kernel: TR must be positive");
  const int len = static_cast<int>(std::ceil(duration_seconds / tr_seconds)) + 1;
  // gamma pdfs with unit rate; shapes 7 and 17 put the modes at 6 s and 16 s
  auto gamma_pdf = [](double t, double shape) {
    if (t <= 0.0) return 0.0;
    return std::exp((shape - 1.0) * std::log(t) - t - std::lgamma(shape));
  };
  Eigen::VectorXd h(len);
  for (int k = 0; k < len; ++k) {
    const double t = k * tr_seconds;
    h(k) = gamma_pdf(t, 7.0) - gamma_pdf(t, 17.0) / 6.0;
  }
  const double peak = h.cwiseAbs().maxCoeff();
  if (peak > 0.0) h /= peak;
  return h;
}

namespace {

Eigen::MatrixXd convolve_rows(const Eigen::MatrixXd& x, const Eigen::VectorXd& kernel) {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(x.rows(), x.cols());
  for (Eigen::Index t = 0; t < x.cols(); ++t) {
    const Eigen::Index kmax = std::min<Eigen::Index>(kernel.size() - 1, t);
    for (Eigen::Index k = 0; k <= kmax; ++k) {
      out.col(t) += kernel(k) * x.col(t - k);
    }
  }
  return out;
}

}  // namespace

std::pair<Eigen::MatrixXd, std::vector<int>> gen_block_state_series(
    const StateSchedule& schedule, const BlockStateOptions& options, std::uint64_t seed) {
  schedule.validate();
  const int n = schedule.nodes;
  const int total = schedule.total_samples();
  const double dtheta =
      std::isnan(options.delta_theta) ? 2.0 * 3.14159265358979323846 / total
                                      : options.delta_theta;

  Rng rng_task(Rng::derive(seed, 1));
  Rng rng_unique(Rng::derive(seed, 2));
  Rng rng_ar(Rng::derive(seed, 3));

  Eigen::MatrixXd series(n, total);
  std::vector<int> labels(total, 0);

  // Task-shared components: one white signal per (state, group), shared
  // verbatim by every node of the group.
  Eigen::MatrixXd task = Eigen::MatrixXd::Zero(n, total);
  int t0 = 0;
  for (std::size_t s = 0; s < schedule.states.size(); ++s) {
    const auto& st = schedule.states[s];
    for (const auto& group : st.groups) {
      for (int t = 0; t < st.duration; ++t) {
        const double v = rng_task.normal();
        for (int node : group) task(node, t0 + t) = v;
      }
    }
    for (int t = 0; t < st.duration; ++t) labels[t0 + t] = static_cast<int>(s) + 1;
    t0 += st.duration;
  }

  Eigen::MatrixXd unique(n, total);
  for (int v = 0; v < n; ++v) {
    for (int t = 0; t < total; ++t) unique(v, t) = rng_unique.normal();
  }

  // AR(1) with time-varying coefficient cos(theta_t); per-node innovations.
  Eigen::MatrixXd ar(n, total);
  for (int v = 0; v < n; ++v) {
    double theta = options.theta0;
    double prev = rng_ar.normal();
    for (int t = 0; t < total; ++t) {
      theta += dtheta;
      const double c = std::cos(theta);
      const double innov = rng_ar.normal();
      prev = c * prev + std::sqrt(std::max(0.0, 1.0 - c * c)) * innov;
      ar(v, t) = prev;
    }
  }

  series = options.mix_weights[0] * task + options.mix_weights[1] * unique +
           options.mix_weights[2] * ar;
  if (options.apply_hrf) {
    series = convolve_rows(series, hemodynamic_kernel(options.hrf_tr));
  }
  return {std::move(series), std::move(labels)};
}

void WilsonCowanParams::validate() const {
  const Eigen::Index n = coupling.rows();
  if (n == 0 || coupling.cols() != n) {
    throw ConfigError("WilsonCowanParams: coupling matrix must be square and non-empty");
  }
  if ((coupling - coupling.transpose()).cwiseAbs().maxCoeff() > 1e-8) {
    throw ConfigError("WilsonCowanParams: coupling matrix must be symmetric");
  }
  if (coupling.minCoeff() < 0.0) {
    throw ConfigError("WilsonCowanParams: coupling weights must be nonnegative");
  }
  if (delays.rows() != n || delays.cols() != n || delays.minCoeff() < 0) {
    throw ConfigError("WilsonCowanParams: delays must be a nonnegative N x N matrix");
  }
  if (external_input.size() != n) {
    throw ConfigError("WilsonCowanParams: external input length must match node count");
  }
  if (sigma2 < 0.0 || dt <= 0.0) {
    throw ConfigError("WilsonCowanParams: need sigma2 >= 0 and dt > 0");
  }
}

WilsonCowanParams WilsonCowanParams::defaults(int nodes) {
  WilsonCowanParams p;
  p.coupling = Eigen::MatrixXd::Zero(nodes, nodes);
  p.delays = Eigen::MatrixXi::Zero(nodes, nodes);
  p.external_input = Eigen::VectorXd::Zero(nodes);
  if (nodes > 0) p.external_input(0) = 1.25;
  return p;
}

double wilson_cowan_sigmoid(double q, double zeta, double theta) {
  return 1.0 / (1.0 + std::exp(-zeta * (q - theta))) -
         1.0 / (1.0 + std::exp(zeta * theta));
}

Eigen::MatrixXd gen_wilson_cowan(const WilsonCowanParams& params, int samples,
                                 std::uint64_t seed) {
  params.validate();
  if (samples < 1) throw ConfigError("gen_wilson_cowan: need at least one sample");
  const int n = static_cast<int>(params.coupling.rows());
  const double h = params.dt * 1000.0;  // model time runs in milliseconds
  const double sigma = std::sqrt(params.sigma2);
  Rng rng(seed);

  // Full excitatory history so arbitrary per-pair delays read exactly.
  Eigen::MatrixXd hist(n, samples + 1);
  hist.col(0).setConstant(params.initial_y);
  Eigen::VectorXd x = Eigen::VectorXd::Constant(n, params.initial_x);
  Eigen::VectorXd y = Eigen::VectorXd::Constant(n, params.initial_y);

  Eigen::VectorXd eta_y(n), eta_x(n);
  Eigen::VectorXd fy(n), fx(n), fy2(n), fx2(n);
  for (long t = 0; t < samples; ++t) {
    for (int v = 0; v < n; ++v) {
      eta_y(v) = sigma * rng.normal();
      eta_x(v) = sigma * rng.normal();
    }
    // `when` is the virtual time of the stage; the corrector stage at t+1
    // reads the not-yet-stored sample from the predictor state `ahead`.
    auto delayed = [&](int node, long when, const Eigen::VectorXd* ahead) -> double {
      if (when <= 0) return params.initial_y;
      if (when > t) return ahead != nullptr ? (*ahead)(node) : y(node);
      return hist(node, when);
    };
    auto rhs = [&](const Eigen::VectorXd& xs, const Eigen::VectorXd& ys, long when,
                   const Eigen::VectorXd* ahead, Eigen::VectorXd& dx,
                   Eigen::VectorXd& dy) {
      for (int v = 0; v < n; ++v) {
        double couple = 0.0;
        for (int u = 0; u < n; ++u) {
          const double b = params.coupling(v, u);
          if (b == 0.0) continue;
          couple += b * delayed(u, when - params.delays(v, u), ahead);
        }
        const double qy = params.gamma1 * ys(v) - params.gamma2 * xs(v) +
                          params.gamma5 * couple + params.external_input(v);
        dy(v) = -params.alpha * ys(v) + eta_y(v) +
                (0.9945 - ys(v)) / 8.0 *
                    wilson_cowan_sigmoid(qy, params.zeta_y, params.theta_y);
        const double qx = params.gamma3 * ys(v) - params.gamma4 * xs(v);
        dx(v) = -params.alpha * xs(v) + eta_x(v) +
                (0.9994 - xs(v)) / 8.0 *
                    wilson_cowan_sigmoid(qx, params.zeta_x, params.theta_x);
      }
    };
    rhs(x, y, t, nullptr, fx, fy);
    const Eigen::VectorXd x_pred = x + h * fx;
    const Eigen::VectorXd y_pred = y + h * fy;
    rhs(x_pred, y_pred, t + 1, &y_pred, fx2, fy2);
    x += 0.5 * h * (fx + fx2);
    y += 0.5 * h * (fy + fy2);
    if (!x.allFinite() || !y.allFinite()) {
      throw DivergenceError("gen_wilson_cowan: non-finite state", t + 1);
    }
    hist.col(t + 1) = y;
  }
  return hist.rightCols(samples);
}

Eigen::MatrixXd add_noise_snr(const Eigen::MatrixXd& series, double snr_db,
                              std::uint64_t seed) {
  if (!std::isfinite(snr_db)) return series;
  const double signal_power = series.squaredNorm() / series.size();
  if (signal_power <= 0.0) throw ConfigError("add_noise_snr: zero-power input");
  Rng rng(seed);
  Eigen::MatrixXd noise(series.rows(), series.cols());
  for (Eigen::Index i = 0; i < series.rows(); ++i) {
    for (Eigen::Index j = 0; j < series.cols(); ++j) noise(i, j) = rng.normal();
  }
  const double realized = noise.squaredNorm() / noise.size();
  const double target = signal_power / std::pow(10.0, snr_db / 10.0);
  noise *= std::sqrt(target / realized);
  return series + noise;
}

std::pair<Eigen::MatrixXd, Eigen::MatrixXi> adjacency_from_matrices(
    const Eigen::MatrixXd& adjacency, const Eigen::MatrixXd& distances_m,
    double speed_m_per_s, double dt_seconds) {
  const Eigen::Index n = adjacency.rows();
  if (n == 0 || adjacency.cols() != n) {
    throw ConfigError("load_adjacency: adjacency matrix must be square");
  }
  if ((adjacency - adjacency.transpose()).cwiseAbs().maxCoeff() > 1e-8) {
    throw ConfigError("load_adjacency: adjacency matrix is asymmetric");
  }
  if (adjacency.minCoeff() < 0.0) {
    throw ConfigError("load_adjacency: adjacency weights must be nonnegative");
  }
  Eigen::MatrixXi delays = Eigen::MatrixXi::Zero(n, n);
  if (distances_m.size() > 0) {
    if (distances_m.rows() != n || distances_m.cols() != n) {
      throw ConfigError("load_adjacency: distance matrix shape mismatch");
    }
    if (distances_m.minCoeff() < 0.0) {
      throw ConfigError("load_adjacency: distances must be nonnegative");
    }
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < n; ++j) {
        delays(i, j) = static_cast<int>(
            std::lround(distances_m(i, j) / (speed_m_per_s * dt_seconds)));
      }
    }
  }
  return {adjacency, delays};
}

std::pair<Eigen::MatrixXd, Eigen::MatrixXi> load_adjacency(
    const std::string& adjacency_csv, const std::string& distances_csv,
    double speed_m_per_s, double dt_seconds) {
  const Eigen::MatrixXd b = read_csv_matrix(adjacency_csv);
  Eigen::MatrixXd dist;
  if (!distances_csv.empty()) dist = read_csv_matrix(distances_csv);
  return adjacency_from_matrices(b, dist, speed_m_per_s, dt_seconds);
}

Eigen::MatrixXd community_adjacency(const std::vector<int>& sizes, double intra,
                                    double inter) {
  int n = 0;
  for (int s : sizes) n += s;
  Eigen::MatrixXd b(n, n);
  std::vector<int> comm(n);
  int idx = 0;
  for (std::size_t c = 0; c < sizes.size(); ++c) {
    for (int k = 0; k < sizes[c]; ++k) comm[idx++] = static_cast<int>(c);
  }
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      b(i, j) = (i == j) ? 0.0 : (comm[i] == comm[j] ? intra : inter);
    }
  }
  const double max_row = b.rowwise().sum().maxCoeff();
  if (max_row > 0.0) b /= max_row;
  return b;
}

Eigen::MatrixXd community_distances(const std::vector<int>& sizes, double spacing_mm,
                                    double width_mm) {
  int n = 0;
  for (int s : sizes) n += s;
  std::vector<double> pos(n);
  int idx = 0;
  for (std::size_t c = 0; c < sizes.size(); ++c) {
    for (int k = 0; k < sizes[c]; ++k) {
      const double offset =
          sizes[c] > 1 ? (static_cast<double>(k) / (sizes[c] - 1) - 0.5) * width_mm : 0.0;
      pos[idx++] = static_cast<double>(c) * spacing_mm + offset;
    }
  }
  Eigen::MatrixXd d(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) d(i, j) = std::abs(pos[i] - pos[j]) * 1e-3;  // meters
  }
  return d;
}

}  // namespace geoclust
