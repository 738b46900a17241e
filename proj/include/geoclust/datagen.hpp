#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <limits>
#include <string>
#include <utility>
#include <vector>

namespace geoclust {

// One network state: how long it lasts and which nodes share a task.
struct StateSpec {
  int duration = 0;                      // samples
  std::vector<std::vector<int>> groups;  // partition of node indices, <= 3 groups
};

struct StateSchedule {
  int nodes = 0;
  std::vector<StateSpec> states;

  int total_samples() const;
  void validate() const;
};

struct BlockStateOptions {
  double theta0 = 0.0;
  // AR phase increment; NaN selects the default 2*pi/T.
  double delta_theta = std::numeric_limits<double>::quiet_NaN();
  // weights of the (task-shared, node-unique, AR) components
  std::array<double, 3> mix_weights{0.6, 0.2, 0.2};
  bool apply_hrf = true;
  double hrf_tr = 1.0;  // seconds per sample for the hemodynamic kernel
};

// Block-state network series: per node a mix of a task-shared signal, a
// node-unique signal, and an AR(1) process with time-varying coefficient
// cos(theta_t), optionally filtered by a double-gamma hemodynamic response.
// Returns the N x T series and the per-sample state labels (1-based).
std::pair<Eigen::MatrixXd, std::vector<int>> gen_block_state_series(
    const StateSchedule& schedule, const BlockStateOptions& options, std::uint64_t seed);

// Sampled double-gamma hemodynamic response (response peak 6 s, undershoot
// peak 16 s, ratio 1/6), normalized to unit peak.
Eigen::VectorXd hemodynamic_kernel(double tr_seconds, double duration_seconds = 32.0);

struct WilsonCowanParams {
  double alpha = 1.0 / 8.0;
  double gamma1 = 16.0;
  double gamma2 = 12.0;
  double gamma3 = 15.0;
  double gamma4 = 3.0;
  double gamma5 = 1.1;
  double sigma2 = 1e-10;  // noise variance
  double zeta_x = 1.3;
  double theta_x = 4.0;
  double zeta_y = 2.0;
  double theta_y = 3.7;
  Eigen::MatrixXd coupling;          // symmetric nonnegative weighted adjacency
  Eigen::MatrixXi delays;            // propagation delays in samples
  Eigen::VectorXd external_input;    // mu; default 1.25 on node 0
  double dt = 0.001;                 // seconds per sample (model time in ms)
  double initial_x = 0.1;
  double initial_y = 0.1;

  void validate() const;
  static WilsonCowanParams defaults(int nodes);
};

// Sigmoid f_z(q) = 1/(1+exp(-zeta(q-theta))) - 1/(1+exp(zeta*theta)).
double wilson_cowan_sigmoid(double q, double zeta, double theta);

// Heun (predictor-corrector) integration of the delayed Wilson-Cowan network;
// returns the excitatory firing rates, nodes x samples. Noise is drawn once
// per step and reused in both stages; pre-history reads the initial value.
Eigen::MatrixXd gen_wilson_cowan(const WilsonCowanParams& params, int samples,
                                 std::uint64_t seed);

// Adds white Gaussian noise scaled so the realized SNR equals snr_db;
// a non-finite snr_db returns the input unchanged.
Eigen::MatrixXd add_noise_snr(const Eigen::MatrixXd& series, double snr_db,
                              std::uint64_t seed);

// Reads a weighted adjacency matrix (CSV) and an optional distance matrix
// (CSV, meters) converted to integated-sample delays at the given propagation
// speed and step. Validates symmetry, nonnegativity, and squareness.
std::pair<Eigen::MatrixXd, Eigen::MatrixXi> load_adjacency(
    const std::string& adjacency_csv, const std::string& distances_csv = "",
    double speed_m_per_s = 8.0, double dt_seconds = 0.001);

// Derives (B, D) from in-memory matrices under the same validation rules.
std::pair<Eigen::MatrixXd, Eigen::MatrixXi> adjacency_from_matrices(
    const Eigen::MatrixXd& adjacency, const Eigen::MatrixXd& distances_m,
    double speed_m_per_s, double dt_seconds);

// Deterministic community-structured test networks: block adjacency with
// intra/inter weights (normalized to unit max row sum) and line-layout
// distances in meters.
Eigen::MatrixXd community_adjacency(const std::vector<int>& sizes, double intra,
                                    double inter);
Eigen::MatrixXd community_distances(const std::vector<int>& sizes, double spacing_mm,
                                    double width_mm);

}  // namespace geoclust
