#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "geoclust/clustering.hpp"
#include "geoclust/datagen.hpp"
#include "geoclust/features.hpp"

namespace geoclust {

inline constexpr const char* kConfigSchemaVersion = "1";

struct BlockStateGenerator {
  StateSchedule schedule;
  BlockStateOptions options;
};

struct WilsonCowanSubject {
  // Either CSV inputs or a synthetic community layout.
  std::string adjacency_csv;
  std::string distances_csv;
  std::vector<int> community_sizes;
  double intra = 1.0;
  double inter = 0.05;
  double spacing_mm = 40.0;
  double width_mm = 10.0;
};

struct WilsonCowanGenerator {
  int samples = 1000;
  WilsonCowanParams params;  // coupling/delays filled per subject
  std::vector<WilsonCowanSubject> subjects;
  double speed_m_per_s = 8.0;
  int stimulus_node = 0;
  double stimulus = 1.25;
};

using GeneratorSpec = std::variant<BlockStateGenerator, WilsonCowanGenerator>;

struct ClusteringSpec {
  std::vector<std::string> methods{"gct", "smc", "scr", "kmeans"};
  GCTConfig gct;
  double scr_sigma = 0.0;  // <= 0 selects the median heuristic
};

struct ExperimentConfig {
  std::string name = "experiment";
  GeneratorSpec generator;
  WindowConfig window;
  KernelMethod kernel = KernelMethod::fixed(KernelSpec::linear());
  std::vector<std::string> variants{"kPC"};
  ClusteringSpec clustering;
  int realizations = 1;
  double snr_db = 10.0;  // infinity = no noise
  std::uint64_t seed = 0;

  static ExperimentConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;  // canonical form; hash/round-trip source
  std::string hash() const;
};

struct ResultRow {
  std::string variant;
  std::string method;
  double mean_accuracy = 0.0;
  double std_accuracy = 0.0;
  int realizations = 0;  // successful ones
  double wall_ms = 0.0;
  std::vector<double> per_realization;  // NaN marks a failed realization
};

struct ResultTable {
  std::vector<ResultRow> rows;
  std::string config_hash;
};

// One generated (series, per-sample labels) pair; Wilson-Cowan experiments
// produce one bundle per subject.
struct SeriesRealization {
  Eigen::MatrixXd series;
  std::vector<int> labels;
};

// Seed derivation (documented contract): realization i uses
// Rng::derive(master, 1000 + i); within a realization, generation uses
// stream 10 + subject, noise 100 + subject, clustering 200 + 10*variant + method.
std::uint64_t realization_seed(std::uint64_t master, int realization);

std::vector<SeriesRealization> generate_realization(const ExperimentConfig& cfg,
                                                    int realization);

// Majority label of each window; ties go to the state met earlier in the window.
std::vector<int> window_labels(const std::vector<int>& sample_labels, int tau_w);

// Extracts and pools the feature sequence for one variant ("OB" or SPD tags).
FeatureSequence extract_variant(const ExperimentConfig& cfg,
                                const std::vector<SeriesRealization>& bundles,
                                const std::string& variant);

ClusterLabels cluster_features(const ExperimentConfig& cfg, const FeatureSequence& seq,
                               const std::string& method, std::uint64_t seed);

std::uint64_t clustering_seed(const ExperimentConfig& cfg, int realization,
                              const std::string& variant, const std::string& method);

// Full grid: realizations x variants x methods, realization-level parallelism.
ResultTable run_pipeline(const ExperimentConfig& cfg, int jobs = 1,
                         std::ostream* log = nullptr);

// results.csv + realizations.csv (deterministic) and timing.csv +
// summary.json (wall-clock metadata).
void emit_results(const ResultTable& table, const std::filesystem::path& dir);
ResultTable parse_results(const std::filesystem::path& dir);

}  // namespace geoclust
