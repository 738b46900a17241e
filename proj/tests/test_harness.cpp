#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "geoclust/errors.hpp"
#include "geoclust/harness.hpp"
#include "geoclust/io.hpp"

using namespace geoclust;
namespace fs = std::filesystem;

namespace {

nlohmann::json tiny_config() {
  return nlohmann::json::parse(R"({
    "name": "tiny",
    "seed": 111,
    "realizations": 2,
    "snr_db": 10.0,
    "generator": {
      "type": "block-state",
      "nodes": 6,
      "states": [
        {"duration": 60, "groups": [[0,1,2],[3,4,5]]},
        {"duration": 60, "groups": [[0,1,2,3,4,5]]}
      ],
      "hrf": "none"
    },
    "window": {"tau_w": 24, "m": 2, "p": 1, "rho": 2, "tau_f": 10, "tau_b": 10},
    "kernel": {"kind": "linear"},
    "variants": ["kPC", "OB"],
    "clustering": {"methods": ["scr", "kmeans"], "clusters": 2, "nn": 6}
  })");
}

}  // namespace

TEST_CASE("config json round trip is lossless") {
  const auto cfg = ExperimentConfig::from_json(tiny_config());
  const auto canon = cfg.to_json();
  const auto cfg2 = ExperimentConfig::from_json(canon);
  CHECK(cfg2.to_json() == canon);
  CHECK(cfg2.hash() == cfg.hash());
}

TEST_CASE("wilson-cowan config round trip") {
  const auto j = nlohmann::json::parse(R"({
    "seed": 5,
    "generator": {
      "type": "wilson-cowan",
      "samples": 50,
      "subjects": [
        {"communities": [3, 3], "intra": 1.0, "inter": 0.1},
        {"communities": [2, 2, 2]}
      ]
    },
    "window": {"tau_w": 30, "m": 2, "p": 1, "rho": 2, "tau_f": 12, "tau_b": 12},
    "variants": ["OB"],
    "clustering": {"methods": ["kmeans"], "clusters": 2, "nn": 4}
  })");
  const auto cfg = ExperimentConfig::from_json(j);
  const auto cfg2 = ExperimentConfig::from_json(cfg.to_json());
  CHECK(cfg2.to_json() == cfg.to_json());
  CHECK(std::holds_alternative<WilsonCowanGenerator>(cfg2.generator));
}

TEST_CASE("config rejects unknown names") {
  auto bad = tiny_config();
  bad["variants"] = {"bogus"};
  CHECK_THROWS_AS((void)ExperimentConfig::from_json(bad), ConfigError);
  bad = tiny_config();
  bad["clustering"]["methods"] = {"dbscan"};
  CHECK_THROWS_AS((void)ExperimentConfig::from_json(bad), ConfigError);
  bad = tiny_config();
  bad["generator"]["type"] = "martian";
  CHECK_THROWS_AS((void)ExperimentConfig::from_json(bad), ConfigError);
}

TEST_CASE("window labels use the majority with ties to the earlier state") {
  // window of 4 samples sliding over labels 1112222
  const std::vector<int> samples{1, 1, 1, 2, 2, 2, 2};
  const auto w = window_labels(samples, 4);
  REQUIRE(w.size() == 4);
  CHECK(w[0] == 1);  // 1112 -> majority 1
  CHECK(w[1] == 1);  // 1122 -> tie, state 1 appears first
  CHECK(w[2] == 2);  // 1222 -> majority 2
  CHECK(w[3] == 2);

  const std::vector<int> constant(10, 3);
  const auto wc = window_labels(constant, 5);
  for (int v : wc) CHECK(v == 3);
}

TEST_CASE("trivial single-state run scores accuracy one everywhere") {
  auto j = tiny_config();
  j["realizations"] = 1;
  j["generator"]["states"] = {
      {{"duration", 80}, {"groups", {{0, 1, 2}, {3, 4, 5}}}}};
  j["clustering"]["clusters"] = 1;
  const auto cfg = ExperimentConfig::from_json(j);
  const auto table = run_pipeline(cfg);
  CHECK(table.rows.size() == 4);  // 2 variants x 2 methods
  for (const auto& row : table.rows) {
    CHECK(row.realizations == 1);
    CHECK(row.mean_accuracy == doctest::Approx(1.0));
    CHECK(row.std_accuracy == 0.0);
  }
}

TEST_CASE("pipeline is deterministic and parallelism independent") {
  const auto cfg = ExperimentConfig::from_json(tiny_config());
  const auto t1 = run_pipeline(cfg, 1);
  const auto t2 = run_pipeline(cfg, 1);
  const auto t4 = run_pipeline(cfg, 4);
  REQUIRE(t1.rows.size() == t2.rows.size());
  REQUIRE(t1.rows.size() == t4.rows.size());
  for (std::size_t r = 0; r < t1.rows.size(); ++r) {
    CHECK(t1.rows[r].mean_accuracy == t2.rows[r].mean_accuracy);
    CHECK(t1.rows[r].mean_accuracy == t4.rows[r].mean_accuracy);
    CHECK(t1.rows[r].std_accuracy == t4.rows[r].std_accuracy);
    CHECK(t1.rows[r].per_realization == t4.rows[r].per_realization);
  }
}

TEST_CASE("staged composition equals the pipeline") {
  auto j = tiny_config();
  j["realizations"] = 1;
  const auto cfg = ExperimentConfig::from_json(j);
  const auto table = run_pipeline(cfg, 1);

  // the staged path: generate, extract, cluster with the same derived seeds
  const auto bundles = generate_realization(cfg, 0);
  for (const auto& row : table.rows) {
    const auto seq = extract_variant(cfg, bundles, row.variant);
    const auto labels = cluster_features(cfg, seq, row.method,
                                         clustering_seed(cfg, 0, row.variant, row.method));
    CHECK(labels.accuracy.has_value());
    CHECK(*labels.accuracy == row.per_realization[0]);
  }
}

TEST_CASE("staged composition survives the CSV round trip") {
  auto j = tiny_config();
  j["realizations"] = 1;
  const auto cfg = ExperimentConfig::from_json(j);
  const fs::path dir = fs::temp_directory_path() / "geoclust_stage_test";
  fs::remove_all(dir);

  const auto bundles = generate_realization(cfg, 0);
  write_series_dir(dir / "series", bundles[0].series, bundles[0].labels, {});
  const auto back = read_series_dir(dir / "series");
  CHECK((back.series - bundles[0].series).norm() == 0.0);
  CHECK(back.labels == bundles[0].labels);

  const auto seq = extract_variant(cfg, {{back.series, back.labels}}, "kPC");
  write_feature_sequence(dir / "features", seq);
  const auto seq2 = read_feature_sequence(dir / "features");
  CHECK(seq2.size() == seq.size());
  CHECK(seq2.labels == seq.labels);
  for (std::size_t i = 0; i < seq.size(); ++i) {
    CHECK((seq2.spd_points[i].matrix() - seq.spd_points[i].matrix()).norm() == 0.0);
  }
  const auto direct = cluster_features(cfg, seq, "scr", clustering_seed(cfg, 0, "kPC", "scr"));
  const auto staged = cluster_features(cfg, seq2, "scr", clustering_seed(cfg, 0, "kPC", "scr"));
  CHECK(direct.labels == staged.labels);
  fs::remove_all(dir);
}

TEST_CASE("emit and parse results round trip") {
  const auto cfg = ExperimentConfig::from_json(tiny_config());
  const auto table = run_pipeline(cfg, 2);
  const fs::path dir = fs::temp_directory_path() / "geoclust_results_test";
  fs::remove_all(dir);
  emit_results(table, dir);
  const auto back = parse_results(dir);
  CHECK(back.config_hash == table.config_hash);
  REQUIRE(back.rows.size() == table.rows.size());
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    CHECK(back.rows[r].variant == table.rows[r].variant);
    CHECK(back.rows[r].method == table.rows[r].method);
    CHECK(back.rows[r].mean_accuracy == table.rows[r].mean_accuracy);
    CHECK(back.rows[r].std_accuracy == table.rows[r].std_accuracy);
    CHECK(back.rows[r].realizations == table.rows[r].realizations);
    CHECK(back.rows[r].per_realization == table.rows[r].per_realization);
  }

  // aggregation arithmetic from the per-realization rows
  for (const auto& row : back.rows) {
    double sum = 0.0;
    for (double a : row.per_realization) sum += a;
    const double mean = sum / row.per_realization.size();
    CHECK(std::abs(mean - row.mean_accuracy) < 1e-12);
    double sq = 0.0;
    for (double a : row.per_realization) sq += (a - mean) * (a - mean);
    const double stddev = row.per_realization.size() > 1
                              ? std::sqrt(sq / (row.per_realization.size() - 1))
                              : 0.0;
    CHECK(std::abs(stddev - row.std_accuracy) < 1e-12);
  }

  // summary carries the config hash of the input config
  const auto summary = read_json_file(dir / "summary.json");
  CHECK(summary.at("config_hash").get<std::string>() == cfg.hash());
  fs::remove_all(dir);
}

TEST_CASE("empty table emits a header-only csv") {
  ResultTable table;
  table.config_hash = "deadbeef";
  const fs::path dir = fs::temp_directory_path() / "geoclust_empty_results";
  fs::remove_all(dir);
  emit_results(table, dir);
  std::ifstream in(dir / "results.csv");
  std::string line;
  CHECK(std::getline(in, line));
  CHECK(line == "variant,method,mean_accuracy,std_accuracy,realizations");
  CHECK_FALSE(std::getline(in, line));
  const auto back = parse_results(dir);
  CHECK(back.rows.empty());
  fs::remove_all(dir);
}
