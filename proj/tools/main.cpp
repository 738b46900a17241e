#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "geoclust/errors.hpp"
#include "geoclust/harness.hpp"
#include "geoclust/io.hpp"

namespace fs = std::filesystem;
using namespace geoclust;

namespace {

ExperimentConfig load_config(const std::string& path, std::optional<std::uint64_t> seed) {
  if (!fs::exists(path)) {
    throw geoclust::IoError("config file not found: " + path);
  }
  ExperimentConfig cfg = ExperimentConfig::from_json(read_json_file(path));
  if (seed.has_value()) cfg.seed = *seed;
  return cfg;
}

void write_bundles(const ExperimentConfig& cfg, int realization, const fs::path& out) {
  const auto bundles = generate_realization(cfg, realization);
  nlohmann::json meta;
  meta["config_hash"] = cfg.hash();
  meta["seed"] = cfg.seed;
  meta["realization"] = realization;
  if (bundles.size() == 1) {
    write_series_dir(out, bundles[0].series, bundles[0].labels, meta);
  } else {
    for (std::size_t s = 0; s < bundles.size(); ++s) {
      char name[32];
      std::snprintf(name, sizeof(name), "subject_%02zu", s);
      nlohmann::json m = meta;
      m["subject"] = s;
      write_series_dir(out / name, bundles[s].series, bundles[s].labels, m);
    }
  }
  std::cout << "wrote " << bundles.size() << " series under " << out.string() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Manifold-feature extraction and clustering for network time series"};
  app.set_version_flag("--version", std::string("config schema ") + kConfigSchemaVersion);
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = ".";
  std::string method = "gct";
  std::string variant;
  std::vector<std::string> inputs;
  std::string pred_path, truth_path;
  std::optional<std::uint64_t> seed_override;
  int realization = 0;
  int jobs = 1;

  auto add_common = [&](CLI::App* cmd, bool needs_config) {
    auto* opt = cmd->add_option("--config", config_path, "experiment config (JSON)");
    if (needs_config) opt->required();
    cmd->add_option("--seed", seed_override, "override the config master seed");
    cmd->add_option("--out", out_dir, "output directory");
  };

  auto* gen_syn = app.add_subcommand("gen-synthetic", "generate a block-state series");
  add_common(gen_syn, true);
  gen_syn->add_option("--realization", realization, "realization index (default 0)");

  auto* gen_wc = app.add_subcommand("gen-wilson-cowan",
                                    "simulate Wilson-Cowan subjects");
  add_common(gen_wc, true);
  gen_wc->add_option("--realization", realization, "realization index (default 0)");

  auto* extract = app.add_subcommand("extract", "extract manifold features");
  add_common(extract, true);
  extract->add_option("--variant", variant, "feature variant (kPC|Cov|ICov|Corr|OB)")
      ->required();
  extract->add_option("--in", inputs, "series director(ies)")->required();

  auto* cluster = app.add_subcommand("cluster", "cluster an extracted feature sequence");
  add_common(cluster, true);
  cluster->add_option("--method", method, "gct|smc|scr|kmeans")->required();
  cluster->add_option("--variant", variant, "variant used at extraction (seed stream)");
  cluster->add_option("--realization", realization, "realization index (default 0)");
  cluster->add_option("--in", inputs, "feature directory")->required();

  auto* evaluate = app.add_subcommand("evaluate", "score labels against ground truth");
  evaluate->add_option("--pred", pred_path, "predicted labels CSV")->required();
  evaluate->add_option("--truth", truth_path, "ground-truth labels CSV")->required();

  auto* pipeline = app.add_subcommand("pipeline", "run the full experiment grid");
  add_common(pipeline, true);
  pipeline->add_option("--jobs", jobs, "parallel realizations (default 1)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n\n" << app.help() << "\n";
    return 2;
  }

  try {
    if (gen_syn->parsed() || gen_wc->parsed()) {
      const ExperimentConfig cfg = load_config(config_path, seed_override);
      const bool is_block = std::holds_alternative<BlockStateGenerator>(cfg.generator);
      if (gen_syn->parsed() && !is_block) {
        throw geoclust::ConfigError("gen-synthetic requires a block-state generator config");
      }
      if (gen_wc->parsed() && is_block) {
        throw geoclust::ConfigError("gen-wilson-cowan requires a wilson-cowan generator config");
      }
      write_bundles(cfg, realization, out_dir);
    } else if (extract->parsed()) {
      const ExperimentConfig cfg = load_config(config_path, seed_override);
      std::vector<SeriesRealization> bundles;
      for (const auto& in : inputs) {
        SeriesBundle b = read_series_dir(in);
        bundles.push_back({std::move(b.series), std::move(b.labels)});
      }
      const FeatureSequence seq = extract_variant(cfg, bundles, variant);
      write_feature_sequence(out_dir, seq);
      std::cout << "wrote " << seq.size() << " " << seq.tag.str() << " points to "
                << out_dir << "\n";
    } else if (cluster->parsed()) {
      const ExperimentConfig cfg = load_config(config_path, seed_override);
      if (inputs.size() != 1) throw geoclust::ConfigError("cluster expects exactly one --in");
      const FeatureSequence seq = read_feature_sequence(inputs[0]);
      const std::string v = variant.empty() ? cfg.variants.at(0) : variant;
      const auto labels =
          cluster_features(cfg, seq, method, clustering_seed(cfg, realization, v, method));
      fs::create_directories(out_dir);
      write_labels_csv(fs::path(out_dir) / "labels.csv", labels.labels);
      if (labels.accuracy.has_value()) {
        std::cout << "accuracy," << format_double(*labels.accuracy) << "\n";
        std::ofstream acc(fs::path(out_dir) / "accuracy.txt");
        acc << format_double(*labels.accuracy) << "\n";
      }
    } else if (evaluate->parsed()) {
      const auto pred = read_labels_csv(pred_path);
      const auto truth = read_labels_csv(truth_path);
      std::cout << "accuracy," << format_double(clustering_accuracy(pred, truth)) << "\n";
    } else if (pipeline->parsed()) {
      const ExperimentConfig cfg = load_config(config_path, seed_override);
      const ResultTable table = run_pipeline(cfg, jobs, &std::cerr);
      emit_results(table, out_dir);
      std::cout << "variant,method,mean_accuracy,std_accuracy,realizations\n";
      for (const auto& row : table.rows) {
        std::cout << row.variant << ',' << row.method << ','
                  << format_double(row.mean_accuracy) << ','
                  << format_double(row.std_accuracy) << ',' << row.realizations << "\n";
      }
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
