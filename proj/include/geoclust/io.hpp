#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "geoclust/features.hpp"

namespace geoclust {

// Round-trippable CSV (17 significant digits).
void write_csv_matrix(const std::filesystem::path& path, const Eigen::MatrixXd& m);
Eigen::MatrixXd read_csv_matrix(const std::filesystem::path& path);

void write_labels_csv(const std::filesystem::path& path, const std::vector<int>& labels);
std::vector<int> read_labels_csv(const std::filesystem::path& path);

// A generated time series: series.csv (nodes x samples) plus sidecar.json
// carrying per-sample labels, the seed, and the config hash.
void write_series_dir(const std::filesystem::path& dir, const Eigen::MatrixXd& series,
                      const std::vector<int>& labels, const nlohmann::json& meta);
struct SeriesBundle {
  Eigen::MatrixXd series;
  std::vector<int> labels;
  nlohmann::json meta;
};
SeriesBundle read_series_dir(const std::filesystem::path& dir);

// FeatureSequence as a directory of CSV matrices plus manifest.json.
void write_feature_sequence(const std::filesystem::path& dir, const FeatureSequence& seq);
FeatureSequence read_feature_sequence(const std::filesystem::path& dir);

// FNV-1a hash of the canonical (sorted-key) JSON dump, as fixed-width hex.
std::string config_hash(const nlohmann::json& config);

nlohmann::json read_json_file(const std::filesystem::path& path);
void write_json_file(const std::filesystem::path& path, const nlohmann::json& j);

std::string format_double(double v);  // shortest exact round-trip

}  // namespace geoclust
