#include "geoclust/io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "geoclust/errors.hpp"

namespace geoclust {

std::string format_double(double v) {
  char buf[64];
  // %.17g always round-trips for IEEE doubles
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return std::string(buf);
}

void write_csv_matrix(const std::filesystem::path& path, const Eigen::MatrixXd& m) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) out << ',';
      out << format_double(m(i, j));
    }
    out << '\n';
  }
  if (!out) throw IoError("write failed: " + path.string());
}

Eigen::MatrixXd read_csv_matrix(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open for reading: " + path.string());
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::size_t pos = 0;
    while (pos <= line.size()) {
      std::size_t next = line.find(',', pos);
      if (next == std::string::npos) next = line.size();
      const std::string tok = line.substr(pos, next - pos);
      try {
        row.push_back(std::stod(tok));
      } catch (const std::exception&) {
        throw IoError("bad numeric field '" + tok + "' in " + path.string());
      }
      pos = next + 1;
      if (next == line.size()) break;
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw IoError("ragged CSV rows in " + path.string());
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw IoError("empty CSV: " + path.string());
  Eigen::MatrixXd m(rows.size(), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) m(i, j) = rows[i][j];
  }
  return m;
}

void write_labels_csv(const std::filesystem::path& path, const std::vector<int>& labels) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  for (int v : labels) out << v << '\n';
}

std::vector<int> read_labels_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open for reading: " + path.string());
  std::vector<int> labels;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    labels.push_back(std::stoi(line));
  }
  return labels;
}

nlohmann::json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open for reading: " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw IoError("bad JSON in " + path.string() + ": " + e.what());
  }
  return j;
}

void write_json_file(const std::filesystem::path& path, const nlohmann::json& j) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  out << j.dump(2) << '\n';
}

void write_series_dir(const std::filesystem::path& dir, const Eigen::MatrixXd& series,
                      const std::vector<int>& labels, const nlohmann::json& meta) {
  std::filesystem::create_directories(dir);
  write_csv_matrix(dir / "series.csv", series);
  nlohmann::json sidecar = meta;
  sidecar["labels"] = labels;
  write_json_file(dir / "sidecar.json", sidecar);
}

SeriesBundle read_series_dir(const std::filesystem::path& dir) {
  SeriesBundle b;
  b.series = read_csv_matrix(dir / "series.csv");
  b.meta = read_json_file(dir / "sidecar.json");
  if (b.meta.contains("labels")) {
    b.labels = b.meta.at("labels").get<std::vector<int>>();
  }
  return b;
}

void write_feature_sequence(const std::filesystem::path& dir, const FeatureSequence& seq) {
  std::filesystem::create_directories(dir);
  nlohmann::json manifest;
  manifest["manifold"] =
      seq.tag.type == ManifoldTag::Type::grassmann
          ? nlohmann::json{{"type", "grassmann"}, {"n", seq.tag.n}, {"r", seq.tag.r}}
          : nlohmann::json{{"type", "spd"}, {"n", seq.tag.n}};
  manifest["points"] = seq.size();
  manifest["window_starts"] = seq.window_starts;
  if (!seq.labels.empty()) manifest["labels"] = seq.labels;
  write_json_file(dir / "manifest.json", manifest);
  char name[32];
  for (std::size_t i = 0; i < seq.size(); ++i) {
    std::snprintf(name, sizeof(name), "point_%06zu.csv", i);
    if (seq.tag.type == ManifoldTag::Type::grassmann) {
      write_csv_matrix(dir / name, seq.grassmann_points[i].basis());
    } else {
      write_csv_matrix(dir / name, seq.spd_points[i].matrix());
    }
  }
}

FeatureSequence read_feature_sequence(const std::filesystem::path& dir) {
  const nlohmann::json manifest = read_json_file(dir / "manifest.json");
  FeatureSequence seq;
  const auto& m = manifest.at("manifold");
  if (m.at("type") == "grassmann") {
    seq.tag = ManifoldTag{ManifoldTag::Type::grassmann, m.at("n").get<int>(),
                          m.at("r").get<int>()};
  } else {
    seq.tag = ManifoldTag{ManifoldTag::Type::spd, m.at("n").get<int>(), 0};
  }
  seq.window_starts = manifest.at("window_starts").get<std::vector<int>>();
  if (manifest.contains("labels")) {
    seq.labels = manifest.at("labels").get<std::vector<int>>();
  }
  const std::size_t count = manifest.at("points").get<std::size_t>();
  char name[32];
  for (std::size_t i = 0; i < count; ++i) {
    std::snprintf(name, sizeof(name), "point_%06zu.csv", i);
    const Eigen::MatrixXd p = read_csv_matrix(dir / name);
    if (seq.tag.type == ManifoldTag::Type::grassmann) {
      seq.grassmann_points.emplace_back(p);
    } else {
      seq.spd_points.emplace_back(p);
    }
  }
  return seq;
}

std::string config_hash(const nlohmann::json& config) {
  const std::string dump = config.dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : dump) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf);
}

}  // namespace geoclust
