#include "geoclust/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include "geoclust/errors.hpp"
#include "geoclust/io.hpp"
#include "geoclust/rng.hpp"

namespace geoclust {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

StateSchedule schedule_from_json(const nlohmann::json& j) {
  StateSchedule s;
  s.nodes = j.at("nodes").get<int>();
  for (const auto& st : j.at("states")) {
    StateSpec spec;
    spec.duration = st.at("duration").get<int>();
    for (const auto& g : st.at("groups")) {
      spec.groups.push_back(g.get<std::vector<int>>());
    }
    s.states.push_back(std::move(spec));
  }
  s.validate();
  return s;
}

nlohmann::json schedule_to_json(const StateSchedule& s) {
  nlohmann::json states = nlohmann::json::array();
  for (const auto& st : s.states) {
    states.push_back({{"duration", st.duration}, {"groups", st.groups}});
  }
  return {{"nodes", s.nodes}, {"states", states}};
}

double snr_from_json(const nlohmann::json& j) {
  if (j.is_string()) {
    const std::string s = j.get<std::string>();
    if (s == "inf" || s == "none") return kInf;
    throw ConfigError("snr_db: expected a number or \"inf\"");
  }
  return j.get<double>();
}

int variant_index(const ExperimentConfig& cfg, const std::string& variant) {
  for (std::size_t i = 0; i < cfg.variants.size(); ++i) {
    if (cfg.variants[i] == variant) return static_cast<int>(i);
  }
  throw ConfigError("variant '" + variant + "' not in config");
}

int method_index(const ExperimentConfig& cfg, const std::string& method) {
  for (std::size_t i = 0; i < cfg.clustering.methods.size(); ++i) {
    if (cfg.clustering.methods[i] == method) return static_cast<int>(i);
  }
  throw ConfigError("method '" + method + "' not in config");
}

}  // namespace

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j) {
  ExperimentConfig cfg;
  cfg.name = j.value("name", std::string("experiment"));
  cfg.seed = j.value("seed", std::uint64_t{0});
  cfg.realizations = j.value("realizations", 1);
  if (cfg.realizations < 1) throw ConfigError("realizations must be >= 1");
  cfg.snr_db = j.contains("snr_db") ? snr_from_json(j.at("snr_db")) : 10.0;

  const auto& gen = j.at("generator");
  const std::string type = gen.at("type").get<std::string>();
  if (type == "block-state") {
    BlockStateGenerator g;
    g.schedule = schedule_from_json(gen);
    if (gen.contains("theta0")) g.options.theta0 = gen.at("theta0").get<double>();
    if (gen.contains("delta_theta") && !gen.at("delta_theta").is_null()) {
      g.options.delta_theta = gen.at("delta_theta").get<double>();
    }
    if (gen.contains("mix_weights")) {
      const auto w = gen.at("mix_weights").get<std::vector<double>>();
      if (w.size() != 3) throw ConfigError("mix_weights needs 3 entries");
      g.options.mix_weights = {w[0], w[1], w[2]};
    }
    if (gen.contains("hrf")) {
      const std::string hrf = gen.at("hrf").get<std::string>();
      if (hrf == "double-gamma") {
        g.options.apply_hrf = true;
      } else if (hrf == "none") {
        g.options.apply_hrf = false;
      } else {
        throw ConfigError("generator.hrf must be 'double-gamma' or 'none'");
      }
    }
    g.options.hrf_tr = gen.value("hrf_tr", 1.0);
    cfg.generator = std::move(g);
  } else if (type == "wilson-cowan") {
    WilsonCowanGenerator g;
    g.samples = gen.at("samples").get<int>();
    g.speed_m_per_s = gen.value("speed_m_per_s", 8.0);
    g.stimulus_node = gen.value("stimulus_node", 0);
    g.stimulus = gen.value("stimulus", 1.25);
    WilsonCowanParams& p = g.params;
    if (gen.contains("params")) {
      const auto& pj = gen.at("params");
      p.alpha = pj.value("alpha", p.alpha);
      p.gamma1 = pj.value("gamma1", p.gamma1);
      p.gamma2 = pj.value("gamma2", p.gamma2);
      p.gamma3 = pj.value("gamma3", p.gamma3);
      p.gamma4 = pj.value("gamma4", p.gamma4);
      p.gamma5 = pj.value("gamma5", p.gamma5);
      p.sigma2 = pj.value("sigma2", p.sigma2);
      p.zeta_x = pj.value("zeta_x", p.zeta_x);
      p.theta_x = pj.value("theta_x", p.theta_x);
      p.zeta_y = pj.value("zeta_y", p.zeta_y);
      p.theta_y = pj.value("theta_y", p.theta_y);
      p.dt = pj.value("dt", p.dt);
      p.initial_x = pj.value("initial_x", p.initial_x);
      p.initial_y = pj.value("initial_y", p.initial_y);
    }
    for (const auto& sj : gen.at("subjects")) {
      WilsonCowanSubject s;
      if (sj.contains("adjacency")) {
        s.adjacency_csv = sj.at("adjacency").get<std::string>();
        s.distances_csv = sj.value("distances", std::string());
      } else {
        s.community_sizes = sj.at("communities").get<std::vector<int>>();
        s.intra = sj.value("intra", 1.0);
        s.inter = sj.value("inter", 0.05);
        s.spacing_mm = sj.value("spacing_mm", 40.0);
        s.width_mm = sj.value("width_mm", 10.0);
      }
      g.subjects.push_back(std::move(s));
    }
    if (g.subjects.empty()) throw ConfigError("wilson-cowan generator needs subjects");
    cfg.generator = std::move(g);
  } else {
    throw ConfigError("unknown generator type '" + type + "'");
  }

  if (j.contains("window")) {
    const auto& w = j.at("window");
    cfg.window.tau_w = w.value("tau_w", cfg.window.tau_w);
    cfg.window.m = w.value("m", cfg.window.m);
    cfg.window.p = w.value("p", cfg.window.p);
    cfg.window.rho = w.value("rho", cfg.window.rho);
    cfg.window.tau_f = w.value("tau_f", cfg.window.tau_f);
    cfg.window.tau_b = w.value("tau_b", cfg.window.tau_b);
  }

  if (j.contains("kernel")) {
    const auto& k = j.at("kernel");
    if (k.at("kind") == "sde") {
      SdeOptions opts;
      opts.max_iterations = k.value("max_iterations", opts.max_iterations);
      cfg.kernel = KernelMethod::sde(k.at("neighbors").get<int>(), opts);
    } else {
      cfg.kernel = KernelMethod::fixed(KernelSpec::from_json(k));
    }
  }

  if (j.contains("variants")) {
    cfg.variants = j.at("variants").get<std::vector<std::string>>();
  }
  for (const auto& v : cfg.variants) {
    if (v != "OB") spd_variant_from_string(v);  // validates SPD tags
  }

  if (j.contains("clustering")) {
    const auto& c = j.at("clustering");
    cfg.clustering.methods =
        c.value("methods", std::vector<std::string>{"gct", "smc", "scr", "kmeans"});
    cfg.clustering.gct.clusters = c.value("clusters", 2);
    cfg.clustering.gct.n_nn = c.value("nn", 8);
    cfg.clustering.gct.sigma_d = c.value("sigma_d", 1.0);
    cfg.clustering.gct.sigma_a = c.value("sigma_a", 1.0);
    cfg.clustering.gct.eta = c.value("eta", 0.5);
    cfg.clustering.gct.kmeans_restarts = c.value("kmeans_restarts", 20);
    if (c.contains("sparse")) {
      cfg.clustering.gct.sparse.tolerance =
          c.at("sparse").value("tolerance", cfg.clustering.gct.sparse.tolerance);
      cfg.clustering.gct.sparse.max_iterations =
          c.at("sparse").value("max_iterations", cfg.clustering.gct.sparse.max_iterations);
      cfg.clustering.gct.sparse.penalty_multiplier = c.at("sparse").value(
          "penalty_multiplier", cfg.clustering.gct.sparse.penalty_multiplier);
    }
    if (c.contains("scr_sigma") && !c.at("scr_sigma").is_string()) {
      cfg.clustering.scr_sigma = c.at("scr_sigma").get<double>();
    }
  }
  for (const auto& m : cfg.clustering.methods) {
    if (m != "gct" && m != "smc" && m != "scr" && m != "kmeans") {
      throw ConfigError("unknown clustering method '" + m + "'");
    }
  }
  return cfg;
}

nlohmann::json ExperimentConfig::to_json() const {
  nlohmann::json j;
  j["name"] = name;
  j["seed"] = seed;
  j["realizations"] = realizations;
  if (std::isfinite(snr_db)) {
    j["snr_db"] = snr_db;
  } else {
    j["snr_db"] = "inf";
  }
  if (std::holds_alternative<BlockStateGenerator>(generator)) {
    const auto& g = std::get<BlockStateGenerator>(generator);
    nlohmann::json gj = schedule_to_json(g.schedule);
    gj["type"] = "block-state";
    gj["theta0"] = g.options.theta0;
    if (std::isnan(g.options.delta_theta)) {
      gj["delta_theta"] = nullptr;
    } else {
      gj["delta_theta"] = g.options.delta_theta;
    }
    gj["mix_weights"] = {g.options.mix_weights[0], g.options.mix_weights[1],
                         g.options.mix_weights[2]};
    gj["hrf"] = g.options.apply_hrf ? "double-gamma" : "none";
    gj["hrf_tr"] = g.options.hrf_tr;
    j["generator"] = gj;
  } else {
    const auto& g = std::get<WilsonCowanGenerator>(generator);
    nlohmann::json gj;
    gj["type"] = "wilson-cowan";
    gj["samples"] = g.samples;
    gj["speed_m_per_s"] = g.speed_m_per_s;
    gj["stimulus_node"] = g.stimulus_node;
    gj["stimulus"] = g.stimulus;
    const WilsonCowanParams& p = g.params;
    gj["params"] = {{"alpha", p.alpha},       {"gamma1", p.gamma1},
                    {"gamma2", p.gamma2},     {"gamma3", p.gamma3},
                    {"gamma4", p.gamma4},     {"gamma5", p.gamma5},
                    {"sigma2", p.sigma2},     {"zeta_x", p.zeta_x},
                    {"theta_x", p.theta_x},   {"zeta_y", p.zeta_y},
                    {"theta_y", p.theta_y},   {"dt", p.dt},
                    {"initial_x", p.initial_x}, {"initial_y", p.initial_y}};
    nlohmann::json subjects = nlohmann::json::array();
    for (const auto& s : g.subjects) {
      nlohmann::json sj;
      if (!s.adjacency_csv.empty()) {
        sj["adjacency"] = s.adjacency_csv;
        if (!s.distances_csv.empty()) sj["distances"] = s.distances_csv;
      } else {
        sj["communities"] = s.community_sizes;
        sj["intra"] = s.intra;
        sj["inter"] = s.inter;
        sj["spacing_mm"] = s.spacing_mm;
        sj["width_mm"] = s.width_mm;
      }
      subjects.push_back(sj);
    }
    gj["subjects"] = subjects;
    j["generator"] = gj;
  }
  j["window"] = {{"tau_w", window.tau_w}, {"m", window.m},         {"p", window.p},
                 {"rho", window.rho},     {"tau_f", window.tau_f}, {"tau_b", window.tau_b}};
  if (kernel.is_sde()) {
    j["kernel"] = {{"kind", "sde"},
                   {"neighbors", kernel.sde_neighbors},
                   {"max_iterations", kernel.sde_options.max_iterations}};
  } else {
    j["kernel"] = kernel.spec->to_json();
  }
  j["variants"] = variants;
  j["clustering"] = {
      {"methods", clustering.methods},
      {"clusters", clustering.gct.clusters},
      {"nn", clustering.gct.n_nn},
      {"sigma_d", clustering.gct.sigma_d},
      {"sigma_a", clustering.gct.sigma_a},
      {"eta", clustering.gct.eta},
      {"kmeans_restarts", clustering.gct.kmeans_restarts},
      {"sparse",
       {{"tolerance", clustering.gct.sparse.tolerance},
        {"max_iterations", clustering.gct.sparse.max_iterations},
        {"penalty_multiplier", clustering.gct.sparse.penalty_multiplier}}},
      {"scr_sigma", clustering.scr_sigma}};
  return j;
}

std::string ExperimentConfig::hash() const { return config_hash(to_json()); }

std::uint64_t realization_seed(std::uint64_t master, int realization) {
  return Rng::derive(master, 1000 + static_cast<std::uint64_t>(realization));
}

std::vector<SeriesRealization> generate_realization(const ExperimentConfig& cfg,
                                                    int realization) {
  const std::uint64_t rs = realization_seed(cfg.seed, realization);
  std::vector<SeriesRealization> bundles;
  if (std::holds_alternative<BlockStateGenerator>(cfg.generator)) {
    const auto& g = std::get<BlockStateGenerator>(cfg.generator);
    auto [series, labels] =
        gen_block_state_series(g.schedule, g.options, Rng::derive(rs, 10));
    series = add_noise_snr(series, cfg.snr_db, Rng::derive(rs, 100));
    bundles.push_back({std::move(series), std::move(labels)});
  } else {
    const auto& g = std::get<WilsonCowanGenerator>(cfg.generator);
    for (std::size_t s = 0; s < g.subjects.size(); ++s) {
      const auto& subj = g.subjects[s];
      WilsonCowanParams params = g.params;
      if (!subj.adjacency_csv.empty()) {
        auto [b, d] = load_adjacency(subj.adjacency_csv, subj.distances_csv,
                                     g.speed_m_per_s, params.dt);
        params.coupling = b;
        params.delays = d;
      } else {
        const Eigen::MatrixXd b =
            community_adjacency(subj.community_sizes, subj.intra, subj.inter);
        const Eigen::MatrixXd dist =
            community_distances(subj.community_sizes, subj.spacing_mm, subj.width_mm);
        auto [b2, d] = adjacency_from_matrices(b, dist, g.speed_m_per_s, params.dt);
        params.coupling = b2;
        params.delays = d;
      }
      const int n = static_cast<int>(params.coupling.rows());
      params.external_input = Eigen::VectorXd::Zero(n);
      if (g.stimulus_node >= 0 && g.stimulus_node < n) {
        params.external_input(g.stimulus_node) = g.stimulus;
      }
      Eigen::MatrixXd series =
          gen_wilson_cowan(params, g.samples, Rng::derive(rs, 10 + s));
      series = add_noise_snr(series, cfg.snr_db, Rng::derive(rs, 100 + s));
      SeriesRealization bundle;
      bundle.series = std::move(series);
      bundle.labels.assign(g.samples, static_cast<int>(s) + 1);
      bundles.push_back(std::move(bundle));
    }
  }
  return bundles;
}

std::vector<int> window_labels(const std::vector<int>& sample_labels, int tau_w) {
  const int total = static_cast<int>(sample_labels.size());
  std::vector<int> out;
  if (total < tau_w) return out;
  out.reserve(total - tau_w + 1);
  for (int t = 0; t + tau_w <= total; ++t) {
    std::map<int, int> counts;        // label -> occurrences
    std::map<int, int> first_index;   // label -> first position in window
    for (int k = 0; k < tau_w; ++k) {
      const int lab = sample_labels[t + k];
      if (counts.emplace(lab, 0).second) first_index[lab] = k;
      counts[lab]++;
    }
    int best_label = sample_labels[t];
    int best_count = -1;
    for (const auto& [lab, cnt] : counts) {
      if (cnt > best_count ||
          (cnt == best_count && first_index[lab] < first_index[best_label])) {
        best_label = lab;
        best_count = cnt;
      }
    }
    out.push_back(best_label);
  }
  return out;
}

FeatureSequence extract_variant(const ExperimentConfig& cfg,
                                const std::vector<SeriesRealization>& bundles,
                                const std::string& variant) {
  FeatureSequence pooled;
  for (const auto& bundle : bundles) {
    FeatureSequence seq;
    if (variant == "OB") {
      seq = extract_grassmann_sequence(bundle.series, cfg.window);
    } else {
      seq = extract_spd_sequence(bundle.series, cfg.kernel,
                                 spd_variant_from_string(variant), cfg.window.tau_w);
    }
    if (!bundle.labels.empty()) {
      seq.labels = window_labels(bundle.labels, cfg.window.tau_w);
    }
    append_sequence(pooled, seq);
  }
  return pooled;
}

std::uint64_t clustering_seed(const ExperimentConfig& cfg, int realization,
                              const std::string& variant, const std::string& method) {
  const std::uint64_t rs = realization_seed(cfg.seed, realization);
  return Rng::derive(rs, 200 + 10 * variant_index(cfg, variant) +
                             method_index(cfg, method));
}

ClusterLabels cluster_features(const ExperimentConfig& cfg, const FeatureSequence& seq,
                               const std::string& method, std::uint64_t seed) {
  const auto view = seq.view();
  const GCTConfig& g = cfg.clustering.gct;
  ClusterLabels out;
  if (method == "gct") {
    out = gct(*view, g, seed);
  } else if (method == "smc") {
    out = smc(*view, g, seed);
  } else if (method == "scr") {
    out = scr(*view, g.clusters, cfg.clustering.scr_sigma, seed, g.kmeans_restarts);
  } else if (method == "kmeans") {
    out = kmeans_embedded(*view, g.clusters, seed, g.kmeans_restarts);
  } else {
    throw ConfigError("unknown clustering method '" + method + "'");
  }
  if (!seq.labels.empty()) {
    out.accuracy = clustering_accuracy(out.labels, seq.labels);
  }
  return out;
}

ResultTable run_pipeline(const ExperimentConfig& cfg, int jobs, std::ostream* log) {
  const int n_var = static_cast<int>(cfg.variants.size());
  const int n_met = static_cast<int>(cfg.clustering.methods.size());
  const int cells = n_var * n_met;
  std::vector<std::vector<double>> acc(
      cells, std::vector<double>(cfg.realizations,
                                 std::numeric_limits<double>::quiet_NaN()));
  std::vector<double> wall(cells, 0.0);
  std::mutex log_mutex;

  auto run_one = [&](int i) {
    try {
      const auto bundles = generate_realization(cfg, i);
      for (int v = 0; v < n_var; ++v) {
        const FeatureSequence seq = extract_variant(cfg, bundles, cfg.variants[v]);
        for (int m = 0; m < n_met; ++m) {
          const auto t0 = std::chrono::steady_clock::now();
          const auto labels = cluster_features(
              cfg, seq, cfg.clustering.methods[m],
              clustering_seed(cfg, i, cfg.variants[v], cfg.clustering.methods[m]));
          const auto t1 = std::chrono::steady_clock::now();
          if (!labels.accuracy.has_value()) {
            throw ConfigError("no ground-truth labels to score against");
          }
          acc[v * n_met + m][i] = *labels.accuracy;
          {
            std::lock_guard<std::mutex> lock(log_mutex);
            wall[v * n_met + m] +=
                std::chrono::duration<double, std::milli>(t1 - t0).count();
          }
        }
      }
    } catch (const std::exception& e) {
      std::lock_guard<std::mutex> lock(log_mutex);
      if (log != nullptr) {
        *log << "realization " << i << " failed: " << e.what() << "\n";
      }
    }
  };

  jobs = std::max(1, jobs);
  if (jobs == 1 || cfg.realizations == 1) {
    for (int i = 0; i < cfg.realizations; ++i) run_one(i);
  } else {
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    const int workers = std::min(jobs, cfg.realizations);
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&]() {
        for (int i = next.fetch_add(1); i < cfg.realizations; i = next.fetch_add(1)) {
          run_one(i);
        }
      });
    }
    for (auto& th : pool) th.join();
  }

  ResultTable table;
  table.config_hash = cfg.hash();
  for (int v = 0; v < n_var; ++v) {
    for (int m = 0; m < n_met; ++m) {
      ResultRow row;
      row.variant = cfg.variants[v];
      row.method = cfg.clustering.methods[m];
      row.per_realization = acc[v * n_met + m];
      row.wall_ms = wall[v * n_met + m];
      double sum = 0.0;
      int count = 0;
      for (double a : row.per_realization) {
        if (!std::isnan(a)) {
          sum += a;
          ++count;
        }
      }
      row.realizations = count;
      row.mean_accuracy = count > 0 ? sum / count : 0.0;
      double sq = 0.0;
      for (double a : row.per_realization) {
        if (!std::isnan(a)) sq += (a - row.mean_accuracy) * (a - row.mean_accuracy);
      }
      row.std_accuracy = count > 1 ? std::sqrt(sq / (count - 1)) : 0.0;
      table.rows.push_back(std::move(row));
    }
  }
  return table;
}

void emit_results(const ResultTable& table, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  {
    std::ofstream out(dir / "results.csv");
    if (!out) throw IoError("cannot open for writing: " + (dir / "results.csv").string());
    out << "variant,method,mean_accuracy,std_accuracy,realizations\n";
    for (const auto& row : table.rows) {
      out << row.variant << ',' << row.method << ',' << format_double(row.mean_accuracy)
          << ',' << format_double(row.std_accuracy) << ',' << row.realizations << '\n';
    }
  }
  {
    std::ofstream out(dir / "realizations.csv");
    if (!out) throw IoError("cannot open realizations.csv for writing");
    out << "variant,method,realization,accuracy\n";
    for (const auto& row : table.rows) {
      for (std::size_t i = 0; i < row.per_realization.size(); ++i) {
        if (std::isnan(row.per_realization[i])) continue;
        out << row.variant << ',' << row.method << ',' << i << ','
            << format_double(row.per_realization[i]) << '\n';
      }
    }
  }
  {
    std::ofstream out(dir / "timing.csv");
    if (!out) throw IoError("cannot open timing.csv for writing");
    out << "variant,method,wall_ms\n";
    for (const auto& row : table.rows) {
      out << row.variant << ',' << row.method << ',' << format_double(row.wall_ms)
          << '\n';
    }
  }
  nlohmann::json summary;
  summary["schema_version"] = kConfigSchemaVersion;
  summary["config_hash"] = table.config_hash;
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : table.rows) {
    rows.push_back({{"variant", row.variant},
                    {"method", row.method},
                    {"mean_accuracy", row.mean_accuracy},
                    {"std_accuracy", row.std_accuracy},
                    {"realizations", row.realizations},
                    {"wall_ms", row.wall_ms}});
  }
  summary["rows"] = rows;
  write_json_file(dir / "summary.json", summary);
}

ResultTable parse_results(const std::filesystem::path& dir) {
  ResultTable table;
  const nlohmann::json summary = read_json_file(dir / "summary.json");
  table.config_hash = summary.value("config_hash", std::string());

  std::ifstream in(dir / "results.csv");
  if (!in) throw IoError("cannot open results.csv for reading");
  std::string line;
  std::getline(in, line);  // header
  std::map<std::pair<std::string, std::string>, std::size_t> index;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string variant, method, mean, stddev, count;
    std::getline(ss, variant, ',');
    std::getline(ss, method, ',');
    std::getline(ss, mean, ',');
    std::getline(ss, stddev, ',');
    std::getline(ss, count, ',');
    ResultRow row;
    row.variant = variant;
    row.method = method;
    row.mean_accuracy = std::stod(mean);
    row.std_accuracy = std::stod(stddev);
    row.realizations = std::stoi(count);
    index[{variant, method}] = table.rows.size();
    table.rows.push_back(std::move(row));
  }

  std::ifstream rin(dir / "realizations.csv");
  if (rin) {
    std::getline(rin, line);
    while (std::getline(rin, line)) {
      if (line.empty()) continue;
      std::stringstream ss(line);
      std::string variant, method, idx, accuracy;
      std::getline(ss, variant, ',');
      std::getline(ss, method, ',');
      std::getline(ss, idx, ',');
      std::getline(ss, accuracy, ',');
      auto it = index.find({variant, method});
      if (it == index.end()) continue;
      auto& per = table.rows[it->second].per_realization;
      const std::size_t i = std::stoul(idx);
      if (per.size() <= i) {
        per.resize(i + 1, std::numeric_limits<double>::quiet_NaN());
      }
      per[i] = std::stod(accuracy);
    }
  }
  return table;
}

}  // namespace geoclust
