// Copyright 2026 The dvbp-sim Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef DVBP_EXPERIMENT_HPP
#define DVBP_EXPERIMENT_HPP

#include <atomic>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "dvbp/engine.hpp"
#include "dvbp/instance_io.hpp"
#include "dvbp/predictor.hpp"
#include "dvbp/reporting.hpp"
#include "dvbp/strategy_factory.hpp"

namespace dvbp {

inline constexpr const char* kArtifactVersion = "dvbp-sim 1.0.0";

/// One error setting of the sweep grid. Strategies that ignore predictions
/// run once under the "none" setting.
struct ErrorSetting {
  std::string kind = "none";  // none | lognormal | uniform
  double param = 0.0;

  std::string label() const { return kind == "none" ? "none" : kind + ":" + format_ratio(param); }
};

struct ExperimentConfig {
  std::vector<std::string> instance_paths;
  std::vector<std::string> strategies;
  std::vector<ErrorSetting> error_grid;  // applied to prediction-using strategies
  std::vector<std::uint64_t> seeds;
  int jobs = 1;
  bool decision_logs = false;
};

inline std::vector<double> default_sigma_grid() { return {0.0, 0.5, 1.0, 2.0, 4.0}; }

inline std::vector<double> default_epsilon_grid() {
  return {1, 2, 3, 4, 5, 10, 20, 50, 100, 1e3, 1e4, 1e5, 1e6};
}

/// Declarative experiment description. Every omitted field takes a default
/// that is echoed into the manifest, so a config never silently changes
/// meaning between runs.
inline ExperimentConfig parse_experiment_config(const nlohmann::json& doc,
                                                std::uint64_t seed_base = 1) {
  ExperimentConfig config;
  if (!doc.contains("instances") || !doc["instances"].is_array() || doc["instances"].empty())
    throw std::invalid_argument("config: needs a nonempty 'instances' list");
  for (const auto& p : doc["instances"]) config.instance_paths.push_back(p.get<std::string>());

  if (!doc.contains("strategies") || !doc["strategies"].is_array() || doc["strategies"].empty())
    throw std::invalid_argument("config: needs a nonempty 'strategies' list");
  for (const auto& s : doc["strategies"]) {
    std::string name = s.get<std::string>();
    make_strategy(name);  // validates
    config.strategies.push_back(name);
  }

  if (doc.contains("errors")) {
    for (const auto& block : doc["errors"]) {
      std::string kind = block.at("kind").get<std::string>();
      if (kind != "lognormal" && kind != "uniform")
        throw std::invalid_argument("config: unknown error kind " + kind);
      std::vector<double> params;
      if (block.contains("params"))
        for (const auto& v : block["params"]) params.push_back(v.get<double>());
      else
        params = kind == "lognormal" ? default_sigma_grid() : default_epsilon_grid();
      for (double p : params) config.error_grid.push_back({kind, p});
    }
  } else {
    for (double sigma : default_sigma_grid()) config.error_grid.push_back({"lognormal", sigma});
  }

  if (doc.contains("seeds"))
    for (const auto& s : doc["seeds"]) config.seeds.push_back(s.get<std::uint64_t>());
  else
    for (std::uint64_t i = 0; i < 5; ++i) config.seeds.push_back(seed_base + i);

  if (doc.contains("jobs")) config.jobs = doc["jobs"].get<int>();
  if (doc.contains("decision_logs")) config.decision_logs = doc["decision_logs"].get<bool>();
  if (config.jobs < 1) config.jobs = 1;
  return config;
}

struct CellResult {
  std::size_t instance_idx = 0;
  std::size_t strategy_idx = 0;
  std::size_t setting_idx = 0;  // into error grid; npos for "none"
  std::uint64_t seed = 0;
  RunReport report;
};

struct ExperimentResult {
  std::vector<std::string> instance_names;
  std::vector<CellResult> cells;
  bool all_audits_passed = true;
};

namespace detail {

struct Cell {
  std::size_t instance_idx;
  std::size_t strategy_idx;
  std::size_t setting_idx;  // npos == no error model
  std::uint64_t seed;
};

inline constexpr std::size_t kNoSetting = static_cast<std::size_t>(-1);

}  // namespace detail

/// Runs the full (instance, strategy, error-setting, seed) matrix with a
/// small worker pool. Results come back in deterministic cell order no
/// matter how the workers interleave.
inline ExperimentResult run_experiment_matrix(const ExperimentConfig& config,
                                              const std::vector<Instance>& instances,
                                              const std::string& log_dir = "") {
  std::vector<detail::Cell> cells;
  for (std::size_t ii = 0; ii < instances.size(); ++ii) {
    for (std::size_t si = 0; si < config.strategies.size(); ++si) {
      if (uses_predictions(config.strategies[si])) {
        for (std::size_t ei = 0; ei < config.error_grid.size(); ++ei)
          for (std::uint64_t seed : config.seeds) cells.push_back({ii, si, ei, seed});
      } else {
        cells.push_back({ii, si, detail::kNoSetting, 0});
      }
    }
  }

  ExperimentResult result;
  for (const Instance& inst : instances) result.instance_names.push_back(inst.name);
  result.cells.resize(cells.size());

  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::string failure;
  std::mutex failure_mu;

  auto worker = [&]() {
    while (true) {
      std::size_t i = next.fetch_add(1);
      if (i >= cells.size() || failed.load()) break;
      const detail::Cell& cell = cells[i];
      try {
        const Instance& inst = instances[cell.instance_idx];
        StrategySpec spec = make_strategy(config.strategies[cell.strategy_idx]);
        PredictionTable table;
        const PredictionTable* table_ptr = nullptr;
        if (spec.knowledge == Knowledge::Predicted) {
          ErrorSetting setting = cell.setting_idx == detail::kNoSetting
                                     ? ErrorSetting{"lognormal", 0.0}
                                     : config.error_grid[cell.setting_idx];
          ErrorModel model = setting.kind == "uniform"
                                 ? ErrorModel::uniform(setting.param, cell.seed)
                                 : ErrorModel::log_normal(setting.param, cell.seed);
          table = generate_predictions(inst, model);
          table_ptr = &table;
        }
        SimulateOptions options;
        std::ofstream log_stream;
        if (!log_dir.empty()) {
          std::string label = cell.setting_idx == detail::kNoSetting
                                  ? "none"
                                  : config.error_grid[cell.setting_idx].label();
          std::string path = log_dir + "/" + inst.name + "__" +
                             config.strategies[cell.strategy_idx] + "__" + label + "__s" +
                             std::to_string(cell.seed) + ".log";
          for (char& c : path)
            if (c == ':') c = '_';
          log_stream.open(path);
          options.decision_stream = &log_stream;
        }
        RunReport report = simulate(inst, *spec.strategy, spec.knowledge, table_ptr, options);
        result.cells[i] = {cell.instance_idx, cell.strategy_idx, cell.setting_idx, cell.seed,
                           std::move(report)};
      } catch (const std::exception& e) {
        std::lock_guard<std::mutex> lock(failure_mu);
        failed.store(true);
        failure = e.what();
      }
    }
  };

  int jobs = std::max(1, config.jobs);
  std::vector<std::thread> pool;
  for (int t = 1; t < jobs; ++t) pool.emplace_back(worker);
  worker();
  for (std::thread& t : pool) t.join();
  if (failed.load()) throw std::runtime_error("experiment cell failed: " + failure);
  return result;
}

namespace detail {

inline std::string setting_kind(const ExperimentConfig& config, std::size_t idx) {
  return idx == kNoSetting ? "none" : config.error_grid[idx].kind;
}

inline std::string setting_param(const ExperimentConfig& config, std::size_t idx) {
  return idx == kNoSetting ? "0" : format_ratio(config.error_grid[idx].param);
}

}  // namespace detail

inline void write_ratios_csv(std::ostream& out, const ExperimentConfig& config,
                             const ExperimentResult& result) {
  out << "instance,strategy,error_kind,error_param,seed,usage_us,lb_us,ratio\n";
  for (const CellResult& cell : result.cells) {
    out << result.instance_names[cell.instance_idx] << ',' << config.strategies[cell.strategy_idx]
        << ',' << detail::setting_kind(config, cell.setting_idx) << ','
        << detail::setting_param(config, cell.setting_idx) << ',' << cell.seed << ','
        << cell.report.total_usage_us << ',' << cell.report.lower_bound_us << ','
        << (cell.report.lower_bound_us > 0 ? format_ratio(performance_ratio(cell.report)) : "")
        << '\n';
  }
}

inline void write_boxstats_csv(std::ostream& out, const ExperimentConfig& config,
                               const ExperimentResult& result) {
  out << "strategy,error_kind,error_param,n,min,q1,median,q3,max,mean,whisker_low,whisker_high,"
         "outliers\n";
  // Per (strategy, setting): the per-instance mean ratio over seeds feeds
  // one sample per instance.
  std::map<std::pair<std::size_t, std::size_t>, std::map<std::size_t, std::vector<double>>> groups;
  for (const CellResult& cell : result.cells) {
    if (cell.report.lower_bound_us <= 0) continue;
    groups[{cell.strategy_idx, cell.setting_idx}][cell.instance_idx].push_back(
        performance_ratio(cell.report));
  }
  for (const auto& [key, by_instance] : groups) {
    std::vector<double> samples;
    for (const auto& [instance_idx, ratios] : by_instance) {
      double sum = 0;
      for (double r : ratios) sum += r;
      samples.push_back(sum / static_cast<double>(ratios.size()));
    }
    BoxStats stats = box_stats(samples);
    out << config.strategies[key.first] << ',' << detail::setting_kind(config, key.second) << ','
        << detail::setting_param(config, key.second) << ',' << samples.size() << ','
        << format_ratio(stats.min) << ',' << format_ratio(stats.q1) << ','
        << format_ratio(stats.median) << ',' << format_ratio(stats.q3) << ','
        << format_ratio(stats.max) << ',' << format_ratio(stats.mean) << ','
        << format_ratio(stats.whisker_low) << ',' << format_ratio(stats.whisker_high) << ',';
    for (std::size_t i = 0; i < stats.outliers.size(); ++i)
      out << (i ? ";" : "") << format_ratio(stats.outliers[i]);
    out << '\n';
  }
}

/// Sweep table: per (strategy, error setting), the mean over seeds of the
/// per-instance-mean performance ratio. Prediction-oblivious strategies
/// repeat their single value across every setting of the grid.
inline void write_sweep_csv(std::ostream& out, const ExperimentConfig& config,
                            const ExperimentResult& result) {
  out << "strategy,error_kind,error_param,mean_ratio\n";
  std::map<std::pair<std::size_t, std::size_t>, std::map<std::uint64_t, std::vector<double>>>
      groups;  // (strategy, setting) -> seed -> per-instance ratios
  for (const CellResult& cell : result.cells) {
    if (cell.report.lower_bound_us <= 0) continue;
    groups[{cell.strategy_idx, cell.setting_idx}][cell.seed].push_back(
        performance_ratio(cell.report));
  }
  auto cell_mean = [&](std::size_t strategy_idx, std::size_t setting_idx) -> std::optional<double> {
    auto it = groups.find({strategy_idx, setting_idx});
    if (it == groups.end()) return std::nullopt;
    double over_seeds = 0;
    for (const auto& [seed, ratios] : it->second) {
      double sum = 0;
      for (double r : ratios) sum += r;
      over_seeds += sum / static_cast<double>(ratios.size());
    }
    return over_seeds / static_cast<double>(it->second.size());
  };
  for (std::size_t si = 0; si < config.strategies.size(); ++si) {
    bool predictive = uses_predictions(config.strategies[si]);
    for (std::size_t ei = 0; ei < config.error_grid.size(); ++ei) {
      auto mean = predictive ? cell_mean(si, ei) : cell_mean(si, detail::kNoSetting);
      if (!mean) continue;
      out << config.strategies[si] << ',' << config.error_grid[ei].kind << ','
          << format_ratio(config.error_grid[ei].param) << ',' << format_ratio(*mean) << '\n';
    }
    if (config.error_grid.empty() && !predictive) {
      if (auto mean = cell_mean(si, detail::kNoSetting))
        out << config.strategies[si] << ",none,0," << format_ratio(*mean) << '\n';
    }
  }
}

/// Everything needed to reproduce the outputs byte for byte: the resolved
/// configuration, pinned constants and method choices.
inline nlohmann::json build_manifest(const ExperimentConfig& config) {
  nlohmann::json manifest;
  manifest["version"] = kArtifactVersion;
  manifest["instances"] = config.instance_paths;
  manifest["strategies"] = config.strategies;
  nlohmann::json errors = nlohmann::json::array();
  for (const ErrorSetting& s : config.error_grid) errors.push_back({{"kind", s.kind}, {"param", s.param}});
  manifest["errors"] = errors;
  manifest["seeds"] = config.seeds;
  manifest["jobs"] = config.jobs;
  manifest["constants"] = {
      {"capacity_tolerance", kCapacityTol},
      {"load_recompute_interval", kLoadRecomputeInterval},
      {"quartile_method", "linear interpolation on order statistics (inclusive)"},
      {"rng", "per-item SplitMix64 stream keyed by (seed, item id)"},
      {"best_fit_tie_break", "earliest-opened bin"},
      {"nrt_tie_break", "earlier indicated closing, then earliest-opened bin"},
      {"departure_arrival_tie", "departures precede arrivals at equal times"},
      {"ratio_precision", "6 significant digits"},
  };
  return manifest;
}

/// Runs a config against instance files and writes ratios.csv,
/// boxstats.csv, sweep.csv and manifest.json into `out_dir`.
inline ExperimentResult run_experiment(const ExperimentConfig& config, const std::string& out_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  std::vector<Instance> instances;
  for (const std::string& path : config.instance_paths) instances.push_back(load_instance(path));

  std::string log_dir;
  if (config.decision_logs) {
    log_dir = out_dir + "/logs";
    fs::create_directories(log_dir);
  }
  ExperimentResult result = run_experiment_matrix(config, instances, log_dir);

  std::ofstream ratios(out_dir + "/ratios.csv");
  write_ratios_csv(ratios, config, result);
  std::ofstream boxes(out_dir + "/boxstats.csv");
  write_boxstats_csv(boxes, config, result);
  std::ofstream sweep(out_dir + "/sweep.csv");
  write_sweep_csv(sweep, config, result);
  std::ofstream manifest(out_dir + "/manifest.json");
  manifest << build_manifest(config).dump(2) << '\n';
  return result;
}

}  // namespace dvbp

#endif  // DVBP_EXPERIMENT_HPP
