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
//
// Command-line front end: trace ingestion, adversary generation, the exact
// oracle, experiment runs and box-plot statistics.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "dvbp/engine.hpp"
#include "dvbp/experiment.hpp"
#include "dvbp/ingest.hpp"
#include "dvbp/instance_io.hpp"
#include "dvbp/reporting.hpp"
#include "dvbp/strategy_factory.hpp"
#include "dvbp/testkit.hpp"

namespace fs = std::filesystem;

namespace {

dvbp::ingest::ColumnMap load_column_map(const std::string& path) {
  dvbp::ingest::ColumnMap map;
  if (path.empty()) return map;
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open column map: " + path);
  nlohmann::json doc = nlohmann::json::parse(in);
  for (auto it = doc.begin(); it != doc.end(); ++it) map[it.key()] = it.value().get<std::string>();
  return map;
}

void write_lifetime_files(const dvbp::Instance& instance, const std::string& prefix) {
  dvbp::ingest::LifetimeHistogram hist = dvbp::ingest::lifetime_histogram(instance);
  {
    std::ofstream out(prefix + "_histogram.csv");
    out << "bucket,low_seconds,high_seconds,count\n";
    for (const auto& [i, count] : hist.buckets)
      out << i << ',' << std::ldexp(1.0, i - 1) << ',' << std::ldexp(1.0, i) << ',' << count << '\n';
  }
  {
    std::ofstream out(prefix + "_log_lifetimes.txt");
    for (double v : hist.log_lifetimes) out << v << '\n';
  }
}

int run_ingest_azure(const std::string& types_path, const std::string& requests_path,
                     const std::string& out_dir, const std::string& columns_path,
                     bool lifetimes) {
  dvbp::ingest::ColumnMap columns = load_column_map(columns_path);
  auto types = dvbp::ingest::read_azure_types(types_path, columns);
  auto requests = dvbp::ingest::read_azure_requests(requests_path, columns);
  dvbp::ingest::CleanStats stats;
  auto cleaned = dvbp::ingest::clean_azure(requests, &stats);
  std::cout << "requests total " << stats.total << ", kept " << stats.kept << " (null-end "
            << stats.dropped_null_end << ", negative-start " << stats.dropped_negative_start
            << ", beyond-14d " << stats.dropped_beyond_14_days << ")\n";

  auto built = dvbp::ingest::build_azure_instances(types, cleaned);
  std::cout << "instances " << built.instances.size() << " (empty " << built.empty_dropped
            << ", duplicate " << built.duplicate_dropped << ", trivial " << built.trivial_dropped
            << ", zero-duration items " << built.zero_duration_items << ")\n";

  fs::create_directories(out_dir);
  for (const dvbp::Instance& inst : built.instances) {
    dvbp::save_instance(out_dir + "/" + inst.name + ".inst", inst);
    if (lifetimes) write_lifetime_files(inst, out_dir + "/" + inst.name);
  }
  return 0;
}

int run_ingest_huawei(const std::string& events_path, const std::string& out_dir,
                      const std::string& capacities, const std::string& columns_path,
                      bool lifetimes) {
  dvbp::ingest::ColumnMap columns = load_column_map(columns_path);
  auto caps = capacities.empty() ? dvbp::ingest::default_huawei_capacities()
                                 : dvbp::ingest::parse_huawei_capacities(capacities);
  auto parsed = dvbp::ingest::parse_huawei(events_path, caps, columns);
  std::cout << "vms " << parsed.vm_count << " (unpaired events " << parsed.unpaired_dropped
            << ", zero-duration " << parsed.zero_duration_items << ", oversized "
            << parsed.oversized_dropped << "), instances " << parsed.instances.size() << "\n";
  fs::create_directories(out_dir);
  for (const dvbp::Instance& inst : parsed.instances) {
    dvbp::save_instance(out_dir + "/" + inst.name + ".inst", inst);
    if (lifetimes) write_lifetime_files(inst, out_dir + "/" + inst.name);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"MinUsageTime dynamic vector bin packing simulator"};
  app.require_subcommand(1);

  // ingest
  auto* ingest = app.add_subcommand("ingest", "parse and clean trace datasets");
  ingest->require_subcommand(1);
  std::string types_path, requests_path, events_path, out_dir = "instances";
  std::string columns_path, capacities;
  bool lifetimes = false;

  auto* azure = ingest->add_subcommand("azure", "Azure VM packing trace");
  azure->add_option("--types", types_path, "VMType table file")->required();
  azure->add_option("--requests", requests_path, "VMRequest table file")->required();
  azure->add_option("--out", out_dir, "output directory");
  azure->add_option("--columns", columns_path, "JSON column-name map");
  azure->add_flag("--lifetimes", lifetimes, "emit lifetime histogram and log-lifetime data");

  auto* huawei = ingest->add_subcommand("huawei", "Huawei VM placement trace");
  huawei->add_option("--events", events_path, "event table file")->required();
  huawei->add_option("--out", out_dir, "output directory");
  huawei->add_option("--capacities", capacities, "capacity combos, e.g. 64x128,100x200");
  huawei->add_option("--columns", columns_path, "JSON column-name map");
  huawei->add_flag("--lifetimes", lifetimes, "emit lifetime histogram and log-lifetime data");

  // gen
  auto* gen = app.add_subcommand("gen", "generate adversary instances");
  gen->require_subcommand(1);
  dvbp::RrnfAdversaryParams rrnf_params;
  dvbp::NrtAdversaryParams nrt_params;
  std::string gen_out = "adversary.inst";
  double tau_seconds = 0.001;

  auto* gen_rrnf = gen->add_subcommand("rrnf", "round-robin-next-fit adversary");
  gen_rrnf->add_option("--d", rrnf_params.d, "dimensions");
  gen_rrnf->add_option("--k", rrnf_params.k, "items per dimension (even)");
  gen_rrnf->add_option("--r", rrnf_params.r, "rounds");
  gen_rrnf->add_option("--mu", rrnf_params.mu, "long-item duration multiple");
  gen_rrnf->add_option("--eps", rrnf_params.eps, "sliver size");
  gen_rrnf->add_option("--tau", tau_seconds, "slack after the unit duration, seconds");
  gen_rrnf->add_option("--out", gen_out, "output instance file");

  auto* gen_nrt = gen->add_subcommand("nrt", "standard-NRT adversary");
  gen_nrt->add_option("--n", nrt_params.n, "initial bins");
  gen_nrt->add_option("--rounds", nrt_params.rounds, "sliver rounds");
  gen_nrt->add_option("--eps", nrt_params.eps, "sliver size (0 = automatic)");
  gen_nrt->add_option("--split", nrt_params.split, "departure offset into the closing gap");
  gen_nrt->add_option("--out", gen_out, "output instance file");

  // oracle
  auto* oracle = app.add_subcommand("oracle", "exact optimum for a tiny instance");
  std::string oracle_path;
  std::size_t oracle_cap = 8;
  oracle->add_option("instance", oracle_path, "instance file")->required();
  oracle->add_option("--max-items", oracle_cap, "search size cap");

  // run
  auto* run = app.add_subcommand("run", "run an experiment config");
  std::string config_path, run_out = "results";
  int jobs = 0;
  std::uint64_t seed_base = 1;
  run->add_option("config", config_path, "experiment config (JSON)")->required();
  run->add_option("--out", run_out, "output directory");
  run->add_option("--jobs", jobs, "worker threads (overrides config)");
  run->add_option("--seed-base", seed_base, "base for default seeds");

  // stats
  auto* stats = app.add_subcommand("stats", "box-plot statistics and lifetime data");
  std::string ratios_path, stats_out = "boxstats.csv", lifetimes_instance;
  stats->add_option("--ratios", ratios_path, "ratios.csv from a run");
  stats->add_option("--out", stats_out, "output file or prefix");
  stats->add_option("--lifetimes", lifetimes_instance, "instance file for lifetime data");

  CLI11_PARSE(app, argc, argv);

  try {
    if (azure->parsed()) return run_ingest_azure(types_path, requests_path, out_dir, columns_path, lifetimes);
    if (huawei->parsed()) return run_ingest_huawei(events_path, out_dir, capacities, columns_path, lifetimes);

    if (gen_rrnf->parsed()) {
      rrnf_params.tau_us = dvbp::us_from_seconds(tau_seconds);
      dvbp::Instance inst = dvbp::gen_rrnf_adversary(rrnf_params);
      dvbp::save_instance(gen_out, inst);
      std::cout << "wrote " << gen_out << " (" << inst.items.size() << " items, target usage "
                << dvbp::seconds_from_us(dvbp::rrnf_adversary_formula_us(rrnf_params)) << " s)\n";
      return 0;
    }
    if (gen_nrt->parsed()) {
      dvbp::Instance inst = dvbp::gen_nrt_adversary(nrt_params);
      dvbp::save_instance(gen_out, inst);
      std::cout << "wrote " << gen_out << " (" << inst.items.size() << " items)\n";
      return 0;
    }

    if (oracle->parsed()) {
      dvbp::Instance inst = dvbp::load_instance(oracle_path);
      dvbp::OptimalPacking opt = dvbp::brute_force_opt(inst, oracle_cap);
      std::cout << "optimal usage_us " << opt.usage_us << " (" << dvbp::seconds_from_us(opt.usage_us)
                << " s)\nassignment:";
      for (std::size_t i = 0; i < opt.bin_of_item.size(); ++i)
        std::cout << ' ' << inst.items[i].id << ":b" << opt.bin_of_item[i];
      std::cout << "\nlower_bound_us " << dvbp::lower_bound(inst) << "\n";
      return 0;
    }

    if (run->parsed()) {
      std::ifstream in(config_path);
      if (!in) throw std::runtime_error("cannot open config: " + config_path);
      nlohmann::json doc = nlohmann::json::parse(in);
      dvbp::ExperimentConfig config = dvbp::parse_experiment_config(doc, seed_base);
      if (jobs > 0) config.jobs = jobs;
      dvbp::ExperimentResult result = dvbp::run_experiment(config, run_out);
      std::cout << "ran " << result.cells.size() << " cells over " << result.instance_names.size()
                << " instances; outputs in " << run_out << "\n";
      return result.all_audits_passed ? 0 : 1;
    }

    if (stats->parsed()) {
      if (!lifetimes_instance.empty()) {
        dvbp::Instance inst = dvbp::load_instance(lifetimes_instance);
        write_lifetime_files(inst, stats_out);
        std::cout << "wrote " << stats_out << "_histogram.csv and " << stats_out
                  << "_log_lifetimes.txt\n";
        return 0;
      }
      if (ratios_path.empty()) throw std::runtime_error("stats: need --ratios or --lifetimes");
      // Group ratios.csv rows by (strategy, error setting) and emit box stats.
      std::ifstream in(ratios_path);
      if (!in) throw std::runtime_error("cannot open: " + ratios_path);
      std::string line;
      std::getline(in, line);  // header
      std::map<std::string, std::vector<double>> groups;
      while (std::getline(in, line)) {
        std::istringstream ls(line);
        std::string instance, strategy, kind, param, seed, usage, lb, ratio;
        std::getline(ls, instance, ',');
        std::getline(ls, strategy, ',');
        std::getline(ls, kind, ',');
        std::getline(ls, param, ',');
        std::getline(ls, seed, ',');
        std::getline(ls, usage, ',');
        std::getline(ls, lb, ',');
        std::getline(ls, ratio, ',');
        if (ratio.empty()) continue;
        groups[strategy + "," + kind + "," + param].push_back(std::stod(ratio));
      }
      std::ofstream out(stats_out);
      out << "strategy,error_kind,error_param,n,min,q1,median,q3,max,mean,whisker_low,"
             "whisker_high,outliers\n";
      for (const auto& [key, values] : groups) {
        dvbp::BoxStats bs = dvbp::box_stats(values);
        out << key << ',' << values.size() << ',' << dvbp::format_ratio(bs.min) << ','
            << dvbp::format_ratio(bs.q1) << ',' << dvbp::format_ratio(bs.median) << ','
            << dvbp::format_ratio(bs.q3) << ',' << dvbp::format_ratio(bs.max) << ','
            << dvbp::format_ratio(bs.mean) << ',' << dvbp::format_ratio(bs.whisker_low) << ','
            << dvbp::format_ratio(bs.whisker_high) << ',';
        for (std::size_t i = 0; i < bs.outliers.size(); ++i)
          out << (i ? ";" : "") << dvbp::format_ratio(bs.outliers[i]);
        out << '\n';
      }
      std::cout << "wrote " << stats_out << "\n";
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
