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

#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <sstream>

#include "dvbp/experiment.hpp"
#include "dvbp/predictor.hpp"
#include "dvbp/reporting.hpp"
#include "dvbp/testkit.hpp"
#include "test_util.hpp"

using namespace dvbp;

TEST_CASE("performance ratio is usage over lower bound") {
  RunReport r;
  r.total_usage_us = 20 * kMicrosPerSecond;
  r.lower_bound_us = 20 * kMicrosPerSecond;
  CHECK(performance_ratio(r) == Catch::Approx(1.0));
  r.total_usage_us = 30 * kMicrosPerSecond;
  CHECK(performance_ratio(r) == Catch::Approx(1.5));
  r.lower_bound_us = 0;
  CHECK_THROWS_AS(performance_ratio(r), std::invalid_argument);
}

TEST_CASE("ratios never dip below one across strategies") {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    Instance inst = gen_random_instance(seed, {.max_items = 25, .d = 2});
    for (const char* name : {"first-fit", "greedy", "nrt:prioritized"}) {
      RunReport r = test::run(inst, name);
      CHECK(performance_ratio(r) >= 1.0 - 1e-9);
    }
  }
}

TEST_CASE("box stats on a plain run of integers") {
  BoxStats s = box_stats({1, 2, 3, 4, 5});
  CHECK(s.median == 3.0);
  CHECK(s.q1 == 2.0);
  CHECK(s.q3 == 4.0);
  CHECK(s.min == 1.0);
  CHECK(s.max == 5.0);
  CHECK(s.mean == 3.0);
  CHECK(s.outliers.empty());
  CHECK(s.whisker_low == 1.0);
  CHECK(s.whisker_high == 5.0);
}

TEST_CASE("box stats flags far points as outliers") {
  BoxStats s = box_stats({1, 1, 1, 1, 100});
  REQUIRE(s.outliers.size() == 1);
  CHECK(s.outliers[0] == 100.0);
  CHECK(s.whisker_high == 1.0);
}

TEST_CASE("box stats of a single value degenerates to it") {
  BoxStats s = box_stats({2.5});
  CHECK(s.min == 2.5);
  CHECK(s.q1 == 2.5);
  CHECK(s.median == 2.5);
  CHECK(s.q3 == 2.5);
  CHECK(s.max == 2.5);
  CHECK(s.whisker_low == 2.5);
  CHECK(s.whisker_high == 2.5);
}

TEST_CASE("box stats is permutation invariant") {
  std::vector<double> values{3.2, 1.1, 9.9, 2.4, 5.5, 5.5, 0.3, 7.8};
  BoxStats a = box_stats(values);
  std::reverse(values.begin(), values.end());
  BoxStats b = box_stats(values);
  CHECK(a.q1 == b.q1);
  CHECK(a.median == b.median);
  CHECK(a.q3 == b.q3);
  CHECK(a.mean == b.mean);
  CHECK(a.outliers == b.outliers);
}

TEST_CASE("sweep table: first fit is constant and rcp matches ppe at zero error") {
  std::vector<Instance> instances;
  for (std::uint64_t seed = 1; seed <= 4; ++seed)
    instances.push_back(gen_random_instance(seed, {.max_items = 25, .d = 2}));

  ExperimentConfig config;
  for (const Instance& inst : instances) config.instance_paths.push_back(inst.name);
  config.strategies = {"first-fit", "rcp", "ppe"};
  config.error_grid = {{"lognormal", 0.0}, {"lognormal", 1.0}, {"lognormal", 2.0}};
  config.seeds = {1, 2, 3};
  config.jobs = 2;
  ExperimentResult result = run_experiment_matrix(config, instances);

  // Zero-spread column: rcp and ppe usages coincide per (instance, seed).
  std::map<std::tuple<std::size_t, std::size_t, std::uint64_t>, std::int64_t> usage;
  for (const CellResult& cell : result.cells)
    usage[{cell.strategy_idx, cell.setting_idx == detail::kNoSetting ? 99 : cell.setting_idx,
           cell.seed}] += cell.report.total_usage_us;
  for (std::uint64_t seed : config.seeds)
    CHECK(usage[{1, 0, seed}] == usage[{2, 0, seed}]);

  std::ostringstream sweep;
  write_sweep_csv(sweep, config, result);
  std::string csv = sweep.str();
  // First fit appears once per error setting with one identical value.
  std::istringstream lines(csv);
  std::string line;
  std::getline(lines, line);  // header
  std::vector<std::string> ff_values;
  while (std::getline(lines, line))
    if (line.rfind("first-fit,", 0) == 0) ff_values.push_back(line.substr(line.rfind(',') + 1));
  REQUIRE(ff_values.size() == config.error_grid.size());
  for (const std::string& v : ff_values) CHECK(v == ff_values.front());
}

TEST_CASE("experiment reruns reproduce csv output byte for byte") {
  std::vector<Instance> instances{gen_random_instance(7, {.max_items = 20, .d = 2})};
  ExperimentConfig config;
  config.instance_paths = {"inline"};
  config.strategies = {"first-fit", "ppe-nolarge", "predicted:greedy"};
  config.error_grid = {{"lognormal", 0.5}, {"uniform", 4.0}};
  config.seeds = {5, 6};
  config.jobs = 3;

  auto render = [&]() {
    ExperimentResult result = run_experiment_matrix(config, instances);
    std::ostringstream ratios, boxes, sweep;
    write_ratios_csv(ratios, config, result);
    write_boxstats_csv(boxes, config, result);
    write_sweep_csv(sweep, config, result);
    return ratios.str() + boxes.str() + sweep.str();
  };
  CHECK(render() == render());
}

TEST_CASE("manifest pins methods and constants") {
  ExperimentConfig config;
  config.instance_paths = {"x"};
  config.strategies = {"first-fit"};
  config.seeds = {1};
  nlohmann::json manifest = build_manifest(config);
  CHECK(manifest["constants"]["capacity_tolerance"] == kCapacityTol);
  CHECK(manifest["constants"].contains("quartile_method"));
  CHECK(manifest["constants"].contains("rng"));
  CHECK(manifest["version"] == kArtifactVersion);
}
