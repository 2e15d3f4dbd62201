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

#include <filesystem>
#include <fstream>
#include <sstream>

#include "dvbp/ingest.hpp"
#include "dvbp/instance_io.hpp"
#include "dvbp/testkit.hpp"

using namespace dvbp;
using namespace dvbp::ingest;

namespace {

std::string write_temp(const std::string& name, const std::string& content) {
  auto path = std::filesystem::temp_directory_path() / name;
  std::ofstream out(path);
  out << content;
  return path.string();
}

}  // namespace

TEST_CASE("azure cleaning drops exactly the out-of-window records") {
  std::string path = write_temp("vmreq.csv",
                                "vmType,starttime,endtime\n"
                                "1,0.5,2.0\n"     // kept
                                "1,-0.1,2.0\n"    // negative start
                                "1,1.0,20.0\n"    // beyond 14 days
                                "2,3.0,\n"        // null end
                                "2,0.0,14.0\n"    // kept: exactly 14 days
                                "2,1.25,1.5\n");  // kept
  auto requests = read_azure_requests(path);
  CHECK(requests.size() == 6);
  CleanStats stats;
  auto kept = clean_azure(requests, &stats);
  CHECK(stats.total == 6);
  CHECK(stats.kept == 3);
  CHECK(stats.dropped_null_end == 1);
  CHECK(stats.dropped_negative_start == 1);
  CHECK(stats.dropped_beyond_14_days == 1);

  // Idempotent: cleaning the cleaned set changes nothing.
  CleanStats again;
  auto twice = clean_azure(kept, &again);
  CHECK(twice.size() == kept.size());
  CHECK(again.kept == again.total);
}

TEST_CASE("azure cleaning rejects malformed rows with their row number") {
  std::string path = write_temp("vmreq_bad.csv",
                                "vmType,starttime,endtime\n"
                                "1,0.5,2.0\n"
                                "1,zzz,2.0\n");
  CHECK_THROWS_WITH(read_azure_requests(path), Catch::Matchers::ContainsSubstring("row 2"));
}

TEST_CASE("azure types parse nulls as zero usage") {
  std::string path = write_temp("vmtype.csv",
                                "vmType,pmType,core,memory,hdd,ssd,nic\n"
                                "1,10,0.25,0.5,,0.1,0.05\n"
                                "2,10,0.5,0.25,null,0.2,0.05\n");
  auto types = read_azure_types(path);
  REQUIRE(types.size() == 2);
  CHECK(types[0].usage[2] == 0.0);
  CHECK(types[1].usage[2] == 0.0);
}

TEST_CASE("azure instance construction: dimensions, duplicates, trivia") {
  // PM 10 and PM 11 host identical VM sets (duplicate); PM 12 has HDD usage
  // (d=5); PM 13's only compatible VM never appears (empty); PM 14 sees one
  // tiny VM whose aggregate never tops one machine (trivial).
  std::string types_path = write_temp(
      "vmtype2.csv",
      "vmType,pmType,core,memory,hdd,ssd,nic\n"
      "1,10,0.6,0.5,,0.1,0.05\n"
      "1,11,0.6,0.5,0,0.1,0.05\n"
      "2,12,0.5,0.4,0.3,0.1,0.05\n"
      "3,13,0.5,0.5,,0.5,0.5\n"
      "4,14,0.2,0.1,,0.1,0.05\n");
  std::string requests_path = write_temp(
      "vmreq2.csv",
      "vmType,starttime,endtime\n"
      "1,0.0,1.0\n"
      "1,0.5,2.0\n"   // overlaps the first: aggregate core 1.2 > 1 on PM 10/11
      "2,0.0,1.0\n"
      "2,0.2,1.2\n"   // aggregate core 1.0, hdd 0.6 -> nontrivial via core? 1.0 <= 1; ssd .2; no
      "2,0.4,1.4\n"   // three overlap at 0.4..1.0: core 1.5 > 1
      "4,0.0,3.0\n");
  auto types = read_azure_types(types_path);
  auto requests = clean_azure(read_azure_requests(requests_path));
  AzureBuildResult built = build_azure_instances(types, requests);

  CHECK(built.empty_dropped == 1);      // PM 13
  CHECK(built.duplicate_dropped == 1);  // PM 11 duplicates PM 10
  CHECK(built.trivial_dropped == 1);    // PM 14
  REQUIRE(built.instances.size() == 2);

  const Instance* pm10 = nullptr;
  const Instance* pm12 = nullptr;
  for (const Instance& inst : built.instances) {
    if (inst.name == "azure-pm10") pm10 = &inst;
    if (inst.name == "azure-pm12") pm12 = &inst;
  }
  REQUIRE(pm10 != nullptr);
  REQUIRE(pm12 != nullptr);
  CHECK(pm10->d == 4);  // HDD all-zero column elided
  CHECK(pm12->d == 5);
  CHECK(pm10->items.size() == 2);
  CHECK(pm12->items.size() == 3);
  for (const Instance& inst : built.instances) CHECK_NOTHROW(inst.validate());
}

TEST_CASE("huawei parsing pairs events and normalizes by capacity") {
  std::string path = write_temp("huawei.csv",
                                "vmid,time,cpu,memory,type\n"
                                "1,0,64,128,0\n"
                                "1,100,64,128,1\n"
                                "2,10,4,8,0\n"
                                "2,50,4,8,1\n"
                                "3,20,8,16,0\n");  // never terminates
  auto result = parse_huawei(path, parse_huawei_capacities("128x256,64x128"));
  CHECK(result.vm_count == 2);
  CHECK(result.unpaired_dropped == 1);
  REQUIRE(result.instances.size() == 2);

  const Instance& big = result.instances[0];  // 128 cores, 256 GB
  REQUIRE(big.items.size() == 2);
  CHECK(big.items[0].size[0] == Catch::Approx(0.5));  // 64 / 128 cores
  CHECK(big.items[0].size[1] == Catch::Approx(0.5));

  const Instance& tight = result.instances[1];  // 64 cores, 128 GB
  CHECK(tight.items[0].size[0] == Catch::Approx(1.0));
  CHECK(tight.d == 2);
  for (const Instance& inst : result.instances) CHECK_NOTHROW(inst.validate());
}

TEST_CASE("default huawei capacity grid has nine combos") {
  CHECK(default_huawei_capacities().size() == 9);
}

TEST_CASE("lifetime histogram buckets partition the items") {
  CHECK(lifetime_bucket(3 * kMicrosPerSecond) == 2);  // [2,4)
  CHECK(lifetime_bucket(1 * kMicrosPerSecond) == 1);  // [1,2)
  CHECK(lifetime_bucket(kMicrosPerSecond / 2) == 0);  // [0.5,1)
  CHECK(lifetime_bucket(2 * kMicrosPerSecond) == 2);  // boundary into [2,4)

  Instance inst = gen_random_instance(17, {.max_items = 200, .d = 2});
  LifetimeHistogram hist = lifetime_histogram(inst);
  std::int64_t total = 0;
  for (const auto& [bucket, count] : hist.buckets) total += count;
  CHECK(total == static_cast<std::int64_t>(inst.items.size()));
  CHECK(hist.log_lifetimes.size() == inst.items.size());
}

TEST_CASE("instance files round-trip exactly") {
  Instance inst = gen_random_instance(23, {.max_items = 40, .d = 3});
  auto path = std::filesystem::temp_directory_path() / "roundtrip.inst";
  save_instance(path.string(), inst);
  Instance loaded = load_instance(path.string());
  CHECK(loaded.name == inst.name);
  CHECK(loaded.d == inst.d);
  CHECK(loaded.min_duration == inst.min_duration);
  REQUIRE(loaded.items.size() == inst.items.size());
  for (std::size_t i = 0; i < inst.items.size(); ++i) {
    CHECK(loaded.items[i].id == inst.items[i].id);
    CHECK(loaded.items[i].arrival == inst.items[i].arrival);
    CHECK(loaded.items[i].departure == inst.items[i].departure);
    CHECK(loaded.items[i].size == inst.items[i].size);
  }
}

TEST_CASE("column maps adapt foreign header names") {
  std::string path = write_temp("foreign.csv",
                                "vm_type_id|start_days|end_days\n"
                                "7|0.25|0.75\n");
  ColumnMap map{{"vmType", "vm_type_id"}, {"starttime", "start_days"}, {"endtime", "end_days"}};
  auto requests = read_azure_requests(path, map);
  REQUIRE(requests.size() == 1);
  CHECK(requests[0].vm_type == 7);
  CHECK(requests[0].end_days == Catch::Approx(0.75));
}
