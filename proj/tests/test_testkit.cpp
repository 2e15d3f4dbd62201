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

#include "dvbp/engine.hpp"
#include "dvbp/testkit.hpp"
#include "test_util.hpp"

using namespace dvbp;
using test::make_instance;
using test::run;

TEST_CASE("rrnf adversary: opening phase alone opens d*k bins") {
  RrnfAdversaryParams p;
  p.d = 2;
  p.k = 4;
  p.r = 0;
  Instance inst = gen_rrnf_adversary(p);
  RunReport r = run(inst, "rr-next-fit");
  CHECK(r.bins_opened == p.d * p.k);
  CHECK(r.max_concurrent_bins == p.d * p.k);
}

TEST_CASE("rrnf adversary pins round robin next fit at the target usage") {
  RrnfAdversaryParams p;
  p.d = 2;
  p.k = 2;
  p.r = 3;
  p.mu = 4.0;
  p.eps = 0.05;
  Instance inst = gen_rrnf_adversary(p);
  RunReport r = run(inst, "rr-next-fit");
  double target = static_cast<double>(rrnf_adversary_formula_us(p));
  double actual = static_cast<double>(r.total_usage_us);
  CHECK(std::abs(actual - target) / target < 1e-6);
  CHECK(r.max_concurrent_bins == p.d * p.k);
}

TEST_CASE("rrnf feasible assignment is valid and beats the adversary bound") {
  RrnfAdversaryParams p;
  p.d = 2;
  p.k = 4;
  p.r = 10;
  p.mu = 8.0;
  p.eps = 0.05;
  Instance inst = gen_rrnf_adversary(p);
  FixedAssignment assignment = gen_rrnf_feasible_assignment(p, inst);
  AssignmentReport rep = evaluate_assignment(inst, assignment);
  CHECK(rep.feasible);
  CHECK(rep.usage_us <= rrnf_packing_bound_us(p));
}

TEST_CASE("assignment evaluator flags infeasible packings") {
  Instance inst = make_instance({{0.7, 0, 10}, {0.7, 1, 9}});
  FixedAssignment everything_together{{0, 0}};
  AssignmentReport rep = evaluate_assignment(inst, everything_together);
  CHECK_FALSE(rep.feasible);

  FixedAssignment split{{0, 1}};
  AssignmentReport rep2 = evaluate_assignment(inst, split);
  CHECK(rep2.feasible);
  CHECK(rep2.usage_us == 18 * kMicrosPerSecond);
}

TEST_CASE("nrt adversary keeps standard nrt at n bins while prioritized wins") {
  NrtAdversaryParams p;
  p.n = 4;
  p.rounds = 3;
  Instance inst = gen_nrt_adversary(p);
  RunReport standard = run(inst, "nrt:standard");
  RunReport prioritized = run(inst, "nrt:prioritized");
  CHECK(standard.max_concurrent_bins == p.n);
  CHECK(standard.bins_opened == p.n);
  CHECK(prioritized.total_usage_us < standard.total_usage_us);
}

TEST_CASE("nrt adversary slivers pack into one bin once the openers leave") {
  NrtAdversaryParams p;
  p.n = 4;
  p.rounds = 2;  // 8 slivers keep the oracle within its cap
  Instance inst = gen_nrt_adversary(p);
  Instance slivers;
  slivers.name = "slivers";
  slivers.d = 1;
  for (const Item& it : inst.items)
    if (it.size[0] < 0.5) slivers.items.push_back(it);
  slivers.sort_items();
  slivers.recompute_metadata();
  REQUIRE(slivers.items.size() == static_cast<std::size_t>(p.n * p.rounds));
  OptimalPacking opt = brute_force_opt(slivers);
  std::int64_t max_bin = 0;
  for (int b : opt.bin_of_item) max_bin = std::max<std::int64_t>(max_bin, b);
  CHECK(max_bin == 0);  // a single bin suffices
}

TEST_CASE("brute force oracle on hand-checkable instances") {
  Instance incompatible = make_instance({{0.6, 0, 10}, {0.6, 0, 10}});
  OptimalPacking a = brute_force_opt(incompatible);
  CHECK(a.usage_us == 20 * kMicrosPerSecond);
  CHECK(a.bin_of_item[0] != a.bin_of_item[1]);

  Instance compatible = make_instance({{0.4, 0, 10}, {0.4, 0, 10}});
  OptimalPacking b = brute_force_opt(compatible);
  CHECK(b.usage_us == 10 * kMicrosPerSecond);
  CHECK(b.bin_of_item[0] == b.bin_of_item[1]);
}

TEST_CASE("oracle refuses oversized instances") {
  Instance inst = gen_random_instance(1, {.max_items = 12, .d = 1});
  while (inst.items.size() <= 8) inst = gen_random_instance(inst.items.size() + 100, {.max_items = 12, .d = 1});
  CHECK_THROWS_AS(brute_force_opt(inst, 8), std::invalid_argument);
}

TEST_CASE("oracle sits between the lower bound and every strategy") {
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    Instance inst = gen_random_instance(seed, {.max_items = 6, .d = 2});
    OptimalPacking opt = brute_force_opt(inst);
    std::int64_t lb = lower_bound(inst);
    CHECK(opt.usage_us >= lb);
    RunReport ff = run(inst, "first-fit");
    CHECK(ff.total_usage_us >= opt.usage_us);
    RunReport gd = run(inst, "greedy");
    CHECK(gd.total_usage_us >= opt.usage_us);
  }
}

TEST_CASE("random instances respect core invariants") {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    Instance inst = gen_random_instance(seed, {.max_items = 20, .d = 2});
    CHECK_NOTHROW(inst.validate());
    CHECK(inst.min_duration > 0);
    CHECK(inst.mu >= 1.0);
  }
}
