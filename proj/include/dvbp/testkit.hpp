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

#ifndef DVBP_TESTKIT_HPP
#define DVBP_TESTKIT_HPP

#include <algorithm>
#include <cstdint>
#include <limits>
#include <map>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "dvbp/core.hpp"
#include "dvbp/engine.hpp"
#include "dvbp/predictor.hpp"

namespace dvbp {

// ---------------------------------------------------------------------------
// Round-robin-next-fit adversary
// ---------------------------------------------------------------------------

/// Parameters of the round-based adversary that pins round-robin next fit
/// at a total usage of d*k*(1 + tau + r*mu) time units (units of the base
/// duration, emitted as seconds). Requires d >= 2 for the round dynamics
/// that spread the long items across all d*k bins.
struct RrnfAdversaryParams {
  int d = 2;
  int k = 4;        // even, d*k*eps <= 1
  int r = 10;       // rounds after the opening phase
  double mu = 8.0;  // long-item duration multiple, > 1
  double eps = 0.05;
  DurationUs tau_us = 1000;  // short slack after the unit duration

  void validate() const {
    if (d < 1 || d > kMaxDims) throw std::invalid_argument("rrnf adversary: bad d");
    if (k < 2 || k % 2 != 0) throw std::invalid_argument("rrnf adversary: k must be even and >= 2");
    if (r < 0) throw std::invalid_argument("rrnf adversary: r must be >= 0");
    if (eps <= 0 || d * k * eps > 1.0 + 1e-12)
      throw std::invalid_argument("rrnf adversary: need 0 < eps and d*k*eps <= 1");
    if (mu <= 1.0) throw std::invalid_argument("rrnf adversary: mu must exceed 1");
    if (tau_us <= static_cast<DurationUs>(r + 1))
      throw std::invalid_argument("rrnf adversary: tau too small for the release leads");
  }
};

/// The opening phase releases 2dk items at time zero: alternating
/// near-full items (size 1-eps everywhere, unit duration) and slivers
/// (size eps everywhere, duration 1+tau), pairing one of each per bin.
/// Each round then releases d groups of k/2 four-item segments just before
/// the previous round's long items depart; the long slivers (duration mu)
/// land one per bin and keep all d*k bins in use through every round.
/// Round release leads grow by one microsecond per round so each release
/// strictly precedes the departures it must beat.
inline Instance gen_rrnf_adversary(const RrnfAdversaryParams& p) {
  p.validate();
  Instance instance;
  instance.name = "rrnf-adversary";
  instance.d = p.d;

  std::int64_t id = 0;
  auto add = [&](TimePoint arrival, DurationUs duration, const SizeVector& size) {
    instance.items.push_back({id++, size, arrival, arrival + duration});
  };
  const DurationUs unit = kMicrosPerSecond;
  const DurationUs dur_one = unit;
  const auto dur_mu = static_cast<DurationUs>(std::llround(p.mu * static_cast<double>(unit)));

  SizeVector all_eps(p.d), all_near_full(p.d);
  for (int i = 0; i < p.d; ++i) {
    all_eps[i] = p.eps;
    all_near_full[i] = 1.0 - p.eps;
  }

  // Opening phase: odd-indexed near-full, even-indexed sliver.
  for (int i = 0; i < p.d * p.k; ++i) {
    add(0, dur_one, all_near_full);
    add(0, dur_one + p.tau_us, all_eps);
  }

  for (int round = 1; round <= p.r; ++round) {
    TimePoint release = dur_one + p.tau_us + static_cast<TimePoint>(round - 1) * dur_mu - round;
    for (int group = 1; group <= p.d; ++group) {
      int lead_dim = group - 1;                          // dimension j, 0-based
      int prev_dim = group >= 2 ? group - 2 : p.d - 1;   // dimension j-1, wrapping
      for (int segment = 0; segment < p.k / 2; ++segment) {
        SizeVector first(p.d);
        first[lead_dim] = p.d * p.eps;
        first[prev_dim] = p.d * p.eps;
        add(release, dur_one, first);
        add(release, dur_mu, all_eps);
        SizeVector third(p.d);
        for (int i = 0; i < p.d; ++i) third[i] = i == lead_dim ? 1.0 - p.d * p.eps : p.eps;
        add(release, dur_one, third);
        add(release, dur_mu, all_eps);
      }
    }
  }

  instance.sort_items();
  instance.recompute_metadata();
  return instance;
}

/// Usage-time target of the construction, in microseconds.
inline std::int64_t rrnf_adversary_formula_us(const RrnfAdversaryParams& p) {
  double seconds = static_cast<double>(p.d * p.k) *
                   (1.0 + seconds_from_us(p.tau_us) + static_cast<double>(p.r) * p.mu);
  return static_cast<std::int64_t>(std::llround(seconds * kMicrosPerSecond));
}

/// Idealized best-packing bound d*k + r*(1 + k/2 + mu), in microseconds.
inline std::int64_t rrnf_packing_bound_us(const RrnfAdversaryParams& p) {
  double seconds = static_cast<double>(p.d * p.k) +
                   static_cast<double>(p.r) * (1.0 + static_cast<double>(p.k) / 2.0 + p.mu);
  return static_cast<std::int64_t>(std::llround(seconds * kMicrosPerSecond));
}

// ---------------------------------------------------------------------------
// Fixed-assignment evaluation
// ---------------------------------------------------------------------------

/// An offline packing: bin label per item, aligned with instance.items.
struct FixedAssignment {
  std::vector<std::int64_t> bin_of_item;
};

struct AssignmentReport {
  bool feasible = false;
  std::int64_t usage_us = 0;
  std::int64_t bins_used = 0;
};

/// Sweeps the instance under a fixed assignment: checks unit capacity in
/// every dimension at all times and totals each bin's nonempty time.
inline AssignmentReport evaluate_assignment(const Instance& instance,
                                            const FixedAssignment& assignment) {
  if (assignment.bin_of_item.size() != instance.items.size())
    throw std::invalid_argument("evaluate_assignment: size mismatch");
  std::unordered_map<std::int64_t, std::size_t> index_of;
  for (std::size_t i = 0; i < instance.items.size(); ++i)
    index_of.emplace(instance.items[i].id, i);

  struct SweepBin {
    SizeVector load;
    int active = 0;
    TimePoint became_nonempty = 0;
    std::int64_t usage = 0;
  };
  std::map<std::int64_t, SweepBin> bins;

  AssignmentReport report;
  report.feasible = true;
  for (const Event& e : build_events(instance)) {
    std::size_t idx = index_of.at(e.item_id);
    const Item& item = instance.items[idx];
    std::int64_t label = assignment.bin_of_item[idx];
    auto [it, inserted] = bins.try_emplace(label);
    SweepBin& bin = it->second;
    if (inserted) bin.load = SizeVector(instance.d);

    if (e.kind == Event::Kind::Arrival) {
      if (!fits(bin.load, item.size)) report.feasible = false;
      if (bin.active == 0) bin.became_nonempty = e.time;
      bin.load += item.size;
      ++bin.active;
    } else {
      bin.load -= item.size;
      if (--bin.active == 0) bin.usage += e.time - bin.became_nonempty;
    }
  }
  for (const auto& [label, bin] : bins) report.usage_us += bin.usage;
  report.bins_used = static_cast<std::int64_t>(bins.size());
  return report;
}

/// The cheap offline packing for the adversary instance: opening items
/// pair up one bin each; every round keeps its long slivers in one bin and
/// its lead items join them when capacity allows (2*d*k*eps <= 1), with the
/// near-full third items grouped per segment across groups.
inline FixedAssignment gen_rrnf_feasible_assignment(const RrnfAdversaryParams& p,
                                                    const Instance& instance) {
  p.validate();
  FixedAssignment assignment;
  assignment.bin_of_item.resize(instance.items.size());
  std::unordered_map<std::int64_t, std::size_t> index_of;
  for (std::size_t i = 0; i < instance.items.size(); ++i)
    index_of.emplace(instance.items[i].id, i);
  auto assign = [&](std::int64_t item_id, std::int64_t label) {
    assignment.bin_of_item[index_of.at(item_id)] = label;
  };

  bool fold_firsts = 2.0 * p.d * p.k * p.eps <= 1.0 + 1e-12;
  std::int64_t id = 0;
  std::int64_t next_label = 0;
  // Opening phase: near-full item i shares a bin with sliver i.
  for (int i = 0; i < p.d * p.k; ++i) {
    assign(id++, next_label);
    assign(id++, next_label);
    ++next_label;
  }
  for (int round = 1; round <= p.r; ++round) {
    std::int64_t slivers = next_label++;
    std::int64_t firsts = fold_firsts ? slivers : next_label++;
    std::int64_t thirds_base = next_label;
    next_label += p.k / 2;
    for (int group = 1; group <= p.d; ++group) {
      for (int segment = 0; segment < p.k / 2; ++segment) {
        assign(id++, firsts);
        assign(id++, slivers);
        assign(id++, thirds_base + segment);
        assign(id++, slivers);
      }
    }
  }
  return assignment;
}

// ---------------------------------------------------------------------------
// Standard-NRT adversary
// ---------------------------------------------------------------------------

/// Initial items of size 1/2 + eps open n bins whose closing times form an
/// arithmetic sequence; each round then releases n slivers whose departures
/// sit a `split` fraction above successive closing times, so the
/// nearest-closing rule extends every bin each round while one bin would
/// have sufficed for all the slivers.
struct NrtAdversaryParams {
  int n = 4;
  int rounds = 3;
  double eps = 0.0;    // 0 picks 1 / (4 * n * rounds)
  double split = 0.4;  // fractional offset of sliver departures into the gap

  double sliver_size() const { return eps > 0 ? eps : 1.0 / (4.0 * n * rounds); }

  void validate() const {
    if (n < 2) throw std::invalid_argument("nrt adversary: n must be >= 2");
    if (rounds < 1) throw std::invalid_argument("nrt adversary: rounds must be >= 1");
    if (split <= 0 || split >= 0.5)
      throw std::invalid_argument("nrt adversary: split must lie in (0, 0.5)");
    double s = sliver_size();
    if (s <= 0 || n * rounds * s > 0.5 || 0.5 + s + rounds * s > 1.0)
      throw std::invalid_argument("nrt adversary: sliver size too large");
  }
};

inline Instance gen_nrt_adversary(const NrtAdversaryParams& p) {
  p.validate();
  Instance instance;
  instance.name = "nrt-adversary";
  instance.d = 1;

  const DurationUs gap = 10 * kMicrosPerSecond;
  const TimePoint first_closing = 3600 * kMicrosPerSecond;
  const auto shift = static_cast<DurationUs>(std::llround(p.split * static_cast<double>(gap)));
  const TimePoint round_spacing = first_closing / (2 * (p.rounds + 1));

  std::int64_t id = 0;
  for (int j = 0; j < p.n; ++j) {
    SizeVector size{0.5 + p.sliver_size()};
    TimePoint closing = first_closing + static_cast<TimePoint>(j) * gap;
    instance.items.push_back({id++, size, 0, closing});
  }
  for (int round = 1; round <= p.rounds; ++round) {
    TimePoint release = static_cast<TimePoint>(round) * round_spacing;
    for (int i = 1; i <= p.n; ++i) {
      // The i-th sliver lands `split` of a gap beyond the bin holding the
      // i-th smallest closing time at round start.
      TimePoint target_closing = first_closing + static_cast<TimePoint>(i - 1) * gap +
                                 static_cast<TimePoint>(round - 1) * shift;
      SizeVector size{p.sliver_size()};
      instance.items.push_back({id++, size, release, target_closing + shift});
    }
  }

  instance.sort_items();
  instance.recompute_metadata();
  return instance;
}

// ---------------------------------------------------------------------------
// Exact oracle
// ---------------------------------------------------------------------------

struct OptimalPacking {
  std::int64_t usage_us = 0;
  std::vector<int> bin_of_item;  // aligned with instance.items
};

namespace detail {

struct OracleBlock {
  std::vector<std::size_t> members;
};

inline bool block_feasible(const Instance& instance, const OracleBlock& block) {
  // Event sweep over just this block's items.
  std::vector<Event> events;
  for (std::size_t idx : block.members) {
    const Item& it = instance.items[idx];
    events.push_back({it.departure, Event::Kind::Departure, it.id});
    events.push_back({it.arrival, Event::Kind::Arrival, it.id});
  }
  std::sort(events.begin(), events.end());
  std::unordered_map<std::int64_t, const Item*> by_id;
  for (std::size_t idx : block.members) by_id.emplace(instance.items[idx].id, &instance.items[idx]);
  SizeVector load(instance.d);
  for (const Event& e : events) {
    const Item& it = *by_id.at(e.item_id);
    if (e.kind == Event::Kind::Arrival) {
      if (!fits(load, it.size)) return false;
      load += it.size;
    } else {
      load -= it.size;
    }
  }
  return true;
}

inline std::int64_t block_usage(const Instance& instance, const OracleBlock& block) {
  // Length of the union of the members' intervals.
  std::vector<std::pair<TimePoint, TimePoint>> spans;
  for (std::size_t idx : block.members)
    spans.emplace_back(instance.items[idx].arrival, instance.items[idx].departure);
  std::sort(spans.begin(), spans.end());
  std::int64_t total = 0;
  TimePoint cur_start = 0, cur_end = 0;
  bool open = false;
  for (auto [s, e] : spans) {
    if (!open || s > cur_end) {
      if (open) total += cur_end - cur_start;
      cur_start = s;
      cur_end = e;
      open = true;
    } else {
      cur_end = std::max(cur_end, e);
    }
  }
  if (open) total += cur_end - cur_start;
  return total;
}

struct OracleSearch {
  const Instance* instance;
  std::vector<OracleBlock> blocks;
  std::vector<std::int64_t> block_usages;
  std::int64_t partial_usage = 0;
  std::int64_t best = std::numeric_limits<std::int64_t>::max();
  std::vector<int> best_assignment;
  std::vector<int> current;

  void run(std::size_t item) {
    if (item == instance->items.size()) {
      if (partial_usage < best) {
        best = partial_usage;
        best_assignment = current;
      }
      return;
    }
    // Partial usage only grows as blocks gain items, so prune on it.
    if (partial_usage >= best) return;

    // Restricted growth: the item may join any existing block or open the
    // single next one; this enumerates every set partition exactly once.
    // Deeper calls may grow the blocks vector, so index instead of holding
    // references across the recursion.
    std::size_t existing = blocks.size();
    for (std::size_t b = 0; b <= existing; ++b) {
      if (b == existing) {
        blocks.push_back({});
        block_usages.push_back(0);
      }
      blocks[b].members.push_back(item);
      if (block_feasible(*instance, blocks[b])) {
        std::int64_t saved = block_usages[b];
        std::int64_t grown = block_usage(*instance, blocks[b]);
        block_usages[b] = grown;
        partial_usage += grown - saved;
        current[item] = static_cast<int>(b);
        run(item + 1);
        partial_usage -= grown - saved;
        block_usages[b] = saved;
      }
      blocks[b].members.pop_back();
      if (b == existing) {
        blocks.pop_back();
        block_usages.pop_back();
      }
    }
  }
};

}  // namespace detail

/// Exhaustive set-partition search for the optimal packing of a tiny
/// instance. Feasibility of a block is an event sweep with the core fits
/// predicate; a bin's usage is its nonempty time.
inline OptimalPacking brute_force_opt(const Instance& instance, std::size_t max_items = 8) {
  if (instance.items.size() > max_items)
    throw std::invalid_argument("brute_force_opt: instance too large (" +
                                std::to_string(instance.items.size()) + " items, cap " +
                                std::to_string(max_items) + ")");
  OptimalPacking result;
  if (instance.items.empty()) return result;
  detail::OracleSearch search;
  search.instance = &instance;
  search.current.assign(instance.items.size(), -1);
  search.blocks.reserve(instance.items.size());
  search.block_usages.reserve(instance.items.size());
  search.run(0);
  result.usage_us = search.best;
  result.bin_of_item = search.best_assignment;
  return result;
}

// ---------------------------------------------------------------------------
// Random workloads
// ---------------------------------------------------------------------------

struct RandomInstanceParams {
  int max_items = 6;
  int d = 2;
  TimePoint horizon_us = 100 * kMicrosPerSecond;
  DurationUs min_duration_us = kMicrosPerSecond / 10;
};

/// Seeded random workload: item count in [1, max_items], sizes U(0,1) per
/// dimension, arrivals uniform over the horizon, durations uniform up to
/// the horizon. Deterministic in (seed).
inline Instance gen_random_instance(std::uint64_t seed, const RandomInstanceParams& p = {}) {
  rng::CounterRng gen(seed, 0x5eedULL);
  Instance instance;
  instance.name = "random-" + std::to_string(seed);
  instance.d = p.d;
  int n = 1 + static_cast<int>(gen.next_u64() % static_cast<std::uint64_t>(p.max_items));
  for (int i = 0; i < n; ++i) {
    Item it;
    it.id = i;
    it.size = SizeVector(p.d);
    for (int k = 0; k < p.d; ++k) it.size[k] = gen.next_unit();
    it.arrival = static_cast<TimePoint>(gen.next_u64() % static_cast<std::uint64_t>(p.horizon_us));
    auto span = static_cast<std::uint64_t>(p.horizon_us - p.min_duration_us);
    it.departure = it.arrival + p.min_duration_us +
                   static_cast<DurationUs>(span ? gen.next_u64() % span : 0);
    instance.items.push_back(it);
  }
  instance.sort_items();
  instance.recompute_metadata();
  return instance;
}

}  // namespace dvbp

#endif  // DVBP_TESTKIT_HPP
