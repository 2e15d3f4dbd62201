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

#ifndef DVBP_ENGINE_HPP
#define DVBP_ENGINE_HPP

#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <ostream>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "dvbp/core.hpp"
#include "dvbp/predictor.hpp"
#include "dvbp/strategy.hpp"

namespace dvbp {

/// Half-open intervals force departures to order before arrivals at equal
/// times: an item departing at t frees capacity for an item arriving at t.
struct Event {
  enum class Kind : std::uint8_t { Departure = 0, Arrival = 1 };

  TimePoint time = 0;
  Kind kind = Kind::Departure;
  std::int64_t item_id = 0;

  friend bool operator<(const Event& a, const Event& b) {
    if (a.time != b.time) return a.time < b.time;
    if (a.kind != b.kind) return a.kind < b.kind;
    return a.item_id < b.item_id;
  }
};

/// The full trace is known to the harness, so the event queue is a
/// pre-sorted array (two entries per item), not a heap.
inline std::vector<Event> build_events(const Instance& instance) {
  std::vector<Event> events;
  events.reserve(instance.items.size() * 2);
  for (const Item& it : instance.items) {
    events.push_back({it.departure, Event::Kind::Departure, it.id});
    events.push_back({it.arrival, Event::Kind::Arrival, it.id});
  }
  std::sort(events.begin(), events.end());
  return events;
}

struct DecisionRecord {
  TimePoint time = 0;
  std::int64_t item_id = 0;
  std::int64_t bin_id = 0;
  bool opened_new = false;

  bool operator==(const DecisionRecord&) const = default;
};

struct TimelinePoint {
  TimePoint time = 0;
  std::int64_t open_bins = 0;

  bool operator==(const TimelinePoint&) const = default;
};

struct RunReport {
  std::int64_t total_usage_us = 0;
  std::int64_t lower_bound_us = 0;
  double performance_ratio = 0.0;
  std::int64_t max_concurrent_bins = 0;
  std::int64_t anyfit_violations = 0;
  std::int64_t bins_opened = 0;
  std::vector<DecisionRecord> decisions;  // filled when capture_decisions
  std::vector<TimelinePoint> timeline;    // filled when capture_timeline

  bool operator==(const RunReport&) const = default;
};

struct SimulateOptions {
  bool capture_decisions = false;
  bool capture_timeline = false;
  /// Newline-delimited record stream, one per arrival:
  /// "<time_us> <item_id> <bin_id> <opened_new>".
  std::ostream* decision_stream = nullptr;
  /// Recompute every bin load from scratch at each event and compare.
  bool paranoid_checks = false;
};

namespace detail {

inline double ceil_with_tol(double x) {
  if (x <= kCapacityTol) return 0.0;
  return std::ceil(x - kCapacityTol);
}

/// Kahan-compensated per-dimension accumulator for the active aggregate.
class CompensatedVector {
 public:
  explicit CompensatedVector(int dims) : sum_(dims), comp_(dims) {}

  void add(const SizeVector& v) {
    for (int i = 0; i < v.dims(); ++i) add_one(i, v[i]);
  }

  void sub(const SizeVector& v) {
    for (int i = 0; i < v.dims(); ++i) add_one(i, -v[i]);
  }

  const SizeVector& value() const { return sum_; }

  void reset(const SizeVector& exact) {
    sum_ = exact;
    comp_ = SizeVector(exact.dims());
  }

 private:
  void add_one(int i, double x) {
    double y = x - comp_[i];
    double t = sum_[i] + y;
    comp_[i] = (t - sum_[i]) - y;
    sum_[i] = t;
  }

  SizeVector sum_;
  SizeVector comp_;
};

}  // namespace detail

/// Usage-time lower bound: the integral over time of the ceiling of the
/// l-inf norm of the aggregate size vector of active items. Event sweep
/// with a piecewise-constant integrand; the aggregate uses compensated
/// summation and is fully recomputed every 4096 events as a drift guard.
inline std::int64_t lower_bound(const Instance& instance) {
  if (instance.items.empty()) return 0;
  std::vector<Event> events = build_events(instance);
  std::unordered_map<std::int64_t, const Item*> by_id;
  by_id.reserve(instance.items.size());
  for (const Item& it : instance.items) by_id.emplace(it.id, &it);

  detail::CompensatedVector agg(instance.d);
  std::vector<const Item*> active;
  std::unordered_map<std::int64_t, std::size_t> active_pos;
  std::int64_t total = 0;
  int events_since_recompute = 0;
  constexpr int kAggRecomputeInterval = 4096;

  std::size_t i = 0;
  while (i < events.size()) {
    TimePoint t = events[i].time;
    while (i < events.size() && events[i].time == t) {
      const Event& e = events[i];
      auto it = by_id.find(e.item_id);
      if (it == by_id.end()) throw std::logic_error("lower_bound: unknown item id");
      const Item* item = it->second;
      if (e.kind == Event::Kind::Arrival) {
        agg.add(item->size);
        active_pos[item->id] = active.size();
        active.push_back(item);
      } else {
        agg.sub(item->size);
        std::size_t pos = active_pos.at(item->id);
        active_pos[active.back()->id] = pos;
        active[pos] = active.back();
        active.pop_back();
        active_pos.erase(item->id);
      }
      if (++events_since_recompute >= kAggRecomputeInterval) {
        SizeVector exact(instance.d);
        for (const Item* a : active) exact += a->size;
        agg.reset(exact);
        events_since_recompute = 0;
      }
      ++i;
    }
    if (i < events.size()) {
      TimePoint next = events[i].time;
      auto level = static_cast<std::int64_t>(detail::ceil_with_tol(lp_norm(agg.value(), Norm::Linf)));
      total += level * (next - t);
    }
  }
  return total;
}

namespace detail {

/// Mutable engine state shared by simulate() and the offline log replay.
class BinLedger {
 public:
  explicit BinLedger(const Instance& instance) : instance_(&instance) {
    for (const Item& it : instance.items) items_.emplace(it.id, &it);
  }

  const Item& item(std::int64_t id) const {
    auto it = items_.find(id);
    if (it == items_.end()) throw std::logic_error("engine: unknown item id");
    return *it->second;
  }

  const std::vector<Bin*>& open_bins() const { return open_order_; }

  Bin& open_new_bin(TimePoint now, BinTag tag) {
    auto bin = std::make_unique<Bin>();
    bin->id = next_bin_id_++;
    bin->opened_at = now;
    bin->load = SizeVector(instance_->d);
    bin->tag = tag;
    Bin* raw = bin.get();
    bins_.emplace(raw->id, std::move(bin));
    open_order_.push_back(raw);
    return *raw;
  }

  Bin* find_open(std::int64_t bin_id) const {
    auto it = bins_.find(bin_id);
    return it == bins_.end() ? nullptr : it->second.get();
  }

  void place(Bin& bin, const Item& item, TimePoint now, TimePoint known_departure) {
    bin.load += item.size;
    if (++bin.updates_since_recompute > kLoadRecomputeInterval) recompute_load(bin);
    bin.active.push_back(item.id);
    bin.indicated_closing = std::max(bin.indicated_closing, known_departure);
    bin.last_access = now;
    bin.last_access_seq = ++access_seq_;
    item_location_[item.id] = {bin.id, bin.active.size() - 1};
  }

  /// Removes the item; returns true when the bin closed (and erases it from
  /// the open list — closed bins are never reused).
  bool remove(const Item& item, TimePoint known_departure) {
    auto loc = item_location_.find(item.id);
    if (loc == item_location_.end()) throw std::logic_error("engine: departure of unplaced item");
    Bin& bin = *bins_.at(loc->second.bin_id);
    std::size_t pos = loc->second.pos;
    item_location_.erase(loc);

    bin.load -= item.size;
    if (++bin.updates_since_recompute > kLoadRecomputeInterval) recompute_load(bin);
    std::int64_t moved = bin.active.back();
    bin.active[pos] = moved;
    bin.active.pop_back();
    if (moved != item.id) item_location_[moved].pos = pos;

    if (bin.active.empty()) {
      auto it = std::find(open_order_.begin(), open_order_.end(), &bin);
      open_order_.erase(it);
      return true;
    }
    // The closing time shrinks only if the departing item held the max.
    if (known_departure >= bin.indicated_closing) {
      TimePoint ic = 0;
      for (std::int64_t id : bin.active) ic = std::max(ic, known_departure_of_(id));
      bin.indicated_closing = ic;
    }
    return false;
  }

  Bin& bin_of(std::int64_t item_id) { return *bins_.at(item_location_.at(item_id).bin_id); }

  void recompute_load(Bin& bin) const {
    SizeVector exact(instance_->d);
    for (std::int64_t id : bin.active) exact += item(id).size;
    bin.load = exact;
    bin.updates_since_recompute = 0;
  }

  void verify_loads() const {
    for (const Bin* b : open_order_) {
      SizeVector exact(instance_->d);
      for (std::int64_t id : b->active) exact += item(id).size;
      for (int i = 0; i < exact.dims(); ++i)
        if (std::abs(exact[i] - b->load[i]) > 1e-7)
          throw std::logic_error("engine: bin load drifted from active-item sum");
    }
  }

  std::int64_t bins_opened() const { return next_bin_id_; }

  template <typename F>
  void set_known_departure_fn(F&& f) {
    known_departure_of_ = std::forward<F>(f);
  }

 private:
  struct Location {
    std::int64_t bin_id;
    std::size_t pos;
  };

  const Instance* instance_;
  std::unordered_map<std::int64_t, const Item*> items_;
  std::unordered_map<std::int64_t, std::unique_ptr<Bin>> bins_;
  std::vector<Bin*> open_order_;  // ascending open order (bin ids increase)
  std::unordered_map<std::int64_t, Location> item_location_;
  std::int64_t next_bin_id_ = 0;
  std::uint64_t access_seq_ = 0;
  std::function<TimePoint(std::int64_t)> known_departure_of_;
};

}  // namespace detail

/// Replays the instance through the strategy. Every item is placed at its
/// arrival into exactly one bin with fits() true; usage accrues per bin
/// from first placement to last departure. Throws std::logic_error when
/// the strategy picks a bin that cannot hold the item.
inline RunReport simulate(const Instance& instance, Strategy& strategy, Knowledge knowledge,
                          const PredictionTable* predictions = nullptr,
                          const SimulateOptions& options = {}) {
  instance.validate();
  if (knowledge == Knowledge::Predicted) {
    if (predictions == nullptr) throw std::invalid_argument("simulate: predicted knowledge needs a table");
    for (const Item& it : instance.items)
      if (!predictions->contains(it.id))
        throw std::invalid_argument("simulate: prediction table misses item " + std::to_string(it.id));
  }

  detail::BinLedger ledger(instance);
  auto known_departure = [&](std::int64_t id) -> TimePoint {
    const Item& it = ledger.item(id);
    if (knowledge == Knowledge::Predicted) return it.arrival + predictions->at(id);
    return it.departure;  // non-clairvoyant strategies never read this
  };
  ledger.set_known_departure_fn(known_departure);

  RunContext run_ctx{&instance, knowledge, predictions};
  strategy.begin(run_ctx);

  RunReport report;
  report.lower_bound_us = lower_bound(instance);

  std::vector<Event> events = build_events(instance);
  std::int64_t open_count = 0;
  auto note_timeline = [&](TimePoint t) {
    if (!options.capture_timeline) return;
    if (!report.timeline.empty() && report.timeline.back().time == t)
      report.timeline.back().open_bins = open_count;
    else
      report.timeline.push_back({t, open_count});
  };

  std::int64_t usage = 0;

  for (const Event& e : events) {
    const Item& item = ledger.item(e.item_id);
    if (e.kind == Event::Kind::Departure) {
      Bin& bin = ledger.bin_of(item.id);
      bool closed = ledger.remove(item, known_departure(item.id));
      if (closed) {
        usage += e.time - bin.opened_at;
        --open_count;
        note_timeline(e.time);
      }
      DepartureEvent dep{e.time, &item, known_departure(item.id), item.duration(), &bin, closed};
      strategy.on_departed(dep);
    } else {
      std::optional<TimePoint> known;
      if (knowledge != Knowledge::NonClairvoyant) known = known_departure(item.id);
      const auto& open = ledger.open_bins();
      PlacementContext ctx{e.time, &item, known, std::span<const Bin* const>(open.data(), open.size())};
      Decision decision = strategy.place(ctx);

      bool opened_new = decision.opens_new();
      if (opened_new) {
        // Any-Fit audit: a new bin although some open bin had room.
        for (const Bin* b : open)
          if (fits(b->load, item.size)) {
            ++report.anyfit_violations;
            break;
          }
      }

      Bin* bin;
      if (opened_new) {
        bin = &ledger.open_new_bin(e.time, decision.tag);
        ++open_count;
        report.max_concurrent_bins = std::max(report.max_concurrent_bins, open_count);
        note_timeline(e.time);
      } else {
        bin = ledger.find_open(decision.bin_id);
        if (bin == nullptr || bin->active.empty())
          throw std::logic_error("simulate: strategy chose an unknown or closed bin");
        if (!fits(bin->load, item.size))
          throw std::logic_error("simulate: strategy chose a bin that cannot fit the item");
      }
      ledger.place(*bin, item, e.time, known_departure(item.id));

      if (options.capture_decisions)
        report.decisions.push_back({e.time, item.id, bin->id, opened_new});
      if (options.decision_stream)
        (*options.decision_stream) << e.time << ' ' << item.id << ' ' << bin->id << ' '
                                   << (opened_new ? 1 : 0) << '\n';
      strategy.on_placed(ctx, *bin);
      if (options.paranoid_checks) ledger.verify_loads();
    }
  }

  report.total_usage_us = usage;
  report.bins_opened = ledger.bins_opened();
  report.performance_ratio =
      report.lower_bound_us > 0
          ? static_cast<double>(report.total_usage_us) / static_cast<double>(report.lower_bound_us)
          : std::numeric_limits<double>::quiet_NaN();
  return report;
}

struct AuditResult {
  std::int64_t anyfit_violations = 0;
  std::vector<TimelinePoint> timeline;
};

/// Independent replay of a decision log: reconstructs bin occupancy from
/// the records alone and counts arrivals where a new bin was opened even
/// though some open bin had room. Shares nothing with simulate() beyond
/// the fits() predicate.
inline AuditResult replay_decision_log(const Instance& instance,
                                       const std::vector<DecisionRecord>& decisions) {
  std::unordered_map<std::int64_t, const Item*> items;
  for (const Item& it : instance.items) items.emplace(it.id, &it);
  std::unordered_map<std::int64_t, DecisionRecord> by_item;
  for (const DecisionRecord& r : decisions) by_item.emplace(r.item_id, r);

  struct ReplayBin {
    SizeVector load;
    int active = 0;
  };
  std::unordered_map<std::int64_t, ReplayBin> open;

  AuditResult result;
  std::int64_t open_count = 0;
  auto note = [&](TimePoint t) {
    if (!result.timeline.empty() && result.timeline.back().time == t)
      result.timeline.back().open_bins = open_count;
    else
      result.timeline.push_back({t, open_count});
  };

  for (const Event& e : build_events(instance)) {
    auto item_it = items.find(e.item_id);
    if (item_it == items.end()) throw std::logic_error("replay: unknown item id");
    const Item& item = *item_it->second;
    auto rec_it = by_item.find(e.item_id);
    if (rec_it == by_item.end()) throw std::logic_error("replay: item missing from decision log");
    const DecisionRecord& rec = rec_it->second;

    if (e.kind == Event::Kind::Arrival) {
      if (rec.opened_new) {
        for (const auto& [id, bin] : open)
          if (fits(bin.load, item.size)) {
            ++result.anyfit_violations;
            break;
          }
        ReplayBin bin{SizeVector(instance.d), 0};
        bin.load += item.size;
        bin.active = 1;
        open.emplace(rec.bin_id, std::move(bin));
        ++open_count;
        note(e.time);
      } else {
        auto bin_it = open.find(rec.bin_id);
        if (bin_it == open.end()) throw std::logic_error("replay: placement into unknown bin");
        if (!fits(bin_it->second.load, item.size))
          throw std::logic_error("replay: log places an item that does not fit");
        bin_it->second.load += item.size;
        ++bin_it->second.active;
      }
    } else {
      auto bin_it = open.find(rec.bin_id);
      if (bin_it == open.end()) throw std::logic_error("replay: departure from unknown bin");
      bin_it->second.load -= item.size;
      if (--bin_it->second.active == 0) {
        open.erase(bin_it);
        --open_count;
        note(e.time);
      }
    }
  }
  return result;
}

inline std::int64_t audit_any_fit(const Instance& instance,
                                  const std::vector<DecisionRecord>& decisions) {
  return replay_decision_log(instance, decisions).anyfit_violations;
}

inline std::vector<TimelinePoint> concurrent_bins_timeline(
    const Instance& instance, const std::vector<DecisionRecord>& decisions) {
  return replay_decision_log(instance, decisions).timeline;
}

/// Integral of an open-bin step function; equals total usage time.
inline std::int64_t timeline_integral(const std::vector<TimelinePoint>& timeline) {
  std::int64_t total = 0;
  for (std::size_t i = 0; i + 1 < timeline.size(); ++i)
    total += timeline[i].open_bins * (timeline[i + 1].time - timeline[i].time);
  return total;
}

}  // namespace dvbp

#endif  // DVBP_ENGINE_HPP
