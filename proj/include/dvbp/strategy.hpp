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

#ifndef DVBP_STRATEGY_HPP
#define DVBP_STRATEGY_HPP

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>

#include "dvbp/core.hpp"
#include "dvbp/predictor.hpp"

namespace dvbp {

/// What a strategy may know about departures at arrival time.
enum class Knowledge { NonClairvoyant, Clairvoyant, Predicted };

/// Per-run context handed to a strategy before the first event.
struct RunContext {
  const Instance* instance = nullptr;
  Knowledge knowledge = Knowledge::NonClairvoyant;
  const PredictionTable* predictions = nullptr;  // set iff knowledge == Predicted
};

/// Arrival-time view. `open_bins` lists exactly the engine's open bins in
/// ascending open order. `known_departure` is absent in non-clairvoyant
/// runs, real in clairvoyant runs and predicted in learning runs.
struct PlacementContext {
  TimePoint now = 0;
  const Item* item = nullptr;
  std::optional<TimePoint> known_departure;
  std::span<const Bin* const> open_bins;
};

/// Departure-time notification. `real_duration` is revealed here even in
/// learning runs; `known_departure` is what the strategy believed.
struct DepartureEvent {
  TimePoint now = 0;
  const Item* item = nullptr;
  TimePoint known_departure = 0;
  DurationUs real_duration = 0;
  const Bin* bin = nullptr;
  bool bin_closed = false;
};

/// A placement decision: an existing open bin, or a new bin carrying `tag`.
struct Decision {
  static constexpr std::int64_t kOpenNew = -1;

  std::int64_t bin_id = kOpenNew;
  BinTag tag;

  static Decision open_new(BinTag t = {}) { return Decision{kOpenNew, t}; }
  static Decision use(std::int64_t id) { return Decision{id, {}}; }
  bool opens_new() const { return bin_id == kOpenNew; }
};

/// A placement policy. The engine owns loads and closing times; a strategy
/// only selects bins. One instance serves exactly one simulate call.
class Strategy {
 public:
  virtual ~Strategy() = default;

  virtual std::string name() const = 0;
  virtual void begin(const RunContext&) {}
  virtual Decision place(const PlacementContext& ctx) = 0;
  /// Called after the engine applied the decision. `bin.tag` may be rewritten.
  virtual void on_placed(const PlacementContext&, Bin&) {}
  virtual void on_departed(const DepartureEvent&) {}

  Strategy() = default;
  Strategy(const Strategy&) = delete;
  Strategy& operator=(const Strategy&) = delete;
};

/// Indicated closing time as strategies read it: never in the past. With
/// real departures the clamp is a no-op; with underestimated predictions it
/// pins expired predictions to "departs now".
inline TimePoint indicated_closing_at(const Bin& bin, TimePoint now) {
  return std::max(bin.indicated_closing, now);
}

using BinFilter = std::function<bool(const Bin&)>;

/// Earliest-opened fitting bin, optionally restricted by a filter.
inline const Bin* first_fit_scan(std::span<const Bin* const> bins, const SizeVector& size,
                                 const BinFilter& filter = {}) {
  for (const Bin* b : bins) {
    if (filter && !filter(*b)) continue;
    if (fits(b->load, size)) return b;
  }
  return nullptr;
}

/// Fitting bin minimizing the norm of the residual capacity after the item
/// is accepted; ties go to the earliest-opened bin.
inline const Bin* best_fit_scan(std::span<const Bin* const> bins, const SizeVector& size, Norm norm,
                                const BinFilter& filter = {}) {
  const Bin* best = nullptr;
  double best_score = 0;
  for (const Bin* b : bins) {
    if (filter && !filter(*b)) continue;
    if (!fits(b->load, size)) continue;
    double score = lp_norm(b->available() - size, norm);
    if (!best || score < best_score) {
      best = b;
      best_score = score;
    }
  }
  return best;
}

}  // namespace dvbp

#endif  // DVBP_STRATEGY_HPP
