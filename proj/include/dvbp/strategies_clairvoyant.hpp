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

#ifndef DVBP_STRATEGIES_CLAIRVOYANT_HPP
#define DVBP_STRATEGIES_CLAIRVOYANT_HPP

#include <bit>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "dvbp/strategy.hpp"

namespace dvbp {

inline std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  return (a % b != 0 && ((a < 0) != (b < 0))) ? q - 1 : q;
}

/// Index of the departure-time window of width rho containing `departure`.
inline std::int64_t departure_category(TimePoint departure, DurationUs rho) {
  if (rho <= 0) throw std::invalid_argument("departure_category: rho must be positive");
  return floor_div(departure, rho);
}

/// The unique i with base*beta^(i-1) <= duration < base*beta^i. Callers
/// anchor `base` so the smallest duration of interest maps to i = 1.
inline std::int64_t duration_category(DurationUs duration, double beta, DurationUs base) {
  if (beta <= 1.0) throw std::invalid_argument("duration_category: beta must exceed 1");
  if (base <= 0 || duration <= 0) throw std::invalid_argument("duration_category: nonpositive input");
  double ratio = static_cast<double>(duration) / static_cast<double>(base);
  auto i = static_cast<std::int64_t>(std::floor(std::log(ratio) / std::log(beta))) + 1;
  auto bound = [&](std::int64_t e) { return static_cast<double>(base) * std::pow(beta, static_cast<double>(e)); };
  while (static_cast<double>(duration) < bound(i - 1)) --i;
  while (static_cast<double>(duration) >= bound(i)) ++i;
  return i;
}

namespace detail {

inline std::optional<TimePoint> require_departure(const PlacementContext& ctx, const char* who) {
  if (!ctx.known_departure)
    throw std::logic_error(std::string(who) + ": needs departure knowledge at arrival");
  return ctx.known_departure;
}

inline bool is_category_bin(const Bin& b, std::int64_t key) {
  return b.tag.role == BinRole::Category && b.tag.key == key;
}

}  // namespace detail

/// Partitions the time horizon into windows of width rho and keeps items of
/// each window in that window's bins only (First Fit within the category).
class ClassifyByDepartureTime : public Strategy {
 public:
  explicit ClassifyByDepartureTime(DurationUs rho) : rho_(rho) {
    if (rho <= 0) throw std::invalid_argument("classify-departure: rho must be positive");
  }

  std::string name() const override {
    return "classify-departure:" + std::to_string(rho_) + "us";
  }

  Decision place(const PlacementContext& ctx) override {
    TimePoint dep = *detail::require_departure(ctx, "classify-departure");
    std::int64_t key = departure_category(dep, rho_);
    const Bin* b = first_fit_scan(ctx.open_bins, ctx.item->size,
                                  [&](const Bin& bin) { return detail::is_category_bin(bin, key); });
    if (b) return Decision::use(b->id);
    return Decision::open_new({BinRole::Category, key, -1});
  }

 private:
  DurationUs rho_;
};

/// Places an item into the fitting bin whose indicated closing time is
/// nearest to the item's departure. The prioritized mode first restricts to
/// bins that would not extend their closing time (closing >= departure) and
/// falls back to the others only when none of those fits.
class NearestRemainingTime : public Strategy {
 public:
  enum class Mode { Standard, Prioritized };

  explicit NearestRemainingTime(Mode mode) : mode_(mode) {}

  std::string name() const override {
    return mode_ == Mode::Standard ? "nrt:standard" : "nrt:prioritized";
  }

  Decision place(const PlacementContext& ctx) override {
    TimePoint dep = *detail::require_departure(ctx, "nrt");
    const Bin* chosen = nullptr;
    if (mode_ == Mode::Standard) {
      chosen = nearest(ctx, dep, [](TimePoint, TimePoint) { return true; });
    } else {
      chosen = nearest(ctx, dep, [](TimePoint closing, TimePoint d) { return closing >= d; });
      if (!chosen) chosen = nearest(ctx, dep, [](TimePoint closing, TimePoint d) { return closing < d; });
    }
    return chosen ? Decision::use(chosen->id) : Decision::open_new();
  }

 private:
  template <typename CasePredicate>
  const Bin* nearest(const PlacementContext& ctx, TimePoint dep, CasePredicate in_case) {
    const Bin* best = nullptr;
    std::int64_t best_dist = 0;
    TimePoint best_closing = 0;
    for (const Bin* b : ctx.open_bins) {
      TimePoint closing = indicated_closing_at(*b, ctx.now);
      if (!in_case(closing, dep)) continue;
      if (!fits(b->load, ctx.item->size)) continue;
      std::int64_t dist = std::abs(closing - dep);
      // Distance ties prefer the earlier closing, then the earlier-opened bin.
      if (!best || dist < best_dist || (dist == best_dist && closing < best_closing)) {
        best = b;
        best_dist = dist;
        best_closing = closing;
      }
    }
    return best;
  }

  Mode mode_;
};

/// Fitting bin with the latest indicated closing time; ties go to the
/// earliest-opened bin.
class GreedyLatestClosing : public Strategy {
 public:
  std::string name() const override { return "greedy"; }

  Decision place(const PlacementContext& ctx) override {
    detail::require_departure(ctx, "greedy");
    const Bin* best = nullptr;
    TimePoint best_closing = 0;
    for (const Bin* b : ctx.open_bins) {
      if (!fits(b->load, ctx.item->size)) continue;
      TimePoint closing = indicated_closing_at(*b, ctx.now);
      if (!best || closing > best_closing) {
        best = b;
        best_closing = closing;
      }
    }
    return best ? Decision::use(best->id) : Decision::open_new();
  }
};

/// Groups items whose durations share a geometric range [base*beta^(i-1),
/// base*beta^i); First Fit within the group's bins. The base is anchored to
/// the smallest duration the run can see, so indices start at 1.
class ClassifyByDuration : public Strategy {
 public:
  explicit ClassifyByDuration(double beta) : beta_(beta) {
    if (beta <= 1.0) throw std::invalid_argument("classify-duration: beta must exceed 1");
  }

  std::string name() const override {
    return "classify-duration:" + std::to_string(beta_);
  }

  void begin(const RunContext& run) override {
    base_ = 0;
    if (run.knowledge == Knowledge::Predicted) {
      for (const auto& [id, dur] : *run.predictions)
        if (base_ == 0 || dur < base_) base_ = dur;
    } else {
      base_ = run.instance->min_duration;
      if (base_ == 0) {
        for (const Item& it : run.instance->items)
          if (base_ == 0 || it.duration() < base_) base_ = it.duration();
      }
    }
  }

  Decision place(const PlacementContext& ctx) override {
    TimePoint dep = *detail::require_departure(ctx, "classify-duration");
    DurationUs dur = dep - ctx.item->arrival;
    std::int64_t key = duration_category(dur, beta_, base_);
    const Bin* b = first_fit_scan(ctx.open_bins, ctx.item->size,
                                  [&](const Bin& bin) { return detail::is_category_bin(bin, key); });
    if (b) return Decision::use(b->id);
    return Decision::open_new({BinRole::Category, key, -1});
  }

 private:
  double beta_;
  DurationUs base_ = 0;
};

/// Power-of-two duration bucket: the j with 2^(j-1) <= duration < 2^j, in
/// microseconds. Bucket identity is absolute; offsets only relabel.
inline int pow2_duration_bucket(DurationUs duration) {
  return std::bit_width(static_cast<std::uint64_t>(duration));
}

/// Duration-categorized packing with a shared overflow pool: items of a
/// category go to general bins while the category's active footprint there
/// stays within 1/(2*sqrt(i)), and to the category's own bins beyond that.
/// The full variant keys categories by (duration bucket, arrival window);
/// the reduced variant keys by duration bucket only.
class HybridPacking : public Strategy {
 public:
  enum class Variant { Full, Reduced };

  explicit HybridPacking(Variant variant) : variant_(variant) {}

  std::string name() const override {
    return variant_ == Variant::Full ? "hybrid" : "reduced-hybrid";
  }

  void begin(const RunContext& run) override {
    categories_.clear();
    placed_.clear();
    dims_ = run.instance->d;
    DurationUs min_dur = 0;
    if (run.knowledge == Knowledge::Predicted) {
      for (const auto& [id, dur] : *run.predictions)
        if (min_dur == 0 || dur < min_dur) min_dur = dur;
    } else {
      min_dur = run.instance->min_duration;
      if (min_dur == 0) {
        for (const Item& it : run.instance->items)
          if (min_dur == 0 || it.duration() < min_dur) min_dur = it.duration();
      }
    }
    offset_ = min_dur > 0 ? pow2_duration_bucket(min_dur) : 1;
  }

  Decision place(const PlacementContext& ctx) override {
    TimePoint dep = *detail::require_departure(ctx, "hybrid");
    DurationUs dur = dep - ctx.item->arrival;
    int bucket = pow2_duration_bucket(dur);
    std::int64_t key = category_key(bucket, ctx.item->arrival);
    std::int64_t index = std::max<std::int64_t>(1, bucket - offset_ + 1);
    double threshold = 1.0 / (2.0 * std::sqrt(static_cast<double>(index)));

    CategoryState& cat = category(key);
    refresh_if_stale(cat);
    SizeVector with_item = cat.general_aggregate + ctx.item->size;
    if (lp_norm(with_item, Norm::Linf) <= threshold + kCapacityTol) {
      pending_general_ = true;
      const Bin* b = first_fit_scan(ctx.open_bins, ctx.item->size,
                                    [](const Bin& bin) { return bin.tag.role == BinRole::General; });
      if (b) return Decision::use(b->id);
      return Decision::open_new({BinRole::General, 0, -1});
    }
    pending_general_ = false;
    const Bin* b = first_fit_scan(ctx.open_bins, ctx.item->size,
                                  [&](const Bin& bin) { return detail::is_category_bin(bin, key); });
    if (b) return Decision::use(b->id);
    return Decision::open_new({BinRole::Category, key, -1});
  }

  void on_placed(const PlacementContext& ctx, Bin& bin) override {
    TimePoint dep = *ctx.known_departure;
    int bucket = pow2_duration_bucket(dep - ctx.item->arrival);
    std::int64_t key = category_key(bucket, ctx.item->arrival);
    bool general = bin.tag.role == BinRole::General;
    placed_[ctx.item->id] = {key, general, ctx.item->size};
    if (general) {
      CategoryState& cat = category(key);
      cat.general_aggregate += ctx.item->size;
      cat.general_items.insert(ctx.item->id);
      ++cat.updates;
    }
  }

  void on_departed(const DepartureEvent& ev) override {
    auto it = placed_.find(ev.item->id);
    if (it == placed_.end()) return;
    if (it->second.in_general) {
      CategoryState& cat = category(it->second.key);
      cat.general_aggregate -= it->second.size;
      cat.general_items.erase(ev.item->id);
      ++cat.updates;
    }
    placed_.erase(it);
  }

  /// True when place() routed the last item through the general pool.
  bool last_went_general() const { return pending_general_; }

 private:
  struct CategoryState {
    SizeVector general_aggregate;
    std::unordered_set<std::int64_t> general_items;
    int updates = 0;
  };

  struct PlacedItem {
    std::int64_t key;
    bool in_general;
    SizeVector size;
  };

  std::int64_t category_key(int bucket, TimePoint arrival) const {
    if (variant_ == Variant::Reduced) return bucket;
    // Arrival windows have the width of the bucket's upper bound.
    std::int64_t window = floor_div(arrival, std::int64_t{1} << bucket);
    return (static_cast<std::int64_t>(bucket) << 44) | (window & ((std::int64_t{1} << 44) - 1));
  }

  CategoryState& category(std::int64_t key) {
    auto [it, inserted] = categories_.try_emplace(key);
    if (inserted) it->second.general_aggregate = SizeVector(dims_);
    return it->second;
  }

  void refresh_if_stale(CategoryState& cat) {
    if (cat.updates <= kLoadRecomputeInterval) return;
    SizeVector exact(dims_);
    for (std::int64_t id : cat.general_items) exact += placed_.at(id).size;
    cat.general_aggregate = exact;
    cat.updates = 0;
  }

  Variant variant_;
  int dims_ = 1;
  int offset_ = 1;
  bool pending_general_ = false;
  std::map<std::int64_t, CategoryState> categories_;
  std::unordered_map<std::int64_t, PlacedItem> placed_;
};

/// Dimension-partitioning wrapper: items route to the class of their argmax
/// size dimension (ties to the lowest index) and each class runs a private
/// copy of the inner policy; bins are never shared across classes.
class DirectSum : public Strategy {
 public:
  using InnerFactory = std::function<std::unique_ptr<Strategy>()>;

  DirectSum(std::string inner_name, InnerFactory factory)
      : inner_name_(std::move(inner_name)), factory_(std::move(factory)) {}

  std::string name() const override { return "direct-sum:" + inner_name_; }

  void begin(const RunContext& run) override {
    inner_.clear();
    for (int k = 0; k < run.instance->d; ++k) {
      inner_.push_back(factory_());
      inner_.back()->begin(run);
    }
  }

  Decision place(const PlacementContext& ctx) override {
    int klass = argmax_class(ctx.item->size);
    filtered_.clear();
    for (const Bin* b : ctx.open_bins)
      if (b->tag.klass == klass) filtered_.push_back(b);
    PlacementContext sub = ctx;
    sub.open_bins = std::span<const Bin* const>(filtered_.data(), filtered_.size());
    last_sub_ = sub;
    Decision d = inner_[klass]->place(sub);
    if (d.opens_new()) d.tag.klass = klass;
    return d;
  }

  void on_placed(const PlacementContext&, Bin& bin) override {
    int klass = bin.tag.klass;
    inner_[klass]->on_placed(last_sub_, bin);
    bin.tag.klass = klass;  // inner policies may rewrite role/key, not class
  }

  void on_departed(const DepartureEvent& ev) override {
    inner_[ev.bin->tag.klass]->on_departed(ev);
  }

  static int argmax_class(const SizeVector& size) {
    int best = 0;
    for (int i = 1; i < size.dims(); ++i)
      if (size[i] > size[best]) best = i;
    return best;
  }

 private:
  std::string inner_name_;
  InnerFactory factory_;
  std::vector<std::unique_ptr<Strategy>> inner_;
  std::vector<const Bin*> filtered_;
  PlacementContext last_sub_;
};

}  // namespace dvbp

#endif  // DVBP_STRATEGIES_CLAIRVOYANT_HPP
