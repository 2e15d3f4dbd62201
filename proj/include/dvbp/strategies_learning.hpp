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

#ifndef DVBP_STRATEGIES_LEARNING_HPP
#define DVBP_STRATEGIES_LEARNING_HPP

#include <bit>
#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "dvbp/strategies_clairvoyant.hpp"
#include "dvbp/strategy.hpp"

namespace dvbp {

/// Duration range index on second-aligned power-of-two ranges:
/// X_0 = [0, 1) s, X_i = [2^(i-1), 2^i) s.
inline int geometric_duration_range(DurationUs duration) {
  std::int64_t secs = duration / kMicrosPerSecond;
  if (secs < 1) return 0;
  return std::bit_width(static_cast<std::uint64_t>(secs));
}

/// Smallest power of two >= e, grown by repeated doubling from the current
/// estimate (guess-and-double).
inline double ppe_update_alpha(double alpha, double observed_error) {
  while (alpha < observed_error) alpha *= 2.0;
  return alpha;
}

/// Category-threshold packing driven by predicted durations. Items are
/// categorized on second-aligned power-of-two ranges of predicted duration.
/// A category's items use general bins while the category's active
/// footprint there stays within threshold = alpha/sqrt(x), where x counts
/// distinct categories seen so far; alpha is 1 under the plain rule and an
/// online maximum-error estimate under the error-adaptive rule. Beyond the
/// threshold, items go to the category's bins when the category is on, and
/// stage in the single base bin otherwise; a base bin whose load passes 1/2
/// converts into a category bin of the item that pushed it over. The
/// with-large-bins variant parks every item over 1/2 in a dedicated
/// single-item bin instead.
class CategoryThresholdPacking : public Strategy {
 public:
  enum class ThresholdRule { Plain, ErrorAdaptive };

  CategoryThresholdPacking(ThresholdRule rule, bool large_bins)
      : rule_(rule), large_bins_(large_bins) {}

  std::string name() const override {
    std::string base = rule_ == ThresholdRule::Plain ? "rcp" : "ppe";
    return large_bins_ ? base : base + "-nolarge";
  }

  void begin(const RunContext& run) override {
    dims_ = run.instance->d;
    alpha_ = 1.0;
    seen_.clear();
    categories_.clear();
    placed_.clear();
    base_bin_ = kNone;
  }

  Decision place(const PlacementContext& ctx) override {
    TimePoint dep = *detail::require_departure(ctx, "category-threshold packing");
    DurationUs pdur = dep - ctx.item->arrival;
    std::int64_t key = geometric_duration_range(pdur);
    seen_.insert(key);

    const SizeVector& size = ctx.item->size;
    bool large = lp_norm(size, Norm::Linf) > 0.5;
    if (large_bins_ && large) return Decision::open_new({BinRole::Large, key, -1});

    CategoryState& cat = category(key);
    refresh_general(cat);
    if (lp_norm(cat.agg_general + size, Norm::Linf) <= threshold() + kCapacityTol) {
      const Bin* b = first_fit_scan(ctx.open_bins, size,
                                    [](const Bin& bin) { return bin.tag.role == BinRole::General; });
      return b ? Decision::use(b->id) : Decision::open_new({BinRole::General, 0, -1});
    }

    if (cat.on) {
      const Bin* b = first_fit_scan(ctx.open_bins, size,
                                    [&](const Bin& bin) { return detail::is_category_bin(bin, key); });
      return b ? Decision::use(b->id) : Decision::open_new({BinRole::Category, key, -1});
    }

    if (large) {
      // No large bins: an over-threshold large item converts the base bin,
      // or opens the category directly when the base cannot hold it.
      const Bin* base = find_base(ctx);
      if (base && fits(base->load, size)) return Decision::use(base->id);
      cat.on = true;
      return Decision::open_new({BinRole::Category, key, -1});
    }

    const Bin* base = find_base(ctx);
    if (base) return Decision::use(base->id);  // small items always fit a base bin
    return Decision::open_new({BinRole::Base, 0, -1});
  }

  void on_placed(const PlacementContext& ctx, Bin& bin) override {
    TimePoint dep = *ctx.known_departure;
    DurationUs pdur = dep - ctx.item->arrival;
    std::int64_t key = geometric_duration_range(pdur);

    Location loc;
    switch (bin.tag.role) {
      case BinRole::General:
        loc = Location::General;
        add_general(key, ctx.item->size);
        break;
      case BinRole::Large:
        loc = Location::Large;
        break;
      case BinRole::Base:
        loc = Location::Base;
        base_bin_ = bin.id;
        break;
      case BinRole::Category:
      default:
        loc = bin.tag.key == key ? Location::CategoryOwn : Location::CategoryForeign;
        if (loc == Location::CategoryOwn) add_category(key, ctx.item->size);
        break;
    }
    placed_[ctx.item->id] = {key, loc, ctx.item->size, pdur};

    if (bin.tag.role == BinRole::Base && lp_norm(bin.load, Norm::Linf) > 0.5) {
      convert_base(bin, key);
    }
  }

  void on_departed(const DepartureEvent& ev) override {
    auto it = placed_.find(ev.item->id);
    if (it == placed_.end()) return;
    const PlacedItem rec = it->second;
    placed_.erase(it);

    switch (rec.loc) {
      case Location::General: {
        CategoryState& cat = category(rec.key);
        cat.agg_general -= rec.size;
        cat.general_items.erase(ev.item->id);
        ++cat.g_updates;
        break;
      }
      case Location::CategoryOwn: {
        CategoryState& cat = category(rec.key);
        cat.agg_category -= rec.size;
        cat.category_items.erase(ev.item->id);
        ++cat.c_updates;
        maybe_turn_off(rec.key);
        break;
      }
      default:
        break;
    }
    if (ev.bin_closed && ev.bin->id == base_bin_) base_bin_ = kNone;

    if (rule_ == ThresholdRule::ErrorAdaptive) {
      double e = multiplicative_error(rec.pdur, ev.real_duration);
      if (e > alpha_) {
        alpha_ = ppe_update_alpha(alpha_, e);
        // A higher threshold can drop running categories below the off mark.
        for (auto& [key, cat] : categories_)
          if (cat.on) maybe_turn_off(key);
      }
    }
  }

  double current_threshold() const { return threshold(); }
  double current_alpha() const { return alpha_; }
  std::int64_t base_bin_id() const { return base_bin_; }

 private:
  enum class Location { General, CategoryOwn, CategoryForeign, Base, Large };

  struct CategoryState {
    bool on = false;
    SizeVector agg_general;
    std::unordered_set<std::int64_t> general_items;
    int g_updates = 0;
    SizeVector agg_category;
    std::unordered_set<std::int64_t> category_items;
    int c_updates = 0;
  };

  struct PlacedItem {
    std::int64_t key;
    Location loc;
    SizeVector size;
    DurationUs pdur;
  };

  static constexpr std::int64_t kNone = -1;

  double threshold() const {
    double x = static_cast<double>(seen_.empty() ? 1 : seen_.size());
    return (rule_ == ThresholdRule::ErrorAdaptive ? alpha_ : 1.0) / std::sqrt(x);
  }

  CategoryState& category(std::int64_t key) {
    auto [it, inserted] = categories_.try_emplace(key);
    if (inserted) {
      it->second.agg_general = SizeVector(dims_);
      it->second.agg_category = SizeVector(dims_);
    }
    return it->second;
  }

  const Bin* find_base(const PlacementContext& ctx) const {
    if (base_bin_ == kNone) return nullptr;
    for (const Bin* b : ctx.open_bins)
      if (b->id == base_bin_) return b;
    return nullptr;
  }

  void add_general(std::int64_t key, const SizeVector& size) {
    CategoryState& cat = category(key);
    cat.agg_general += size;
    ++cat.g_updates;
  }

  void add_category(std::int64_t key, const SizeVector& size) {
    CategoryState& cat = category(key);
    cat.agg_category += size;
    ++cat.c_updates;
  }

  void refresh_general(CategoryState& cat) {
    if (cat.g_updates <= kLoadRecomputeInterval) return;
    SizeVector exact(dims_);
    for (std::int64_t id : cat.general_items) exact += placed_.at(id).size;
    cat.agg_general = exact;
    cat.g_updates = 0;
  }

  void maybe_turn_off(std::int64_t key) {
    CategoryState& cat = category(key);
    if (!cat.on) return;
    if (cat.c_updates > kLoadRecomputeInterval) {
      SizeVector exact(dims_);
      for (std::int64_t id : cat.category_items) exact += placed_.at(id).size;
      cat.agg_category = exact;
      cat.c_updates = 0;
    }
    if (lp_norm(cat.agg_category, Norm::Linf) < threshold() / 2.0) cat.on = false;
  }

  void convert_base(Bin& bin, std::int64_t trigger_key) {
    bin.tag = {BinRole::Category, trigger_key, bin.tag.klass};
    base_bin_ = kNone;
    CategoryState& cat = category(trigger_key);
    cat.on = true;
    for (std::int64_t id : bin.active) {
      auto it = placed_.find(id);
      if (it == placed_.end()) continue;
      PlacedItem& rec = it->second;
      if (rec.loc != Location::Base) continue;
      if (rec.key == trigger_key) {
        rec.loc = Location::CategoryOwn;
        cat.agg_category += rec.size;
        cat.category_items.insert(id);
        ++cat.c_updates;
      } else {
        rec.loc = Location::CategoryForeign;
      }
    }
  }

  ThresholdRule rule_;
  bool large_bins_;
  int dims_ = 1;
  double alpha_ = 1.0;
  std::set<std::int64_t> seen_;
  std::map<std::int64_t, CategoryState> categories_;
  std::unordered_map<std::int64_t, PlacedItem> placed_;
  std::int64_t base_bin_ = kNone;
};

/// Any-Fit packing that matches the item's predicted-duration range with
/// the bin's predicted remaining usage time. Items in the shortest range
/// consider every open bin; other items try same-range bins first and fall
/// back to the rest. Best Fit with the l-inf score picks within a group.
class LifetimeAlignment : public Strategy {
 public:
  enum class Ranges { Binary, Geometric };

  explicit LifetimeAlignment(Ranges ranges) : ranges_(ranges) {}

  std::string name() const override {
    return ranges_ == Ranges::Binary ? "la:binary" : "la:geometric";
  }

  Decision place(const PlacementContext& ctx) override {
    TimePoint dep = *detail::require_departure(ctx, "lifetime-alignment");
    DurationUs pdur = dep - ctx.item->arrival;
    int item_range = range_of(pdur);

    const SizeVector& size = ctx.item->size;
    if (item_range == 0) {
      const Bin* b = best_fit_scan(ctx.open_bins, size, Norm::Linf);
      return b ? Decision::use(b->id) : Decision::open_new();
    }
    auto in_same_range = [&](const Bin& bin) {
      DurationUs remaining = std::max<TimePoint>(0, indicated_closing_at(bin, ctx.now) - ctx.now);
      return range_of(remaining) == item_range;
    };
    const Bin* b = best_fit_scan(ctx.open_bins, size, Norm::Linf, in_same_range);
    if (!b) b = best_fit_scan(ctx.open_bins, size, Norm::Linf,
                              [&](const Bin& bin) { return !in_same_range(bin); });
    return b ? Decision::use(b->id) : Decision::open_new();
  }

 private:
  int range_of(DurationUs duration) const {
    if (ranges_ == Ranges::Binary) return duration < 120 * 60 * kMicrosPerSecond ? 0 : 1;
    return geometric_duration_range(duration);
  }

  Ranges ranges_;
};

}  // namespace dvbp

#endif  // DVBP_STRATEGIES_LEARNING_HPP
