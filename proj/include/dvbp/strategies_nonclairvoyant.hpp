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

#ifndef DVBP_STRATEGIES_NONCLAIRVOYANT_HPP
#define DVBP_STRATEGIES_NONCLAIRVOYANT_HPP

#include <algorithm>
#include <cstdint>
#include <string>
#include <vector>

#include "dvbp/strategy.hpp"

namespace dvbp {

/// Earliest-opened bin with room; a new bin only when none fits.
class FirstFit : public Strategy {
 public:
  std::string name() const override { return "first-fit"; }

  Decision place(const PlacementContext& ctx) override {
    const Bin* b = first_fit_scan(ctx.open_bins, ctx.item->size);
    return b ? Decision::use(b->id) : Decision::open_new();
  }
};

/// Scans bins in descending last-access order; receiving an item moves a
/// bin to the front. Losing items on departure does not count as access.
class MostRecentlyUsed : public Strategy {
 public:
  std::string name() const override { return "mru"; }

  Decision place(const PlacementContext& ctx) override {
    std::vector<const Bin*> order(ctx.open_bins.begin(), ctx.open_bins.end());
    std::sort(order.begin(), order.end(),
              [](const Bin* a, const Bin* b) { return a->last_access_seq > b->last_access_seq; });
    const Bin* b = first_fit_scan(order, ctx.item->size);
    return b ? Decision::use(b->id) : Decision::open_new();
  }
};

/// Only one open bin accepts placements. Once an item does not fit, that
/// bin is sealed forever and a fresh bin takes over.
class NextFit : public Strategy {
 public:
  std::string name() const override { return "next-fit"; }

  Decision place(const PlacementContext& ctx) override {
    if (accepting_ != kNone) {
      for (const Bin* b : ctx.open_bins)
        if (b->id == accepting_)
          return fits(b->load, ctx.item->size) ? Decision::use(b->id) : Decision::open_new();
      // The accepting bin emptied and closed; nothing accepts until we open.
    }
    return Decision::open_new();
  }

  void on_placed(const PlacementContext&, Bin& bin) override {
    if (bin.active.size() == 1 && bin.id != accepting_) accepting_ = bin.id;
  }

 private:
  static constexpr std::int64_t kNone = -1;
  std::int64_t accepting_ = kNone;
};

/// Next Fit made Any Fit: scan open bins in ascending open order starting
/// at the flag (the bin that received the last arrived item), wrapping
/// around; a new bin only after a full cycle fails.
class RoundRobinNextFit : public Strategy {
 public:
  std::string name() const override { return "rr-next-fit"; }

  Decision place(const PlacementContext& ctx) override {
    auto bins = ctx.open_bins;
    if (bins.empty()) return Decision::open_new();
    // Bin ids grow with open order, so the scan start is the first open bin
    // whose id is not below the flag (the flag bin itself if still open).
    std::size_t start = 0;
    if (flag_ != kNone) {
      while (start < bins.size() && bins[start]->id < flag_) ++start;
      if (start == bins.size()) start = 0;
    }
    for (std::size_t k = 0; k < bins.size(); ++k) {
      const Bin* b = bins[(start + k) % bins.size()];
      if (fits(b->load, ctx.item->size)) return Decision::use(b->id);
    }
    return Decision::open_new();
  }

  void on_placed(const PlacementContext&, Bin& bin) override { flag_ = bin.id; }

 private:
  static constexpr std::int64_t kNone = -1;
  std::int64_t flag_ = kNone;
};

/// Among fitting bins, minimize the chosen norm of the residual capacity
/// after accepting the item; ties go to the earliest-opened bin.
class BestFit : public Strategy {
 public:
  explicit BestFit(Norm norm) : norm_(norm) {}

  std::string name() const override {
    switch (norm_) {
      case Norm::L1: return "best-fit:l1";
      case Norm::L2: return "best-fit:l2";
      case Norm::Linf: return "best-fit:linf";
    }
    return "best-fit";
  }

  Decision place(const PlacementContext& ctx) override {
    const Bin* b = best_fit_scan(ctx.open_bins, ctx.item->size, norm_);
    return b ? Decision::use(b->id) : Decision::open_new();
  }

 private:
  Norm norm_;
};

}  // namespace dvbp

#endif  // DVBP_STRATEGIES_NONCLAIRVOYANT_HPP
