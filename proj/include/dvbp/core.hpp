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

#ifndef DVBP_CORE_HPP
#define DVBP_CORE_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <stdexcept>
#include <string>
#include <vector>

namespace dvbp {

/// Time is integer microseconds since the trace epoch. Integer time gives
/// exact event ordering and reproducible ties; trace spans up to 100 days
/// stay far away from the int64 range.
using TimePoint = std::int64_t;
using DurationUs = std::int64_t;

inline constexpr std::int64_t kMicrosPerSecond = 1'000'000;
inline constexpr std::int64_t kMicrosPerDay = 86'400 * kMicrosPerSecond;

/// Capacity comparisons tolerate this much float accumulation in load sums.
inline constexpr double kCapacityTol = 1e-9;

/// Bin loads are recomputed from the active-item set after this many
/// incremental updates, so float drift cannot build up.
inline constexpr int kLoadRecomputeInterval = 1024;

inline constexpr int kMaxDims = 8;

inline TimePoint us_from_seconds(double s) {
  return static_cast<TimePoint>(std::llround(s * static_cast<double>(kMicrosPerSecond)));
}

inline TimePoint us_from_days(double days) {
  return static_cast<TimePoint>(std::llround(days * static_cast<double>(kMicrosPerDay)));
}

inline double seconds_from_us(std::int64_t us) {
  return static_cast<double>(us) / static_cast<double>(kMicrosPerSecond);
}

/// A d-dimensional size/load vector with inline storage. Item sizes live in
/// [0, 1] per component; loads and aggregates may exceed 1.
class SizeVector {
 public:
  SizeVector() = default;

  explicit SizeVector(int dims) : dims_(dims) {
    if (dims < 1 || dims > kMaxDims) throw std::invalid_argument("SizeVector: bad dimension count");
  }

  SizeVector(std::initializer_list<double> values) : dims_(static_cast<int>(values.size())) {
    if (dims_ < 1 || dims_ > kMaxDims) throw std::invalid_argument("SizeVector: bad dimension count");
    int i = 0;
    for (double x : values) v_[i++] = x;
  }

  int dims() const { return dims_; }
  double operator[](int i) const { return v_[i]; }
  double& operator[](int i) { return v_[i]; }

  SizeVector& operator+=(const SizeVector& o) {
    check_dims(o);
    for (int i = 0; i < dims_; ++i) v_[i] += o.v_[i];
    return *this;
  }

  SizeVector& operator-=(const SizeVector& o) {
    check_dims(o);
    for (int i = 0; i < dims_; ++i) v_[i] -= o.v_[i];
    return *this;
  }

  friend SizeVector operator+(SizeVector a, const SizeVector& b) { return a += b; }
  friend SizeVector operator-(SizeVector a, const SizeVector& b) { return a -= b; }

  bool operator==(const SizeVector& o) const {
    if (dims_ != o.dims_) return false;
    for (int i = 0; i < dims_; ++i)
      if (v_[i] != o.v_[i]) return false;
    return true;
  }

  double max_component() const {
    double m = v_[0];
    for (int i = 1; i < dims_; ++i) m = std::max(m, v_[i]);
    return m;
  }

 private:
  void check_dims(const SizeVector& o) const {
    if (dims_ != o.dims_) throw std::invalid_argument("SizeVector: dimension mismatch");
  }

  std::array<double, kMaxDims> v_{};
  int dims_ = 0;
};

enum class Norm { L1, L2, Linf };

inline double lp_norm(const SizeVector& v, Norm p) {
  switch (p) {
    case Norm::L1: {
      double s = 0;
      for (int i = 0; i < v.dims(); ++i) s += std::abs(v[i]);
      return s;
    }
    case Norm::L2: {
      double s = 0;
      for (int i = 0; i < v.dims(); ++i) s += v[i] * v[i];
      return std::sqrt(s);
    }
    case Norm::Linf: {
      double m = 0;
      for (int i = 0; i < v.dims(); ++i) m = std::max(m, std::abs(v[i]));
      return m;
    }
  }
  return 0;
}

/// True iff the item fits: load + size stays within unit capacity in every
/// dimension, up to kCapacityTol.
inline bool fits(const SizeVector& load, const SizeVector& size) {
  if (load.dims() != size.dims()) throw std::invalid_argument("fits: dimension mismatch");
  for (int i = 0; i < load.dims(); ++i)
    if (load[i] + size[i] > 1.0 + kCapacityTol) return false;
  return true;
}

/// A VM request: size vector plus half-open active interval [arrival, departure).
struct Item {
  std::int64_t id = 0;
  SizeVector size;
  TimePoint arrival = 0;
  TimePoint departure = 0;

  DurationUs duration() const { return departure - arrival; }
};

inline bool is_valid_item(const Item& it) {
  if (it.departure <= it.arrival) return false;
  for (int i = 0; i < it.size.dims(); ++i)
    if (it.size[i] < 0.0 || it.size[i] > 1.0) return false;
  return it.size.dims() >= 1;
}

/// A cleaned trace. Items are kept sorted by (arrival, id); min_duration and
/// mu (max/min duration ratio) are derived metadata used by duration-aware
/// strategies.
struct Instance {
  std::string name;
  int d = 0;
  std::vector<Item> items;
  DurationUs min_duration = 0;
  double mu = 1.0;

  void sort_items() {
    std::stable_sort(items.begin(), items.end(), [](const Item& a, const Item& b) {
      if (a.arrival != b.arrival) return a.arrival < b.arrival;
      return a.id < b.id;
    });
  }

  void recompute_metadata() {
    min_duration = 0;
    mu = 1.0;
    DurationUs max_duration = 0;
    for (const Item& it : items) {
      DurationUs dur = it.duration();
      if (min_duration == 0 || dur < min_duration) min_duration = dur;
      max_duration = std::max(max_duration, dur);
    }
    if (min_duration > 0)
      mu = static_cast<double>(max_duration) / static_cast<double>(min_duration);
  }

  void validate() const {
    if (d < 1 || d > kMaxDims) throw std::invalid_argument("Instance: bad dimension count");
    for (std::size_t i = 0; i < items.size(); ++i) {
      const Item& it = items[i];
      if (it.size.dims() != d) throw std::invalid_argument("Instance: item dimension mismatch");
      if (!is_valid_item(it))
        throw std::invalid_argument("Instance: invalid item id " + std::to_string(it.id));
      if (i > 0) {
        const Item& prev = items[i - 1];
        if (prev.arrival > it.arrival || (prev.arrival == it.arrival && prev.id >= it.id))
          throw std::invalid_argument("Instance: items not sorted by (arrival, id)");
      }
    }
  }
};

enum class BinRole { None = 0, General, Category, Base, Large };

/// Strategy-specific bin labels: a role in the general/category/base/large
/// scheme plus a free-form category key. `klass` is the size-class used by
/// dimension-partitioning wrappers.
struct BinTag {
  BinRole role = BinRole::None;
  std::int64_t key = 0;
  int klass = -1;
};

/// An open physical machine. The engine owns every field except `tag`,
/// which strategies may set when opening and rewrite later.
struct Bin {
  std::int64_t id = 0;
  TimePoint opened_at = 0;
  SizeVector load;
  std::vector<std::int64_t> active;  // item ids currently placed here
  TimePoint indicated_closing = 0;   // max known departure among active items
  TimePoint last_access = 0;         // last time the bin received an item
  std::uint64_t last_access_seq = 0; // placement sequence number, breaks last_access ties
  BinTag tag;
  int updates_since_recompute = 0;

  SizeVector available() const {
    SizeVector a(load.dims());
    for (int i = 0; i < load.dims(); ++i) a[i] = 1.0 - load[i];
    return a;
  }
};

}  // namespace dvbp

#endif  // DVBP_CORE_HPP
