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

#ifndef DVBP_INGEST_HPP
#define DVBP_INGEST_HPP

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "dvbp/core.hpp"
#include "dvbp/engine.hpp"

namespace dvbp {
namespace ingest {

/// Maps the semantic column names used here to the actual header names in
/// a file. Unmapped names are looked up verbatim.
using ColumnMap = std::unordered_map<std::string, std::string>;

namespace detail {

inline char sniff_delimiter(const std::string& header) {
  for (char c : {',', '\t', ';', '|'})
    if (header.find(c) != std::string::npos) return c;
  return ',';
}

inline std::vector<std::string> split(const std::string& line, char delim) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    std::size_t pos = line.find(delim, start);
    if (pos == std::string::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  for (std::string& s : out) {
    while (!s.empty() && (s.back() == '\r' || s.back() == ' ')) s.pop_back();
    while (!s.empty() && s.front() == ' ') s.erase(0, 1);
  }
  return out;
}

inline bool is_null_field(const std::string& s) {
  if (s.empty()) return true;
  std::string lower;
  for (char c : s) lower.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  return lower == "null" || lower == "none" || lower == "nan" || lower == "na";
}

inline double parse_double(const std::string& s, std::size_t row, const char* what) {
  double v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size())
    throw std::runtime_error("malformed " + std::string(what) + " at data row " +
                             std::to_string(row) + ": '" + s + "'");
  return v;
}

inline std::int64_t parse_int(const std::string& s, std::size_t row, const char* what) {
  std::int64_t v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size())
    throw std::runtime_error("malformed " + std::string(what) + " at data row " +
                             std::to_string(row) + ": '" + s + "'");
  return v;
}

/// Streaming reader for a delimited table with a header row.
class Table {
 public:
  Table(const std::string& path, const ColumnMap& columns) : in_(path), columns_(&columns) {
    if (!in_) throw std::runtime_error("cannot open: " + path);
    std::string header;
    if (!std::getline(in_, header)) throw std::runtime_error("empty table: " + path);
    delim_ = sniff_delimiter(header);
    std::vector<std::string> names = split(header, delim_);
    for (std::size_t i = 0; i < names.size(); ++i) index_[names[i]] = i;
  }

  std::size_t column(const std::string& semantic) const {
    auto mapped = columns_->find(semantic);
    const std::string& actual = mapped == columns_->end() ? semantic : mapped->second;
    auto it = index_.find(actual);
    if (it == index_.end()) throw std::runtime_error("missing column: " + actual);
    return it->second;
  }

  /// Next data row; empty optional at end. `row_number()` is 1-based.
  std::optional<std::vector<std::string>> next() {
    std::string line;
    while (std::getline(in_, line)) {
      ++row_;
      if (line.empty() || line == "\r") continue;
      std::vector<std::string> fields = split(line, delim_);
      if (fields.size() < index_.size())
        throw std::runtime_error("malformed row " + std::to_string(row_) +
                                 ": expected " + std::to_string(index_.size()) + " fields");
      return fields;
    }
    return std::nullopt;
  }

  std::size_t row_number() const { return row_; }

 private:
  std::ifstream in_;
  const ColumnMap* columns_;
  char delim_ = ',';
  std::unordered_map<std::string, std::size_t> index_;
  std::size_t row_ = 0;
};

}  // namespace detail

// ---------------------------------------------------------------------------
// Azure
// ---------------------------------------------------------------------------

/// One (VM type, PM type) compatibility record with fractional usage along
/// {core, memory, hdd, ssd, nic}; null usages read as zero.
struct AzureVmType {
  std::int64_t vm_type = 0;
  std::int64_t pm_type = 0;
  std::array<double, 5> usage{};  // core, memory, hdd, ssd, nic
};

struct AzureVmRequest {
  std::int64_t vm_type = 0;
  double start_days = 0;
  bool has_end = false;
  double end_days = 0;
  std::int64_t row = 0;
};

inline std::vector<AzureVmType> read_azure_types(const std::string& path,
                                                 const ColumnMap& columns = {}) {
  detail::Table table(path, columns);
  const std::size_t c_vm = table.column("vmType");
  const std::size_t c_pm = table.column("pmType");
  const std::array<std::size_t, 5> c_usage = {table.column("core"), table.column("memory"),
                                              table.column("hdd"), table.column("ssd"),
                                              table.column("nic")};
  std::vector<AzureVmType> out;
  while (auto row = table.next()) {
    AzureVmType t;
    t.vm_type = detail::parse_int((*row)[c_vm], table.row_number(), "vmType");
    t.pm_type = detail::parse_int((*row)[c_pm], table.row_number(), "pmType");
    for (int i = 0; i < 5; ++i) {
      const std::string& f = (*row)[c_usage[i]];
      t.usage[i] = detail::is_null_field(f) ? 0.0 : detail::parse_double(f, table.row_number(), "usage");
      if (t.usage[i] < 0.0 || t.usage[i] > 1.0)
        throw std::runtime_error("usage outside [0,1] at data row " +
                                 std::to_string(table.row_number()));
    }
    out.push_back(t);
  }
  return out;
}

inline std::vector<AzureVmRequest> read_azure_requests(const std::string& path,
                                                       const ColumnMap& columns = {}) {
  detail::Table table(path, columns);
  const std::size_t c_vm = table.column("vmType");
  const std::size_t c_start = table.column("starttime");
  const std::size_t c_end = table.column("endtime");
  std::vector<AzureVmRequest> out;
  while (auto row = table.next()) {
    AzureVmRequest r;
    r.vm_type = detail::parse_int((*row)[c_vm], table.row_number(), "vmType");
    r.start_days = detail::parse_double((*row)[c_start], table.row_number(), "starttime");
    const std::string& end = (*row)[c_end];
    if (!detail::is_null_field(end)) {
      r.has_end = true;
      r.end_days = detail::parse_double(end, table.row_number(), "endtime");
    }
    r.row = static_cast<std::int64_t>(out.size());
    out.push_back(r);
  }
  return out;
}

struct CleanStats {
  std::size_t total = 0;
  std::size_t kept = 0;
  std::size_t dropped_null_end = 0;
  std::size_t dropped_negative_start = 0;
  std::size_t dropped_beyond_14_days = 0;
};

/// Keeps only requests whose lifetime falls entirely inside the 14-day
/// collection window: drops null endtime, negative starttime and endtime
/// beyond 14 days.
inline std::vector<AzureVmRequest> clean_azure(const std::vector<AzureVmRequest>& requests,
                                               CleanStats* stats = nullptr) {
  CleanStats local;
  local.total = requests.size();
  std::vector<AzureVmRequest> kept;
  kept.reserve(requests.size());
  for (const AzureVmRequest& r : requests) {
    if (!r.has_end) {
      ++local.dropped_null_end;
      continue;
    }
    if (r.start_days < 0) {
      ++local.dropped_negative_start;
      continue;
    }
    if (r.end_days > 14.0) {
      ++local.dropped_beyond_14_days;
      continue;
    }
    kept.push_back(r);
  }
  local.kept = kept.size();
  if (stats) *stats = local;
  return kept;
}

/// Peak over time of the l-inf norm of the aggregate active size vector.
inline double peak_aggregate_load(const Instance& instance) {
  std::vector<Event> events = build_events(instance);
  std::unordered_map<std::int64_t, const Item*> by_id;
  for (const Item& it : instance.items) by_id.emplace(it.id, &it);
  SizeVector agg(instance.d);
  double peak = 0;
  for (const Event& e : events) {
    const Item& it = *by_id.at(e.item_id);
    if (e.kind == Event::Kind::Arrival)
      agg += it.size;
    else
      agg -= it.size;
    peak = std::max(peak, lp_norm(agg, Norm::Linf));
  }
  return peak;
}

struct AzureBuildResult {
  std::vector<Instance> instances;
  std::size_t empty_dropped = 0;
  std::size_t duplicate_dropped = 0;
  std::size_t trivial_dropped = 0;
  std::size_t zero_duration_items = 0;
};

/// One candidate instance per PM type: the requests for VM types compatible
/// with it, sized by that pair's fractional usage. Empty candidates, exact
/// duplicates (same item multiset) and trivial candidates (the active items
/// fit one machine at all times, so the lower bound is one bin throughout)
/// are dropped. The HDD dimension is elided when every compatible VM type
/// has zero HDD usage.
inline AzureBuildResult build_azure_instances(const std::vector<AzureVmType>& types,
                                              const std::vector<AzureVmRequest>& cleaned) {
  AzureBuildResult result;

  std::map<std::int64_t, std::map<std::int64_t, const AzureVmType*>> by_pm;  // pm -> vm -> record
  for (const AzureVmType& t : types) by_pm[t.pm_type][t.vm_type] = &t;

  std::map<std::int64_t, std::vector<const AzureVmRequest*>> by_vm;
  for (const AzureVmRequest& r : cleaned) by_vm[r.vm_type].push_back(&r);

  std::vector<Instance> candidates;
  for (const auto& [pm, vm_records] : by_pm) {
    bool any_hdd = false;
    for (const auto& [vm, rec] : vm_records)
      if (rec->usage[2] != 0.0) any_hdd = true;
    int d = any_hdd ? 5 : 4;

    Instance inst;
    inst.name = "azure-pm" + std::to_string(pm);
    inst.d = d;
    for (const auto& [vm, rec] : vm_records) {
      auto reqs = by_vm.find(vm);
      if (reqs == by_vm.end()) continue;
      SizeVector size(d);
      int out_dim = 0;
      for (int i = 0; i < 5; ++i) {
        if (i == 2 && !any_hdd) continue;
        size[out_dim++] = rec->usage[i];
      }
      for (const AzureVmRequest* r : reqs->second) {
        Item it;
        it.id = r->row;
        it.size = size;
        it.arrival = us_from_days(r->start_days);
        it.departure = us_from_days(r->end_days);
        if (it.departure <= it.arrival) {
          ++result.zero_duration_items;
          continue;
        }
        inst.items.push_back(it);
      }
    }
    if (inst.items.empty()) {
      ++result.empty_dropped;
      continue;
    }
    inst.sort_items();
    inst.recompute_metadata();
    candidates.push_back(std::move(inst));
  }

  // Exact duplicates: identical multiset of (size, interval) items. Items
  // are sorted by (arrival, id) with sizes fixed per instance, so comparing
  // the item sequences field-by-field compares multisets.
  auto same_items = [](const Instance& a, const Instance& b) {
    if (a.d != b.d || a.items.size() != b.items.size()) return false;
    for (std::size_t i = 0; i < a.items.size(); ++i) {
      const Item& x = a.items[i];
      const Item& y = b.items[i];
      if (x.arrival != y.arrival || x.departure != y.departure || !(x.size == y.size)) return false;
    }
    return true;
  };

  std::vector<Instance> unique;
  for (Instance& inst : candidates) {
    bool dup = false;
    for (const Instance& kept : unique)
      if (same_items(kept, inst)) {
        dup = true;
        break;
      }
    if (dup) {
      ++result.duplicate_dropped;
      continue;
    }
    unique.push_back(std::move(inst));
  }

  for (Instance& inst : unique) {
    if (peak_aggregate_load(inst) <= 1.0 + kCapacityTol) {
      ++result.trivial_dropped;
      continue;
    }
    result.instances.push_back(std::move(inst));
  }
  return result;
}

// ---------------------------------------------------------------------------
// Huawei
// ---------------------------------------------------------------------------

struct HuaweiCapacity {
  double cores = 0;
  double memory_gb = 0;

  std::string label() const {
    auto fmt = [](double v) {
      auto i = static_cast<std::int64_t>(v);
      return static_cast<double>(i) == v ? std::to_string(i) : std::to_string(v);
    };
    return fmt(cores) + "c-" + fmt(memory_gb) + "g";
  }
};

inline std::vector<HuaweiCapacity> default_huawei_capacities() {
  std::vector<HuaweiCapacity> out;
  for (double c : {64.0, 100.0, 128.0})
    for (double m : {128.0, 200.0, 256.0}) out.push_back({c, m});
  return out;
}

/// "64x128,100x200" -> capacity list (cores x GB).
inline std::vector<HuaweiCapacity> parse_huawei_capacities(const std::string& text) {
  std::vector<HuaweiCapacity> out;
  std::istringstream in(text);
  std::string tok;
  while (std::getline(in, tok, ',')) {
    std::size_t x = tok.find('x');
    if (x == std::string::npos) throw std::invalid_argument("bad capacity (want CxM): " + tok);
    out.push_back({std::stod(tok.substr(0, x)), std::stod(tok.substr(x + 1))});
  }
  if (out.empty()) throw std::invalid_argument("empty capacity list");
  return out;
}

struct HuaweiParseResult {
  std::vector<Instance> instances;
  std::size_t vm_count = 0;          // VMs with both creation and termination
  std::size_t unpaired_dropped = 0;  // events without a matching partner
  std::size_t zero_duration_items = 0;
  std::size_t oversized_dropped = 0;  // VMs larger than the assumed capacity
};

/// Pairs creation/termination events by vmid and emits one instance per
/// assumed PM capacity, sizes normalized by that capacity. Event times are
/// seconds; `type` is 0/creation or 1/termination.
inline HuaweiParseResult parse_huawei(const std::string& path,
                                      const std::vector<HuaweiCapacity>& capacities,
                                      const ColumnMap& columns = {}) {
  detail::Table table(path, columns);
  const std::size_t c_vmid = table.column("vmid");
  const std::size_t c_time = table.column("time");
  const std::size_t c_cpu = table.column("cpu");
  const std::size_t c_mem = table.column("memory");
  const std::size_t c_type = table.column("type");

  struct VmEvents {
    bool created = false, terminated = false;
    TimePoint created_at = 0, terminated_at = 0;
    double cpu = 0, memory = 0;
  };
  std::map<std::int64_t, VmEvents> vms;
  std::size_t extra_events = 0;

  while (auto row = table.next()) {
    std::int64_t vmid = detail::parse_int((*row)[c_vmid], table.row_number(), "vmid");
    double t = detail::parse_double((*row)[c_time], table.row_number(), "time");
    const std::string& type = (*row)[c_type];
    bool creation;
    if (type == "0" || type == "creation" || type == "create") creation = true;
    else if (type == "1" || type == "termination" || type == "terminate") creation = false;
    else throw std::runtime_error("malformed type at data row " + std::to_string(table.row_number()));

    VmEvents& vm = vms[vmid];
    if (creation) {
      if (vm.created) {
        ++extra_events;
        continue;
      }
      vm.created = true;
      vm.created_at = us_from_seconds(t);
      vm.cpu = detail::parse_double((*row)[c_cpu], table.row_number(), "cpu");
      vm.memory = detail::parse_double((*row)[c_mem], table.row_number(), "memory");
    } else {
      if (vm.terminated) {
        ++extra_events;
        continue;
      }
      vm.terminated = true;
      vm.terminated_at = us_from_seconds(t);
    }
  }

  HuaweiParseResult result;
  result.unpaired_dropped = extra_events;
  struct Vm {
    std::int64_t id;
    TimePoint arrival, departure;
    double cpu, memory;
  };
  std::vector<Vm> paired;
  for (const auto& [vmid, vm] : vms) {
    if (!vm.created || !vm.terminated) {
      ++result.unpaired_dropped;
      continue;
    }
    if (vm.terminated_at <= vm.created_at) {
      ++result.zero_duration_items;
      continue;
    }
    paired.push_back({vmid, vm.created_at, vm.terminated_at, vm.cpu, vm.memory});
  }
  result.vm_count = paired.size();

  for (const HuaweiCapacity& cap : capacities) {
    Instance inst;
    inst.name = "huawei-" + cap.label();
    inst.d = 2;
    for (const Vm& vm : paired) {
      double c = vm.cpu / cap.cores;
      double m = vm.memory / cap.memory_gb;
      if (c > 1.0 || m > 1.0) {
        ++result.oversized_dropped;
        continue;
      }
      inst.items.push_back({vm.id, SizeVector{c, m}, vm.arrival, vm.departure});
    }
    inst.sort_items();
    inst.recompute_metadata();
    result.instances.push_back(std::move(inst));
  }
  return result;
}

// ---------------------------------------------------------------------------
// Lifetime exploration
// ---------------------------------------------------------------------------

struct LifetimeHistogram {
  /// Bucket i counts items with lifetime in [2^(i-1), 2^i) seconds.
  std::map<int, std::int64_t> buckets;
  /// Natural log of each lifetime in seconds, for external Q-Q plotting.
  std::vector<double> log_lifetimes;
};

inline int lifetime_bucket(DurationUs duration_us) {
  double secs = seconds_from_us(duration_us);
  int i = static_cast<int>(std::floor(std::log2(secs))) + 1;
  while (secs < std::ldexp(1.0, i - 1)) --i;
  while (secs >= std::ldexp(1.0, i)) ++i;
  return i;
}

inline LifetimeHistogram lifetime_histogram(const Instance& instance) {
  LifetimeHistogram hist;
  hist.log_lifetimes.reserve(instance.items.size());
  for (const Item& it : instance.items) {
    ++hist.buckets[lifetime_bucket(it.duration())];
    hist.log_lifetimes.push_back(std::log(seconds_from_us(it.duration())));
  }
  return hist;
}

}  // namespace ingest
}  // namespace dvbp

#endif  // DVBP_INGEST_HPP
