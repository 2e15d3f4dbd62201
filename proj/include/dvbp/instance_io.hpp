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

#ifndef DVBP_INSTANCE_IO_HPP
#define DVBP_INSTANCE_IO_HPP

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "dvbp/core.hpp"

namespace dvbp {

namespace detail {

inline std::string double_to_string(double x) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, end);
}

}  // namespace detail

/// Instance file: a small text header followed by one line per item
/// ("id arrival_us departure_us s1 .. sd"). Size components use
/// shortest-round-trip formatting, so write/read cycles are exact.
inline void write_instance(std::ostream& out, const Instance& instance) {
  out << "dvbp-instance v1\n";
  out << "name " << instance.name << "\n";
  out << "d " << instance.d << "\n";
  out << "min_duration_us " << instance.min_duration << "\n";
  out << "mu " << detail::double_to_string(instance.mu) << "\n";
  out << "items " << instance.items.size() << "\n";
  for (const Item& it : instance.items) {
    out << it.id << ' ' << it.arrival << ' ' << it.departure;
    for (int i = 0; i < instance.d; ++i) out << ' ' << detail::double_to_string(it.size[i]);
    out << '\n';
  }
}

inline void save_instance(const std::string& path, const Instance& instance) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write instance file: " + path);
  write_instance(out, instance);
}

inline Instance read_instance(std::istream& in) {
  Instance instance;
  std::string line, key;
  if (!std::getline(in, line) || line != "dvbp-instance v1")
    throw std::runtime_error("not a dvbp instance file");
  std::size_t n_items = 0;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    ls >> key;
    if (key == "name") {
      std::string rest;
      std::getline(ls, rest);
      if (!rest.empty() && rest.front() == ' ') rest.erase(0, 1);
      instance.name = rest;
    } else if (key == "d") {
      ls >> instance.d;
    } else if (key == "min_duration_us") {
      ls >> instance.min_duration;
    } else if (key == "mu") {
      ls >> instance.mu;
    } else if (key == "items") {
      ls >> n_items;
      break;
    } else {
      throw std::runtime_error("unknown instance header field: " + key);
    }
  }
  instance.items.reserve(n_items);
  for (std::size_t i = 0; i < n_items; ++i) {
    if (!std::getline(in, line)) throw std::runtime_error("truncated instance file");
    std::istringstream ls(line);
    Item it;
    it.size = SizeVector(instance.d);
    ls >> it.id >> it.arrival >> it.departure;
    for (int k = 0; k < instance.d; ++k) ls >> it.size[k];
    if (!ls) throw std::runtime_error("bad item line " + std::to_string(i + 1));
    instance.items.push_back(it);
  }
  instance.sort_items();
  // Stored metadata must match what the items imply.
  DurationUs stored_min = instance.min_duration;
  double stored_mu = instance.mu;
  instance.recompute_metadata();
  if (stored_min != 0 && stored_min != instance.min_duration)
    throw std::runtime_error("instance metadata mismatch: min_duration");
  if (stored_mu != 0 && std::abs(stored_mu - instance.mu) > 1e-9 * std::max(1.0, instance.mu))
    throw std::runtime_error("instance metadata mismatch: mu");
  instance.validate();
  return instance;
}

inline Instance load_instance(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open instance file: " + path);
  return read_instance(in);
}

}  // namespace dvbp

#endif  // DVBP_INSTANCE_IO_HPP
