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

#ifndef DVBP_PREDICTOR_HPP
#define DVBP_PREDICTOR_HPP

#include <cmath>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <unordered_map>

#include "dvbp/core.hpp"

namespace dvbp {

/// Predicted duration per item id. Predicted departure = arrival + duration.
using PredictionTable = std::unordered_map<std::int64_t, DurationUs>;

namespace rng {

inline std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9E3779B97F4A7C15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Counter-based per-stream generator: a SplitMix64 walk whose starting
/// state mixes a global seed with a stream index. Draws for stream k are
/// independent of the order streams are visited, so per-item predictions
/// are reproducible under any parallel schedule.
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t s = stream;
    state_ = seed ^ splitmix64(s);
  }

  std::uint64_t next_u64() { return splitmix64(state_); }

  /// Uniform in [0, 1).
  double next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform in (0, 1]; safe for log().
  double next_unit_open() { return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53; }

  bool next_bool() { return (next_u64() & 1ULL) != 0; }

  /// Standard normal via Box-Muller (deterministic, no rejection loop).
  double next_normal() {
    double u1 = next_unit_open();
    double u2 = next_unit();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  std::uint64_t state_ = 0;
};

}  // namespace rng

/// Synthetic multiplicative prediction error model.
///   LogNormal(sigma): delta = exp(N(0, sigma^2)), Pdur = delta * Rdur.
///   Uniform(eps):     delta ~ U[1, eps]; a fair coin picks Rdur/delta vs
///                     delta * Rdur (under- vs over-estimation).
struct ErrorModel {
  enum class Kind { LogNormal, Uniform };

  Kind kind = Kind::LogNormal;
  double param = 0.0;  // sigma >= 0 or eps >= 1
  std::uint64_t seed = 0;

  static ErrorModel log_normal(double sigma, std::uint64_t seed) {
    if (sigma < 0) throw std::invalid_argument("ErrorModel: sigma must be >= 0");
    return {Kind::LogNormal, sigma, seed};
  }

  static ErrorModel uniform(double eps, std::uint64_t seed) {
    if (eps < 1) throw std::invalid_argument("ErrorModel: eps must be >= 1");
    return {Kind::Uniform, eps, seed};
  }
};

/// Predicted duration for one item. Stream index = item id, so the value
/// does not depend on iteration order. Exact when sigma = 0 or eps = 1.
inline DurationUs predict_duration(const ErrorModel& model, std::int64_t item_id, DurationUs real) {
  rng::CounterRng gen(model.seed, static_cast<std::uint64_t>(item_id));
  double pdur;
  if (model.kind == ErrorModel::Kind::LogNormal) {
    if (model.param == 0.0) return real;
    double delta = std::exp(model.param * gen.next_normal());
    pdur = delta * static_cast<double>(real);
  } else {
    if (model.param == 1.0) return real;
    double delta = 1.0 + gen.next_unit() * (model.param - 1.0);
    bool under = gen.next_bool();
    pdur = under ? static_cast<double>(real) / delta : delta * static_cast<double>(real);
  }
  // Predictions that round to zero microseconds clamp to the time quantum.
  auto us = static_cast<DurationUs>(std::llround(pdur));
  return us < 1 ? 1 : us;
}

inline PredictionTable generate_predictions(const Instance& instance, const ErrorModel& model) {
  PredictionTable table;
  table.reserve(instance.items.size());
  for (const Item& it : instance.items)
    table.emplace(it.id, predict_duration(model, it.id, it.duration()));
  return table;
}

/// Multiplicative prediction error: always >= 1, equal to 1 iff exact.
inline double multiplicative_error(DurationUs predicted, DurationUs real) {
  if (predicted <= 0 || real <= 0) throw std::invalid_argument("multiplicative_error: nonpositive duration");
  double p = static_cast<double>(predicted);
  double r = static_cast<double>(real);
  return std::max(r / p, p / r);
}

}  // namespace dvbp

#endif  // DVBP_PREDICTOR_HPP
