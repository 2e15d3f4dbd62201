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

#ifndef DVBP_STRATEGY_FACTORY_HPP
#define DVBP_STRATEGY_FACTORY_HPP

#include <cctype>
#include <charconv>
#include <cmath>
#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>

#include "dvbp/strategies_clairvoyant.hpp"
#include "dvbp/strategies_learning.hpp"
#include "dvbp/strategies_nonclairvoyant.hpp"

namespace dvbp {

/// Parses "<number><unit>" into microseconds. Units: us, ms, s (default),
/// m/min, h, d/day.
inline DurationUs parse_duration_us(std::string_view text) {
  std::size_t pos = 0;
  while (pos < text.size() &&
         (std::isdigit(static_cast<unsigned char>(text[pos])) || text[pos] == '.' ||
          text[pos] == '-' || text[pos] == '+' || text[pos] == 'e' || text[pos] == 'E'))
    ++pos;
  double value = 0;
  auto [p, ec] = std::from_chars(text.data(), text.data() + pos, value);
  if (ec != std::errc() || p != text.data() + pos)
    throw std::invalid_argument("bad duration: " + std::string(text));
  std::string_view unit = text.substr(pos);
  double scale;
  if (unit.empty() || unit == "s") scale = 1e6;
  else if (unit == "us") scale = 1;
  else if (unit == "ms") scale = 1e3;
  else if (unit == "m" || unit == "min") scale = 60e6;
  else if (unit == "h") scale = 3600e6;
  else if (unit == "d" || unit == "day") scale = 86400e6;
  else throw std::invalid_argument("bad duration unit: " + std::string(text));
  auto us = static_cast<DurationUs>(std::llround(value * scale));
  if (us <= 0) throw std::invalid_argument("duration must be positive: " + std::string(text));
  return us;
}

struct StrategySpec {
  std::unique_ptr<Strategy> strategy;
  Knowledge knowledge = Knowledge::NonClairvoyant;
};

/// Builds a strategy from its command-line name. Duration-knowledge
/// strategies run clairvoyantly under their bare names; the "predicted:"
/// prefix reruns them on predicted departures. Prediction-native strategies
/// (rcp, ppe, la) always require a prediction table.
inline StrategySpec make_strategy(std::string_view name) {
  auto param_of = [&](std::string_view prefix) -> std::string_view {
    return name.substr(prefix.size());
  };

  if (name == "first-fit") return {std::make_unique<FirstFit>(), Knowledge::NonClairvoyant};
  if (name == "mru") return {std::make_unique<MostRecentlyUsed>(), Knowledge::NonClairvoyant};
  if (name == "next-fit") return {std::make_unique<NextFit>(), Knowledge::NonClairvoyant};
  if (name == "rr-next-fit") return {std::make_unique<RoundRobinNextFit>(), Knowledge::NonClairvoyant};
  if (name == "best-fit:l1") return {std::make_unique<BestFit>(Norm::L1), Knowledge::NonClairvoyant};
  if (name == "best-fit:l2") return {std::make_unique<BestFit>(Norm::L2), Knowledge::NonClairvoyant};
  if (name == "best-fit:linf") return {std::make_unique<BestFit>(Norm::Linf), Knowledge::NonClairvoyant};

  if (name.starts_with("classify-departure:")) {
    DurationUs rho = parse_duration_us(param_of("classify-departure:"));
    return {std::make_unique<ClassifyByDepartureTime>(rho), Knowledge::Clairvoyant};
  }
  if (name == "nrt:standard")
    return {std::make_unique<NearestRemainingTime>(NearestRemainingTime::Mode::Standard),
            Knowledge::Clairvoyant};
  if (name == "nrt:prioritized")
    return {std::make_unique<NearestRemainingTime>(NearestRemainingTime::Mode::Prioritized),
            Knowledge::Clairvoyant};
  if (name == "greedy") return {std::make_unique<GreedyLatestClosing>(), Knowledge::Clairvoyant};
  if (name.starts_with("classify-duration:")) {
    std::string_view p = param_of("classify-duration:");
    double beta = 0;
    auto [ptr, ec] = std::from_chars(p.data(), p.data() + p.size(), beta);
    if (ec != std::errc() || ptr != p.data() + p.size())
      throw std::invalid_argument("bad beta: " + std::string(p));
    return {std::make_unique<ClassifyByDuration>(beta), Knowledge::Clairvoyant};
  }
  if (name == "hybrid")
    return {std::make_unique<HybridPacking>(HybridPacking::Variant::Full), Knowledge::Clairvoyant};
  if (name == "reduced-hybrid")
    return {std::make_unique<HybridPacking>(HybridPacking::Variant::Reduced), Knowledge::Clairvoyant};
  if (name.starts_with("direct-sum:")) {
    std::string inner(param_of("direct-sum:"));
    StrategySpec probe = make_strategy(inner);  // validates the inner name
    auto factory = [inner]() { return make_strategy(inner).strategy; };
    return {std::make_unique<DirectSum>(inner, factory), probe.knowledge};
  }

  if (name == "rcp")
    return {std::make_unique<CategoryThresholdPacking>(
                CategoryThresholdPacking::ThresholdRule::Plain, true),
            Knowledge::Predicted};
  if (name == "ppe")
    return {std::make_unique<CategoryThresholdPacking>(
                CategoryThresholdPacking::ThresholdRule::ErrorAdaptive, true),
            Knowledge::Predicted};
  if (name == "rcp-nolarge")
    return {std::make_unique<CategoryThresholdPacking>(
                CategoryThresholdPacking::ThresholdRule::Plain, false),
            Knowledge::Predicted};
  if (name == "ppe-nolarge")
    return {std::make_unique<CategoryThresholdPacking>(
                CategoryThresholdPacking::ThresholdRule::ErrorAdaptive, false),
            Knowledge::Predicted};
  if (name == "la:binary")
    return {std::make_unique<LifetimeAlignment>(LifetimeAlignment::Ranges::Binary),
            Knowledge::Predicted};
  if (name == "la:geometric")
    return {std::make_unique<LifetimeAlignment>(LifetimeAlignment::Ranges::Geometric),
            Knowledge::Predicted};

  if (name.starts_with("predicted:")) {
    StrategySpec inner = make_strategy(param_of("predicted:"));
    if (inner.knowledge != Knowledge::Clairvoyant)
      throw std::invalid_argument("predicted: wraps duration-knowledge strategies only: " +
                                  std::string(name));
    inner.knowledge = Knowledge::Predicted;
    return inner;
  }

  throw std::invalid_argument("unknown strategy: " + std::string(name));
}

/// True when the strategy's results depend on the prediction table.
inline bool uses_predictions(std::string_view name) {
  return make_strategy(name).knowledge == Knowledge::Predicted;
}

}  // namespace dvbp

#endif  // DVBP_STRATEGY_FACTORY_HPP
