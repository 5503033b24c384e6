// Copyright 2026 The bellsim Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Threshold detectors, click-pattern extraction, gating and tallies.
//
// Detectors do not resolve photon number and have no dark counts or dead
// time. A detector of efficiency eta is a loss channel followed by an
// ideal threshold detector. The trigger detector is not a Fock mode: it
// is a per-class flag (see sources.hpp).

#pragma once

#include <cmath>
#include <compare>
#include <cstdint>
#include <map>
#include <random>
#include <stdexcept>
#include <utility>
#include <vector>

#include "bellsim/fock.hpp"
#include "bellsim/optics.hpp"
#include "bellsim/rng.hpp"
#include "bellsim/sources.hpp"

namespace bellsim {

enum class DetectorId : std::uint8_t { kD1 = 0, kD2 = 1, kDt = 2 };

struct DetectorSpec {
  DetectorId id = DetectorId::kD1;
  double efficiency = 1.0;

  void validate() const {
    if (!(efficiency >= 0.0 && efficiency <= 1.0)) {
      throw std::invalid_argument("detector efficiency must lie in [0, 1]");
    }
  }
};

/// Set of detectors that clicked, as a bitmask over DetectorId.
struct ClickPattern {
  std::uint8_t mask = 0;

  static ClickPattern of(std::initializer_list<DetectorId> ids) {
    ClickPattern p;
    for (auto id : ids) p.mask |= static_cast<std::uint8_t>(1u << static_cast<int>(id));
    return p;
  }

  bool contains(DetectorId id) const { return mask & (1u << static_cast<int>(id)); }

  auto operator<=>(const ClickPattern&) const = default;
};

using ClickDistribution = std::map<ClickPattern, double>;
using DetectorMapping = std::vector<std::pair<Port, DetectorSpec>>;

inline double probability_of(const ClickDistribution& dist, ClickPattern p) {
  auto it = dist.find(p);
  return it == dist.end() ? 0.0 : it->second;
}

/// Joint click probabilities of the mapped detectors. Photons in unmapped
/// ports (loss ports in particular) are traced out.
inline ClickDistribution click_distribution(const StateVector& state,
                                            const DetectorMapping& mapping) {
  StateVector s = state;
  for (const auto& [port, det] : mapping) {
    det.validate();
    s = loss_channel(s, port, det.efficiency);
  }
  std::vector<std::vector<std::size_t>> port_modes_idx;
  for (const auto& [port, det] : mapping) port_modes_idx.push_back(s.registry().modes_on_port(port));

  ClickDistribution dist;
  const double norm = s.norm_squared();
  if (norm == 0.0) return dist;
  for (const auto& [occ, amp] : s.amplitudes()) {
    ClickPattern pattern;
    for (std::size_t d = 0; d < mapping.size(); ++d) {
      int n = 0;
      for (auto i : port_modes_idx[d]) n += occ[i];
      if (n > 0) pattern.mask |= static_cast<std::uint8_t>(1u << static_cast<int>(mapping[d].second.id));
    }
    dist[pattern] += std::norm(amp) / norm;
  }
  return dist;
}

/// Photon-number-resolving counterpart: probability of each vector of
/// photon counts per mapped port (efficiencies applied the same way).
inline std::map<std::vector<int>, double> photon_number_distribution(
    const StateVector& state, const DetectorMapping& mapping) {
  StateVector s = state;
  for (const auto& [port, det] : mapping) s = loss_channel(s, port, det.efficiency);
  std::map<std::vector<int>, double> dist;
  const double norm = s.norm_squared();
  for (const auto& [occ, amp] : s.amplitudes()) {
    std::vector<int> counts;
    for (const auto& [port, det] : mapping) {
      int n = 0;
      for (auto i : s.registry().modes_on_port(port)) n += occ[i];
      counts.push_back(n);
    }
    dist[counts] += std::norm(amp) / norm;
  }
  return dist;
}

/// P(trigger fires, D1 and D2 click | class) times the class weight.
/// Patterns with additional clicks still count as coincidences.
inline double gated_coincidence_probability(const PulseClass& cls, const ClickDistribution& dist) {
  if (!cls.trigger_fires) return 0.0;
  double p = 0.0;
  for (const auto& [pattern, prob] : dist) {
    if (pattern.contains(DetectorId::kD1) && pattern.contains(DetectorId::kD2)) p += prob;
  }
  return p * cls.weight;
}

/// Keyed by one setting (delay or analyzer angle) or an angle pair.
struct SettingKey {
  double first = 0.0;
  double second = 0.0;

  auto operator<=>(const SettingKey&) const = default;
};

struct CountTally {
  SettingKey setting;
  double counts = 0.0;
  double sigma = 0.0;
  bool sampled = false;  // integer counts drawn from the Poisson law
};

/// Owned by one experiment run; shards merge by addition.
class TallySet {
 public:
  const CountTally& at(const SettingKey& k) const { return tallies_.at(k); }
  bool contains(const SettingKey& k) const { return tallies_.count(k) != 0; }
  std::size_t size() const { return tallies_.size(); }
  auto begin() const { return tallies_.begin(); }
  auto end() const { return tallies_.end(); }

  CountTally& slot(const SettingKey& k) {
    auto& t = tallies_[k];
    t.setting = k;
    return t;
  }

  void merge(const TallySet& other) {
    for (const auto& [k, t] : other.tallies_) {
      CountTally& mine = slot(k);
      mine.counts += t.counts;
      mine.sampled = mine.sampled || t.sampled;
      mine.sigma = std::sqrt(mine.counts);
    }
  }

 private:
  std::map<SettingKey, CountTally> tallies_;
};

/// Adds the counts from `pulses` pulses with per-pulse event probability
/// `p`. Without a generator the expected count is stored; with one, a
/// Poisson draw is stored.
inline const CountTally& tally_accumulate(TallySet& tallies, const SettingKey& setting, double p,
                                          double pulses, CounterRng* rng = nullptr) {
  if (!(pulses > 0.0)) throw std::invalid_argument("pulses must be > 0");
  if (!(p >= 0.0)) throw std::invalid_argument("event probability must be >= 0");
  CountTally& t = tallies.slot(setting);
  const double mean = p * pulses;
  if (rng != nullptr) {
    std::poisson_distribution<long long> poisson(mean);
    t.counts += mean > 0.0 ? static_cast<double>(poisson(*rng)) : 0.0;
    t.sampled = true;
  } else {
    t.counts += mean;
  }
  t.sigma = std::sqrt(t.counts);
  return t;
}

}  // namespace bellsim
