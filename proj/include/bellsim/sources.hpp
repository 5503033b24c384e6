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

// Per-pulse photon sources: a heralded down-conversion pair and an
// attenuated coherent state, enumerated exactly as weighted pulse classes.
//
// Efficiencies are referenced to detection: eta_signal is the probability
// that the twin photon is delivered to the coupler *and* would be detected,
// and mean_photons is the mean number of detectable coherent photons at the
// coupler input. Detector efficiencies in the detection module therefore
// default to 1 for the reference operating point.
//
// Only one pair per pulse is modeled; the omitted double-pair mass is of
// order p_pair^2.

#pragma once

#include <cmath>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "bellsim/fock.hpp"
#include "bellsim/optics.hpp"
#include "bellsim/rng.hpp"

namespace bellsim {

inline constexpr int kMaxCoherentPhotons = 2;

struct SpdcParams {
  double p_pair = 0.0;       // pairs emitted per pump pulse
  double eta_trigger = 1.0;  // trigger arm detection efficiency
  double eta_signal = 1.0;   // twin delivered to the coupler and detectable

  void validate() const {
    auto in_unit = [](double x) { return x >= 0.0 && x <= 1.0; };
    if (!in_unit(p_pair) || !in_unit(eta_trigger) || !in_unit(eta_signal)) {
      throw std::invalid_argument("SPDC probabilities must lie in [0, 1]");
    }
  }

  /// Detectable-pair probability per pulse.
  double gamma() const { return p_pair * eta_trigger * eta_signal; }

  /// P(trigger fires and twin lost) / gamma.
  double heralding_loss_ratio() const {
    if (eta_signal == 0.0) throw std::domain_error("H undefined for eta_signal = 0");
    return (1.0 - eta_signal) / eta_signal;
  }
};

struct CoherentParams {
  double mean_photons = 0.0;        // alpha
  double polarization_angle = 0.0;  // radians from H, set by the wave plate
  double phase = 0.0;               // global optical phase

  void validate() const {
    if (!(mean_photons >= 0.0)) throw std::invalid_argument("mean_photons must be >= 0");
  }
};

/// Poisson mass above the retained photon numbers is bounded by this.
inline double truncation_error_bound(double alpha) {
  return std::exp(-alpha) * alpha * alpha * alpha / 6.0;
}

inline double poisson_pmf(double alpha, int n) {
  return std::exp(-alpha) * std::pow(alpha, n) / detail::factorial(n);
}

struct PulseClass {
  bool pair_emitted = false;
  bool twin_detectable = false;
  bool trigger_fires = false;
  int n_coherent = 0;
  double weight = 0.0;
  bool remainder = false;  // coherent photon numbers above kMaxCoherentPhotons

  int photons_at_coupler() const { return (twin_detectable ? 1 : 0) + n_coherent; }
};

/// Exhaustive, mutually exclusive pulse classes with exact weights. The
/// Poisson tail beyond two coherent photons is collected in one remainder
/// class so the weights sum to one.
inline std::vector<PulseClass> enumerate_pulse_classes(const SpdcParams& spdc,
                                                       const CoherentParams& coh) {
  spdc.validate();
  coh.validate();
  std::vector<PulseClass> out;
  double kept_mass = 0.0;
  for (int n = 0; n <= kMaxCoherentPhotons; ++n) {
    const double pn = poisson_pmf(coh.mean_photons, n);
    kept_mass += pn;
    out.push_back({false, false, false, n, (1.0 - spdc.p_pair) * pn, false});
    for (bool kept : {true, false}) {
      const double p_kept = kept ? spdc.eta_signal : 1.0 - spdc.eta_signal;
      for (bool fired : {true, false}) {
        const double p_fired = fired ? spdc.eta_trigger : 1.0 - spdc.eta_trigger;
        out.push_back({true, kept, fired, n, spdc.p_pair * p_kept * p_fired * pn, false});
      }
    }
  }
  PulseClass rest;
  rest.remainder = true;
  rest.n_coherent = kMaxCoherentPhotons + 1;
  rest.weight = std::max(0.0, 1.0 - kept_mass);
  out.push_back(rest);
  return out;
}

/// Heralded twin (H, temporal e0) in inB plus n coherent photons in inC.
/// The coherent photons share the mode with polarization angle from
/// `coh` and temporal profile c0 e0 + c1 e1 from the overlap model, and
/// carry the coherent phase exp(i n phi).
inline StateVector build_input_state(const PulseClass& cls, const OverlapModel& overlap,
                                     const CoherentParams& coh, TruncationPolicy policy = {}) {
  if (cls.remainder) throw TruncationOverflow("remainder class has no retained state");
  if (cls.photons_at_coupler() > policy.max_photons) {
    throw TruncationOverflow("pulse class exceeds N_max");
  }
  StateVector s = StateVector::vacuum(port_modes(Port::in_b()), policy);
  s = ensure_port(s, Port::in_c());
  if (cls.twin_detectable) {
    s = create_photon(s, {Port::in_b(), Polarization::kH, TemporalMode::kE0});
  }
  if (cls.n_coherent > 0) {
    const auto [c0, c1] = temporal_decomposition(overlap);
    const double ch = std::cos(coh.polarization_angle);
    const double sv = std::sin(coh.polarization_angle);
    const std::vector<std::pair<ModeLabel, Complex>> mode = {
        {{Port::in_c(), Polarization::kH, TemporalMode::kE0}, ch * c0},
        {{Port::in_c(), Polarization::kH, TemporalMode::kE1}, ch * c1},
        {{Port::in_c(), Polarization::kV, TemporalMode::kE0}, sv * c0},
        {{Port::in_c(), Polarization::kV, TemporalMode::kE1}, sv * c1},
    };
    for (int k = 0; k < cls.n_coherent; ++k) s = create_photon(s, mode);
    s = s.scaled(std::polar(1.0, cls.n_coherent * coh.phase));
  }
  return s.normalized();
}

struct DerivedRates {
  double gamma = 0.0;
  double alpha = 0.0;
  double heralding_loss_ratio = 0.0;    // H
  double trigger_singles_rate = 0.0;    // 1/s
  double pair_coincidence_rate = 0.0;   // 1/s, summed over both output detectors
};

inline DerivedRates derived_rates(const SpdcParams& spdc, const CoherentParams& coh,
                                  double rep_rate) {
  if (!(rep_rate > 0.0)) throw std::invalid_argument("repetition rate must be > 0");
  spdc.validate();
  DerivedRates r;
  r.gamma = spdc.gamma();
  r.alpha = coh.mean_photons;
  if (r.gamma == 0.0) throw std::domain_error("H undefined: detectable-pair probability is zero");
  r.heralding_loss_ratio = spdc.p_pair * spdc.eta_trigger * (1.0 - spdc.eta_signal) / r.gamma;
  r.trigger_singles_rate = spdc.p_pair * spdc.eta_trigger * rep_rate;
  r.pair_coincidence_rate = r.gamma * rep_rate;
  return r;
}

/// How a quoted "coincidences with either D1 or D2" figure is read.
enum class CoincidenceReading { kPerDetector, kTotal };

/// Inverts measured trigger singles and trigger-signal coincidences into
/// source parameters. eta_trigger is not identifiable from these rates and
/// is supplied by the caller.
inline SpdcParams spdc_from_rates(double trigger_singles, double pair_coincidences,
                                  double rep_rate, CoincidenceReading reading,
                                  double eta_trigger) {
  if (!(rep_rate > 0.0) || !(trigger_singles > 0.0) || !(eta_trigger > 0.0)) {
    throw std::invalid_argument("rates and eta_trigger must be positive");
  }
  const double total =
      reading == CoincidenceReading::kPerDetector ? 2.0 * pair_coincidences : pair_coincidences;
  if (total > trigger_singles) {
    throw std::invalid_argument("coincidence rate exceeds trigger singles rate");
  }
  SpdcParams p;
  p.eta_trigger = eta_trigger;
  p.p_pair = trigger_singles / (rep_rate * eta_trigger);
  p.eta_signal = total / trigger_singles;
  p.validate();
  return p;
}

/// Coherent alpha at the coupler input from the singles rate in one output
/// detector (each output sees alpha / 2).
inline double alpha_from_detector_singles(double per_detector_singles, double rep_rate) {
  return 2.0 * per_detector_singles / rep_rate;
}

/// Per-detector coherent singles rate at which alpha = 1/H.
inline double singles_ceiling(double rep_rate, double heralding_loss_ratio) {
  return rep_rate / (2.0 * heralding_loss_ratio);
}

/// One stochastically generated pump pulse (untruncated photon number).
struct PulseSample {
  bool pair_emitted = false;
  bool twin_detectable = false;
  bool trigger_fires = false;
  int n_coherent = 0;
};

/// The two sources draw from disjoint parts of the random stream and share
/// no state, so pair emission and coherent photon number are independent.
inline PulseSample sample_pulse(CounterRng& rng, const SpdcParams& spdc,
                                const CoherentParams& coh) {
  PulseSample s;
  s.pair_emitted = rng.uniform() < spdc.p_pair;
  const double u_signal = rng.uniform();
  const double u_trigger = rng.uniform();
  if (s.pair_emitted) {
    s.twin_detectable = u_signal < spdc.eta_signal;
    s.trigger_fires = u_trigger < spdc.eta_trigger;
  }
  std::poisson_distribution<int> poisson(coh.mean_photons);
  s.n_coherent = coh.mean_photons > 0.0 ? poisson(rng) : 0;
  return s;
}

}  // namespace bellsim
