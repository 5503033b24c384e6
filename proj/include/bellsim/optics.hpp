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

// Linear-optical elements acting on StateVector.
//
// Conventions:
//  * 50/50 beamsplitter transmits with 1/sqrt2 and reflects with i/sqrt2.
//  * rotate_polarization takes the rotation angle of the linear polarization
//    itself (a half-wave plate at angle t rotates by 2t; callers pass 2t).
//    Positive angles take H towards +V.
//  * Analyzers and loss channels dump the rejected light into fresh loss
//    ports that are never measured.

#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "bellsim/fock.hpp"

namespace bellsim {

inline constexpr double kSpeedOfLight = 299792458.0;  // m/s

/// lambda^2 / (c * delta_lambda) for a filter of the given FWHM.
inline double coherence_time_from_filter(double wavelength_m, double fwhm_m) {
  if (wavelength_m <= 0.0 || fwhm_m <= 0.0) {
    throw std::invalid_argument("filter wavelength and bandwidth must be positive");
  }
  return wavelength_m * wavelength_m / (kSpeedOfLight * fwhm_m);
}

/// Delay-dependent mode overlap between the heralded photon and the
/// second input photon: mu(tau) = mu_max * exp(-tau^2 / (4 tau_c^2)).
struct OverlapModel {
  double mu_max = 1.0;
  double coherence_time = coherence_time_from_filter(780e-9, 3e-9);  // seconds
  double delay = 0.0;                                                // seconds

  void validate() const {
    if (!(mu_max >= 0.0 && mu_max <= 1.0)) {
      throw std::invalid_argument("mu_max must lie in [0, 1]");
    }
    if (!(coherence_time > 0.0)) throw std::invalid_argument("coherence_time must be > 0");
    if (std::isnan(delay)) throw std::invalid_argument("delay is NaN");
  }

  double mu() const {
    if (std::isinf(delay)) return 0.0;
    return mu_max * std::exp(-delay * delay / (4.0 * coherence_time * coherence_time));
  }

  OverlapModel at_delay(double tau) const {
    OverlapModel m = *this;
    m.delay = tau;
    return m;
  }
};

struct TemporalCoefficients {
  double c0 = 1.0;  // weight on e0, shared with the heralded photon
  double c1 = 0.0;  // weight on the orthogonal temporal mode e1
};

inline TemporalCoefficients temporal_decomposition(const OverlapModel& model) {
  model.validate();
  const double mu = model.mu();
  return {mu, std::sqrt(std::max(0.0, 1.0 - mu * mu))};
}

inline Matrix2 beamsplitter_matrix() {
  const double r = std::numbers::sqrt2 / 2.0;
  Matrix2 u;
  u << Complex{r, 0.0}, Complex{0.0, r}, Complex{0.0, r}, Complex{r, 0.0};
  return u;
}

/// H -> cos H + sin V, V -> -sin H + cos V.
inline Matrix2 rotation_matrix(double angle) {
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  Matrix2 u;
  u << c, -s, s, c;
  return u;
}

/// Port -> sqrt(eta) port + sqrt(1 - eta) loss.
inline Matrix2 loss_matrix(double eta) {
  const double t = std::sqrt(eta);
  const double r = std::sqrt(1.0 - eta);
  Matrix2 u;
  u << t, -r, r, t;
  return u;
}

inline Matrix2 swap_matrix() {
  Matrix2 u;
  u << 0.0, 1.0, 1.0, 0.0;
  return u;
}

inline std::vector<ModeLabel> port_modes(const Port& p) {
  std::vector<ModeLabel> out;
  for (auto pol : kPolarizations) {
    for (auto t : kTemporalModes) out.push_back({p, pol, t});
  }
  return out;
}

inline StateVector ensure_port(const StateVector& s, const Port& p) {
  const auto modes = port_modes(p);
  return s.with_modes(modes);
}

/// 50/50 coupler between two ports, applied to every (polarization,
/// temporal) pair. Ports keep their names; use the overload with output
/// ports to relabel the result.
inline StateVector beamsplitter_50_50(const StateVector& state, const Port& a, const Port& b) {
  if (a == b) throw std::invalid_argument("beamsplitter ports must differ");
  StateVector s = ensure_port(ensure_port(state, a), b);
  const Matrix2 u = beamsplitter_matrix();
  for (auto pol : kPolarizations) {
    for (auto t : kTemporalModes) {
      s = apply_two_mode_unitary(s, {a, pol, t}, {b, pol, t}, u);
    }
  }
  return s;
}

/// Coupler with inputs (in_a, in_b) and outputs (out_a, out_b), where in_a
/// transmits into out_a.
inline StateVector beamsplitter_50_50(const StateVector& state, const Port& in_a,
                                      const Port& in_b, const Port& out_a, const Port& out_b) {
  return beamsplitter_50_50(state, in_a, in_b)
      .with_port_renamed(in_a, out_a)
      .with_port_renamed(in_b, out_b);
}

inline StateVector rotate_polarization(const StateVector& state, const Port& port, double angle) {
  if (angle == 0.0) return state;
  StateVector s = ensure_port(state, port);
  const Matrix2 u = rotation_matrix(angle);
  for (auto t : kTemporalModes) {
    s = apply_two_mode_unitary(s, {port, Polarization::kH, t}, {port, Polarization::kV, t}, u);
  }
  return s;
}

/// Linear polarizer passing cos(theta) H + sin(theta) V. The blocked
/// component is routed into a fresh loss port; the passed light leaves in
/// the pass polarization.
inline StateVector analyzer(const StateVector& state, const Port& port, double theta) {
  StateVector s = rotate_polarization(ensure_port(state, port), port, -theta);
  const Port dump = Port::loss(s.registry().next_loss_index());
  s = ensure_port(s, dump);
  for (auto t : kTemporalModes) {
    s = apply_two_mode_unitary(s, {port, Polarization::kV, t}, {dump, Polarization::kV, t},
                               swap_matrix());
  }
  return rotate_polarization(s, port, theta);
}

/// Beamsplitter of transmittance eta into a fresh loss port.
inline StateVector loss_channel(const StateVector& state, const Port& port, double eta) {
  if (!(eta >= 0.0 && eta <= 1.0)) throw std::invalid_argument("transmittance must lie in [0, 1]");
  if (eta == 1.0) return state;
  StateVector s = ensure_port(state, port);
  const Port dump = Port::loss(s.registry().next_loss_index());
  s = ensure_port(s, dump);
  const Matrix2 u = loss_matrix(eta);
  for (auto pol : kPolarizations) {
    for (auto t : kTemporalModes) s = apply_two_mode_unitary(s, {port, pol, t}, {dump, pol, t}, u);
  }
  return s;
}

enum class ElementKind { kBeamsplitter, kRotator, kAnalyzer, kLoss };

/// Declarative description of one element, for building circuits as data.
struct ElementSpec {
  ElementKind kind = ElementKind::kBeamsplitter;
  Port port;
  Port second_port;           // beamsplitter only
  double angle = 0.0;         // radians; rotator and analyzer
  double transmittance = 1.0; // loss only

  void validate() const {
    if (kind == ElementKind::kBeamsplitter && port == second_port) {
      throw std::invalid_argument("beamsplitter ports must differ");
    }
    if (kind == ElementKind::kLoss && !(transmittance >= 0.0 && transmittance <= 1.0)) {
      throw std::invalid_argument("transmittance must lie in [0, 1]");
    }
  }
};

inline StateVector apply_element(const StateVector& s, const ElementSpec& e) {
  e.validate();
  switch (e.kind) {
    case ElementKind::kBeamsplitter: return beamsplitter_50_50(s, e.port, e.second_port);
    case ElementKind::kRotator: return rotate_polarization(s, e.port, e.angle);
    case ElementKind::kAnalyzer: return analyzer(s, e.port, e.angle);
    case ElementKind::kLoss: return loss_channel(s, e.port, e.transmittance);
  }
  return s;
}

}  // namespace bellsim
