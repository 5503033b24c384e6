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

// Signal-to-noise budget for the gated polarization fringe.
//
// Signal: twin kept, one coherent photon, weight Gamma alpha e^-alpha.
// Background: twin lost while the trigger fired, two coherent photons,
// weight H Gamma alpha^2/2 e^-alpha. Both coincidence probabilities come
// from the Fock engine with perfect mode overlap at theta2 = -45 deg, and
// the predicted ceiling is the visibility of their sum over theta1.

#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "bellsim/experiments.hpp"

namespace bellsim {

struct SnrBudget {
  double gamma = 0.0;
  double alpha = 0.0;
  double heralding_loss_ratio = 0.0;  // H
  double p_signal = 0.0;              // per pulse, at the fringe maximum
  double p_background = 0.0;          // per pulse, same setting
  double signal_constant = 0.0;       // p_signal / (Gamma alpha)
  double background_constant = 0.0;  // p_background / (H Gamma alpha^2)
  double v_max_predicted = 0.0;
  bool alpha_h_warning = false;       // alpha H > 0.1
  std::string formula;
};

namespace detail {

/// Gated coincidence probability of one class at the fringe setting
/// (theta2 = -45 deg), perfect overlap, ideal detectors.
inline double fringe_class_coincidence(bool twin, int n_coherent, double theta1) {
  PulseClass cls{true, twin, true, n_coherent, 1.0, false};
  CoherentParams v{1.0, std::numbers::pi / 2.0, 0.0};
  OverlapModel overlap;
  overlap.mu_max = 1.0;
  const StateVector input = build_input_state(cls, overlap, v);
  return coincidence_probability(input, {theta1, degrees(-45.0)});
}

}  // namespace detail

inline SnrBudget snr_model(double gamma, double alpha, double heralding_loss_ratio) {
  if (!(gamma > 0.0) || !(alpha > 0.0) || !(heralding_loss_ratio > 0.0)) {
    throw std::invalid_argument("snr_model inputs must be positive");
  }
  SnrBudget b;
  b.gamma = gamma;
  b.alpha = alpha;
  b.heralding_loss_ratio = heralding_loss_ratio;
  b.alpha_h_warning = alpha * heralding_loss_ratio > 0.1;

  const double w_signal = gamma * alpha * std::exp(-alpha);
  const double w_background =
      heralding_loss_ratio * gamma * alpha * alpha / 2.0 * std::exp(-alpha);

  // Both contributions are two-photon, hence A + B sin 2t + C cos 2t in
  // theta1; four samples determine the three coefficients.
  auto rate = [&](double theta1) {
    return w_signal * detail::fringe_class_coincidence(true, 1, theta1) +
           w_background * detail::fringe_class_coincidence(false, 2, theta1);
  };
  const double f0 = rate(0.0);
  const double f45 = rate(degrees(45.0));
  const double f90 = rate(degrees(90.0));
  const double f135 = rate(degrees(135.0));
  const double a = 0.25 * (f0 + f45 + f90 + f135);
  const double bs = 0.5 * (f45 - f135);
  const double bc = 0.5 * (f0 - f90);
  b.v_max_predicted = std::hypot(bs, bc) / a;

  const double max_setting = degrees(45.0);
  b.p_signal = w_signal * detail::fringe_class_coincidence(true, 1, max_setting);
  b.p_background = w_background * detail::fringe_class_coincidence(false, 2, max_setting);
  b.signal_constant = b.p_signal / (gamma * alpha);
  b.background_constant = b.p_background / (heralding_loss_ratio * gamma * alpha * alpha);
  b.formula =
      "C(t1) = G a e^-a P_sig(t1) + H G a^2/2 e^-a P_bg(t1) at t2 = -45 deg, mu = 1; "
      "C = A + B sin 2t1 + C' cos 2t1; v_max = sqrt(B^2 + C'^2) / A";
  return b;
}

}  // namespace bellsim
