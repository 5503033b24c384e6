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

// Quick invariant suite run by `bellsim selftest`.

#pragma once

#include <cmath>
#include <functional>
#include <numbers>
#include <ostream>
#include <string>
#include <vector>

#include "bellsim/analysis.hpp"
#include "bellsim/experiments.hpp"
#include "bellsim/io.hpp"

namespace bellsim {

struct SelftestCheck {
  std::string name;
  std::function<bool(std::string&)> run;  // fills a short detail string
};

inline std::vector<SelftestCheck> selftest_checks() {
  std::vector<SelftestCheck> checks;

  checks.push_back({"beamsplitter and rotation are unitary", [](std::string& d) {
                      d = "";
                      return is_unitary(beamsplitter_matrix()) && is_unitary(rotation_matrix(0.3)) &&
                             is_unitary(loss_matrix(0.37));
                    }});

  checks.push_back({"HOM law (1 - mu^2)/2", [](std::string& d) {
                      double worst = 0.0;
                      for (double mu : {0.0, 0.25, 0.5, 0.75, 1.0}) {
                        ExperimentConfig c = reference_operating_point(Scenario::kHom2);
                        c.spdc = {1.0, 1.0, 1.0};
                        c.overlap.mu_max = mu;
                        const double p = analytic_event_probability(c, {0.0, 0.0, 0.0});
                        worst = std::max(worst, std::abs(p - (1.0 - mu * mu) / 2.0));
                      }
                      d = "max deviation " + format_double(worst);
                      return worst < 1e-12;
                    }});

  checks.push_back({"ideal CHSH reaches -2 sqrt 2", [](std::string& d) {
                      ExperimentConfig c = reference_operating_point(Scenario::kChsh);
                      c.overlap.mu_max = 1.0;
                      c.background_free = true;
                      const ChshResult r = run_chsh(c);
                      d = "S = " + format_double(r.S);
                      return std::abs(r.S + 2.0 * std::numbers::sqrt2) < 1e-9;
                    }});

  checks.push_back({"coherent phase factors out", [](std::string& d) {
                      ExperimentConfig c = reference_operating_point(Scenario::kFringe);
                      const MeasurementPoint pt{0.0, degrees(30.0), degrees(-45.0)};
                      const double ref = analytic_event_probability(c, pt);
                      double worst = 0.0;
                      for (double phase : {std::numbers::pi / 3.0, std::numbers::pi, 1.7}) {
                        c.coherent.phase = phase;
                        worst = std::max(worst, std::abs(analytic_event_probability(c, pt) - ref));
                      }
                      d = "max deviation " + format_double(worst);
                      return worst < 1e-12;
                    }});

  checks.push_back({"gated-dip floor independent of delay", [](std::string& d) {
                      ExperimentConfig c = reference_operating_point(Scenario::kGatedDip);
                      c.overlap.mu_max = 0.0;
                      const double a = analytic_event_probability(c, {0.0, 0.0, 0.0});
                      const double b = analytic_event_probability(c, {2e-12, 0.0, 0.0});
                      d = "difference " + format_double(std::abs(a - b));
                      return std::abs(a - b) <= 1e-12 * std::abs(a);
                    }});

  checks.push_back({"Monte Carlo reruns are identical", [](std::string& d) {
                      ExperimentConfig c = reference_operating_point(Scenario::kGatedDip);
                      c.engine = Engine::kMonteCarlo;
                      c.seed = 11;
                      c.delays = {0.0, 1e-12};
                      c.pulses = pulses_for_trials(c, 2e4);
                      const Curve x = monte_carlo_run(c);
                      const Curve y = monte_carlo_run(c);
                      bool same = true;
                      for (std::size_t i = 0; i < x.points.size(); ++i) {
                        same = same && x.points[i].counts == y.points[i].counts;
                      }
                      d = same ? "" : "counts differ";
                      return same;
                    }});

  checks.push_back({"Bell threshold at 1/sqrt 2", [](std::string& d) {
                      d = "";
                      return !bell_violated(kBellVisibilityThreshold) &&
                             bell_violated(std::nextafter(kBellVisibilityThreshold, 1.0));
                    }});
  return checks;
}

/// Runs every check, printing one line each. Returns the number of failures.
inline int run_selftest(std::ostream& out) {
  int failures = 0;
  for (const auto& check : selftest_checks()) {
    std::string detail;
    bool ok = false;
    try {
      ok = check.run(detail);
    } catch (const std::exception& e) {
      detail = std::string("threw: ") + e.what();
    }
    if (!ok) ++failures;
    out << (ok ? "PASS " : "FAIL ") << check.name;
    if (!detail.empty()) out << " (" << detail << ")";
    out << "\n";
  }
  return failures;
}

}  // namespace bellsim
