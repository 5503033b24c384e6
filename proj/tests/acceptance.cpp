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

// Acceptance checks. Prints one PASS/FAIL line per criterion; the exit
// status is the number of failed criteria. `--only N` runs a single one.

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "bellsim/analysis.hpp"
#include "bellsim/experiments.hpp"
#include "bellsim/snr_model.hpp"
#include "bellsim/sources.hpp"
#include "oracle/brute_force.hpp"

namespace {

using namespace bellsim;

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) pass = false;
    detail << (detail.tellp() > 0 ? "; " : "") << what << (ok ? "" : " [miss]");
  }
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string num(double x, int digits = 6) {
  std::ostringstream os;
  os.precision(digits);
  os << x;
  return os.str();
}

double max_pull(const Curve& mc, const Curve& analytic) {
  double worst = 0.0;
  for (std::size_t i = 0; i < mc.points.size(); ++i) {
    const double expected = analytic.points[i].counts;
    if (expected > 0.0) worst = std::max(worst, std::abs(mc.points[i].counts - expected) / std::sqrt(expected));
  }
  return worst;
}

void ideal_hom(Outcome& o) {
  const auto t0 = std::chrono::steady_clock::now();
  ExperimentConfig cfg = reference_operating_point(Scenario::kHom2);
  cfg.overlap.mu_max = 1.0;
  const PulseClass pair = relevant_classes(cfg).front();
  const double p = class_coincidence(cfg, pair, {0.0, 0.0, 0.0});
  oracle::Setup s;
  s.twin = true;
  s.n_coherent = 1;
  s.mu = 1.0;
  const double p_oracle = oracle::coincidence(s);
  const FitResult fit = fit_curve(cfg, analytic_run(cfg));
  const double elapsed = seconds_since(t0);
  o.require(std::abs(p) <= 1e-12, "P(tau=0) = " + num(p));
  o.require(std::abs(p_oracle) <= 1e-12, "oracle P(tau=0) = " + num(p_oracle));
  o.require(fit.converged && std::abs(fit.visibility - 1.0) <= 1e-6, "V = " + num(fit.visibility, 12));
  o.require(elapsed < 1.0, "runtime " + num(elapsed, 3) + " s");
}

void hom_reproduction(Outcome& o) {
  const auto t0 = std::chrono::steady_clock::now();
  ExperimentConfig cfg = reference_operating_point(Scenario::kHom2);
  cfg.overlap.mu_max = calibrate_mu_max(cfg, 0.994);
  const FitResult fit = fit_curve(cfg, analytic_run(cfg));
  const double elapsed = seconds_since(t0);
  o.require(std::abs(cfg.overlap.mu_max - std::sqrt(0.994)) <= 1e-12,
            "mu_max = " + num(cfg.overlap.mu_max, 17));
  o.require(fit.converged && std::abs(fit.visibility - 0.994) <= 0.003, "V = " + num(fit.visibility));
  o.require(elapsed < 10.0, "runtime " + num(elapsed, 3) + " s");
}

void gated_reproduction(Outcome& o) {
  auto t0 = std::chrono::steady_clock::now();
  ExperimentConfig cfg = reference_operating_point(Scenario::kGatedDip);
  cfg.overlap.mu_max = calibrate_mu_max(cfg, 0.908);
  const Curve analytic = analytic_run(cfg);
  const FitResult fit = fit_curve(cfg, analytic);
  const double elapsed = seconds_since(t0);
  o.require(std::abs(cfg.spdc.heralding_loss_ratio() - 27.3) <= 0.05,
            "H = " + num(cfg.spdc.heralding_loss_ratio(), 4));
  o.require(fit.converged && std::abs(fit.visibility - 0.908) <= 0.02, "V = " + num(fit.visibility));
  o.require(elapsed < 30.0, "analytic runtime " + num(elapsed, 3) + " s");

  t0 = std::chrono::steady_clock::now();
  ExperimentConfig mc = cfg;
  mc.engine = Engine::kMonteCarlo;
  mc.seed = 2026;
  mc.threads = 4;
  mc.pulses = pulses_for_trials(mc, 1e6);
  const Curve sampled = monte_carlo_run(mc);
  ExperimentConfig expected_cfg = cfg;
  expected_cfg.pulses = mc.pulses;
  const Curve expected = analytic_run(expected_cfg);
  const FitResult mc_fit = fit_curve(mc, sampled);
  const double mc_elapsed = seconds_since(t0);
  const double v_sigma = mc_fit.visibility_error;
  o.require(mc_fit.converged && std::abs(mc_fit.visibility - fit.visibility) <= 3.0 * v_sigma,
            "MC V = " + num(mc_fit.visibility) + " +/- " + num(v_sigma, 3));
  o.require(max_pull(sampled, expected) <= 4.0,
            "max per-point pull " + num(max_pull(sampled, expected), 3) + " over " +
                std::to_string(sampled.points.size()) + " points");
  o.require(mc_elapsed <= 300.0, "MC runtime " + num(mc_elapsed, 3) + " s");
}

void fringe_and_chsh(Outcome& o) {
  ExperimentConfig cfg = reference_operating_point(Scenario::kFringe);
  const FitResult fit = fit_curve(cfg, analytic_run(cfg));
  ExperimentConfig chsh = reference_operating_point(Scenario::kChsh);
  const ChshResult s = run_chsh(chsh);
  o.require(fit.converged && std::abs(fit.visibility - 0.864) <= 0.03, "V_fringe = " + num(fit.visibility));
  o.require(std::abs(s.S + 2.44) <= 0.10, "S = " + num(s.S));
  o.require(std::abs(s.S) > 2.0, "|S| > 2");

  cfg.background_free = true;
  chsh.background_free = true;
  const FitResult bf_fit = fit_curve(cfg, analytic_run(cfg));
  const ChshResult bf = run_chsh(chsh);
  const double ratio = bf.S / (2.0 * std::numbers::sqrt2);
  o.require(std::abs(ratio + bf_fit.visibility) <= 0.01 * bf_fit.visibility,
            "background-free S/(2 sqrt2) = " + num(ratio) + " vs -V = " + num(-bf_fit.visibility));
}

void ideal_chsh(Outcome& o) {
  ExperimentConfig cfg = reference_operating_point(Scenario::kChsh);
  cfg.overlap.mu_max = 1.0;
  cfg.background_free = true;
  const ChshResult ideal = run_chsh(cfg);
  o.require(std::abs(ideal.S + 2.0 * std::numbers::sqrt2) <= 1e-9, "S = " + num(ideal.S, 17));

  oracle::Setup s;
  s.twin = true;
  s.n_coherent = 1;
  s.mu = 1.0;
  s.polarization = std::numbers::pi / 2.0;
  const ChshResult brute = chsh_from_counts(
      [&](double a, double b) {
        oracle::Setup t = s;
        t.theta1 = a;
        t.theta2 = b;
        return oracle::coincidence(t);
      },
      cfg.chsh);
  o.require(std::abs(brute.S + 2.0 * std::numbers::sqrt2) <= 1e-9, "oracle S = " + num(brute.S, 17));

  cfg.overlap.mu_max = 0.0;
  const ChshResult flat_bf = run_chsh(cfg);
  cfg.background_free = false;
  const ChshResult flat = run_chsh(cfg);
  o.require(std::abs(flat_bf.S) <= 2.0, "mu = 0 background-free S = " + num(flat_bf.S));
  o.require(std::abs(flat.S) <= 2.0, "mu = 0 full S = " + num(flat.S));
}

void threshold_law(Outcome& o) {
  const double t = kBellVisibilityThreshold;
  o.require(t == static_cast<double>(1.0L / std::sqrt(2.0L)), "threshold is the nearest double to 1/sqrt2");
  o.require(!bell_violated(t) && bell_violated(std::nextafter(t, 1.0)), "bell_violated flips at 1/sqrt2");
  auto s_at = [](double v) {
    return chsh_from_counts(
               [&](double a, double b) { return singlet_counts_with_visibility(v, a, b, 1e6); }, {})
        .S;
  };
  const double s70 = s_at(0.70);
  const double s72 = s_at(0.72);
  o.require(std::abs(s70) < 2.0, "V = 0.70 gives S = " + num(s70));
  o.require(std::abs(s72) > 2.0, "V = 0.72 gives S = " + num(s72));
}

void snr_budget(Outcome& o) {
  const SpdcParams spdc = reference_spdc();
  const DerivedRates r = derived_rates(spdc, {kCoherentAlpha, 0.0, 0.0}, kRepRate);
  const double ceiling = singles_ceiling(kRepRate, r.heralding_loss_ratio);
  const SnrBudget b = snr_model(r.gamma, kCoherentAlpha, r.heralding_loss_ratio);
  o.require(std::abs(r.heralding_loss_ratio - 27.3) <= 0.05, "H = " + num(r.heralding_loss_ratio, 4));
  o.require(std::abs(ceiling - 1.4e6) <= 0.05 * 1.4e6, "singles ceiling = " + num(ceiling, 4) + " 1/s");
  o.require(b.v_max_predicted >= 0.90 && b.v_max_predicted <= 0.97,
            "v_max = " + num(b.v_max_predicted) + " from " + b.formula);
}

int run_quietly(const std::string& cmd) {
  const int status = std::system((cmd + " > /dev/null 2>&1").c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

void property_suites(Outcome& o) {
  const std::string filter =
      "--gtest_filter=*Property*:*Oracle*:MonteCarlo.*:SampledPulses.*:BellThreshold.*";
  double total = 0.0;
  std::istringstream list(BELLSIM_PROPERTY_SUITES);
  std::string path;
  while (std::getline(list, path, ':')) {
    if (path.empty()) continue;
    const auto t0 = std::chrono::steady_clock::now();
    const int code = run_quietly("'" + path + "' " + filter);
    const double elapsed = seconds_since(t0);
    total += elapsed;
    const std::string name = path.substr(path.find_last_of('/') + 1);
    o.require(code == 0, name + " " + num(elapsed, 3) + " s");
  }
  o.require(total < 60.0, "total " + num(total, 3) + " s");
}

struct Criterion {
  int id;
  const char* title;
  std::function<void(Outcome&)> check;
};

}  // namespace

int main(int argc, char** argv) {
  int only = 0;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--only" && i + 1 < argc) {
      only = std::atoi(argv[++i]);
    } else {
      std::cerr << "usage: acceptance [--only N]\n";
      return 64;
    }
  }
  const std::vector<Criterion> criteria = {
      {1, "ideal HOM dip", ideal_hom},
      {2, "two-photon dip visibility", hom_reproduction},
      {3, "gated dip visibility", gated_reproduction},
      {4, "fringe visibility and CHSH", fringe_and_chsh},
      {5, "ideal CHSH", ideal_chsh},
      {6, "visibility threshold", threshold_law},
      {7, "signal-to-noise budget", snr_budget},
      {8, "property suites", property_suites},
  };
  int failed = 0;
  bool ran = false;
  for (const auto& c : criteria) {
    if (only != 0 && c.id != only) continue;
    ran = true;
    Outcome o;
    try {
      c.check(o);
    } catch (const std::exception& e) {
      o.require(false, std::string("exception: ") + e.what());
    }
    if (!o.pass) ++failed;
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << c.id << " (" << c.title
              << "): " << o.detail.str() << "\n";
  }
  if (!ran) {
    std::cerr << "no criterion " << only << "\n";
    return 64;
  }
  return failed;
}
