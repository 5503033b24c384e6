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

// bellsim command-line front end.
//
// Exit codes: 0 success, 1 runtime failure, 2 configuration error,
// 3 fit or calibration did not converge.

#include <cstdint>
#include <iostream>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "bellsim/analysis.hpp"
#include "bellsim/experiments.hpp"
#include "bellsim/io.hpp"
#include "bellsim/run_config.hpp"
#include "bellsim/selftest.hpp"
#include "bellsim/snr_model.hpp"
#include "json.hpp"

namespace {

using namespace bellsim;

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitConfig = 2;
constexpr int kExitNonConvergence = 3;

class NonConvergence : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> engine;
  std::optional<double> pulses;
  std::string out;
  std::optional<std::string> format;
  std::optional<int> threads;
  bool ideal = false;
  bool background_free = false;
  std::string which = "independent";
  std::optional<double> target;
};

RunConfig build_run_config(const Options& o) {
  RunConfig rc = o.config.empty() ? RunConfig{} : load_run_config(o.config);
  if (o.seed) rc.seed = *o.seed;
  if (o.engine) rc.engine = *o.engine == "montecarlo" ? Engine::kMonteCarlo : Engine::kAnalytic;
  if (o.pulses) {
    if (!(*o.pulses >= 1.0)) throw ConfigError("--pulses must be >= 1");
    rc.pulses = *o.pulses;
  }
  if (o.threads) {
    if (*o.threads < 1) throw ConfigError("--threads must be >= 1");
    rc.threads = *o.threads;
  }
  if (!o.out.empty()) rc.output_path = o.out;
  if (o.format) rc.output_format = *o.format == "json" ? OutputFormat::kJson : OutputFormat::kCsv;
  if (o.ideal) {
    rc.mu_max_same_source = 1.0;
    rc.mu_max_independent = 1.0;
    rc.background_free = true;
  }
  if (o.background_free) rc.background_free = true;
  return rc;
}

std::string output_path(const RunConfig& rc, const std::string& stem) {
  if (!rc.output_path.empty()) return rc.output_path;
  return stem + (rc.output_format == OutputFormat::kJson ? ".json" : ".csv");
}

OutputHeader make_header(const RunConfig& rc, Scenario s) {
  const nlohmann::json rec = recorded_config(rc, s);
  OutputHeader h;
  h.scenario = to_string(s);
  h.config_hash = config_hash(rec);
  h.seed = rc.seed;
  h.engine = to_string(rc.engine);
  h.mu_max_same_source = rc.mu_max_same_source;
  h.mu_max_independent = rc.mu_max_independent;
  h.config_json = rec.dump();
  if (s != Scenario::kHom2) {
    h.extra.emplace_back("truncation_error_bound", format_double(truncation_error_bound(rc.mean_photons)));
  }
  return h;
}

void print_warnings(const Curve& c) {
  for (const auto& w : c.warnings) std::cerr << "warning: " << w << "\n";
}

int run_scan(Scenario s, const Options& o, const std::string& stem) {
  const RunConfig rc = build_run_config(o);
  const RunConfig full = resolved(rc, s);
  const ExperimentConfig cfg = to_experiment(rc, s);
  const Curve curve = run_curve(cfg);
  print_warnings(curve);

  FitResult fit;
  std::string fit_error;
  try {
    fit = fit_curve(cfg, curve);
  } catch (const std::exception& e) {
    fit_error = e.what();
  }

  const bool angular = s == Scenario::kFringe;
  const std::vector<double>& grid = angular ? *full.theta1_grid_deg : *full.delay_grid_ps;
  std::vector<EmittedPoint> rows;
  for (std::size_t i = 0; i < curve.points.size(); ++i) {
    const CurvePoint& p = curve.points[i];
    rows.push_back({grid[i], p.counts, p.sigma, fit_error.empty() ? fit.evaluate(p.setting) : 0.0});
  }

  OutputHeader h = make_header(rc, s);
  h.extra.emplace_back("setting", angular ? "theta1_deg" : "delay_ps");
  h.extra.emplace_back("mu_max", format_double(cfg.overlap.mu_max));
  h.extra.emplace_back("fit_visibility", format_double(fit.visibility));
  h.extra.emplace_back("fit_visibility_error", format_double(fit.visibility_error));
  h.extra.emplace_back("fit_converged", fit.converged ? "true" : "false");
  const std::string path = output_path(rc, stem);
  emit_curve(rows, rc.output_format, path, h);

  if (!fit_error.empty()) throw NonConvergence("fit failed: " + fit_error);
  std::cout << to_string(s) << ": visibility = " << format_double(fit.visibility) << " +/- "
            << format_double(fit.visibility_error) << " (" << rows.size() << " points, "
            << to_string(rc.engine) << ", wrote " << path << ")\n";
  if (!fit.converged) throw NonConvergence("fit did not converge");
  return kExitOk;
}

int run_chsh_command(const Options& o) {
  const RunConfig rc = build_run_config(o);
  const ExperimentConfig cfg = to_experiment(rc, Scenario::kChsh);
  const auto pts = measurement_points(cfg);
  const Curve curve = run_curve(cfg);
  print_warnings(curve);
  const ChshResult r = run_chsh(cfg);

  std::vector<EmittedPoint> rows;
  std::ostringstream map;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const double expected = analytic_event_probability(cfg, pts[i]) * cfg.pulses;
    rows.push_back({static_cast<double>(i), curve.points[i].counts, curve.points[i].sigma, expected});
    if (i > 0) map << " ";
    map << i << "=" << format_double(pts[i].theta1 * 180.0 / std::numbers::pi) << "/"
        << format_double(pts[i].theta2 * 180.0 / std::numbers::pi);
  }

  OutputHeader h = make_header(rc, Scenario::kChsh);
  h.extra.emplace_back("setting", "index of theta1_deg/theta2_deg pair");
  h.extra.emplace_back("settings_deg", map.str());
  const char* names[] = {"E_ab", "E_ab_prime", "E_a_prime_b", "E_a_prime_b_prime"};
  for (int k = 0; k < 4; ++k) {
    h.extra.emplace_back(names[k], format_double(r.E[k].value) + " +/- " + format_double(r.E[k].sigma));
  }
  h.extra.emplace_back("S", format_double(r.S));
  h.extra.emplace_back("sigma_S", format_double(r.sigma_S));
  const std::string path = output_path(rc, "chsh");
  emit_curve(rows, rc.output_format, path, h);

  std::cout << "chsh: S = " << format_double(r.S) << " +/- " << format_double(r.sigma_S)
            << (r.violates_local_bound() ? " (violates |S| <= 2)" : " (no violation)") << ", wrote "
            << path << "\n";
  return kExitOk;
}

int run_snr_command(const Options& o) {
  const RunConfig rc = build_run_config(o);
  nlohmann::ordered_json report;
  std::ostringstream text;
  auto add_reading = [&](const std::string& name, const SpdcParams& spdc) {
    const DerivedRates d = derived_rates(spdc, {rc.mean_photons, 0.0, 0.0}, rc.rep_rate_hz);
    const double ceiling = singles_ceiling(rc.rep_rate_hz, d.heralding_loss_ratio);
    const SnrBudget b = snr_model(d.gamma, d.alpha, d.heralding_loss_ratio);
    report[name] = {{"gamma", d.gamma},
                    {"H", d.heralding_loss_ratio},
                    {"singles_ceiling_per_detector_hz", ceiling},
                    {"alpha", d.alpha},
                    {"signal_constant", b.signal_constant},
                    {"background_constant", b.background_constant},
                    {"v_max_predicted", b.v_max_predicted},
                    {"alpha_h_warning", b.alpha_h_warning}};
    text << name << ": Gamma = " << format_double(d.gamma)
         << ", H = " << format_double(d.heralding_loss_ratio)
         << ", singles ceiling = " << format_double(ceiling) << " /s per detector"
         << ", alpha = " << format_double(d.alpha)
         << ", v_max_predicted = " << format_double(b.v_max_predicted) << "\n";
    if (b.alpha_h_warning) text << name << ": warning: alpha H > 0.1\n";
    report["formula"] = b.formula;
  };
  try {
    if (rc.spdc) {
      add_reading("configured", *rc.spdc);
    } else {
      for (auto reading : {CoincidenceReading::kPerDetector, CoincidenceReading::kTotal}) {
        add_reading(reading == CoincidenceReading::kPerDetector ? "per_detector" : "total",
                    spdc_from_rates(rc.trigger_singles_hz, rc.pair_coincidences_hz,
                                    rc.rep_rate_hz, reading, rc.eta_trigger));
      }
    }
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  } catch (const std::domain_error& e) {
    throw ConfigError(e.what());
  }
  text << "formula: " << report["formula"].get<std::string>() << "\n";
  std::cout << text.str();
  if (!rc.output_path.empty()) {
    write_text_file(rc.output_path, rc.output_format == OutputFormat::kJson
                                        ? report.dump(2) + "\n"
                                        : text.str());
  }
  return kExitOk;
}

int run_calibrate_command(const Options& o) {
  RunConfig rc = build_run_config(o);
  const bool same = o.which == "same";
  const Scenario s = same ? Scenario::kHom2 : Scenario::kGatedDip;
  const double target = o.target.value_or(same ? 0.994 : 0.908);
  if (!(target >= 0.0 && target <= 1.0)) throw ConfigError("--target must lie in [0, 1]");
  const ExperimentConfig cfg = to_experiment(rc, s);
  double mu = 0.0;
  try {
    mu = calibrate_mu_max(cfg, target);
  } catch (const CalibrationError& e) {
    throw NonConvergence(e.what());
  }
  (same ? rc.mu_max_same_source : rc.mu_max_independent) = mu;
  std::cout << (same ? "mu_max_same_source" : "mu_max_independent") << " = " << format_double(mu)
            << " (target dip visibility " << format_double(target) << ")\n";
  if (!rc.output_path.empty()) {
    write_text_file(rc.output_path, to_json(rc).dump(2) + "\n");
    std::cout << "wrote calibrated config " << rc.output_path << "\n";
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"bellsim: heralded two-photon interference and CHSH simulator"};
  app.require_subcommand(1);
  Options o;

  app.add_option("--config", o.config, "JSON run configuration")->check(CLI::ExistingFile);
  app.add_option("--seed", o.seed, "64-bit random seed");
  app.add_option("--engine", o.engine, "analytic or montecarlo")
      ->check(CLI::IsMember({"analytic", "montecarlo"}));
  app.add_option("--pulses", o.pulses, "pump pulses per curve point");
  app.add_option("--out", o.out, "output path");
  app.add_option("--format", o.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
  app.add_option("--threads", o.threads, "worker threads for per-point parallelism");

  auto* hom = app.add_subcommand("hom-dip", "two-photon HOM dip versus delay");
  auto* gated = app.add_subcommand("gated-dip", "heralded three-fold dip versus delay");
  auto* fringe = app.add_subcommand("fringe", "gated polarization fringe versus theta1");
  auto* chsh = app.add_subcommand("chsh", "CHSH parameter from sixteen tallies");
  auto* snr = app.add_subcommand("snr", "signal-to-noise budget and visibility ceiling");
  auto* cal = app.add_subcommand("calibrate", "solve mu_max for a target dip visibility");
  auto* self = app.add_subcommand("selftest", "run the built-in invariant checks");
  for (auto* sub : {hom, gated, fringe, chsh, snr, cal, self}) sub->fallthrough();
  for (auto* sub : {hom, gated, fringe, chsh}) {
    sub->add_flag("--ideal", o.ideal, "mu_max = 1 and background-free");
    sub->add_flag("--background-free", o.background_free, "keep only the signal pulse class");
  }
  cal->add_option("--which", o.which, "independent (gated dip) or same (HOM dip)")
      ->check(CLI::IsMember({"independent", "same"}));
  cal->add_option("--target", o.target, "target dip visibility");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (*hom) return run_scan(Scenario::kHom2, o, "hom-dip");
    if (*gated) return run_scan(Scenario::kGatedDip, o, "gated-dip");
    if (*fringe) return run_scan(Scenario::kFringe, o, "fringe");
    if (*chsh) return run_chsh_command(o);
    if (*snr) return run_snr_command(o);
    if (*cal) return run_calibrate_command(o);
    if (*self) {
      (void)build_run_config(o);
      return run_selftest(std::cout) == 0 ? kExitOk : kExitFailure;
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const NonConvergence& e) {
    std::cerr << "non-convergence: " << e.what() << "\n";
    return kExitNonConvergence;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitFailure;
}
