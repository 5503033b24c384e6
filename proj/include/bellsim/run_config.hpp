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

// File-backed run configuration (JSON, strict schema).
//
// Every key is optional; an empty object is the reference operating point.
// Unknown keys are rejected. Angles are in degrees and delays in
// picoseconds at this interface. Schema and defaults:
//
// {
//   "seed": 1,                       // u64
//   "engine": "analytic",            // "analytic" | "montecarlo"
//   "pulses": 2.736e11,              // pump pulses per curve point
//   "threads": 1,
//   "background_free": false,        // keep only the signal pulse class
//   "max_photons": 4,                // Fock truncation N_max
//   "rep_rate_hz": 7.6e7,
//   "delay_grid_ps": [..] | {"start": s, "stop": e, "step": d},
//                                    // hom-dip: -1..1 step 0.1; gated-dip: -3..3 step 0.25
//   "theta1_grid_deg": [..] | {"start", "stop", "step"},   // fringe: 0..180 step 10
//   "theta1_deg": 0,                 // fixed out1 analyzer for dip scans
//   "theta2_deg": 0 (dips) | -45 (fringe),
//   "fringe_delay_ps": 0,            // working delay for fringe and chsh
//   "chsh_settings_deg": {"a": 0, "a_prime": 45, "b": 22.5, "b_prime": 67.5},
//   "spdc": {"p_pair", "eta_trigger", "eta_signal"},   // overrides spdc_rates
//   "spdc_rates": {"trigger_singles_hz": 1300, "pair_coincidences_hz": 23,
//                  "reading": "per_detector" | "total", "eta_trigger": 0.1},
//   "coherent": {"mean_photons": 0.004,
//                "polarization_deg": 0 (dips) | 90 (fringe, chsh),
//                "phase_rad": 0},
//   "overlap": {"wavelength_nm": 780, "filter_fwhm_nm": 3, "hom_filter_fwhm_nm": 10},
//   "detectors": {"d1_efficiency": 1, "d2_efficiency": 1},
//   "calibration": {"mu_max_same_source": sqrt(0.994),
//                   "mu_max_independent": <calibrated for the 90.8% gated dip>},
//   "output": {"path": "", "format": "csv" | "json"}
// }

#pragma once

#include <cstdint>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "bellsim/experiments.hpp"
#include "bellsim/io.hpp"
#include "json.hpp"

namespace bellsim {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  std::uint64_t seed = 1;
  Engine engine = Engine::kAnalytic;
  double pulses = kRepRate * 3600.0;
  int threads = 1;
  bool background_free = false;
  int max_photons = kDefaultMaxPhotons;
  double rep_rate_hz = kRepRate;

  std::optional<std::vector<double>> delay_grid_ps;
  std::optional<std::vector<double>> theta1_grid_deg;
  double theta1_deg = 0.0;
  std::optional<double> theta2_deg;
  double fringe_delay_ps = 0.0;
  double chsh_a_deg = 0.0;
  double chsh_a_prime_deg = 45.0;
  double chsh_b_deg = 22.5;
  double chsh_b_prime_deg = 67.5;

  std::optional<SpdcParams> spdc;
  double trigger_singles_hz = kTriggerSinglesRate;
  double pair_coincidences_hz = kPairCoincidencesPerDetector;
  CoincidenceReading reading = CoincidenceReading::kPerDetector;
  double eta_trigger = kDefaultEtaTrigger;

  double mean_photons = kCoherentAlpha;
  std::optional<double> polarization_deg;
  double phase_rad = 0.0;

  double wavelength_nm = kWavelength * 1e9;
  double filter_fwhm_nm = kGatedFilterFwhm * 1e9;
  double hom_filter_fwhm_nm = kHomFilterFwhm * 1e9;

  double d1_efficiency = 1.0;
  double d2_efficiency = 1.0;

  double mu_max_same_source = kSameSourceMuMax;
  double mu_max_independent = kIndependentSourceMuMax;

  std::string output_path;
  OutputFormat output_format = OutputFormat::kCsv;
};

namespace detail {

/// Walks one JSON object, remembering which keys were read so leftovers
/// can be reported as unknown.
class ObjectReader {
 public:
  ObjectReader(const nlohmann::json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) fail(path_.empty() ? "<root>" : path_, "expected an object");
  }

  [[noreturn]] static void fail(const std::string& field, const std::string& what) {
    throw ConfigError("field '" + field + "': " + what);
  }

  std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  const nlohmann::json* get(const std::string& key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  void number(const std::string& key, double& out) {
    if (const auto* v = get(key)) {
      if (!v->is_number()) fail(field(key), "expected a number");
      out = v->get<double>();
    }
  }

  void optional_number(const std::string& key, std::optional<double>& out) {
    if (const auto* v = get(key)) {
      if (v->is_null()) return;
      if (!v->is_number()) fail(field(key), "expected a number");
      out = v->get<double>();
    }
  }

  void integer(const std::string& key, int& out, int min_value) {
    if (const auto* v = get(key)) {
      if (!v->is_number_integer()) fail(field(key), "expected an integer");
      const auto x = v->get<long long>();
      if (x < min_value) fail(field(key), "must be >= " + std::to_string(min_value));
      out = static_cast<int>(x);
    }
  }

  void unsigned64(const std::string& key, std::uint64_t& out) {
    if (const auto* v = get(key)) {
      if (!v->is_number_unsigned()) fail(field(key), "expected a non-negative integer");
      out = v->get<std::uint64_t>();
    }
  }

  void boolean(const std::string& key, bool& out) {
    if (const auto* v = get(key)) {
      if (!v->is_boolean()) fail(field(key), "expected true or false");
      out = v->get<bool>();
    }
  }

  void string(const std::string& key, std::string& out) {
    if (const auto* v = get(key)) {
      if (!v->is_string()) fail(field(key), "expected a string");
      out = v->get<std::string>();
    }
  }

  void grid(const std::string& key, std::optional<std::vector<double>>& out) {
    const auto* v = get(key);
    if (v == nullptr || v->is_null()) return;
    if (v->is_array()) {
      std::vector<double> g;
      for (const auto& x : *v) {
        if (!x.is_number()) fail(field(key), "grid entries must be numbers");
        g.push_back(x.get<double>());
      }
      if (g.empty()) fail(field(key), "grid must not be empty");
      out = std::move(g);
      return;
    }
    ObjectReader r(*v, field(key));
    double start = 0.0, stop = 0.0, step = 0.0;
    for (const char* k : {"start", "stop", "step"}) {
      if (r.get(k) == nullptr) fail(r.field(k), "required for a range grid");
    }
    r.number("start", start);
    r.number("stop", stop);
    r.number("step", step);
    r.finish();
    if (!(step > 0.0) || stop < start) fail(field(key), "need step > 0 and stop >= start");
    out = linear_grid(start, stop, step);
  }

  ObjectReader child(const std::string& key) {
    const auto* v = get(key);
    static const nlohmann::json kEmpty = nlohmann::json::object();
    return ObjectReader(v == nullptr ? kEmpty : *v, field(key));
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  void finish() const {
    for (const auto& [k, v] : j_.items()) {
      if (!seen_.count(k)) fail(field(k), "unknown key");
    }
  }

 private:
  const nlohmann::json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

inline void require_unit(double x, const std::string& field) {
  if (!(x >= 0.0 && x <= 1.0)) ObjectReader::fail(field, "must lie in [0, 1]");
}

inline std::size_t line_of_offset(std::string_view text, std::size_t offset) {
  std::size_t line = 1;
  for (std::size_t i = 0; i < offset && i < text.size(); ++i) {
    if (text[i] == '\n') ++line;
  }
  return line;
}

}  // namespace detail

inline RunConfig run_config_from_json(const nlohmann::json& root) {
  RunConfig c;
  detail::ObjectReader r(root, "");
  r.unsigned64("seed", c.seed);
  std::string engine = to_string(c.engine);
  r.string("engine", engine);
  if (engine == "analytic") {
    c.engine = Engine::kAnalytic;
  } else if (engine == "montecarlo") {
    c.engine = Engine::kMonteCarlo;
  } else {
    detail::ObjectReader::fail("engine", "expected \"analytic\" or \"montecarlo\"");
  }
  r.number("pulses", c.pulses);
  if (!(c.pulses >= 1.0)) detail::ObjectReader::fail("pulses", "must be >= 1");
  r.integer("threads", c.threads, 1);
  r.boolean("background_free", c.background_free);
  r.integer("max_photons", c.max_photons, 2);
  r.number("rep_rate_hz", c.rep_rate_hz);
  if (!(c.rep_rate_hz > 0.0)) detail::ObjectReader::fail("rep_rate_hz", "must be > 0");

  r.grid("delay_grid_ps", c.delay_grid_ps);
  r.grid("theta1_grid_deg", c.theta1_grid_deg);
  r.number("theta1_deg", c.theta1_deg);
  r.optional_number("theta2_deg", c.theta2_deg);
  r.number("fringe_delay_ps", c.fringe_delay_ps);
  {
    auto s = r.child("chsh_settings_deg");
    s.number("a", c.chsh_a_deg);
    s.number("a_prime", c.chsh_a_prime_deg);
    s.number("b", c.chsh_b_deg);
    s.number("b_prime", c.chsh_b_prime_deg);
    s.finish();
  }
  if (r.has("spdc") && !root.at("spdc").is_null()) {
    auto s = r.child("spdc");
    SpdcParams p;
    for (const char* k : {"p_pair", "eta_trigger", "eta_signal"}) {
      if (!s.has(k)) detail::ObjectReader::fail(s.field(k), "required");
    }
    s.number("p_pair", p.p_pair);
    s.number("eta_trigger", p.eta_trigger);
    s.number("eta_signal", p.eta_signal);
    s.finish();
    detail::require_unit(p.p_pair, "spdc.p_pair");
    detail::require_unit(p.eta_trigger, "spdc.eta_trigger");
    detail::require_unit(p.eta_signal, "spdc.eta_signal");
    c.spdc = p;
  } else {
    r.get("spdc");
  }
  {
    auto s = r.child("spdc_rates");
    s.number("trigger_singles_hz", c.trigger_singles_hz);
    s.number("pair_coincidences_hz", c.pair_coincidences_hz);
    std::string reading = "per_detector";
    s.string("reading", reading);
    if (reading == "per_detector") {
      c.reading = CoincidenceReading::kPerDetector;
    } else if (reading == "total") {
      c.reading = CoincidenceReading::kTotal;
    } else {
      detail::ObjectReader::fail(s.field("reading"), "expected \"per_detector\" or \"total\"");
    }
    s.number("eta_trigger", c.eta_trigger);
    s.finish();
    if (!(c.trigger_singles_hz > 0.0)) {
      detail::ObjectReader::fail(s.field("trigger_singles_hz"), "must be > 0");
    }
    if (!(c.pair_coincidences_hz >= 0.0)) {
      detail::ObjectReader::fail(s.field("pair_coincidences_hz"), "must be >= 0");
    }
    if (!(c.eta_trigger > 0.0 && c.eta_trigger <= 1.0)) {
      detail::ObjectReader::fail(s.field("eta_trigger"), "must lie in (0, 1]");
    }
  }
  {
    auto s = r.child("coherent");
    s.number("mean_photons", c.mean_photons);
    s.optional_number("polarization_deg", c.polarization_deg);
    s.number("phase_rad", c.phase_rad);
    s.finish();
    if (!(c.mean_photons >= 0.0)) detail::ObjectReader::fail("coherent.mean_photons", "must be >= 0");
  }
  {
    auto s = r.child("overlap");
    s.number("wavelength_nm", c.wavelength_nm);
    s.number("filter_fwhm_nm", c.filter_fwhm_nm);
    s.number("hom_filter_fwhm_nm", c.hom_filter_fwhm_nm);
    s.finish();
    for (auto [v, name] : {std::pair{c.wavelength_nm, "overlap.wavelength_nm"},
                           std::pair{c.filter_fwhm_nm, "overlap.filter_fwhm_nm"},
                           std::pair{c.hom_filter_fwhm_nm, "overlap.hom_filter_fwhm_nm"}}) {
      if (!(v > 0.0)) detail::ObjectReader::fail(name, "must be > 0");
    }
  }
  {
    auto s = r.child("detectors");
    s.number("d1_efficiency", c.d1_efficiency);
    s.number("d2_efficiency", c.d2_efficiency);
    s.finish();
    detail::require_unit(c.d1_efficiency, "detectors.d1_efficiency");
    detail::require_unit(c.d2_efficiency, "detectors.d2_efficiency");
  }
  {
    auto s = r.child("calibration");
    s.number("mu_max_same_source", c.mu_max_same_source);
    s.number("mu_max_independent", c.mu_max_independent);
    s.finish();
    detail::require_unit(c.mu_max_same_source, "calibration.mu_max_same_source");
    detail::require_unit(c.mu_max_independent, "calibration.mu_max_independent");
  }
  {
    auto s = r.child("output");
    s.string("path", c.output_path);
    std::string fmt = "csv";
    s.string("format", fmt);
    if (fmt == "csv") {
      c.output_format = OutputFormat::kCsv;
    } else if (fmt == "json") {
      c.output_format = OutputFormat::kJson;
    } else {
      detail::ObjectReader::fail(s.field("format"), "expected \"csv\" or \"json\"");
    }
    s.finish();
  }
  r.finish();
  return c;
}

/// Parses a config document. Also accepts a previously emitted CSV or JSON
/// output file, in which case the recorded config is used.
inline RunConfig parse_run_config(std::string_view text, const std::string& source = "<config>") {
  std::string body(text);
  if (!body.empty() && body[0] == '#') {
    std::istringstream in(body);
    std::string line;
    bool found = false;
    while (std::getline(in, line)) {
      constexpr std::string_view kTag = "# config: ";
      if (line.rfind(kTag, 0) == 0) {
        body = line.substr(kTag.size());
        found = true;
        break;
      }
    }
    if (!found) throw ConfigError(source + ": no '# config:' line in output header");
  }
  nlohmann::json root;
  try {
    root = nlohmann::json::parse(body);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(source + ":" + std::to_string(detail::line_of_offset(body, e.byte)) +
                      ": malformed JSON: " + e.what());
  }
  if (root.is_object() && root.contains("header") && root.contains("points")) {
    const auto& h = root.at("header");
    if (!h.is_object() || !h.contains("config")) {
      throw ConfigError(source + ": output file header has no config");
    }
    root = h.at("config");
  }
  try {
    return run_config_from_json(root);
  } catch (const ConfigError& e) {
    throw ConfigError(source + ": " + e.what());
  }
}

inline RunConfig load_run_config(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ConfigError(path + ": cannot open config file");
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_run_config(ss.str(), path);
}

inline double default_theta2_deg(Scenario s) { return s == Scenario::kFringe ? -45.0 : 0.0; }

inline double default_polarization_deg(Scenario s) {
  return s == Scenario::kFringe || s == Scenario::kChsh ? 90.0 : 0.0;
}

inline std::vector<double> default_delay_grid_ps(Scenario s) {
  return s == Scenario::kHom2 ? linear_grid(-1.0, 1.0, 0.1) : linear_grid(-3.0, 3.0, 0.25);
}

inline std::vector<double> default_theta1_grid_deg() { return linear_grid(0.0, 180.0, 10.0); }

/// Fills every scenario-dependent default so the config is explicit.
inline RunConfig resolved(RunConfig c, Scenario s) {
  if (!c.delay_grid_ps) c.delay_grid_ps = default_delay_grid_ps(s);
  if (!c.theta1_grid_deg) c.theta1_grid_deg = default_theta1_grid_deg();
  if (!c.theta2_deg) c.theta2_deg = default_theta2_deg(s);
  if (!c.polarization_deg) c.polarization_deg = default_polarization_deg(s);
  if (!c.spdc) {
    try {
      c.spdc = spdc_from_rates(c.trigger_singles_hz, c.pair_coincidences_hz, c.rep_rate_hz,
                               c.reading, c.eta_trigger);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("field 'spdc_rates': ") + e.what());
    }
  }
  return c;
}

inline ExperimentConfig to_experiment(const RunConfig& raw, Scenario s) {
  const RunConfig c = resolved(raw, s);
  ExperimentConfig e;
  e.scenario = s;
  for (double ps : *c.delay_grid_ps) e.delays.push_back(ps * 1e-12);
  for (double deg : *c.theta1_grid_deg) e.theta1_grid.push_back(degrees(deg));
  e.delay = c.fringe_delay_ps * 1e-12;
  e.theta1 = degrees(c.theta1_deg);
  e.theta2 = degrees(*c.theta2_deg);
  e.chsh = {degrees(c.chsh_a_deg), degrees(c.chsh_a_prime_deg), degrees(c.chsh_b_deg),
            degrees(c.chsh_b_prime_deg)};
  e.spdc = *c.spdc;
  e.coherent = {c.mean_photons, degrees(*c.polarization_deg), c.phase_rad};
  const bool same_source = s == Scenario::kHom2;
  e.overlap.mu_max = same_source ? c.mu_max_same_source : c.mu_max_independent;
  e.overlap.coherence_time = coherence_time_from_filter(
      c.wavelength_nm * 1e-9, (same_source ? c.hom_filter_fwhm_nm : c.filter_fwhm_nm) * 1e-9);
  e.d1 = {DetectorId::kD1, c.d1_efficiency};
  e.d2 = {DetectorId::kD2, c.d2_efficiency};
  e.pulses = c.pulses;
  e.engine = c.engine;
  e.seed = c.seed;
  e.threads = c.threads;
  e.background_free = c.background_free;
  e.truncation.max_photons = c.max_photons;
  try {
    e.validate();
  } catch (const std::invalid_argument& err) {
    throw ConfigError(err.what());
  }
  return e;
}

/// Config as JSON. Unset scenario-dependent fields are omitted, so the
/// result stays reusable across subcommands. The output block and the
/// thread count are not recorded: they do not influence the computed
/// numbers.
inline nlohmann::json to_json(const RunConfig& c) {
  nlohmann::json j;
  j["seed"] = c.seed;
  j["engine"] = to_string(c.engine);
  j["pulses"] = c.pulses;
  j["background_free"] = c.background_free;
  j["max_photons"] = c.max_photons;
  j["rep_rate_hz"] = c.rep_rate_hz;
  if (c.delay_grid_ps) j["delay_grid_ps"] = *c.delay_grid_ps;
  if (c.theta1_grid_deg) j["theta1_grid_deg"] = *c.theta1_grid_deg;
  j["theta1_deg"] = c.theta1_deg;
  if (c.theta2_deg) j["theta2_deg"] = *c.theta2_deg;
  j["fringe_delay_ps"] = c.fringe_delay_ps;
  j["chsh_settings_deg"] = {{"a", c.chsh_a_deg},
                            {"a_prime", c.chsh_a_prime_deg},
                            {"b", c.chsh_b_deg},
                            {"b_prime", c.chsh_b_prime_deg}};
  if (c.spdc) {
    j["spdc"] = {{"p_pair", c.spdc->p_pair},
                 {"eta_trigger", c.spdc->eta_trigger},
                 {"eta_signal", c.spdc->eta_signal}};
  }
  j["spdc_rates"] = {
      {"trigger_singles_hz", c.trigger_singles_hz},
      {"pair_coincidences_hz", c.pair_coincidences_hz},
      {"reading", c.reading == CoincidenceReading::kPerDetector ? "per_detector" : "total"},
      {"eta_trigger", c.eta_trigger}};
  j["coherent"] = {{"mean_photons", c.mean_photons}, {"phase_rad", c.phase_rad}};
  if (c.polarization_deg) j["coherent"]["polarization_deg"] = *c.polarization_deg;
  j["overlap"] = {{"wavelength_nm", c.wavelength_nm},
                  {"filter_fwhm_nm", c.filter_fwhm_nm},
                  {"hom_filter_fwhm_nm", c.hom_filter_fwhm_nm}};
  j["detectors"] = {{"d1_efficiency", c.d1_efficiency}, {"d2_efficiency", c.d2_efficiency}};
  j["calibration"] = {{"mu_max_same_source", c.mu_max_same_source},
                      {"mu_max_independent", c.mu_max_independent}};
  return j;
}

/// Fully explicit config of one run, as recorded in output headers.
/// Feeding it back reproduces the run.
inline nlohmann::json recorded_config(const RunConfig& c, Scenario s) {
  return to_json(resolved(c, s));
}

inline std::string config_hash(const nlohmann::json& resolved_config) {
  return hex64(fnv1a64(resolved_config.dump()));
}

}  // namespace bellsim
