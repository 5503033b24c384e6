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

// The four measurements: two-photon HOM dip, gated (three-fold) dip,
// polarization fringe and CHSH. Each curve point can be evaluated exactly
// (sum over pulse classes of weight x gated coincidence probability) or by
// Monte Carlo over the same classes.
//
// Apparatus for every gated scenario:
//
//   inB (heralded twin) --\                /-- out1 -- analyzer theta1 -- D1
//                          50/50 coupler --
//   inC (coherent state) --/               \-- out2 -- analyzer theta2 -- D2
//
// with the trigger detector Dt gating D1 & D2 coincidences per pulse.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "bellsim/analysis.hpp"
#include "bellsim/detection.hpp"
#include "bellsim/fock.hpp"
#include "bellsim/optics.hpp"
#include "bellsim/rng.hpp"
#include "bellsim/sources.hpp"

namespace bellsim {

enum class Scenario { kHom2, kGatedDip, kFringe, kChsh };
enum class Engine { kAnalytic, kMonteCarlo };

inline const char* to_string(Scenario s) {
  switch (s) {
    case Scenario::kHom2: return "hom2";
    case Scenario::kGatedDip: return "gated_dip";
    case Scenario::kFringe: return "fringe";
    case Scenario::kChsh: return "chsh";
  }
  return "?";
}

inline const char* to_string(Engine e) {
  return e == Engine::kAnalytic ? "analytic" : "montecarlo";
}

inline double degrees(double deg) { return deg * std::numbers::pi / 180.0; }

// Operating point quoted for the independent-source runs.
inline constexpr double kRepRate = 76e6;                 // Hz
inline constexpr double kTriggerSinglesRate = 1300.0;    // 1/s
inline constexpr double kPairCoincidencesPerDetector = 23.0;  // 1/s
inline constexpr double kCoherentAlpha = 4e-3;
inline constexpr double kWavelength = 780e-9;            // m
inline constexpr double kGatedFilterFwhm = 3e-9;         // m
inline constexpr double kHomFilterFwhm = 10e-9;          // m
inline constexpr double kDefaultEtaTrigger = 0.1;        // not identifiable from rates

/// sqrt(0.994): reproduces the 99.4% two-photon dip.
inline constexpr double kSameSourceMuMax = 0.99699548644916136;
/// Calibrated (`bellsim calibrate`) so the gated dip at the operating point
/// shows 90.8% visibility.
inline constexpr double kIndependentSourceMuMax = 0.97893468265488748;

struct ExperimentConfig {
  Scenario scenario = Scenario::kGatedDip;
  std::vector<double> delays;       // seconds; dip scenarios
  std::vector<double> theta1_grid;  // radians; fringe
  double delay = 0.0;               // fringe / chsh working delay
  double theta1 = 0.0;              // analyzer on out1 when not scanned
  double theta2 = 0.0;              // analyzer on out2
  ChshSettings chsh;
  SpdcParams spdc;
  CoherentParams coherent;
  OverlapModel overlap;
  DetectorSpec d1{DetectorId::kD1, 1.0};
  DetectorSpec d2{DetectorId::kD2, 1.0};
  double pulses = kRepRate * 3600.0;  // per curve point
  Engine engine = Engine::kAnalytic;
  std::uint64_t seed = 1;
  int threads = 1;
  bool background_free = false;  // keep only the (twin kept, n = 1) class
  TruncationPolicy truncation;

  void validate() const {
    spdc.validate();
    coherent.validate();
    overlap.validate();
    d1.validate();
    d2.validate();
    if (!(pulses > 0.0)) throw std::invalid_argument("pulses must be > 0");
    if ((scenario == Scenario::kHom2 || scenario == Scenario::kGatedDip) && delays.empty()) {
      throw std::invalid_argument("delay grid is empty");
    }
    if (scenario == Scenario::kFringe && theta1_grid.empty()) {
      throw std::invalid_argument("theta1 grid is empty");
    }
    if (threads < 1) throw std::invalid_argument("threads must be >= 1");
  }
};

inline std::vector<double> linear_grid(double start, double stop, double step) {
  if (!(step > 0.0) || stop < start) throw std::invalid_argument("bad grid specification");
  std::vector<double> g;
  const auto n = static_cast<long>(std::floor((stop - start) / step + 1e-9));
  for (long i = 0; i <= n; ++i) g.push_back(start + static_cast<double>(i) * step);
  return g;
}

/// Source parameters from the quoted trigger and coincidence rates
/// (per-detector reading).
inline SpdcParams reference_spdc() {
  return spdc_from_rates(kTriggerSinglesRate, kPairCoincidencesPerDetector, kRepRate,
                         CoincidenceReading::kPerDetector, kDefaultEtaTrigger);
}

/// Default configuration of each scenario at the reference operating point.
inline ExperimentConfig reference_operating_point(Scenario scenario) {
  ExperimentConfig c;
  c.scenario = scenario;
  c.spdc = reference_spdc();
  c.coherent.mean_photons = kCoherentAlpha;
  c.overlap.mu_max = kIndependentSourceMuMax;
  c.overlap.coherence_time = coherence_time_from_filter(kWavelength, kGatedFilterFwhm);
  switch (scenario) {
    case Scenario::kHom2:
      c.overlap.mu_max = kSameSourceMuMax;
      c.overlap.coherence_time = coherence_time_from_filter(kWavelength, kHomFilterFwhm);
      c.delays = linear_grid(-1e-12, 1e-12, 0.1e-12);
      break;
    case Scenario::kGatedDip:
      c.delays = linear_grid(-3e-12, 3e-12, 0.25e-12);
      break;
    case Scenario::kFringe:
      c.coherent.polarization_angle = std::numbers::pi / 2.0;
      c.theta2 = degrees(-45.0);
      for (int deg = 0; deg <= 180; deg += 10) c.theta1_grid.push_back(degrees(deg));
      break;
    case Scenario::kChsh:
      c.coherent.polarization_angle = std::numbers::pi / 2.0;
      break;
  }
  return c;
}

/// Where the analyzers and detectors sit behind the coupler outputs.
struct Arrangement {
  double theta_out1 = 0.0;
  double theta_out2 = 0.0;
  DetectorSpec det_out1{DetectorId::kD1, 1.0};
  DetectorSpec det_out2{DetectorId::kD2, 1.0};
};

/// Propagates an input state through coupler, analyzers and detectors and
/// returns P(D1 and D2 click).
inline double coincidence_probability(const StateVector& input, const Arrangement& arr) {
  StateVector s = beamsplitter_50_50(input, Port::in_b(), Port::in_c(), Port::out1(), Port::out2());
  s = analyzer(s, Port::out1(), arr.theta_out1);
  s = analyzer(s, Port::out2(), arr.theta_out2);
  const DetectorMapping mapping = {{Port::out1(), arr.det_out1}, {Port::out2(), arr.det_out2}};
  const auto dist = click_distribution(s, mapping);
  double p = 0.0;
  for (const auto& [pattern, prob] : dist) {
    if (pattern.contains(DetectorId::kD1) && pattern.contains(DetectorId::kD2)) p += prob;
  }
  return p;
}

struct MeasurementPoint {
  double delay = 0.0;
  double theta1 = 0.0;
  double theta2 = 0.0;
};

inline Arrangement arrangement_for(const ExperimentConfig& cfg, const MeasurementPoint& pt) {
  return {pt.theta1, pt.theta2, cfg.d1, cfg.d2};
}

/// Pulse classes that can yield a gated coincidence, with weights. For the
/// two-photon HOM scenario this is the single "both photons present" class
/// with weight Gamma.
inline std::vector<PulseClass> relevant_classes(const ExperimentConfig& cfg) {
  if (cfg.scenario == Scenario::kHom2) {
    PulseClass both{true, true, true, 1, cfg.spdc.gamma(), false};
    return {both};
  }
  std::vector<PulseClass> out;
  for (const auto& cls : enumerate_pulse_classes(cfg.spdc, cfg.coherent)) {
    if (cls.remainder || !cls.trigger_fires || cls.photons_at_coupler() < 2) continue;
    if (cfg.background_free && !(cls.twin_detectable && cls.n_coherent == 1)) continue;
    out.push_back(cls);
  }
  return out;
}

/// The second photon of the HOM pair is the SPDC partner: H, phase 0.
inline CoherentParams input_optics(const ExperimentConfig& cfg) {
  if (cfg.scenario != Scenario::kHom2) return cfg.coherent;
  return CoherentParams{1.0, 0.0, 0.0};
}

/// P(D1 and D2 | class) at the given point.
inline double class_coincidence(const ExperimentConfig& cfg, const PulseClass& cls,
                                const MeasurementPoint& pt) {
  const StateVector input =
      build_input_state(cls, cfg.overlap.at_delay(pt.delay), input_optics(cfg), cfg.truncation);
  return coincidence_probability(input, arrangement_for(cfg, pt));
}

/// Exact per-pulse probability of a gated coincidence at one point.
inline double analytic_event_probability(const ExperimentConfig& cfg, const MeasurementPoint& pt) {
  double p = 0.0;
  for (const auto& cls : relevant_classes(cfg)) {
    if (cls.weight == 0.0) continue;
    p += cls.weight * class_coincidence(cfg, cls, pt);
  }
  return p;
}

struct CurvePoint {
  double setting = 0.0;            // delay (s) or theta1 (rad)
  double probability = 0.0;        // per pulse
  double probability_sigma = 0.0;  // zero for the analytic engine
  double counts = 0.0;             // expected (analytic) or sampled (Monte Carlo)
  double sigma = 0.0;              // sqrt(counts)
  long long trials = 0;            // weighted Monte Carlo trials
};

struct Curve {
  std::vector<CurvePoint> points;
  std::vector<std::string> warnings;
};

inline std::vector<MeasurementPoint> measurement_points(const ExperimentConfig& cfg) {
  std::vector<MeasurementPoint> pts;
  switch (cfg.scenario) {
    case Scenario::kHom2:
    case Scenario::kGatedDip:
      for (double tau : cfg.delays) pts.push_back({tau, cfg.theta1, cfg.theta2});
      break;
    case Scenario::kFringe:
      for (double th : cfg.theta1_grid) pts.push_back({cfg.delay, th, cfg.theta2});
      break;
    case Scenario::kChsh: {
      const double q = std::numbers::pi / 2.0;
      const auto& s = cfg.chsh;
      for (double x : {s.a, s.a_prime}) {
        for (double y : {s.b, s.b_prime}) {
          for (double dx : {0.0, q}) {
            for (double dy : {0.0, q}) pts.push_back({cfg.delay, x + dx, y + dy});
          }
        }
      }
      break;
    }
  }
  return pts;
}

inline double setting_of(const ExperimentConfig& cfg, const MeasurementPoint& pt) {
  return cfg.scenario == Scenario::kFringe ? pt.theta1 : pt.delay;
}

namespace detail {

template <typename Fn>
void parallel_for(std::size_t n, int threads, Fn&& fn) {
  const auto workers = static_cast<std::size_t>(std::max(1, threads));
  if (workers == 1 || n < 2) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < std::min(workers, n); ++w) {
    pool.emplace_back([&, w] {
      for (std::size_t i = w; i < n; i += workers) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace detail

/// Simulates `cfg.pulses` pulses at one point. Only pulses falling in
/// relevant classes are drawn individually: their number is binomial in
/// the pulse count, each is assigned a class with probability
/// proportional to its weight, and its coincidence is drawn from the exact
/// per-class probability. The hit count is therefore distributed exactly
/// as in a pulse-by-pulse simulation.
inline CurvePoint monte_carlo_point(const ExperimentConfig& cfg, const MeasurementPoint& pt,
                                    std::uint64_t stream) {
  const auto classes = relevant_classes(cfg);
  std::vector<double> cdf;
  std::vector<double> hit_prob;
  double total_weight = 0.0;
  for (const auto& cls : classes) {
    total_weight += cls.weight;
    cdf.push_back(total_weight);
    hit_prob.push_back(cls.weight > 0.0 ? class_coincidence(cfg, cls, pt) : 0.0);
  }
  CounterRng rng(cfg.seed, stream);
  CurvePoint out;
  out.setting = setting_of(cfg, pt);
  if (total_weight <= 0.0) return out;
  std::binomial_distribution<long long> relevant_pulses(static_cast<long long>(cfg.pulses),
                                                        std::min(1.0, total_weight));
  const long long trials = relevant_pulses(rng);
  long long hits = 0;
  for (long long t = 0; t < trials; ++t) {
    const double u = rng.uniform() * total_weight;
    const auto k = static_cast<std::size_t>(
        std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
    const std::size_t cls = std::min(k, cdf.size() - 1);
    if (rng.uniform() < hit_prob[cls]) ++hits;
  }
  out.trials = trials;
  out.counts = static_cast<double>(hits);
  out.sigma = std::sqrt(out.counts);
  out.probability = out.counts / cfg.pulses;
  out.probability_sigma = out.sigma / cfg.pulses;
  return out;
}

/// Relevant-class trials expected per point for the configured pulses.
inline double expected_trials(const ExperimentConfig& cfg) {
  double w = 0.0;
  for (const auto& cls : relevant_classes(cfg)) w += cls.weight;
  return w * cfg.pulses;
}

/// Pulses per point that give `trials` weighted trials on average.
inline double pulses_for_trials(const ExperimentConfig& cfg, double trials) {
  ExperimentConfig unit = cfg;
  unit.pulses = 1.0;
  const double w = expected_trials(unit);
  if (!(w > 0.0)) throw std::domain_error("no pulse class can produce a coincidence");
  return std::ceil(trials / w);
}

inline Curve analytic_run(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto pts = measurement_points(cfg);
  Curve c;
  c.points.resize(pts.size());
  detail::parallel_for(pts.size(), cfg.threads, [&](std::size_t i) {
    CurvePoint& p = c.points[i];
    p.setting = setting_of(cfg, pts[i]);
    p.probability = analytic_event_probability(cfg, pts[i]);
    p.counts = p.probability * cfg.pulses;
    p.sigma = std::sqrt(p.counts);
  });
  return c;
}

/// Deterministic for a given seed: point i always uses stream i.
inline Curve monte_carlo_run(const ExperimentConfig& cfg, double target_relative_error = 0.0) {
  cfg.validate();
  const auto pts = measurement_points(cfg);
  Curve c;
  c.points.resize(pts.size());
  detail::parallel_for(pts.size(), cfg.threads, [&](std::size_t i) {
    c.points[i] = monte_carlo_point(cfg, pts[i], i);
  });
  if (target_relative_error > 0.0) {
    const double needed = 1.0 / (target_relative_error * target_relative_error);
    for (const auto& p : c.points) {
      if (p.counts < needed) {
        c.warnings.push_back("Monte Carlo budget exceeded: " + std::to_string(p.counts) +
                             " counts at a point, " + std::to_string(needed) +
                             " needed for the requested relative error");
        break;
      }
    }
  }
  return c;
}

inline Curve run_curve(const ExperimentConfig& cfg) {
  return cfg.engine == Engine::kAnalytic ? analytic_run(cfg) : monte_carlo_run(cfg);
}

inline Curve run_hom_two_photon(ExperimentConfig cfg) {
  cfg.scenario = Scenario::kHom2;
  return run_curve(cfg);
}

inline Curve run_gated_dip(ExperimentConfig cfg) {
  cfg.scenario = Scenario::kGatedDip;
  return run_curve(cfg);
}

inline Curve run_fringe(ExperimentConfig cfg) {
  cfg.scenario = Scenario::kFringe;
  return run_curve(cfg);
}

/// Sixteen tallies at {a, a', b, b'} and their orthogonal complements.
inline ChshResult run_chsh(ExperimentConfig cfg) {
  cfg.scenario = Scenario::kChsh;
  const auto pts = measurement_points(cfg);
  const Curve curve = run_curve(cfg);
  TallySet tallies;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    CountTally& t = tallies.slot({pts[i].theta1, pts[i].theta2});
    t.counts = curve.points[i].counts;
    t.sigma = curve.points[i].sigma;
    t.sampled = cfg.engine == Engine::kMonteCarlo;
  }
  return chsh_from_counts(
      [&](double x, double y) { return tallies.at({x, y}).counts; }, cfg.chsh);
}

inline std::vector<DataPoint> to_data_points(const Curve& c) {
  std::vector<DataPoint> out;
  for (const auto& p : c.points) out.push_back({p.setting, p.counts, p.sigma});
  return out;
}

/// Analytic curve points carry expected counts; fit them unweighted so the
/// fit reproduces the model exactly.
inline FitResult fit_curve(const ExperimentConfig& cfg, const Curve& c) {
  auto pts = to_data_points(c);
  if (cfg.engine == Engine::kAnalytic) {
    for (auto& p : pts) p.sigma = 0.0;
  }
  if (cfg.scenario == Scenario::kFringe) return fit_sine_squared(pts);
  return fit_gaussian_dip(pts);
}

/// 1 - C(0) / C(infinity) for a dip scenario, from the analytic engine.
inline double dip_visibility(const ExperimentConfig& cfg) {
  const MeasurementPoint center{0.0, cfg.theta1, cfg.theta2};
  const MeasurementPoint far{std::numeric_limits<double>::infinity(), cfg.theta1, cfg.theta2};
  const double shoulder = analytic_event_probability(cfg, far);
  if (shoulder == 0.0) return 0.0;
  return 1.0 - analytic_event_probability(cfg, center) / shoulder;
}

class CalibrationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// mu_max giving the target dip visibility. The visibility is monotone in
/// mu_max, so plain bisection on [0, 1] converges.
inline double calibrate_mu_max(ExperimentConfig cfg, double target_visibility,
                               double tolerance = 1e-15) {
  auto vis = [&](double mu) {
    cfg.overlap.mu_max = mu;
    return dip_visibility(cfg);
  };
  double lo = 0.0;
  double hi = 1.0;
  const double v_lo = vis(lo);
  const double v_hi = vis(hi);
  if (target_visibility < v_lo || target_visibility > v_hi) {
    throw CalibrationError("target visibility " + std::to_string(target_visibility) +
                           " outside reachable range [" + std::to_string(v_lo) + ", " +
                           std::to_string(v_hi) + "]");
  }
  for (int i = 0; i < 200 && hi - lo > tolerance; ++i) {
    const double mid = 0.5 * (lo + hi);
    (vis(mid) < target_visibility ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace bellsim
