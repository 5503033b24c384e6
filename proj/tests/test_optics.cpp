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

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "bellsim/detection.hpp"
#include "bellsim/optics.hpp"
#include "oracle/brute_force.hpp"

namespace {

using namespace bellsim;

constexpr double kTol = 1e-12;
const double kPi = std::numbers::pi;

ModeLabel mode(Port p, Polarization pol = Polarization::kH, TemporalMode t = TemporalMode::kE0) {
  return {p, pol, t};
}

StateVector photon(Port p, Polarization pol = Polarization::kH) {
  return create_photon(StateVector::vacuum(port_modes(p)), mode(p, pol));
}

double probability_on_port(const StateVector& s, const Port& p, int photons) {
  const auto modes = port_modes(p);
  return project_pattern(s, modes, [photons](std::span<const std::uint8_t> v) {
           return v[0] + v[1] + v[2] + v[3] == photons;
         }).probability;
}

/// Two photons on the coupler inputs, the second with overlap mu.
StateVector two_inputs(Polarization second, double mu) {
  StateVector s = StateVector::vacuum(port_modes(Port::in_b()));
  s = ensure_port(s, Port::in_c());
  s = create_photon(s, mode(Port::in_b(), Polarization::kH));
  const double c1 = std::sqrt(1.0 - mu * mu);
  const std::vector<std::pair<ModeLabel, Complex>> m = {
      {mode(Port::in_c(), second, TemporalMode::kE0), mu},
      {mode(Port::in_c(), second, TemporalMode::kE1), c1}};
  return create_photon(s, m);
}

double one_per_port(const StateVector& s) {
  auto m = port_modes(Port::out1());
  const auto m2 = port_modes(Port::out2());
  m.insert(m.end(), m2.begin(), m2.end());
  return project_pattern(s, m, [](std::span<const std::uint8_t> v) {
           return v[0] + v[1] + v[2] + v[3] == 1 && v[4] + v[5] + v[6] + v[7] == 1;
         }).probability;
}

TEST(Beamsplitter, ReproducesTheHVOutputExpansion) {
  StateVector s = two_inputs(Polarization::kV, 1.0);
  s = beamsplitter_50_50(s, Port::in_b(), Port::in_c(), Port::out1(), Port::out2());
  const auto h1 = mode(Port::out1(), Polarization::kH);
  const auto v1 = mode(Port::out1(), Polarization::kV);
  const auto h2 = mode(Port::out2(), Polarization::kH);
  const auto v2 = mode(Port::out2(), Polarization::kV);
  EXPECT_NEAR(std::abs(s.amplitude({{h1, 1}, {v2, 1}}) - 0.5), 0.0, kTol);
  EXPECT_NEAR(std::abs(s.amplitude({{h1, 1}, {v1, 1}}) - Complex{0.0, 0.5}), 0.0, kTol);
  EXPECT_NEAR(std::abs(s.amplitude({{h2, 1}, {v2, 1}}) - Complex{0.0, 0.5}), 0.0, kTol);
  EXPECT_NEAR(std::abs(s.amplitude({{v1, 1}, {h2, 1}}) + 0.5), 0.0, kTol);
  EXPECT_NEAR(s.norm_squared(), 1.0, kTol);
}

TEST(Beamsplitter, IdenticalPhotonsBunch) {
  StateVector s = two_inputs(Polarization::kH, 1.0);
  s = beamsplitter_50_50(s, Port::in_b(), Port::in_c(), Port::out1(), Port::out2());
  EXPECT_NEAR(one_per_port(s), 0.0, kTol);
}

TEST(Beamsplitter, OrthogonalTemporalModesGiveHalf) {
  StateVector s = two_inputs(Polarization::kH, 0.0);
  s = beamsplitter_50_50(s, Port::in_b(), Port::in_c(), Port::out1(), Port::out2());
  EXPECT_NEAR(one_per_port(s), 0.5, kTol);
}

TEST(Beamsplitter, RejectsIdenticalPorts) {
  EXPECT_THROW(beamsplitter_50_50(photon(Port::in_b()), Port::in_b(), Port::in_b()),
               std::invalid_argument);
}

TEST(BeamsplitterProperty, HomLawOnOverlapGrid) {
  for (double mu : {0.0, 0.25, 0.5, 0.75, 1.0}) {
    StateVector s = two_inputs(Polarization::kH, mu);
    s = beamsplitter_50_50(s, Port::in_b(), Port::in_c(), Port::out1(), Port::out2());
    const double expected = (1.0 - mu * mu) / 2.0;
    EXPECT_NEAR(one_per_port(s), expected, kTol) << "mu = " << mu;
    oracle::Setup o;
    o.mu = mu;
    o.polarization = 0.0;
    EXPECT_NEAR(oracle::coincidence(o), expected, kTol) << "mu = " << mu;
  }
}

TEST(BeamsplitterProperty, MachZehnderIdentity) {
  // Two passes through the symmetric coupler send input B entirely to the
  // other port with phase i.
  const StateVector in = photon(Port::in_b(), Polarization::kV);
  StateVector s = beamsplitter_50_50(in, Port::in_b(), Port::in_c());
  s = beamsplitter_50_50(s, Port::in_b(), Port::in_c());
  EXPECT_NEAR(std::abs(s.amplitude({{mode(Port::in_c(), Polarization::kV), 1}}) - Complex{0.0, 1.0}),
              0.0, kTol);
  EXPECT_NEAR(std::abs(s.amplitude({{mode(Port::in_b(), Polarization::kV), 1}})), 0.0, kTol);
}

TEST(Rotation, QuarterTurnsAndDiagonal) {
  const Port p = Port::out1();
  const auto h = mode(p, Polarization::kH);
  const auto v = mode(p, Polarization::kV);
  const StateVector in = photon(p);
  EXPECT_NEAR(std::abs(inner_product(rotate_polarization(in, p, 0.0), in) - 1.0), 0.0, kTol);
  EXPECT_NEAR(std::abs(rotate_polarization(in, p, kPi / 2).amplitude({{v, 1}}) - 1.0), 0.0, kTol);
  const StateVector d = rotate_polarization(in, p, kPi / 4);
  EXPECT_NEAR(d.amplitude({{h, 1}}).real(), 1.0 / std::sqrt(2.0), kTol);
  EXPECT_NEAR(d.amplitude({{v, 1}}).real(), 1.0 / std::sqrt(2.0), kTol);
}

TEST(Analyzer, MalusLaw) {
  const Port p = Port::out1();
  EXPECT_NEAR(probability_on_port(analyzer(photon(p), p, 0.0), p, 1), 1.0, kTol);
  EXPECT_NEAR(probability_on_port(analyzer(photon(p), p, kPi / 2), p, 1), 0.0, kTol);
  EXPECT_NEAR(probability_on_port(analyzer(photon(p), p, kPi / 4), p, 1), 0.5, kTol);
  for (double t : {0.1, 0.7, 1.3, 2.9}) {
    EXPECT_NEAR(probability_on_port(analyzer(photon(p), p, t), p, 1), std::cos(t) * std::cos(t), kTol);
  }
}

TEST(AnalyzerProperty, SameAngleTwiceIsIdempotent) {
  const Port p = Port::out2();
  for (double t : {0.0, 0.3, kPi / 4, 1.1, 2.5}) {
    const StateVector once = analyzer(photon(p, Polarization::kV), p, t);
    const double p1 = probability_on_port(once, p, 1);
    const auto kept = project_pattern(once, port_modes(p), [](std::span<const std::uint8_t> v) {
      return v[0] + v[1] + v[2] + v[3] == 1;
    });
    if (p1 < 1e-20) continue;
    const double second = probability_on_port(analyzer(kept.collapsed, p, t), p, 1);
    EXPECT_NEAR(second, 1.0, kTol) << "theta = " << t;
  }
}

TEST(LossChannel, UnitTransmittanceIsIdentity) {
  const StateVector in = photon(Port::out1());
  EXPECT_NEAR(std::abs(inner_product(loss_channel(in, Port::out1(), 1.0), in) - 1.0), 0.0, kTol);
}

TEST(LossChannel, HalfTransmittanceOnSinglePhoton) {
  const DetectorMapping m = {{Port::out1(), {DetectorId::kD1, 1.0}}};
  const auto dist = click_distribution(loss_channel(photon(Port::out1()), Port::out1(), 0.5), m);
  EXPECT_NEAR(probability_of(dist, ClickPattern::of({DetectorId::kD1})), 0.5, kTol);
}

TEST(LossChannel, BothOfTwoPhotonsSurviveAQuarterOfTheTime) {
  const Port p = Port::out1();
  StateVector s = create_photon(photon(p), mode(p));
  s = s.normalized();
  const StateVector out = loss_channel(s, p, 0.5);
  EXPECT_NEAR(probability_on_port(out, p, 2), 0.25, kTol);
  // Independent check: expand the loss coupler on the creation polynomial.
  const std::size_t a = out.registry().index_of(mode(p));
  const std::size_t b = out.registry().index_of(mode(Port::loss(0)));
  StateVector padded = s.with_modes(std::vector<ModeLabel>(out.registry().labels()));
  const auto ref = oracle::two_mode(padded, a, b, loss_matrix(0.5));
  double both = 0.0;
  for (const auto& [m, amp] : ref) {
    if (m[a] == 2) both += std::norm(amp);
  }
  EXPECT_NEAR(both, 0.25, kTol);
}

TEST(LossChannelProperty, ConservesTotalProbability) {
  for (double eta : {0.0, 0.1, 0.5, 0.93}) {
    StateVector s = two_inputs(Polarization::kV, 0.6);
    s = beamsplitter_50_50(s, Port::in_b(), Port::in_c(), Port::out1(), Port::out2());
    s = loss_channel(s, Port::out1(), eta);
    s = loss_channel(s, Port::out2(), eta);
    EXPECT_NEAR(s.norm_squared(), 1.0, kTol);
  }
  EXPECT_THROW(loss_channel(photon(Port::out1()), Port::out1(), 1.5), std::invalid_argument);
}

TEST(OverlapModel, GaussianProfile) {
  OverlapModel m;
  m.mu_max = 0.9;
  EXPECT_EQ(m.at_delay(0.0).mu(), 0.9);
  EXPECT_EQ(m.at_delay(0.3e-12).mu(), m.at_delay(-0.3e-12).mu());
  EXPECT_EQ(m.at_delay(std::numeric_limits<double>::infinity()).mu(), 0.0);
  const double tc = m.coherence_time;
  EXPECT_NEAR(m.at_delay(2.0 * tc).mu(), 0.9 * std::exp(-1.0), 1e-15);
  EXPECT_LE(m.at_delay(1e-12).mu(), m.mu_max);
}

TEST(OverlapModel, TemporalDecomposition) {
  OverlapModel m;
  const auto c = temporal_decomposition(m);
  EXPECT_EQ(c.c0, 1.0);
  EXPECT_EQ(c.c1, 0.0);
  const auto far = temporal_decomposition(m.at_delay(std::numeric_limits<double>::infinity()));
  EXPECT_EQ(far.c0, 0.0);
  EXPECT_EQ(far.c1, 1.0);
  const auto mid = temporal_decomposition(m.at_delay(0.5e-12));
  EXPECT_NEAR(mid.c0 * mid.c0 + mid.c1 * mid.c1, 1.0, kTol);
}

TEST(OverlapModel, CoherenceTimeOfThreeNanometerFilter) {
  EXPECT_NEAR(coherence_time_from_filter(780e-9, 3e-9), 6.7647e-13, 1e-17);
  EXPECT_NEAR(coherence_time_from_filter(780e-9, 3e-9) * 1e12, 0.68, 0.005);
  EXPECT_THROW(coherence_time_from_filter(780e-9, 0.0), std::invalid_argument);
}

TEST(OverlapModel, RejectsOutOfRangeMu) {
  OverlapModel m;
  m.mu_max = 1.2;
  EXPECT_THROW(m.validate(), std::invalid_argument);
}

TEST(ElementSpec, DispatchesToElements) {
  const Port p = Port::out1();
  ElementSpec e;
  e.kind = ElementKind::kAnalyzer;
  e.port = p;
  e.angle = kPi / 4;
  EXPECT_NEAR(probability_on_port(apply_element(photon(p), e), p, 1), 0.5, kTol);
  e.kind = ElementKind::kLoss;
  e.transmittance = 2.0;
  EXPECT_THROW(apply_element(photon(p), e), std::invalid_argument);
}

}  // namespace
