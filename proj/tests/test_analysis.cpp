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
#include <cstring>
#include <numbers>
#include <random>
#include <vector>

#include "bellsim/analysis.hpp"
#include "bellsim/snr_model.hpp"
#include "bellsim/sources.hpp"

namespace {

using namespace bellsim;

std::vector<DataPoint> gaussian_data(double b, double v, double x0, double w, double lo, double hi,
                                     int n) {
  std::vector<DataPoint> pts;
  for (int i = 0; i < n; ++i) {
    const double x = lo + (hi - lo) * i / (n - 1);
    const double d = (x - x0) / w;
    pts.push_back({x, b * (1.0 - v * std::exp(-d * d)), 0.0});
  }
  return pts;
}

std::vector<DataPoint> sine_data(double b, double v, double phase, int n) {
  std::vector<DataPoint> pts;
  for (int i = 0; i < n; ++i) {
    const double x = std::numbers::pi * i / (n - 1);
    pts.push_back({x, b * (1.0 + v * std::sin(2.0 * (x - phase))), 0.0});
  }
  return pts;
}

TEST(GaussianDipFit, RecoversExactParameters) {
  const auto pts = gaussian_data(100.0, 0.994, 0.0, 1.0, -3.0, 3.0, 25);
  const FitResult r = fit_gaussian_dip(pts);
  EXPECT_TRUE(r.converged);
  EXPECT_NEAR(r.baseline, 100.0, 1e-8);
  EXPECT_NEAR(r.visibility, 0.994, 1e-8);
  EXPECT_NEAR(r.center, 0.0, 1e-8);
  EXPECT_NEAR(r.width, 1.0, 1e-8);
}

TEST(GaussianDipFit, ScaleOfAbscissaDoesNotMatter) {
  const auto pts = gaussian_data(3e-5, 0.6, 0.2e-12, 0.9e-12, -2e-12, 2e-12, 17);
  const FitResult r = fit_gaussian_dip(pts);
  EXPECT_TRUE(r.converged);
  EXPECT_NEAR(r.visibility, 0.6, 1e-8);
  EXPECT_NEAR(r.center / 1e-12, 0.2, 1e-8);
  EXPECT_NEAR(r.width / 1e-12, 0.9, 1e-8);
}

TEST(GaussianDipFit, FlatDataGivesZeroVisibility) {
  std::vector<DataPoint> pts;
  for (int i = 0; i < 11; ++i) pts.push_back({-1.0 + 0.2 * i, 50.0, 0.0});
  const FitResult r = fit_gaussian_dip(pts);
  EXPECT_NEAR(r.visibility, 0.0, 1e-9);
  EXPECT_NEAR(r.baseline, 50.0, 1e-9);
}

TEST(GaussianDipFit, NeedsFivePoints) {
  const auto pts = gaussian_data(1.0, 0.5, 0.0, 1.0, -1.0, 1.0, 4);
  EXPECT_THROW(fit_gaussian_dip(pts), std::invalid_argument);
}

TEST(SineSquaredFit, RecoversExactParameters) {
  const auto pts = sine_data(20.0, 0.864, 0.3, 19);
  const FitResult r = fit_sine_squared(pts);
  EXPECT_TRUE(r.converged);
  EXPECT_NEAR(r.baseline, 20.0, 1e-8);
  EXPECT_NEAR(r.visibility, 0.864, 1e-8);
  EXPECT_NEAR(r.center, 0.3, 1e-8);
}

TEST(SineSquaredFit, NegativeAmplitudeFoldsIntoPhase) {
  const auto pts = sine_data(5.0, -0.5, 0.1, 13);
  const FitResult r = fit_sine_squared(pts);
  EXPECT_NEAR(r.visibility, 0.5, 1e-8);
  for (const auto& d : pts) EXPECT_NEAR(r.evaluate(d.x), d.y, 1e-8);
  EXPECT_GT(r.center, -std::numbers::pi / 2.0);
  EXPECT_LE(r.center, std::numbers::pi / 2.0);
}

TEST(SineSquaredFit, RejectsLessThanHalfAPeriod) {
  std::vector<DataPoint> pts;
  for (int i = 0; i < 8; ++i) pts.push_back({0.1 * i, 1.0 + 0.1 * i, 0.0});
  EXPECT_THROW(fit_sine_squared(pts), std::invalid_argument);
}

TEST(FitProperty, BitIdenticalOnRepeat) {
  std::mt19937_64 gen(11);
  std::normal_distribution<double> noise(0.0, 2.0);
  auto pts = gaussian_data(300.0, 0.9, 0.1, 1.2, -3.0, 3.0, 21);
  for (auto& d : pts) {
    d.y += noise(gen);
    d.sigma = std::sqrt(d.y);
  }
  const FitResult a = fit_gaussian_dip(pts);
  const FitResult b = fit_gaussian_dip(pts);
  EXPECT_EQ(std::memcmp(&a.visibility, &b.visibility, sizeof(double)), 0);
  EXPECT_EQ(std::memcmp(&a.visibility_error, &b.visibility_error, sizeof(double)), 0);
  EXPECT_EQ(std::memcmp(&a.width, &b.width, sizeof(double)), 0);
  EXPECT_EQ(a.iterations, b.iterations);
}

// One-sigma intervals from the fit covariance should cover the true
// visibility in 68% of Poisson-noised realizations.
TEST(FitProperty, OneSigmaCoverage) {
  const int trials = 200;
  int covered = 0;
  for (int seed = 0; seed < trials; ++seed) {
    std::mt19937_64 gen(1000 + seed);
    auto pts = gaussian_data(400.0, 0.9, 0.0, 1.0, -3.0, 3.0, 25);
    for (auto& d : pts) {
      std::poisson_distribution<long> counts(d.y);
      d.y = static_cast<double>(counts(gen));
      d.sigma = std::sqrt(std::max(d.y, 1.0));
    }
    const FitResult r = fit_gaussian_dip(pts);
    ASSERT_TRUE(r.converged) << "seed " << seed;
    if (std::abs(r.visibility - 0.9) <= r.visibility_error) ++covered;
  }
  const double fraction = static_cast<double>(covered) / trials;
  EXPECT_NEAR(fraction, 0.68, 0.05);
}

TEST(VisibilityFromExtrema, Basic) {
  EXPECT_DOUBLE_EQ(visibility_from_extrema(3.0, 1.0), 0.5);
  EXPECT_EQ(visibility_from_extrema(0.0, 0.0), 0.0);
}

TEST(ComputeE, PerfectAnticorrelation) {
  const auto e = compute_E(0.0, 500.0, 500.0, 0.0);
  EXPECT_DOUBLE_EQ(e.value, -1.0);
  EXPECT_DOUBLE_EQ(e.sigma, 0.0);
}

TEST(ComputeE, EqualCountsGiveZero) {
  const auto e = compute_E(250.0, 250.0, 250.0, 250.0);
  EXPECT_DOUBLE_EQ(e.value, 0.0);
  EXPECT_NEAR(e.sigma, 1.0 / std::sqrt(1000.0), 1e-15);
}

TEST(ComputeE, ScaleInvariantAndBounded) {
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> u(0.0, 100.0);
  for (int i = 0; i < 100; ++i) {
    const double a = u(gen), b = u(gen), c = u(gen), d = u(gen);
    const auto e1 = compute_E(a, b, c, d);
    const auto e2 = compute_E(7.0 * a, 7.0 * b, 7.0 * c, 7.0 * d);
    EXPECT_NEAR(e1.value, e2.value, 1e-14);
    EXPECT_NEAR(e2.sigma, e1.sigma / std::sqrt(7.0), 1e-14);
    EXPECT_LE(std::abs(e1.value), 1.0);
  }
}

TEST(ComputeE, InvalidInput) {
  EXPECT_THROW(compute_E(0.0, 0.0, 0.0, 0.0), std::domain_error);
  EXPECT_THROW(compute_E(-1.0, 2.0, 2.0, 2.0), std::invalid_argument);
}

TEST(ComputeS, Combination) {
  EXPECT_EQ(compute_S({}).S, 0.0);
  const auto r = compute_S({{{0.5, 0.1}, {-0.5, 0.1}, {0.5, 0.1}, {0.5, 0.1}}});
  EXPECT_DOUBLE_EQ(r.S, 2.0);
  EXPECT_DOUBLE_EQ(r.sigma_S, 0.2);
  EXPECT_FALSE(r.violates_local_bound());
}

TEST(ChshProperty, IsotropicSingletScalesWithVisibility) {
  for (double v : {0.2, 0.5, 0.71, 0.9, 1.0}) {
    const auto r = chsh_from_counts(
        [&](double a, double b) { return singlet_counts_with_visibility(v, a, b, 1e6); }, {});
    EXPECT_NEAR(std::abs(r.S) / (2.0 * std::numbers::sqrt2), v, 1e-9);
    EXPECT_LT(r.S, 0.0);
  }
}

TEST(BellThreshold, FlipsAtInverseRootTwo) {
  const double t = kBellVisibilityThreshold;
  EXPECT_EQ(t, static_cast<double>(1.0L / std::sqrt(2.0L)));
  EXPECT_FALSE(bell_violated(t));
  EXPECT_TRUE(bell_violated(std::nextafter(t, 1.0)));
  EXPECT_FALSE(bell_violated(0.70));
  EXPECT_TRUE(bell_violated(0.864));
  EXPECT_THROW(bell_violated(1.5), std::invalid_argument);
}

TEST(BellThreshold, AgreesWithChshOnIsotropicData) {
  for (double v : {0.70, 0.72}) {
    const auto r = chsh_from_counts(
        [&](double a, double b) { return singlet_counts_with_visibility(v, a, b, 1e6); }, {});
    EXPECT_EQ(r.violates_local_bound(), bell_violated(v)) << v;
  }
}

TEST(SnrModel, OperatingPointWindow) {
  const SpdcParams spdc = reference_spdc();
  const SnrBudget b = snr_model(spdc.gamma(), 4e-3, spdc.heralding_loss_ratio());
  EXPECT_GE(b.v_max_predicted, 0.90);
  EXPECT_LE(b.v_max_predicted, 0.97);
  const double e = std::exp(-4e-3);
  EXPECT_NEAR(b.signal_constant, 0.25 * e, 1e-12);
  EXPECT_NEAR(b.background_constant, e / 16.0, 1e-12);
  // alpha H = 0.109 at the operating point.
  EXPECT_TRUE(b.alpha_h_warning);
  EXPECT_FALSE(b.formula.empty());
}

TEST(SnrModel, VanishingAlphaApproachesUnitVisibility) {
  double previous = 0.0;
  for (double alpha : {1e-2, 1e-3, 1e-4, 1e-6}) {
    const double v = snr_model(1e-6, alpha, 27.3).v_max_predicted;
    EXPECT_GT(v, previous);
    previous = v;
  }
  EXPECT_NEAR(previous, 1.0, 1e-3);
}

TEST(SnrModel, WarnsWhenAlphaHIsLarge) {
  EXPECT_TRUE(snr_model(1e-6, 0.01, 27.3).alpha_h_warning);
  EXPECT_FALSE(snr_model(1e-6, 0.003, 27.3).alpha_h_warning);
  EXPECT_THROW(snr_model(0.0, 0.01, 27.3), std::invalid_argument);
}

}  // namespace
