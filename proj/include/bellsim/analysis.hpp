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

// Curve fitting and CHSH statistics.
//
// Two models are fitted by damped Gauss-Newton (Levenberg-Marquardt with a
// fixed damping schedule and data-derived initialization, so identical
// input gives bit-identical output):
//
//   gaussian_dip:  C(x) = B [1 - V exp(-(x - x0)^2 / w^2)]
//   sine_squared:  C(x) = B [1 + V sin(2 (x - x0))]
//
// The second form is a sine-squared fringe written in amplitude/phase form.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

namespace bellsim {

struct DataPoint {
  double x = 0.0;
  double y = 0.0;
  double sigma = 0.0;  // <= 0 means unknown; all-unknown data is fitted unweighted
};

enum class FitModel { kGaussianDip, kSineSquared };

struct FitResult {
  FitModel model = FitModel::kGaussianDip;
  double baseline = 0.0;
  double visibility = 0.0;
  double center = 0.0;  // x0: dip center, or fringe phase
  double width = 0.0;   // gaussian_dip only
  double baseline_error = 0.0;
  double visibility_error = 0.0;
  double center_error = 0.0;
  double width_error = 0.0;
  double rss = 0.0;   // unweighted residual sum of squares
  double chi2 = 0.0;  // weighted objective at the solution
  double gradient_norm = 0.0;
  int iterations = 0;
  bool converged = false;

  double evaluate(double x) const {
    if (model == FitModel::kGaussianDip) {
      const double d = (x - center) / width;
      return baseline * (1.0 - visibility * std::exp(-d * d));
    }
    return baseline * (1.0 + visibility * std::sin(2.0 * (x - center)));
  }
};

struct FitOptions {
  int max_iterations = 500;
  double relative_step_tolerance = 1e-10;
  double gradient_tolerance = 1e-4;
  double initial_damping = 1e-3;
  double damping_factor = 10.0;
};

namespace detail {

struct ModelFns {
  int n_params;
  std::function<double(const Eigen::VectorXd&, double)> value;
  std::function<void(const Eigen::VectorXd&, double, std::span<double>)> jacobian;
};

inline ModelFns gaussian_dip_fns() {
  return {4,
          [](const Eigen::VectorXd& p, double x) {
            const double d = (x - p[2]) / p[3];
            return p[0] * (1.0 - p[1] * std::exp(-d * d));
          },
          [](const Eigen::VectorXd& p, double x, std::span<double> row) {
            const double dx = x - p[2];
            const double w = p[3];
            const double g = std::exp(-dx * dx / (w * w));
            row[0] = 1.0 - p[1] * g;
            row[1] = -p[0] * g;
            row[2] = -p[0] * p[1] * g * 2.0 * dx / (w * w);
            row[3] = -p[0] * p[1] * g * 2.0 * dx * dx / (w * w * w);
          }};
}

inline ModelFns sine_squared_fns() {
  return {3,
          [](const Eigen::VectorXd& p, double x) {
            return p[0] * (1.0 + p[1] * std::sin(2.0 * (x - p[2])));
          },
          [](const Eigen::VectorXd& p, double x, std::span<double> row) {
            const double s = std::sin(2.0 * (x - p[2]));
            const double c = std::cos(2.0 * (x - p[2]));
            row[0] = 1.0 + p[1] * s;
            row[1] = p[0] * s;
            row[2] = -2.0 * p[0] * p[1] * c;
          }};
}

struct SolveOutcome {
  Eigen::VectorXd params;
  Eigen::MatrixXd covariance;
  double chi2 = 0.0;
  double rss = 0.0;
  double gradient_norm = 0.0;
  int iterations = 0;
  bool converged = false;
};

inline SolveOutcome damped_gauss_newton(std::span<const DataPoint> pts, const ModelFns& fns,
                                        Eigen::VectorXd p, const FitOptions& opt) {
  const int n = static_cast<int>(pts.size());
  const int m = fns.n_params;
  const bool weighted =
      std::all_of(pts.begin(), pts.end(), [](const DataPoint& d) { return d.sigma > 0.0; });
  Eigen::VectorXd w(n);
  for (int i = 0; i < n; ++i) w[i] = weighted ? 1.0 / (pts[i].sigma * pts[i].sigma) : 1.0;

  auto objective = [&](const Eigen::VectorXd& q) {
    double s = 0.0;
    for (int i = 0; i < n; ++i) {
      const double r = pts[i].y - fns.value(q, pts[i].x);
      s += w[i] * r * r;
    }
    return s;
  };
  auto normal_equations = [&](const Eigen::VectorXd& q, Eigen::MatrixXd& a, Eigen::VectorXd& g) {
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> jac(n, m);
    Eigen::VectorXd r(n);
    for (int i = 0; i < n; ++i) {
      fns.jacobian(q, pts[i].x, std::span<double>(jac.row(i).data(), static_cast<std::size_t>(m)));
      r[i] = pts[i].y - fns.value(q, pts[i].x);
    }
    a = jac.transpose() * w.asDiagonal() * jac;
    g = jac.transpose() * w.asDiagonal() * r;
  };
  // Largest cosine between the residual and any Jacobian column; zero at a
  // stationary point regardless of data scale.
  auto scaled_gradient = [&](const Eigen::MatrixXd& a, const Eigen::VectorXd& g, double chi) {
    if (chi <= 0.0) return 0.0;
    double worst = 0.0;
    for (int k = 0; k < m; ++k) {
      if (a(k, k) > 0.0) worst = std::max(worst, std::abs(g[k]) / std::sqrt(a(k, k) * chi));
    }
    return worst;
  };

  SolveOutcome out;
  double chi = objective(p);
  double lambda = opt.initial_damping;
  Eigen::MatrixXd a;
  Eigen::VectorXd g;
  normal_equations(p, a, g);
  bool small_step = false;
  int it = 0;
  for (; it < opt.max_iterations && chi > 0.0; ++it) {
    const double diag_floor = 1e-12 * std::max(a.diagonal().maxCoeff(), 1e-300);
    Eigen::MatrixXd damped = a;
    for (int k = 0; k < m; ++k) damped(k, k) += lambda * std::max(a(k, k), diag_floor);
    const Eigen::VectorXd step = damped.ldlt().solve(g);
    const Eigen::VectorXd trial = p + step;
    const double trial_chi = objective(trial);
    if (std::isfinite(trial_chi) && trial_chi <= chi) {
      p = trial;
      const bool no_gain = trial_chi == chi;
      chi = trial_chi;
      normal_equations(p, a, g);
      lambda = std::max(lambda / opt.damping_factor, 1e-15);
      if (step.norm() <= opt.relative_step_tolerance * (p.norm() + opt.relative_step_tolerance) ||
          no_gain) {
        small_step = true;
        ++it;
        break;
      }
    } else {
      lambda *= opt.damping_factor;
      if (lambda > 1e16) {
        // No descent direction left at machine precision.
        small_step = true;
        ++it;
        break;
      }
    }
  }
  out.params = p;
  out.chi2 = chi;
  out.iterations = it;
  out.gradient_norm = scaled_gradient(a, g, chi);
  // Residuals at roundoff level: the gradient direction is noise.
  double data_scale = 0.0;
  for (int i = 0; i < n; ++i) data_scale += w[i] * pts[i].y * pts[i].y;
  const bool exact = chi <= 1e-20 * data_scale;
  out.converged = exact || (small_step && out.gradient_norm <= opt.gradient_tolerance);
  double rss = 0.0;
  for (const auto& d : pts) {
    const double r = d.y - fns.value(p, d.x);
    rss += r * r;
  }
  out.rss = rss;
  Eigen::MatrixXd cov = a.completeOrthogonalDecomposition().pseudoInverse();
  if (!weighted && n > m) cov *= chi / (n - m);
  out.covariance = cov;
  return out;
}

inline std::vector<DataPoint> sorted_by_x(std::span<const DataPoint> pts) {
  std::vector<DataPoint> v(pts.begin(), pts.end());
  std::stable_sort(v.begin(), v.end(), [](const DataPoint& a, const DataPoint& b) { return a.x < b.x; });
  return v;
}

inline double error_of(const Eigen::MatrixXd& cov, int k) {
  return std::sqrt(std::max(0.0, cov(k, k)));
}

}  // namespace detail

/// Gaussian dip fit. Needs at least five points spanning the dip.
inline FitResult fit_gaussian_dip(std::span<const DataPoint> points, const FitOptions& opt = {}) {
  if (points.size() < 5) throw std::invalid_argument("gaussian dip fit needs at least 5 points");
  // Work in x' = (x - offset) / scale so delays in seconds and in
  // picoseconds condition the solver identically.
  auto pts = detail::sorted_by_x(points);
  const double offset = 0.5 * (pts.front().x + pts.back().x);
  double scale = 0.5 * (pts.back().x - pts.front().x);
  if (!(scale > 0.0)) scale = 1.0;
  for (auto& d : pts) d.x = (d.x - offset) / scale;
  const auto lowest = std::min_element(pts.begin(), pts.end(),
                                       [](const DataPoint& a, const DataPoint& b) { return a.y < b.y; });
  const double x_min = lowest->x;
  double reach = 0.0;
  for (const auto& d : pts) reach = std::max(reach, std::abs(d.x - x_min));
  double shoulder_sum = 0.0;
  int shoulder_n = 0;
  for (const auto& d : pts) {
    if (std::abs(d.x - x_min) >= reach * 2.0 / 3.0) {
      shoulder_sum += d.y;
      ++shoulder_n;
    }
  }
  const double baseline = shoulder_n > 0 ? shoulder_sum / shoulder_n : pts.front().y;
  const double vis = baseline != 0.0 ? 1.0 - lowest->y / baseline : 0.0;

  // Half-depth crossing on each side gives w via exp(-d^2/w^2) = 1/2.
  const double level = baseline * (1.0 - vis / 2.0);
  auto crossing = [&](int dir) {
    const long start = lowest - pts.begin();
    for (long i = start; i >= 0 && i < static_cast<long>(pts.size()); i += dir) {
      if (pts[i].y >= level) return std::abs(pts[i].x - x_min);
    }
    return reach / 2.0;
  };
  double half = 0.5 * (crossing(-1) + crossing(+1));
  if (!(half > 0.0)) half = (pts.back().x - pts.front().x) / 4.0;
  if (!(half > 0.0)) half = 1.0;

  Eigen::VectorXd p0(4);
  p0 << baseline, vis, x_min, half / std::sqrt(std::numbers::ln2);
  const auto s = detail::damped_gauss_newton(pts, detail::gaussian_dip_fns(), p0, opt);

  FitResult r;
  r.model = FitModel::kGaussianDip;
  r.baseline = s.params[0];
  r.visibility = s.params[1];
  r.center = offset + s.params[2] * scale;
  r.width = std::abs(s.params[3]) * scale;
  r.baseline_error = detail::error_of(s.covariance, 0);
  r.visibility_error = detail::error_of(s.covariance, 1);
  r.center_error = detail::error_of(s.covariance, 2) * scale;
  r.width_error = detail::error_of(s.covariance, 3) * scale;
  r.rss = s.rss;
  r.chi2 = s.chi2;
  r.gradient_norm = s.gradient_norm;
  r.iterations = s.iterations;
  r.converged = s.converged && r.width > 0.0;
  return r;
}

/// Sine-squared fringe fit over an angle in radians. Needs at least five
/// points covering half a period (pi/2) or more. The reported visibility is
/// non-negative; the phase is folded into (-pi/2, pi/2].
inline FitResult fit_sine_squared(std::span<const DataPoint> points, const FitOptions& opt = {}) {
  if (points.size() < 5) throw std::invalid_argument("sine-squared fit needs at least 5 points");
  const auto pts = detail::sorted_by_x(points);
  if (pts.back().x - pts.front().x < std::numbers::pi / 2.0 - 1e-12) {
    throw std::invalid_argument("sine-squared fit needs points over at least half a period");
  }
  const auto [lo, hi] = std::minmax_element(
      pts.begin(), pts.end(), [](const DataPoint& a, const DataPoint& b) { return a.y < b.y; });
  const double baseline = 0.5 * (hi->y + lo->y);
  const double vis = baseline != 0.0 ? (hi->y - lo->y) / (hi->y + lo->y) : 0.0;

  Eigen::VectorXd p0(3);
  p0 << baseline, vis, hi->x - std::numbers::pi / 4.0;
  const auto s = detail::damped_gauss_newton(pts, detail::sine_squared_fns(), p0, opt);

  FitResult r;
  r.model = FitModel::kSineSquared;
  r.baseline = s.params[0];
  r.visibility = s.params[1];
  double phase = s.params[2];
  if (r.visibility < 0.0) {
    r.visibility = -r.visibility;
    phase += std::numbers::pi / 2.0;
  }
  phase = std::remainder(phase, std::numbers::pi);
  if (phase <= -std::numbers::pi / 2.0) phase += std::numbers::pi;
  r.center = phase;
  r.baseline_error = detail::error_of(s.covariance, 0);
  r.visibility_error = detail::error_of(s.covariance, 1);
  r.center_error = detail::error_of(s.covariance, 2);
  r.rss = s.rss;
  r.chi2 = s.chi2;
  r.gradient_norm = s.gradient_norm;
  r.iterations = s.iterations;
  r.converged = s.converged;
  return r;
}

/// (max - min) / (max + min).
inline double visibility_from_extrema(double max, double min) {
  if (max + min == 0.0) return 0.0;
  return (max - min) / (max + min);
}

struct CorrelationEstimate {
  double value = 0.0;
  double sigma = 0.0;
};

/// E = (C(a,b) + C(a',b') - C(a',b) - C(a,b')) / sum, where primes denote
/// the orthogonal analyzer settings. sigma from sqrt(N) count errors.
inline CorrelationEstimate compute_E(double c_ab, double c_aperp_b, double c_a_bperp,
                                     double c_aperp_bperp) {
  if (c_ab < 0.0 || c_aperp_b < 0.0 || c_a_bperp < 0.0 || c_aperp_bperp < 0.0) {
    throw std::invalid_argument("counts must be non-negative");
  }
  const double same = c_ab + c_aperp_bperp;
  const double diff = c_aperp_b + c_a_bperp;
  const double total = same + diff;
  if (!(total > 0.0)) throw std::domain_error("correlation undefined for zero total counts");
  return {(same - diff) / total, std::sqrt(4.0 * same * diff / (total * total * total))};
}

struct ChshSettings {
  double a = 0.0;
  double a_prime = std::numbers::pi / 4.0;
  double b = std::numbers::pi / 8.0;
  double b_prime = 3.0 * std::numbers::pi / 8.0;
};

struct ChshResult {
  // (a,b), (a,b'), (a',b), (a',b')
  std::array<CorrelationEstimate, 4> E{};
  double S = 0.0;
  double sigma_S = 0.0;

  bool violates_local_bound() const { return std::abs(S) > 2.0; }
};

/// S = E(a,b) - E(a,b') + E(a',b) + E(a',b').
inline ChshResult compute_S(const std::array<CorrelationEstimate, 4>& e) {
  ChshResult r;
  r.E = e;
  r.S = e[0].value - e[1].value + e[2].value + e[3].value;
  double var = 0.0;
  for (const auto& x : e) var += x.sigma * x.sigma;
  r.sigma_S = std::sqrt(var);
  return r;
}

/// Assembles the sixteen coincidence tallies C(theta1, theta2) into E values
/// and S.
inline ChshResult chsh_from_counts(const std::function<double(double, double)>& counts,
                                   const ChshSettings& s) {
  const double q = std::numbers::pi / 2.0;
  auto corr = [&](double x, double y) {
    return compute_E(counts(x, y), counts(x + q, y), counts(x, y + q), counts(x + q, y + q));
  };
  return compute_S({corr(s.a, s.b), corr(s.a, s.b_prime), corr(s.a_prime, s.b),
                    corr(s.a_prime, s.b_prime)});
}

/// Singlet coincidence counts with isotropic visibility V:
/// N/4 [1 - V cos 2(a - b)], so that E(a,b) = -V cos 2(a - b).
inline double singlet_counts_with_visibility(double visibility, double a, double b,
                                             double total = 1.0) {
  return total / 4.0 * (1.0 - visibility * std::cos(2.0 * (a - b)));
}

inline constexpr double kBellVisibilityThreshold = std::numbers::sqrt2 / 2.0;

/// True iff the visibility is strictly above 1/sqrt2.
inline bool bell_violated(double visibility) {
  if (!(visibility >= 0.0 && visibility <= 1.0)) {
    throw std::invalid_argument("visibility must lie in [0, 1]");
  }
  return visibility > kBellVisibilityThreshold;
}

}  // namespace bellsim
