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

// Truncated bosonic Fock space over labeled optical modes.
//
// A StateVector is a sparse superposition of occupation-number basis states.
// Every mode is identified by (port, polarization, temporal mode); the
// ModeRegistry fixes the canonical ordering of modes, so an occupation vector
// has exactly one representation. States are immutable values: every
// operation returns a new state.

#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <compare>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

namespace bellsim {

using Complex = std::complex<double>;
using Matrix2 = Eigen::Matrix2cd;

inline constexpr int kDefaultMaxPhotons = 4;
inline constexpr double kDefaultPruneThreshold = 1e-15;
inline constexpr double kUnitarityTolerance = 1e-12;

class FockError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class TruncationOverflow : public FockError {
 public:
  using FockError::FockError;
};

class NonUnitaryMatrix : public FockError {
 public:
  using FockError::FockError;
};

class RegistryMismatch : public FockError {
 public:
  using FockError::FockError;
};

class UnknownMode : public FockError {
 public:
  using FockError::FockError;
};

enum class PortKind : std::uint8_t { kInB, kInC, kOut1, kOut2, kTrigger, kLoss };

/// Spatial channel. `index` distinguishes loss ports (loss_0, loss_1, ...);
/// it is zero for every other kind.
struct Port {
  PortKind kind = PortKind::kInB;
  int index = 0;

  static constexpr Port in_b() { return {PortKind::kInB, 0}; }
  static constexpr Port in_c() { return {PortKind::kInC, 0}; }
  static constexpr Port out1() { return {PortKind::kOut1, 0}; }
  static constexpr Port out2() { return {PortKind::kOut2, 0}; }
  static constexpr Port trigger() { return {PortKind::kTrigger, 0}; }
  static constexpr Port loss(int k) { return {PortKind::kLoss, k}; }

  auto operator<=>(const Port&) const = default;
};

enum class Polarization : std::uint8_t { kH, kV };
enum class TemporalMode : std::uint8_t { kE0, kE1 };

inline constexpr Polarization kPolarizations[] = {Polarization::kH, Polarization::kV};
inline constexpr TemporalMode kTemporalModes[] = {TemporalMode::kE0, TemporalMode::kE1};

struct ModeLabel {
  Port port;
  Polarization polarization = Polarization::kH;
  TemporalMode temporal = TemporalMode::kE0;

  auto operator<=>(const ModeLabel&) const = default;
};

inline std::string to_string(const Port& p) {
  switch (p.kind) {
    case PortKind::kInB: return "inB";
    case PortKind::kInC: return "inC";
    case PortKind::kOut1: return "out1";
    case PortKind::kOut2: return "out2";
    case PortKind::kTrigger: return "trigger";
    case PortKind::kLoss: return "loss_" + std::to_string(p.index);
  }
  return "?";
}

inline std::string to_string(const ModeLabel& m) {
  return to_string(m.port) + (m.polarization == Polarization::kH ? ".H" : ".V") +
         (m.temporal == TemporalMode::kE0 ? ".e0" : ".e1");
}

/// Ordered set of modes. Position in the registry is the index into every
/// occupation vector that refers to it.
class ModeRegistry {
 public:
  ModeRegistry() = default;

  explicit ModeRegistry(std::vector<ModeLabel> modes) : modes_(std::move(modes)) {
    for (std::size_t i = 0; i < modes_.size(); ++i) {
      if (!index_.emplace(modes_[i], i).second) {
        throw FockError("duplicate mode in registry: " + to_string(modes_[i]));
      }
    }
  }

  std::size_t size() const { return modes_.size(); }
  const ModeLabel& label(std::size_t i) const { return modes_.at(i); }
  const std::vector<ModeLabel>& labels() const { return modes_; }

  std::optional<std::size_t> find(const ModeLabel& m) const {
    auto it = index_.find(m);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  std::size_t index_of(const ModeLabel& m) const {
    auto i = find(m);
    if (!i) throw UnknownMode("mode not registered: " + to_string(m));
    return *i;
  }

  bool has_port(const Port& p) const {
    return std::any_of(modes_.begin(), modes_.end(),
                       [&](const ModeLabel& m) { return m.port == p; });
  }

  std::vector<std::size_t> modes_on_port(const Port& p) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < modes_.size(); ++i) {
      if (modes_[i].port == p) out.push_back(i);
    }
    return out;
  }

  /// Smallest loss index not yet in use.
  int next_loss_index() const {
    int next = 0;
    for (const auto& m : modes_) {
      if (m.port.kind == PortKind::kLoss) next = std::max(next, m.port.index + 1);
    }
    return next;
  }

  bool operator==(const ModeRegistry& other) const { return modes_ == other.modes_; }

 private:
  std::vector<ModeLabel> modes_;
  std::map<ModeLabel, std::size_t> index_;
};

using Occupations = std::vector<std::uint8_t>;

inline int total_photons(const Occupations& occ) {
  int n = 0;
  for (auto k : occ) n += k;
  return n;
}

struct TruncationPolicy {
  int max_photons = kDefaultMaxPhotons;
  double prune_threshold = kDefaultPruneThreshold;
};

class StateVector {
 public:
  using Amplitudes = std::map<Occupations, Complex>;

  StateVector(std::shared_ptr<const ModeRegistry> registry, Amplitudes amplitudes,
              TruncationPolicy policy = {})
      : registry_(std::move(registry)), amplitudes_(std::move(amplitudes)), policy_(policy) {
    if (!registry_) registry_ = std::make_shared<const ModeRegistry>();
    for (auto it = amplitudes_.begin(); it != amplitudes_.end();) {
      if (it->first.size() != registry_->size()) {
        throw FockError("occupation vector length does not match registry");
      }
      if (std::abs(it->second) < policy_.prune_threshold) {
        it = amplitudes_.erase(it);
      } else {
        ++it;
      }
    }
  }

  static StateVector vacuum(std::shared_ptr<const ModeRegistry> registry,
                            TruncationPolicy policy = {}) {
    Occupations zero(registry ? registry->size() : 0, 0);
    return StateVector(std::move(registry), Amplitudes{{zero, Complex{1.0, 0.0}}}, policy);
  }

  static StateVector vacuum(std::vector<ModeLabel> modes, TruncationPolicy policy = {}) {
    return vacuum(std::make_shared<const ModeRegistry>(std::move(modes)), policy);
  }

  /// The zero vector; returned by projections with no support.
  static StateVector empty(std::shared_ptr<const ModeRegistry> registry,
                           TruncationPolicy policy = {}) {
    return StateVector(std::move(registry), Amplitudes{}, policy);
  }

  const ModeRegistry& registry() const { return *registry_; }
  const std::shared_ptr<const ModeRegistry>& registry_ptr() const { return registry_; }
  const Amplitudes& amplitudes() const { return amplitudes_; }
  const TruncationPolicy& policy() const { return policy_; }
  bool is_empty() const { return amplitudes_.empty(); }

  Complex amplitude(const Occupations& occ) const {
    auto it = amplitudes_.find(occ);
    return it == amplitudes_.end() ? Complex{} : it->second;
  }

  /// Amplitude of the basis state given as (mode, count) pairs; unlisted
  /// modes are empty.
  Complex amplitude(std::initializer_list<std::pair<ModeLabel, int>> occupied) const {
    Occupations occ(registry_->size(), 0);
    for (const auto& [mode, n] : occupied) {
      auto i = registry_->find(mode);
      if (!i) {
        if (n == 0) continue;
        return Complex{};
      }
      occ[*i] = static_cast<std::uint8_t>(n);
    }
    return amplitude(occ);
  }

  double norm_squared() const {
    double s = 0.0;
    for (const auto& [occ, a] : amplitudes_) s += std::norm(a);
    return s;
  }

  int max_photon_number() const {
    int n = 0;
    for (const auto& [occ, a] : amplitudes_) n = std::max(n, total_photons(occ));
    return n;
  }

  StateVector normalized() const {
    const double n = std::sqrt(norm_squared());
    if (n == 0.0) return *this;
    return scaled(Complex{1.0 / n, 0.0});
  }

  StateVector scaled(Complex factor) const {
    Amplitudes out;
    for (const auto& [occ, a] : amplitudes_) out.emplace(occ, a * factor);
    return StateVector(registry_, std::move(out), policy_);
  }

  /// Registers additional (vacuum) modes, appended after the existing ones.
  StateVector with_modes(std::span<const ModeLabel> extra) const {
    std::vector<ModeLabel> labels = registry_->labels();
    std::size_t added = 0;
    for (const auto& m : extra) {
      if (registry_->find(m) || std::find(labels.begin(), labels.end(), m) != labels.end()) {
        continue;
      }
      labels.push_back(m);
      ++added;
    }
    if (added == 0) return *this;
    auto registry = std::make_shared<const ModeRegistry>(std::move(labels));
    Amplitudes out;
    for (const auto& [occ, a] : amplitudes_) {
      Occupations padded = occ;
      padded.resize(registry->size(), 0);
      out.emplace(std::move(padded), a);
    }
    return StateVector(std::move(registry), std::move(out), policy_);
  }

  /// Relabels every mode on `from` as living on `to`. Amplitudes are
  /// untouched; `to` must not already be registered.
  StateVector with_port_renamed(const Port& from, const Port& to) const {
    if (from == to) return *this;
    if (registry_->has_port(to)) {
      throw FockError("cannot rename onto occupied port " + to_string(to));
    }
    std::vector<ModeLabel> labels = registry_->labels();
    for (auto& m : labels) {
      if (m.port == from) m.port = to;
    }
    return StateVector(std::make_shared<const ModeRegistry>(std::move(labels)), amplitudes_,
                       policy_);
  }

 private:
  std::shared_ptr<const ModeRegistry> registry_;
  Amplitudes amplitudes_;
  TruncationPolicy policy_;
};

namespace detail {

inline double factorial(int n) {
  double f = 1.0;
  for (int k = 2; k <= n; ++k) f *= k;
  return f;
}

inline double binomial(int n, int k) { return factorial(n) / (factorial(k) * factorial(n - k)); }

inline StateVector ensure_mode(const StateVector& s, const ModeLabel& m) {
  if (s.registry().find(m)) return s;
  const ModeLabel extra[] = {m};
  return s.with_modes(extra);
}

}  // namespace detail

/// Applies the creation operator of a linear combination of modes,
/// sum_k c_k a_k^dagger. The result is not renormalized.
inline StateVector create_photon(const StateVector& state,
                                 std::span<const std::pair<ModeLabel, Complex>> combination) {
  StateVector s = state;
  for (const auto& [mode, c] : combination) s = detail::ensure_mode(s, mode);

  StateVector::Amplitudes out;
  for (const auto& [occ, amp] : s.amplitudes()) {
    if (total_photons(occ) + 1 > s.policy().max_photons) {
      throw TruncationOverflow("photon number would exceed N_max = " +
                               std::to_string(s.policy().max_photons));
    }
    for (const auto& [mode, c] : combination) {
      if (c == Complex{}) continue;
      const std::size_t i = s.registry().index_of(mode);
      Occupations next = occ;
      next[i] += 1;
      out[next] += amp * c * std::sqrt(static_cast<double>(next[i]));
    }
  }
  return StateVector(s.registry_ptr(), std::move(out), s.policy());
}

inline StateVector create_photon(const StateVector& state, const ModeLabel& mode) {
  const std::pair<ModeLabel, Complex> single[] = {{mode, Complex{1.0, 0.0}}};
  return create_photon(state, single);
}

inline bool is_unitary(const Matrix2& u, double tol = kUnitarityTolerance) {
  const Matrix2 d = u.adjoint() * u - Matrix2::Identity();
  return d.cwiseAbs().maxCoeff() <= tol;
}

/// Transforms creation operators as
///   a^dagger -> u00 a^dagger + u10 b^dagger,
///   b^dagger -> u01 a^dagger + u11 b^dagger.
inline StateVector apply_two_mode_unitary(const StateVector& state, const ModeLabel& a,
                                          const ModeLabel& b, const Matrix2& u) {
  if (!is_unitary(u)) throw NonUnitaryMatrix("two-mode matrix is not unitary within 1e-12");
  if (a == b) throw FockError("two-mode unitary needs two distinct modes");
  StateVector s = detail::ensure_mode(detail::ensure_mode(state, a), b);
  const std::size_t ia = s.registry().index_of(a);
  const std::size_t ib = s.registry().index_of(b);

  StateVector::Amplitudes out;
  for (const auto& [occ, amp] : s.amplitudes()) {
    const int na = occ[ia];
    const int nb = occ[ib];
    if (na == 0 && nb == 0) {
      out[occ] += amp;
      continue;
    }
    const double inv_norm = 1.0 / std::sqrt(detail::factorial(na) * detail::factorial(nb));
    for (int j = 0; j <= na; ++j) {
      const Complex from_a = detail::binomial(na, j) * std::pow(u(0, 0), j) *
                             std::pow(u(1, 0), na - j);
      for (int k = 0; k <= nb; ++k) {
        const Complex from_b = detail::binomial(nb, k) * std::pow(u(0, 1), k) *
                               std::pow(u(1, 1), nb - k);
        const int out_a = j + k;
        const int out_b = na + nb - out_a;
        Occupations next = occ;
        next[ia] = static_cast<std::uint8_t>(out_a);
        next[ib] = static_cast<std::uint8_t>(out_b);
        const double ladder =
            std::sqrt(detail::factorial(out_a) * detail::factorial(out_b)) * inv_norm;
        out[next] += amp * from_a * from_b * ladder;
      }
    }
  }
  return StateVector(s.registry_ptr(), std::move(out), s.policy());
}

/// <x|y>, conjugate-linear in x.
inline Complex inner_product(const StateVector& x, const StateVector& y) {
  if (!(x.registry() == y.registry())) {
    throw RegistryMismatch("inner product between states over different mode registries");
  }
  Complex sum{};
  const auto& small = x.amplitudes().size() <= y.amplitudes().size() ? x : y;
  const auto& large = &small == &x ? y : x;
  for (const auto& [occ, a] : small.amplitudes()) {
    const Complex b = large.amplitude(occ);
    sum += &small == &x ? std::conj(a) * b : std::conj(b) * a;
  }
  return sum;
}

struct Projection {
  double probability = 0.0;
  StateVector collapsed;
};

using OccupationPredicate = std::function<bool(std::span<const std::uint8_t>)>;

/// Post-selects the components whose occupations of `modes` satisfy
/// `predicate`. Modes absent from the registry count as empty. A
/// zero-probability outcome yields probability 0 and an empty state.
inline Projection project_pattern(const StateVector& state, std::span<const ModeLabel> modes,
                                  const OccupationPredicate& predicate) {
  std::vector<std::optional<std::size_t>> idx;
  idx.reserve(modes.size());
  for (const auto& m : modes) idx.push_back(state.registry().find(m));

  StateVector::Amplitudes kept;
  double p = 0.0;
  std::vector<std::uint8_t> view(modes.size());
  for (const auto& [occ, amp] : state.amplitudes()) {
    for (std::size_t k = 0; k < idx.size(); ++k) view[k] = idx[k] ? occ[*idx[k]] : 0;
    if (predicate(view)) {
      p += std::norm(amp);
      kept.emplace(occ, amp);
    }
  }
  const double total = state.norm_squared();
  if (p == 0.0 || total == 0.0) {
    return {0.0, StateVector::empty(state.registry_ptr(), state.policy())};
  }
  StateVector collapsed(state.registry_ptr(), std::move(kept), state.policy());
  return {std::clamp(p / total, 0.0, 1.0), collapsed.normalized()};
}

}  // namespace bellsim
