#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rwre/env_model.hpp"
#include "rwre/lattice.hpp"
#include "rwre/rational.hpp"
#include "rwre/rng.hpp"

namespace rwre {

// Markov partition of [0,1) for one jump law: I_i = [a_{i-1}, a_i) with width
// q_i = p(d_i), displacements d_i in canonical order. Indices are 1-based to
// match I_1, ..., I_k.
class Partition {
 public:
  explicit Partition(const JumpDistribution& law);

  std::size_t size() const { return displacements_.size(); }
  // a_0 = 0, ..., a_k = 1.
  std::span<const double> breakpoints() const { return breakpoints_; }
  std::span<const double> widths() const { return widths_; }
  std::span<const double> log_widths() const { return log_widths_; }
  std::span<const LatticeVec> displacements() const { return displacements_; }

  bool has_exact() const { return !exact_breakpoints_.empty(); }
  std::span<const Rational> exact_breakpoints() const { return exact_breakpoints_; }
  std::span<const Rational> exact_widths() const { return exact_widths_; }

  struct Branch {
    std::size_t index;  // 1-based
    LatticeVec displacement;
  };

  // The unique i with a_{i-1} <= s < a_i. Throws ArgumentError outside [0,1).
  Branch locate(double s) const;
  Branch locate(const Rational& s) const;

  // (s - a_{i-1}) / q_i for the branch containing s.
  double phi(double s) const;
  Rational phi(const Rational& s) const;

  // 1-based index of displacement y, or nullopt when p(y) = 0.
  std::optional<std::size_t> branch_of(const LatticeVec& y) const;

  // Unchecked float fast path: branch index (0-based) for s in [0,1).
  std::size_t branch0(double s) const {
    std::size_t i = 0;
    const std::size_t last = displacements_.size() - 1;
    while (i < last && s >= breakpoints_[i + 1]) ++i;
    return i;
  }
  double phi_in(std::size_t i0, double s) const;

 private:
  std::vector<double> breakpoints_;
  std::vector<double> widths_;
  std::vector<double> log_widths_;
  std::vector<LatticeVec> displacements_;
  std::vector<Rational> exact_breakpoints_;
  std::vector<Rational> exact_widths_;
};

inline Partition build_partition(const JumpDistribution& law) { return Partition(law); }

// One partition per law of an environment, indexed like Environment::laws().
class PartitionTable {
 public:
  explicit PartitionTable(const Environment& env);
  const Partition& at_label(std::size_t label) const { return parts_[label]; }
  const Partition& at(const Environment& env, const LatticeVec& x) const {
    return parts_[env.label_at(x)];
  }

 private:
  std::vector<Partition> parts_;
};

// A point (s, tau_{X_n} w) of the skew-product phase space. The translated
// environment is never built: it is the pair (env, position).
struct PvpState {
  double s = 0.0;
  // Authoritative when present (exact-rational iteration).
  std::optional<Rational> exact_s;
  LatticeVec position;
  Environment env;
  std::uint64_t step_count = 0;

  static PvpState start(const Environment& env, double s);
  static PvpState start_exact(const Environment& env, const Rational& s);
};

using DisplacementSequence = std::vector<LatticeVec>;
using Trajectory = std::vector<LatticeVec>;

enum class Mode { faithful, refresh, exact_rational };

std::string to_string(Mode mode);
Mode parse_mode(const std::string& text);

// One application of the skew-product map: s -> phi(s), X -> X + D(s).
PvpState step(const PvpState& state);

struct IterateResult {
  Trajectory trajectory;  // n + 1 positions
  PvpState final_state;
};

// faithful: iterate the map on the double s. Each step consumes about H bits
// of the 53 available, so orbits are only meaningful for ~53/H steps.
// refresh: draw a fresh uniform s before every step (needs rng); the law of
// the walk is the same because phi maps each branch uniformly onto [0,1).
// exact_rational: iterate on a rational s (the double s is converted exactly
// when no exact_s is set); needs exact rational laws along the orbit.
IterateResult iterate(const PvpState& state, std::size_t n, Mode mode, RngStream* rng = nullptr);

// Sum of log q over the branches of seq, walked from the origin.
double cylinder_log_measure(const Environment& env, const DisplacementSequence& seq);

// Branch displacements taken over n steps (exact when state.exact_s is set).
DisplacementSequence encode_trajectory(const PvpState& state, std::size_t n);

struct RationalInterval {
  Rational lo;
  Rational hi;
  Rational width() const { return hi - lo; }
  bool contains(const Rational& s) const { return lo <= s && s < hi; }
};

// Cylinder of initial s values producing seq: nested narrowing of [0,1).
RationalInterval decode_trajectory(const Environment& env, const DisplacementSequence& seq);

double entropy(const JumpDistribution& law);
double step_entropy(const Environment& env, const LatticeVec& x);

// A function of the environment as seen from site x, i.e. of tau_x w.
using SiteObservable = std::function<double(const Environment& env, const LatticeVec& x)>;

namespace observables {
SiteObservable drift_component(int axis);
SiteObservable entropy();
// 1 when the law at x + offset has the given label (index into laws()).
SiteObservable label_indicator(std::size_t label, const LatticeVec& offset);
}  // namespace observables

// (1/n) sum_{k<n} f(tau_{X_k} w) along the orbit of state.
double birkhoff_average(const PvpState& state, const SiteObservable& f, std::size_t n, Mode mode,
                        RngStream* rng = nullptr);

// Hot-loop walker over a fixed environment with cached partitions.
class Walker {
 public:
  explicit Walker(const Environment& env) : env_(env), table_(env) {}

  const Environment& env() const { return env_; }
  const PartitionTable& partitions() const { return table_; }

  // Applies the map at `position` with internal variable s. Moves position,
  // adds log q of the branch to *log_measure when non-null, returns phi(s).
  double advance(LatticeVec& position, double s, double* log_measure = nullptr) const {
    const Partition& p = table_.at(env_, position);
    const std::size_t i = p.branch0(s);
    position += p.displacements()[i];
    if (log_measure) *log_measure += p.log_widths()[i];
    return p.phi_in(i, s);
  }

 private:
  Environment env_;
  PartitionTable table_;
};

}  // namespace rwre
