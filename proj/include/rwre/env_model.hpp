#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "rwre/lattice.hpp"
#include "rwre/rational.hpp"

namespace rwre {

// Tolerances shared by the validators.
inline constexpr double kLawSumTol = 1e-12;     // construction-time sums
inline constexpr double kAggregateTol = 1e-10;  // incoming-mass checks
inline constexpr double kDriftTol = 1e-12;

struct JumpEntry {
  LatticeVec displacement;
  double prob = 0.0;
};

// Finite-support law of one jump, p(y) for y in Z^d.
//
// Zero-probability entries are dropped and the rest are stored in canonical
// displacement order (see canonical_less). When every probability has an
// exact rational value summing to exactly 1, that value is kept alongside the
// double; decimal literals such as 0.7 are read as 7/10.
class JumpDistribution {
 public:
  JumpDistribution(int dim, std::vector<JumpEntry> entries);
  JumpDistribution(int dim, std::vector<std::pair<LatticeVec, Rational>> exact_entries);

  static JumpDistribution point_mass(const LatticeVec& y);
  // Uniform law over {+e_i, -e_i : i < dim}.
  static JumpDistribution simple_walk(int dim);

  int dim() const { return dim_; }
  std::size_t size() const { return entries_.size(); }
  std::span<const JumpEntry> entries() const { return entries_; }

  bool has_exact() const { return !exact_.empty(); }
  // Aligned with entries(); empty unless has_exact().
  std::span<const Rational> exact_probs() const { return exact_; }

  double prob_of(const LatticeVec& y) const;
  bool is_point_mass() const { return entries_.size() == 1; }

  friend bool operator==(const JumpDistribution& a, const JumpDistribution& b);

 private:
  void finalize(std::vector<std::pair<JumpEntry, std::optional<Rational>>> raw);

  int dim_;
  std::vector<JumpEntry> entries_;
  std::vector<Rational> exact_;
};

struct WeightedLaw {
  JumpDistribution law;
  double weight;
};

struct DriftVector {
  std::vector<double> components;

  int dim() const { return static_cast<int>(components.size()); }
  double operator[](int i) const { return components[static_cast<std::size_t>(i)]; }
  double norm() const;
};

enum class EnvKind { periodic, seeded_iid, column_ab };

std::string to_string(EnvKind kind);

// A field x -> p_x(.) of jump laws on Z^d.
//
// Instances are immutable and share their tables, so copies are cheap and
// safe to hand to concurrent workers. shifted(z) is the translate tau_z with
// (tau_z w)_x = w_{x+z}; it only records an offset.
class Environment {
 public:
  // Table is indexed by torus site, first axis fastest:
  // index = x_0 + L_0 * (x_1 + L_1 * (x_2 + ...)).
  static Environment periodic(std::vector<std::int64_t> extents,
                              std::vector<JumpDistribution> table);
  // One law everywhere (periodic with all extents 1).
  static Environment homogeneous(const JumpDistribution& law);
  // Site x draws law i with probability weight_i, independently across
  // sites, as a pure function of (master_seed, x).
  static Environment seeded_iid(int dim, std::vector<WeightedLaw> family,
                                std::uint64_t master_seed);
  // d = 2; column j is labelled A with probability prob_a, B otherwise.
  // A-sites jump +-e1, B-sites +-e2, each with probability 1/2.
  static Environment column_ab(double prob_a, std::uint64_t master_seed);
  // Periodic rendering of the A/B column field: pattern[j mod len] labels
  // column j, `height` is the vertical period.
  static Environment column_ab_periodic(const std::string& pattern, std::int64_t height);

  int dim() const;
  EnvKind kind() const;
  const LatticeVec& offset() const { return offset_; }

  // Index into laws() of the law at site x.
  std::size_t label_at(const LatticeVec& x) const;
  const JumpDistribution& dist_at(const LatticeVec& x) const;
  std::span<const JumpDistribution> laws() const;

  Environment shifted(const LatticeVec& z) const;

  // Periodic only.
  std::span<const std::int64_t> extents() const;
  std::size_t torus_size() const;
  // Torus index of x in this environment's own frame (offset not applied).
  std::size_t torus_index(const LatticeVec& x) const;
  // Representative in [0, L_0) x ... x [0, L_{d-1}).
  LatticeVec torus_site(std::size_t index) const;

  // SeededIID only.
  std::span<const double> family_weights() const;
  // SeededIID and ColumnAB.
  std::uint64_t master_seed() const;
  // ColumnAB only.
  double prob_a() const;
  // ColumnAB: true when column j (in this frame) is labelled B.
  bool column_is_b(std::int64_t j) const;

  // True when every law carries exact rational probabilities.
  bool all_exact() const;

  friend bool operator==(const Environment& a, const Environment& b);

 private:
  struct Data;
  Environment(std::shared_ptr<const Data> data, LatticeVec offset);
  void require_kind(EnvKind k, const char* what) const;

  std::shared_ptr<const Data> data_;
  LatticeVec offset_;
};

JumpDistribution dist_at(const Environment& env, const LatticeVec& x);
DriftVector local_drift(const Environment& env, const LatticeVec& x);
DriftVector mean_displacement(const JumpDistribution& law);

// Sites examined by the window-based validators: every site of one torus
// fundamental domain for periodic environments, the cube [-r, r]^d otherwise.
std::vector<LatticeVec> validation_sites(const Environment& env, std::int64_t window_radius);

struct DecayReport {
  bool ok = true;
  std::optional<LatticeVec> worst_site;
  std::optional<LatticeVec> worst_displacement;
  double worst_ratio = 0.0;  // max of p(y) / (K |y|^{-d-gamma})
};
// p(y) <= K |y|^{-d-gamma} for every non-zero support displacement.
DecayReport check_decay(const Environment& env, double K, double gamma, std::int64_t window_radius);

struct IncomingMass {
  LatticeVec site;
  double mass;
};
struct DoublyStochasticReport {
  bool ok = true;
  std::vector<IncomingMass> per_site_incoming_mass;
  std::vector<LatticeVec> failing_sites;
};
// Sum_x p_{xy} = 1 for each target y. Exhaustive over one fundamental domain
// for periodic environments; over the interior of the window otherwise, in
// which case the window must exceed the support span.
DoublyStochasticReport check_doubly_stochastic(const Environment& env, std::int64_t window_radius);

struct ZeroDriftReport {
  bool ok = true;
  double max_drift_norm = 0.0;
  std::optional<LatticeVec> worst_site;
};
ZeroDriftReport check_zero_drift(const Environment& env, std::int64_t window_radius);

struct NondeterministicReport {
  bool ok = true;
  std::vector<LatticeVec> deterministic_sites;
};
NondeterministicReport check_nondeterministic(const Environment& env, std::int64_t window_radius);

}  // namespace rwre
