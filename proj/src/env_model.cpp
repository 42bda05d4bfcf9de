#include "rwre/env_model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "rwre/errors.hpp"
#include "rwre/rng.hpp"

namespace rwre {

// ---------------------------------------------------------------------------
// JumpDistribution

JumpDistribution::JumpDistribution(int dim, std::vector<JumpEntry> entries) : dim_(dim) {
  require_dim(dim);
  std::vector<std::pair<JumpEntry, std::optional<Rational>>> raw;
  raw.reserve(entries.size());
  for (auto& e : entries) {
    if (!std::isfinite(e.prob)) throw ArgumentError("jump probability is not finite");
    raw.emplace_back(e, std::optional<Rational>(rational_from_shortest_decimal(e.prob)));
  }
  finalize(std::move(raw));
}

JumpDistribution::JumpDistribution(int dim,
                                   std::vector<std::pair<LatticeVec, Rational>> exact_entries)
    : dim_(dim) {
  require_dim(dim);
  std::vector<std::pair<JumpEntry, std::optional<Rational>>> raw;
  raw.reserve(exact_entries.size());
  Rational total = 0;
  for (auto& [y, p] : exact_entries) {
    total += p;
    raw.emplace_back(JumpEntry{y, p.convert_to<double>()}, std::optional<Rational>(p));
  }
  if (total != 1) {
    throw ArgumentError("exact jump probabilities sum to " + to_string(total) + ", not 1");
  }
  finalize(std::move(raw));
}

void JumpDistribution::finalize(std::vector<std::pair<JumpEntry, std::optional<Rational>>> raw) {
  for (const auto& [e, _] : raw) {
    if (e.displacement.dim() != dim_) {
      throw ArgumentError("displacement " + e.displacement.to_string() +
                          " does not match dimension " + std::to_string(dim_));
    }
    if (e.prob < 0.0 || e.prob > 1.0) {
      throw ArgumentError("jump probability outside [0,1]: " + std::to_string(e.prob));
    }
  }
  std::erase_if(raw, [](const auto& r) { return r.first.prob == 0.0; });
  if (raw.empty()) throw ArgumentError("jump distribution has empty support");
  std::sort(raw.begin(), raw.end(), [](const auto& a, const auto& b) {
    return canonical_less(a.first.displacement, b.first.displacement);
  });
  for (std::size_t i = 1; i < raw.size(); ++i) {
    if (raw[i].first.displacement == raw[i - 1].first.displacement) {
      throw ArgumentError("duplicate displacement " + raw[i].first.displacement.to_string());
    }
  }
  double sum = 0.0;
  for (const auto& r : raw) sum += r.first.prob;
  if (std::abs(sum - 1.0) > kLawSumTol) {
    throw ArgumentError("jump probabilities sum to " + std::to_string(sum) + ", not 1");
  }

  Rational exact_sum = 0;
  bool exact = true;
  for (const auto& r : raw) {
    if (!r.second) {
      exact = false;
      break;
    }
    exact_sum += *r.second;
  }
  exact = exact && exact_sum == 1;

  entries_.reserve(raw.size());
  for (auto& r : raw) {
    entries_.push_back(r.first);
    if (exact) exact_.push_back(*r.second);
  }
}

JumpDistribution JumpDistribution::point_mass(const LatticeVec& y) {
  return JumpDistribution(y.dim(), std::vector<std::pair<LatticeVec, Rational>>{{y, Rational(1)}});
}

JumpDistribution JumpDistribution::simple_walk(int dim) {
  require_dim(dim);
  std::vector<std::pair<LatticeVec, Rational>> e;
  const Rational p(1, 2 * dim);
  for (int i = 0; i < dim; ++i) {
    e.emplace_back(LatticeVec::unit(dim, i, 1), p);
    e.emplace_back(LatticeVec::unit(dim, i, -1), p);
  }
  return JumpDistribution(dim, std::move(e));
}

double JumpDistribution::prob_of(const LatticeVec& y) const {
  for (const auto& e : entries_)
    if (e.displacement == y) return e.prob;
  return 0.0;
}

bool operator==(const JumpDistribution& a, const JumpDistribution& b) {
  if (a.dim_ != b.dim_ || a.entries_.size() != b.entries_.size()) return false;
  for (std::size_t i = 0; i < a.entries_.size(); ++i) {
    if (a.entries_[i].displacement != b.entries_[i].displacement ||
        a.entries_[i].prob != b.entries_[i].prob) {
      return false;
    }
  }
  return a.exact_ == b.exact_;
}

double DriftVector::norm() const {
  double s = 0.0;
  for (double c : components) s += c * c;
  return std::sqrt(s);
}

std::string to_string(EnvKind kind) {
  switch (kind) {
    case EnvKind::periodic:
      return "periodic";
    case EnvKind::seeded_iid:
      return "iid";
    case EnvKind::column_ab:
      return "column_ab";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// Environment

struct Environment::Data {
  EnvKind kind;
  int dim;
  std::vector<JumpDistribution> laws;
  std::vector<std::int64_t> extents;   // periodic
  std::vector<double> weights;         // iid
  std::vector<double> cumulative;      // iid
  std::uint64_t seed = 0;              // iid, column_ab
  double prob_a = 0.0;                 // column_ab
};

Environment::Environment(std::shared_ptr<const Data> data, LatticeVec offset)
    : data_(std::move(data)), offset_(offset) {}

Environment Environment::periodic(std::vector<std::int64_t> extents,
                                  std::vector<JumpDistribution> table) {
  const int dim = static_cast<int>(extents.size());
  require_dim(dim);
  std::size_t sites = 1;
  for (auto L : extents) {
    if (L < 1) throw ArgumentError("periodic extents must be >= 1");
    sites *= static_cast<std::size_t>(L);
  }
  if (table.size() != sites) {
    throw ArgumentError("periodic table has " + std::to_string(table.size()) +
                        " laws, torus has " + std::to_string(sites) + " sites");
  }
  for (const auto& law : table)
    if (law.dim() != dim) throw ArgumentError("law dimension does not match extents");
  auto d = std::make_shared<Data>();
  d->kind = EnvKind::periodic;
  d->dim = dim;
  d->laws = std::move(table);
  d->extents = std::move(extents);
  return Environment(std::move(d), LatticeVec(dim));
}

Environment Environment::homogeneous(const JumpDistribution& law) {
  return periodic(std::vector<std::int64_t>(static_cast<std::size_t>(law.dim()), 1), {law});
}

Environment Environment::seeded_iid(int dim, std::vector<WeightedLaw> family,
                                    std::uint64_t master_seed) {
  require_dim(dim);
  if (family.empty()) throw ArgumentError("iid family is empty");
  auto d = std::make_shared<Data>();
  d->kind = EnvKind::seeded_iid;
  d->dim = dim;
  d->seed = master_seed;
  double total = 0.0;
  for (auto& w : family) {
    if (w.law.dim() != dim) throw ArgumentError("family law dimension mismatch");
    if (!(w.weight >= 0.0)) throw ArgumentError("family weights must be non-negative");
    total += w.weight;
    d->laws.push_back(w.law);
    d->weights.push_back(w.weight);
    d->cumulative.push_back(total);
  }
  if (std::abs(total - 1.0) > kLawSumTol) {
    throw ArgumentError("iid family weights sum to " + std::to_string(total) + ", not 1");
  }
  return Environment(std::move(d), LatticeVec(dim));
}

Environment Environment::column_ab(double prob_a, std::uint64_t master_seed) {
  if (!(prob_a > 0.0 && prob_a < 1.0)) throw ArgumentError("prob_a must lie in (0,1)");
  auto d = std::make_shared<Data>();
  d->kind = EnvKind::column_ab;
  d->dim = 2;
  d->seed = master_seed;
  d->prob_a = prob_a;
  const Rational half(1, 2);
  d->laws.push_back(JumpDistribution(
      2, std::vector<std::pair<LatticeVec, Rational>>{{{1, 0}, half}, {{-1, 0}, half}}));
  d->laws.push_back(JumpDistribution(
      2, std::vector<std::pair<LatticeVec, Rational>>{{{0, 1}, half}, {{0, -1}, half}}));
  return Environment(std::move(d), LatticeVec(2));
}

Environment Environment::column_ab_periodic(const std::string& pattern, std::int64_t height) {
  if (pattern.empty() || height < 1) throw ArgumentError("column pattern needs length and height >= 1");
  const Rational half(1, 2);
  const JumpDistribution a(
      2, std::vector<std::pair<LatticeVec, Rational>>{{{1, 0}, half}, {{-1, 0}, half}});
  const JumpDistribution b(
      2, std::vector<std::pair<LatticeVec, Rational>>{{{0, 1}, half}, {{0, -1}, half}});
  const auto width = static_cast<std::int64_t>(pattern.size());
  std::vector<JumpDistribution> table;
  for (std::int64_t k = 0; k < height; ++k) {
    for (char c : pattern) {
      if (c == 'A' || c == 'a') {
        table.push_back(a);
      } else if (c == 'B' || c == 'b') {
        table.push_back(b);
      } else {
        throw ArgumentError(std::string("column pattern letters must be A or B, got ") + c);
      }
    }
  }
  return periodic({width, height}, std::move(table));
}

int Environment::dim() const { return data_->dim; }
EnvKind Environment::kind() const { return data_->kind; }
std::span<const JumpDistribution> Environment::laws() const { return data_->laws; }

namespace {

inline std::int64_t floor_mod(std::int64_t a, std::int64_t m) {
  const std::int64_t r = a % m;
  return r < 0 ? r + m : r;
}

}  // namespace

std::size_t Environment::label_at(const LatticeVec& x) const {
  const Data& d = *data_;
  if (x.dim() != d.dim) {
    throw ArgumentError("site " + x.to_string() + " has dimension " + std::to_string(x.dim()) +
                        ", environment has " + std::to_string(d.dim));
  }
  switch (d.kind) {
    case EnvKind::periodic: {
      std::size_t idx = 0;
      std::size_t stride = 1;
      for (int i = 0; i < d.dim; ++i) {
        const std::int64_t L = d.extents[static_cast<std::size_t>(i)];
        if (L > 1) idx += static_cast<std::size_t>(floor_mod(x[i] + offset_[i], L)) * stride;
        stride *= static_cast<std::size_t>(L);
      }
      return idx;
    }
    case EnvKind::seeded_iid: {
      const double u = site_uniform(d.seed, x + offset_);
      const auto it = std::upper_bound(d.cumulative.begin(), d.cumulative.end(), u);
      const auto i = static_cast<std::size_t>(it - d.cumulative.begin());
      return std::min(i, d.laws.size() - 1);
    }
    case EnvKind::column_ab:
      return column_is_b(x[0]) ? 1 : 0;
  }
  return 0;
}

const JumpDistribution& Environment::dist_at(const LatticeVec& x) const {
  return data_->laws[label_at(x)];
}

Environment Environment::shifted(const LatticeVec& z) const {
  if (z.dim() != dim()) throw ArgumentError("shift dimension mismatch");
  LatticeVec off = offset_ + z;
  if (kind() == EnvKind::periodic) {
    for (int i = 0; i < dim(); ++i) off[i] = floor_mod(off[i], data_->extents[static_cast<std::size_t>(i)]);
  }
  return Environment(data_, off);
}

void Environment::require_kind(EnvKind k, const char* what) const {
  if (kind() != k) {
    throw UnsupportedError(std::string(what) + " is only defined for " + to_string(k) +
                           " environments, not " + to_string(kind()));
  }
}

std::span<const std::int64_t> Environment::extents() const {
  require_kind(EnvKind::periodic, "extents");
  return data_->extents;
}

std::size_t Environment::torus_size() const {
  require_kind(EnvKind::periodic, "torus_size");
  return data_->laws.size();
}

std::size_t Environment::torus_index(const LatticeVec& x) const {
  require_kind(EnvKind::periodic, "torus_index");
  if (x.dim() != dim()) throw ArgumentError("site dimension mismatch");
  std::size_t idx = 0;
  std::size_t stride = 1;
  for (int i = 0; i < dim(); ++i) {
    const std::int64_t L = data_->extents[static_cast<std::size_t>(i)];
    idx += static_cast<std::size_t>(floor_mod(x[i], L)) * stride;
    stride *= static_cast<std::size_t>(L);
  }
  return idx;
}

LatticeVec Environment::torus_site(std::size_t index) const {
  require_kind(EnvKind::periodic, "torus_site");
  if (index >= torus_size()) throw ArgumentError("torus index out of range");
  LatticeVec x(dim());
  for (int i = 0; i < dim(); ++i) {
    const auto L = static_cast<std::size_t>(data_->extents[static_cast<std::size_t>(i)]);
    x[i] = static_cast<std::int64_t>(index % L);
    index /= L;
  }
  return x;
}

std::span<const double> Environment::family_weights() const {
  require_kind(EnvKind::seeded_iid, "family_weights");
  return data_->weights;
}

std::uint64_t Environment::master_seed() const {
  if (kind() == EnvKind::periodic) throw UnsupportedError("periodic environments have no seed");
  return data_->seed;
}

double Environment::prob_a() const {
  require_kind(EnvKind::column_ab, "prob_a");
  return data_->prob_a;
}

bool Environment::column_is_b(std::int64_t j) const {
  require_kind(EnvKind::column_ab, "column_is_b");
  return site_uniform(data_->seed, j + offset_[0]) >= data_->prob_a;
}

bool Environment::all_exact() const {
  return std::all_of(data_->laws.begin(), data_->laws.end(),
                     [](const JumpDistribution& l) { return l.has_exact(); });
}

bool operator==(const Environment& a, const Environment& b) {
  if (a.offset_ != b.offset_) return false;
  if (a.data_ == b.data_) return true;
  const auto& x = *a.data_;
  const auto& y = *b.data_;
  return x.kind == y.kind && x.dim == y.dim && x.laws == y.laws && x.extents == y.extents &&
         x.weights == y.weights && x.seed == y.seed && x.prob_a == y.prob_a;
}

// ---------------------------------------------------------------------------
// Operations

JumpDistribution dist_at(const Environment& env, const LatticeVec& x) { return env.dist_at(x); }

DriftVector mean_displacement(const JumpDistribution& law) {
  DriftVector v{std::vector<double>(static_cast<std::size_t>(law.dim()), 0.0)};
  for (const auto& e : law.entries()) {
    for (int i = 0; i < law.dim(); ++i) {
      v.components[static_cast<std::size_t>(i)] += e.prob * static_cast<double>(e.displacement[i]);
    }
  }
  return v;
}

DriftVector local_drift(const Environment& env, const LatticeVec& x) {
  return mean_displacement(env.dist_at(x));
}

std::vector<LatticeVec> validation_sites(const Environment& env, std::int64_t window_radius) {
  if (window_radius < 1) throw ArgumentError("window_radius must be >= 1");
  std::vector<LatticeVec> sites;
  if (env.kind() == EnvKind::periodic) {
    sites.reserve(env.torus_size());
    for (std::size_t i = 0; i < env.torus_size(); ++i) sites.push_back(env.torus_site(i));
    return sites;
  }
  const int d = env.dim();
  LatticeVec x(d);
  for (int i = 0; i < d; ++i) x[i] = -window_radius;
  while (true) {
    sites.push_back(x);
    int i = 0;
    while (i < d && x[i] == window_radius) {
      x[i] = -window_radius;
      ++i;
    }
    if (i == d) break;
    ++x[i];
  }
  return sites;
}

DecayReport check_decay(const Environment& env, double K, double gamma, std::int64_t window_radius) {
  if (!(K > 0.0) || !(gamma > 0.0)) throw ArgumentError("decay check needs K > 0 and gamma > 0");
  DecayReport report;
  const double exponent = -static_cast<double>(env.dim()) - gamma;
  for (const auto& x : validation_sites(env, window_radius)) {
    for (const auto& e : env.dist_at(x).entries()) {
      // A jump of length 0 has bound K * 0^{-d-gamma} = infinity.
      if (e.displacement.is_zero()) continue;
      const double bound = K * std::pow(e.displacement.norm(), exponent);
      const double ratio = e.prob / bound;
      if (ratio > report.worst_ratio) {
        report.worst_ratio = ratio;
        if (ratio > 1.0) {
          report.worst_site = x;
          report.worst_displacement = e.displacement;
        }
      }
    }
  }
  report.ok = report.worst_ratio <= 1.0;
  return report;
}

namespace {

std::int64_t support_radius(const Environment& env) {
  std::int64_t r = 0;
  for (const auto& law : env.laws())
    for (const auto& e : law.entries())
      for (int i = 0; i < env.dim(); ++i) r = std::max<std::int64_t>(r, std::llabs(e.displacement[i]));
  return r;
}

}  // namespace

DoublyStochasticReport check_doubly_stochastic(const Environment& env, std::int64_t window_radius) {
  if (window_radius < 1) throw ArgumentError("window_radius must be >= 1");
  DoublyStochasticReport report;
  if (env.kind() == EnvKind::periodic) {
    std::vector<double> incoming(env.torus_size(), 0.0);
    for (std::size_t i = 0; i < env.torus_size(); ++i) {
      const LatticeVec x = env.torus_site(i);
      for (const auto& e : env.dist_at(x).entries()) incoming[env.torus_index(x + e.displacement)] += e.prob;
    }
    for (std::size_t i = 0; i < incoming.size(); ++i) {
      report.per_site_incoming_mass.push_back({env.torus_site(i), incoming[i]});
    }
  } else {
    const std::int64_t span = support_radius(env);
    if (window_radius <= span) {
      throw ArgumentError("window radius " + std::to_string(window_radius) +
                          " must exceed the support span " + std::to_string(span));
    }
    // Targets lie in the inner cube; each one's sources are found by pulling
    // back through every displacement any law of the family can take.
    std::vector<LatticeVec> displacements;
    for (const auto& law : env.laws())
      for (const auto& e : law.entries())
        if (std::find(displacements.begin(), displacements.end(), e.displacement) == displacements.end())
          displacements.push_back(e.displacement);
    for (const auto& y : validation_sites(env, window_radius - span)) {
      double mass = 0.0;
      for (const auto& d : displacements) mass += env.dist_at(y - d).prob_of(d);
      report.per_site_incoming_mass.push_back({y, mass});
    }
  }
  for (const auto& m : report.per_site_incoming_mass) {
    if (std::abs(m.mass - 1.0) > kAggregateTol) report.failing_sites.push_back(m.site);
  }
  report.ok = report.failing_sites.empty();
  return report;
}

ZeroDriftReport check_zero_drift(const Environment& env, std::int64_t window_radius) {
  ZeroDriftReport report;
  for (const auto& x : validation_sites(env, window_radius)) {
    const double n = local_drift(env, x).norm();
    if (n > report.max_drift_norm) {
      report.max_drift_norm = n;
      report.worst_site = x;
    }
  }
  report.ok = report.max_drift_norm <= kDriftTol;
  return report;
}

NondeterministicReport check_nondeterministic(const Environment& env, std::int64_t window_radius) {
  NondeterministicReport report;
  for (const auto& x : validation_sites(env, window_radius)) {
    if (env.dist_at(x).is_point_mass()) report.deterministic_sites.push_back(x);
  }
  report.ok = report.deterministic_sites.empty();
  return report;
}

}  // namespace rwre
