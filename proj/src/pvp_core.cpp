#include "rwre/pvp_core.hpp"

#include <algorithm>
#include <cmath>

#include "rwre/errors.hpp"

namespace rwre {

// ---------------------------------------------------------------------------
// Partition

Partition::Partition(const JumpDistribution& law) {
  const auto entries = law.entries();
  breakpoints_.reserve(entries.size() + 1);
  breakpoints_.push_back(0.0);
  double acc = 0.0;
  for (const auto& e : entries) {
    acc += e.prob;
    breakpoints_.push_back(acc);
    widths_.push_back(e.prob);
    log_widths_.push_back(std::log(e.prob));
    displacements_.push_back(e.displacement);
  }
  // The law sums to 1 within kLawSumTol; pin the right end so that every
  // s in [0,1) has a branch.
  breakpoints_.back() = 1.0;

  if (law.has_exact()) {
    Rational a = 0;
    exact_breakpoints_.push_back(a);
    for (const auto& q : law.exact_probs()) {
      a += q;
      exact_breakpoints_.push_back(a);
      exact_widths_.push_back(q);
    }
  }
}

Partition::Branch Partition::locate(double s) const {
  if (!(s >= 0.0 && s < 1.0)) {
    throw ArgumentError("internal variable s = " + std::to_string(s) + " is outside [0,1)");
  }
  const auto it = std::upper_bound(breakpoints_.begin() + 1, breakpoints_.end(), s);
  const auto i0 = static_cast<std::size_t>(it - (breakpoints_.begin() + 1));
  return {i0 + 1, displacements_[i0]};
}

Partition::Branch Partition::locate(const Rational& s) const {
  if (!has_exact()) throw ConfigError("partition has no exact rational breakpoints");
  if (s < 0 || s >= 1) throw ArgumentError("internal variable s = " + to_string(s) + " is outside [0,1)");
  const auto it = std::upper_bound(exact_breakpoints_.begin() + 1, exact_breakpoints_.end(), s);
  const auto i0 = static_cast<std::size_t>(it - (exact_breakpoints_.begin() + 1));
  return {i0 + 1, displacements_[i0]};
}

double Partition::phi_in(std::size_t i0, double s) const {
  const double r = (s - breakpoints_[i0]) / widths_[i0];
  if (r < 0.0) return 0.0;
  if (r >= 1.0) return std::nextafter(1.0, 0.0);
  return r;
}

double Partition::phi(double s) const { return phi_in(locate(s).index - 1, s); }

Rational Partition::phi(const Rational& s) const {
  const auto i0 = locate(s).index - 1;
  return (s - exact_breakpoints_[i0]) / exact_widths_[i0];
}

std::optional<std::size_t> Partition::branch_of(const LatticeVec& y) const {
  for (std::size_t i = 0; i < displacements_.size(); ++i)
    if (displacements_[i] == y) return i + 1;
  return std::nullopt;
}

PartitionTable::PartitionTable(const Environment& env) {
  parts_.reserve(env.laws().size());
  for (const auto& law : env.laws()) parts_.emplace_back(law);
}

// ---------------------------------------------------------------------------
// State and iteration

PvpState PvpState::start(const Environment& env, double s) {
  if (!(s >= 0.0 && s < 1.0)) throw ArgumentError("initial s must lie in [0,1)");
  return PvpState{s, std::nullopt, LatticeVec(env.dim()), env, 0};
}

PvpState PvpState::start_exact(const Environment& env, const Rational& s) {
  if (s < 0 || s >= 1) throw ArgumentError("initial s must lie in [0,1)");
  return PvpState{s.convert_to<double>(), s, LatticeVec(env.dim()), env, 0};
}

std::string to_string(Mode mode) {
  switch (mode) {
    case Mode::faithful:
      return "faithful";
    case Mode::refresh:
      return "refresh";
    case Mode::exact_rational:
      return "exact_rational";
  }
  return "?";
}

Mode parse_mode(const std::string& text) {
  if (text == "faithful") return Mode::faithful;
  if (text == "refresh") return Mode::refresh;
  if (text == "exact_rational" || text == "exact") return Mode::exact_rational;
  throw ConfigError("unknown mode '" + text + "' (expected faithful, refresh or exact_rational)");
}

PvpState step(const PvpState& state) {
  const Partition p(state.env.dist_at(state.position));
  PvpState next = state;
  if (state.exact_s) {
    if (!p.has_exact()) {
      throw ConfigError("exact step at " + state.position.to_string() +
                        ": jump law has no exact rational probabilities");
    }
    const auto branch = p.locate(*state.exact_s);
    next.exact_s = p.phi(*state.exact_s);
    next.s = next.exact_s->convert_to<double>();
    next.position += branch.displacement;
  } else {
    const auto branch = p.locate(state.s);
    next.s = p.phi_in(branch.index - 1, state.s);
    next.position += branch.displacement;
  }
  ++next.step_count;
  return next;
}

namespace {

void require_exact_env(const Environment& env) {
  if (!env.all_exact()) {
    throw ConfigError(
        "exact_rational mode requires every jump law to have exact rational probabilities "
        "summing to 1");
  }
}

// Exact-arithmetic step against a cached partition.
LatticeVec exact_advance(const PartitionTable& table, const Environment& env, LatticeVec& position,
                         Rational& s) {
  const Partition& p = table.at(env, position);
  const auto branch = p.locate(s);
  s = (s - p.exact_breakpoints()[branch.index - 1]) / p.exact_widths()[branch.index - 1];
  position += branch.displacement;
  return branch.displacement;
}

}  // namespace

IterateResult iterate(const PvpState& state, std::size_t n, Mode mode, RngStream* rng) {
  IterateResult out{{}, state};
  out.trajectory.reserve(n + 1);
  out.trajectory.push_back(state.position);
  PvpState& cur = out.final_state;

  switch (mode) {
    case Mode::faithful: {
      if (cur.exact_s) {
        cur.exact_s.reset();  // faithful means float arithmetic
      }
      const Walker walker(cur.env);
      for (std::size_t k = 0; k < n; ++k) {
        cur.s = walker.advance(cur.position, cur.s);
        out.trajectory.push_back(cur.position);
      }
      break;
    }
    case Mode::refresh: {
      if (!rng) throw ConfigError("refresh mode needs an rng stream");
      cur.exact_s.reset();
      const Walker walker(cur.env);
      for (std::size_t k = 0; k < n; ++k) {
        cur.s = walker.advance(cur.position, rng->uniform());
        out.trajectory.push_back(cur.position);
      }
      break;
    }
    case Mode::exact_rational: {
      require_exact_env(cur.env);
      Rational s = cur.exact_s ? *cur.exact_s : rational_from_double(cur.s);
      const PartitionTable table(cur.env);
      for (std::size_t k = 0; k < n; ++k) {
        exact_advance(table, cur.env, cur.position, s);
        out.trajectory.push_back(cur.position);
      }
      cur.s = s.convert_to<double>();
      cur.exact_s = s;
      break;
    }
  }
  cur.step_count += n;
  return out;
}

double cylinder_log_measure(const Environment& env, const DisplacementSequence& seq) {
  LatticeVec pos(env.dim());
  double acc = 0.0;
  for (std::size_t k = 0; k < seq.size(); ++k) {
    const double q = env.dist_at(pos).prob_of(seq[k]);
    if (q <= 0.0) {
      throw UnrealizableError(k, "step " + std::to_string(k) + ": displacement " +
                                     seq[k].to_string() + " has probability 0 at " +
                                     pos.to_string());
    }
    acc += std::log(q);
    pos += seq[k];
  }
  return acc;
}

DisplacementSequence encode_trajectory(const PvpState& state, std::size_t n) {
  DisplacementSequence seq;
  seq.reserve(n);
  LatticeVec pos = state.position;
  if (state.exact_s) {
    require_exact_env(state.env);
    const PartitionTable table(state.env);
    Rational s = *state.exact_s;
    for (std::size_t k = 0; k < n; ++k) seq.push_back(exact_advance(table, state.env, pos, s));
  } else {
    const Walker walker(state.env);
    double s = state.s;
    for (std::size_t k = 0; k < n; ++k) {
      const LatticeVec before = pos;
      s = walker.advance(pos, s);
      seq.push_back(pos - before);
    }
  }
  return seq;
}

RationalInterval decode_trajectory(const Environment& env, const DisplacementSequence& seq) {
  Rational lo = 0;
  Rational width = 1;
  LatticeVec pos(env.dim());
  for (std::size_t k = 0; k < seq.size(); ++k) {
    const Partition p(env.dist_at(pos));
    if (!p.has_exact()) {
      throw ConfigError("decode at step " + std::to_string(k) +
                        ": jump law has no exact rational probabilities");
    }
    const auto i = p.branch_of(seq[k]);
    if (!i) {
      throw UnrealizableError(k, "step " + std::to_string(k) + ": displacement " +
                                     seq[k].to_string() + " has probability 0 at " +
                                     pos.to_string());
    }
    lo += width * p.exact_breakpoints()[*i - 1];
    width *= p.exact_widths()[*i - 1];
    pos += seq[k];
  }
  return {lo, lo + width};
}

double entropy(const JumpDistribution& law) {
  double h = 0.0;
  for (const auto& e : law.entries()) h -= e.prob * std::log(e.prob);
  return h;
}

double step_entropy(const Environment& env, const LatticeVec& x) { return entropy(env.dist_at(x)); }

namespace observables {

SiteObservable drift_component(int axis) {
  return [axis](const Environment& env, const LatticeVec& x) {
    double v = 0.0;
    for (const auto& e : env.dist_at(x).entries()) v += e.prob * static_cast<double>(e.displacement[axis]);
    return v;
  };
}

SiteObservable entropy() {
  return [](const Environment& env, const LatticeVec& x) { return step_entropy(env, x); };
}

SiteObservable label_indicator(std::size_t label, const LatticeVec& offset) {
  return [label, offset](const Environment& env, const LatticeVec& x) {
    return env.label_at(x + offset) == label ? 1.0 : 0.0;
  };
}

}  // namespace observables

double birkhoff_average(const PvpState& state, const SiteObservable& f, std::size_t n, Mode mode,
                        RngStream* rng) {
  if (n == 0) throw ArgumentError("birkhoff_average needs n >= 1");
  LatticeVec pos = state.position;
  double sum = 0.0;
  switch (mode) {
    case Mode::faithful: {
      const Walker walker(state.env);
      double s = state.s;
      for (std::size_t k = 0; k < n; ++k) {
        sum += f(state.env, pos);
        s = walker.advance(pos, s);
      }
      break;
    }
    case Mode::refresh: {
      if (!rng) throw ConfigError("refresh mode needs an rng stream");
      const Walker walker(state.env);
      for (std::size_t k = 0; k < n; ++k) {
        sum += f(state.env, pos);
        walker.advance(pos, rng->uniform());
      }
      break;
    }
    case Mode::exact_rational: {
      require_exact_env(state.env);
      const PartitionTable table(state.env);
      Rational s = state.exact_s ? *state.exact_s : rational_from_double(state.s);
      for (std::size_t k = 0; k < n; ++k) {
        sum += f(state.env, pos);
        exact_advance(table, state.env, pos, s);
      }
      break;
    }
  }
  return sum / static_cast<double>(n);
}

}  // namespace rwre
