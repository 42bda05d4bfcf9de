#include "rwre/mc_stats.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <thread>

#include "rwre/errors.hpp"
#include "rwre/evp_exact.hpp"
#include "rwre/rng.hpp"
#include "rwre/stats.hpp"

namespace rwre {

EnvSampler annealed_sampler(const Environment& base) {
  switch (base.kind()) {
    case EnvKind::periodic:
      return [base](std::uint64_t env_seed) {
        RngStream rng(env_seed, 0);
        const auto ext = base.extents();
        LatticeVec z(base.dim());
        for (int i = 0; i < base.dim(); ++i) {
          const auto L = static_cast<std::uint64_t>(ext[static_cast<std::size_t>(i)]);
          z[i] = static_cast<std::int64_t>(rng.next_u64() % L);
        }
        return base.shifted(z);
      };
    case EnvKind::seeded_iid:
      return [base](std::uint64_t env_seed) {
        std::vector<WeightedLaw> family;
        const auto w = base.family_weights();
        for (std::size_t i = 0; i < w.size(); ++i) family.push_back({base.laws()[i], w[i]});
        return Environment::seeded_iid(base.dim(), std::move(family), env_seed);
      };
    case EnvKind::column_ab:
      return [p = base.prob_a()](std::uint64_t env_seed) { return Environment::column_ab(p, env_seed); };
  }
  throw UnsupportedError("no sampler for this environment kind");
}

EnvSampler stationary_sampler(const Environment& base) {
  if (base.kind() != EnvKind::periodic) throw UnsupportedError("stationary_sampler needs a periodic environment");
  const auto pi = stationary_distribution(build_evp_chain(base));
  std::vector<double> cdf(static_cast<std::size_t>(pi.weights.size()));
  double acc = 0.0;
  for (std::size_t k = 0; k < cdf.size(); ++k) cdf[k] = acc += pi.weights(static_cast<Eigen::Index>(k));
  return [base, cdf](std::uint64_t env_seed) {
    RngStream rng(env_seed, 0);
    const double u = rng.uniform() * cdf.back();
    const auto k = static_cast<std::size_t>(std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
    return base.shifted(base.torus_site(std::min(k, cdf.size() - 1)));
  };
}

void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& fn) {
  if (threads <= 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::atomic<bool> failed{false};
  std::vector<std::thread> pool;
  const unsigned workers = static_cast<unsigned>(std::min<std::size_t>(threads, count));
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      while (!failed.load()) {
        const std::size_t i = next.fetch_add(1);
        if (i >= count) return;
        try {
          fn(i);
        } catch (...) {
          if (!failed.exchange(true)) error = std::current_exception();
          return;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

namespace {

void validate(const EnsembleSpec& spec) {
  if (spec.n_steps < 1) throw ArgumentError("n_steps must be >= 1");
  if (spec.n_trials < 1) throw ArgumentError("n_trials must be >= 1");
  if (const auto* f = std::get_if<EnvSampler>(&spec.env_source); f && !*f)
    throw ArgumentError("ensemble has no environment source");
}

Environment trial_environment(const EnsembleSpec& spec, std::uint64_t env_seed) {
  if (const auto* env = std::get_if<Environment>(&spec.env_source)) return *env;
  return std::get<EnvSampler>(spec.env_source)(env_seed);
}

std::int64_t squared_norm(const LatticeVec& x) {
  std::int64_t s = 0;
  for (int i = 0; i < x.dim(); ++i) s += x[i] * x[i];
  return s;
}

TrialSummary run_trial(const EnsembleSpec& spec, std::size_t trial, Trajectory* path) {
  TrialSummary out;
  out.env_seed = derive_seed(spec.master_seed, trial);
  const Environment env = trial_environment(spec, out.env_seed);
  RngStream rng(spec.master_seed, trial);
  LatticeVec pos(env.dim());
  std::int64_t min_sq = std::numeric_limits<std::int64_t>::max();
  if (path) {
    path->reserve(spec.n_steps + 1);
    path->push_back(pos);
  }
  auto record = [&](std::size_t k) {
    const std::int64_t sq = squared_norm(pos);
    if (sq < min_sq) min_sq = sq;
    if (sq == 0 && out.first_return == 0) out.first_return = k;
    if (path) path->push_back(pos);
  };

  switch (spec.mode) {
    case Mode::refresh: {
      const Walker walker(env);
      double s = 0.0;
      for (std::size_t k = 1; k <= spec.n_steps; ++k) {
        s = walker.advance(pos, rng.uniform(), &out.log_measure);
        record(k);
      }
      out.final_s = s;
      break;
    }
    case Mode::faithful: {
      const Walker walker(env);
      double s = rng.uniform();
      for (std::size_t k = 1; k <= spec.n_steps; ++k) {
        s = walker.advance(pos, s, &out.log_measure);
        record(k);
      }
      out.final_s = s;
      break;
    }
    case Mode::exact_rational: {
      if (!env.all_exact()) {
        throw ConfigError("exact_rational mode requires exact rational jump probabilities");
      }
      const PartitionTable table(env);
      Rational s = rational_from_double(rng.uniform());
      for (std::size_t k = 1; k <= spec.n_steps; ++k) {
        const Partition& p = table.at(env, pos);
        const auto b = p.locate(s);
        s = (s - p.exact_breakpoints()[b.index - 1]) / p.exact_widths()[b.index - 1];
        out.log_measure += p.log_widths()[b.index - 1];
        pos += b.displacement;
        record(k);
      }
      out.final_s = s.convert_to<double>();
      break;
    }
  }
  out.endpoint = pos;
  out.min_distance = std::sqrt(static_cast<double>(min_sq));
  out.final_label = env.label_at(pos);
  return out;
}

}  // namespace

EnsembleResult run_ensemble(const EnsembleSpec& spec, bool keep_paths) {
  validate(spec);
  EnsembleResult result;
  result.n_steps = spec.n_steps;
  result.trials.resize(spec.n_trials);
  if (keep_paths) result.paths.resize(spec.n_trials);
  parallel_for(spec.n_trials, spec.threads, [&](std::size_t t) {
    result.trials[t] = run_trial(spec, t, keep_paths ? &result.paths[t] : nullptr);
  });
  return result;
}

std::vector<Trajectory> sample_annealed(const EnsembleSpec& spec) {
  return run_ensemble(spec, true).paths;
}

// ---------------------------------------------------------------------------
// Estimators

namespace {

VelocityEstimate velocity_from_endpoints(const std::vector<LatticeVec>& ends, double n) {
  if (ends.size() < 2) throw ArgumentError("velocity_estimate needs at least 2 trajectories");
  const int d = ends.front().dim();
  VelocityEstimate v{{std::vector<double>(static_cast<std::size_t>(d), 0.0)},
                     std::vector<double>(static_cast<std::size_t>(d), 0.0)};
  std::vector<double> xs(ends.size());
  for (int i = 0; i < d; ++i) {
    for (std::size_t t = 0; t < ends.size(); ++t) xs[t] = static_cast<double>(ends[t][i]) / n;
    const auto m = stats::moments(xs);
    v.mean.components[static_cast<std::size_t>(i)] = m.mean;
    v.std_error[static_cast<std::size_t>(i)] = std::sqrt(m.variance / static_cast<double>(xs.size()));
  }
  return v;
}

DiffusionReport diffusion_from_endpoints(const std::vector<LatticeVec>& ends, double n,
                                         const std::optional<Eigen::MatrixXd>& reference_C) {
  if (ends.size() < 100) throw ArgumentError("diffusion_estimate needs at least 100 trajectories");
  const int d = ends.front().dim();
  const auto rows = static_cast<Eigen::Index>(ends.size());
  Eigen::MatrixXd x(rows, d);
  const double scale = 1.0 / std::sqrt(n);
  for (Eigen::Index t = 0; t < rows; ++t)
    for (int i = 0; i < d; ++i) x(t, i) = static_cast<double>(ends[static_cast<std::size_t>(t)][i]) * scale;

  DiffusionReport r;
  r.n_trials = ends.size();
  const Eigen::RowVectorXd mean = x.colwise().mean();
  const Eigen::MatrixXd centered = x.rowwise() - mean;
  r.empirical_cov = (centered.transpose() * centered) / static_cast<double>(rows - 1);
  r.empirical_cov = 0.5 * (r.empirical_cov + r.empirical_cov.transpose().eval());
  for (int i = 0; i < d; ++i) {
    std::vector<double> col(static_cast<std::size_t>(rows));
    for (Eigen::Index t = 0; t < rows; ++t) col[static_cast<std::size_t>(t)] = x(t, i);
    const auto m = stats::moments(col);
    r.marginal_skewness.push_back(m.skewness);
    r.marginal_excess_kurtosis.push_back(m.excess_kurtosis);
  }
  if (reference_C) {
    if (reference_C->rows() != d || reference_C->cols() != d) {
      throw ArgumentError("reference diffusion matrix has the wrong shape");
    }
    r.reference_C = reference_C;
    r.rel_frobenius_err = (r.empirical_cov - *reference_C).norm() / reference_C->norm();
  }
  return r;
}

std::vector<LatticeVec> endpoints(std::span<const TrialSummary> trials) {
  std::vector<LatticeVec> e;
  e.reserve(trials.size());
  for (const auto& t : trials) e.push_back(t.endpoint);
  return e;
}

std::size_t common_length(std::span<const Trajectory> trajs) {
  if (trajs.empty()) throw ArgumentError("no trajectories");
  const std::size_t len = trajs.front().size();
  for (const auto& t : trajs)
    if (t.size() != len) throw ArgumentError("trajectories have different lengths");
  if (len < 2) throw ArgumentError("trajectories need at least one step");
  return len - 1;
}

}  // namespace

VelocityEstimate velocity_estimate(std::span<const Trajectory> trajs) {
  const std::size_t n = common_length(trajs);
  std::vector<LatticeVec> ends;
  for (const auto& t : trajs) ends.push_back(t.back());
  return velocity_from_endpoints(ends, static_cast<double>(n));
}

VelocityEstimate velocity_estimate(std::span<const TrialSummary> trials, std::size_t n_steps) {
  if (n_steps < 1) throw ArgumentError("n_steps must be >= 1");
  return velocity_from_endpoints(endpoints(trials), static_cast<double>(n_steps));
}

std::vector<PolylineVertex> rescaled_trajectory(const Trajectory& traj) {
  std::vector<PolylineVertex> out;
  if (traj.empty()) return out;
  const std::size_t n = traj.size() - 1;
  const int d = traj.front().dim();
  if (n == 0) {
    out.push_back({0.0, std::vector<double>(static_cast<std::size_t>(d), 0.0)});
    return out;
  }
  const double scale = 1.0 / std::sqrt(static_cast<double>(n));
  out.reserve(traj.size());
  for (std::size_t k = 0; k <= n; ++k) {
    PolylineVertex v{static_cast<double>(k) / static_cast<double>(n), {}};
    for (int i = 0; i < d; ++i) v.value.push_back(static_cast<double>(traj[k][i]) * scale);
    out.push_back(std::move(v));
  }
  return out;
}

DiffusionReport diffusion_estimate(std::span<const TrialSummary> trials, std::size_t n_steps,
                                   const std::optional<Eigen::MatrixXd>& reference_C) {
  if (n_steps < 1) throw ArgumentError("n_steps must be >= 1");
  return diffusion_from_endpoints(endpoints(trials), static_cast<double>(n_steps), reference_C);
}

DiffusionReport diffusion_estimate(std::span<const Trajectory> trajs,
                                   const std::optional<Eigen::MatrixXd>& reference_C) {
  const std::size_t n = common_length(trajs);
  std::vector<LatticeVec> ends;
  for (const auto& t : trajs) ends.push_back(t.back());
  return diffusion_from_endpoints(ends, static_cast<double>(n), reference_C);
}

RecurrenceReport recurrence_report(std::span<const TrialSummary> trials, std::size_t n_steps,
                                   std::size_t horizon) {
  if (trials.empty()) throw ArgumentError("no trials");
  if (horizon > n_steps) throw ArgumentError("horizon exceeds the recorded number of steps");
  RecurrenceReport r;
  r.horizon = horizon;
  std::size_t returned = 0;
  for (const auto& t : trials)
    if (t.first_return != 0 && t.first_return <= horizon) ++returned;
  const double n = static_cast<double>(trials.size());
  r.fraction_returned = static_cast<double>(returned) / n;
  r.std_error = std::sqrt(r.fraction_returned * (1.0 - r.fraction_returned) / n);
  if (horizon == n_steps) {
    for (const auto& t : trials) ++r.min_distance_histogram[static_cast<std::int64_t>(std::floor(t.min_distance))];
  }
  return r;
}

RecurrenceReport recurrence_report(std::span<const Trajectory> trajs) {
  const std::size_t n = common_length(trajs);
  std::vector<TrialSummary> trials;
  trials.reserve(trajs.size());
  for (const auto& path : trajs) {
    TrialSummary t;
    double min_d = std::numeric_limits<double>::infinity();
    for (std::size_t k = 1; k < path.size(); ++k) {
      min_d = std::min(min_d, path[k].norm());
      if (t.first_return == 0 && path[k].is_zero()) t.first_return = k;
    }
    t.min_distance = min_d;
    t.endpoint = path.back();
    trials.push_back(t);
  }
  return recurrence_report(trials, n, n);
}

double exact_return_probability(const Environment& env, std::size_t n) {
  const int d = env.dim();
  std::int64_t reach = 0;
  for (const auto& law : env.laws())
    for (const auto& e : law.entries())
      for (int i = 0; i < d; ++i) reach = std::max<std::int64_t>(reach, std::llabs(e.displacement[i]));
  const std::int64_t radius = reach * static_cast<std::int64_t>(n);
  const std::int64_t side = 2 * radius + 1;
  double cells = 1.0;
  for (int i = 0; i < d; ++i) cells *= static_cast<double>(side);
  if (cells * static_cast<double>(n) > 4e9) {
    throw ArgumentError("exact return probability: grid too large for this dimension and horizon");
  }
  const auto total = static_cast<std::size_t>(cells);
  auto to_index = [&](const LatticeVec& x) {
    std::size_t idx = 0, stride = 1;
    for (int i = 0; i < d; ++i) {
      idx += static_cast<std::size_t>(x[i] + radius) * stride;
      stride *= static_cast<std::size_t>(side);
    }
    return idx;
  };
  auto to_site = [&](std::size_t idx) {
    LatticeVec x(d);
    for (int i = 0; i < d; ++i) {
      x[i] = static_cast<std::int64_t>(idx % static_cast<std::size_t>(side)) - radius;
      idx /= static_cast<std::size_t>(side);
    }
    return x;
  };
  // Jumps out of each cell, precomputed once. Mass never leaves the grid
  // within n steps.
  std::vector<std::size_t> label(total);
  for (std::size_t c = 0; c < total; ++c) label[c] = env.label_at(to_site(c));
  std::vector<std::vector<std::pair<std::ptrdiff_t, double>>> moves;
  for (const auto& law : env.laws()) {
    std::vector<std::pair<std::ptrdiff_t, double>> m;
    for (const auto& e : law.entries()) {
      std::ptrdiff_t off = 0, stride = 1;
      for (int i = 0; i < d; ++i) {
        off += static_cast<std::ptrdiff_t>(e.displacement[i]) * stride;
        stride *= static_cast<std::ptrdiff_t>(side);
      }
      m.emplace_back(off, e.prob);
    }
    moves.push_back(std::move(m));
  }
  const std::size_t origin = to_index(LatticeVec(d));
  std::vector<double> cur(total, 0.0), next(total, 0.0);
  cur[origin] = 1.0;
  double returned = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    std::fill(next.begin(), next.end(), 0.0);
    for (std::size_t c = 0; c < total; ++c) {
      const double mass = cur[c];
      if (mass == 0.0) continue;
      for (const auto& [off, p] : moves[label[c]]) {
        next[static_cast<std::size_t>(static_cast<std::ptrdiff_t>(c) + off)] += mass * p;
      }
    }
    returned += next[origin];
    next[origin] = 0.0;
    std::swap(cur, next);
  }
  return returned;
}

CylinderDecayReport cylinder_decay_check(const Environment& env, std::size_t n, std::size_t trials,
                                         std::uint64_t seed, unsigned threads) {
  if (env.kind() != EnvKind::periodic) {
    throw UnsupportedError("cylinder_decay_check needs a periodic environment for its exact oracle");
  }
  CylinderDecayReport r;
  r.deterministic_sites = check_nondeterministic(env, 1).deterministic_sites;
  const EvpChain chain = build_evp_chain(env);
  r.exact_rate = exact_entropy_rate(env, stationary_distribution(chain));

  EnsembleSpec spec{env, n, trials, Mode::refresh, seed, threads};
  const auto result = run_ensemble(spec);
  std::vector<double> rates;
  rates.reserve(trials);
  for (const auto& t : result.trials) rates.push_back(-t.log_measure / static_cast<double>(n));
  const auto m = stats::moments(rates);
  r.mean_rate = m.mean;
  r.std_error = std::sqrt(m.variance / static_cast<double>(rates.size()));
  r.rel_err = r.exact_rate > 0.0 ? std::abs(r.mean_rate - r.exact_rate) / r.exact_rate
                                 : std::abs(r.mean_rate);
  return r;
}

ErgodicityReport ergodicity_diagnostic(const EnsembleSpec& spec, const SiteObservable& observable,
                                       std::optional<std::size_t> n_burn, std::size_t n_avg,
                                       double threshold) {
  if (spec.n_trials < 2) throw ArgumentError("ergodicity diagnostic needs at least 2 realizations");
  if (n_avg < 1) throw ArgumentError("n_avg must be >= 1");
  const std::size_t burn = n_burn.value_or(n_avg / 10);
  ErgodicityReport r;
  r.threshold = threshold;
  r.per_realization_averages.resize(spec.n_trials);
  parallel_for(spec.n_trials, spec.threads, [&](std::size_t t) {
    const Environment env = trial_environment(spec, derive_seed(spec.master_seed, t));
    RngStream rng(spec.master_seed, t);
    PvpState state = PvpState::start(env, spec.mode == Mode::refresh ? 0.0 : rng.uniform());
    if (burn > 0) state = iterate(state, burn, spec.mode, &rng).final_state;
    r.per_realization_averages[t] = birkhoff_average(state, observable, n_avg, spec.mode, &rng);
  });
  const auto m = stats::moments(r.per_realization_averages);
  r.mean = m.mean;
  r.cross_variance = m.variance;
  r.consistent_with_ergodicity = r.cross_variance < threshold;
  return r;
}

}  // namespace rwre
