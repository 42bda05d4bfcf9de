#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "rwre/env_model.hpp"
#include "rwre/pvp_core.hpp"

namespace rwre {

// Maps a per-trial environment seed to an environment; realises a law Pi on
// environments.
using EnvSampler = std::function<Environment(std::uint64_t env_seed)>;

// Pi for the family of `base`: a uniformly random translate for periodic
// environments (the torus average), a fresh master seed for iid and A/B
// column fields.
EnvSampler annealed_sampler(const Environment& base);

// Periodic only: a translate drawn from the stationary law of the
// environment seen from the walker, so the EVP starts in equilibrium.
EnvSampler stationary_sampler(const Environment& base);

struct EnsembleSpec {
  // A fixed environment gives the quenched ensemble; a sampler the annealed one.
  std::variant<Environment, EnvSampler> env_source = EnvSampler{};
  std::size_t n_steps = 1;
  std::size_t n_trials = 1;
  Mode mode = Mode::refresh;
  std::uint64_t master_seed = 0;
  // Worker count. Results never depend on it.
  unsigned threads = 1;
};

struct TrialSummary {
  std::uint64_t env_seed = 0;
  LatticeVec endpoint;
  std::size_t first_return = 0;  // first k >= 1 with X_k = 0, 0 when none
  double min_distance = 0.0;     // min over 1 <= k <= n of |X_k|
  double log_measure = 0.0;      // log of the cylinder length of the path
  double final_s = 0.0;
  std::size_t final_label = 0;   // index of the law at X_n (torus site for periodic)
};

struct EnsembleResult {
  std::size_t n_steps = 0;
  std::vector<TrialSummary> trials;
  std::vector<Trajectory> paths;  // filled only when requested
};

// Trial t walks in environment source(derive_seed(master_seed, t)) driven by
// RngStream(master_seed, t), so the output is a pure function of the spec.
EnsembleResult run_ensemble(const EnsembleSpec& spec, bool keep_paths = false);
std::vector<Trajectory> sample_annealed(const EnsembleSpec& spec);

// Runs fn(0..count-1) on `threads` workers.
void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& fn);

struct VelocityEstimate {
  DriftVector mean;
  std::vector<double> std_error;
};
VelocityEstimate velocity_estimate(std::span<const Trajectory> trajs);
VelocityEstimate velocity_estimate(std::span<const TrialSummary> trials, std::size_t n_steps);

struct PolylineVertex {
  double t;
  std::vector<double> value;
};
// Vertices (k/n, X_k / sqrt(n)) of the rescaled path.
std::vector<PolylineVertex> rescaled_trajectory(const Trajectory& traj);

struct DiffusionReport {
  Eigen::MatrixXd empirical_cov;
  std::optional<Eigen::MatrixXd> reference_C;
  std::optional<double> rel_frobenius_err;
  std::vector<double> marginal_skewness;
  std::vector<double> marginal_excess_kurtosis;
  std::size_t n_trials = 0;
};
// Covariance of X_n / sqrt(n) across trials; needs >= 100 trials.
DiffusionReport diffusion_estimate(std::span<const TrialSummary> trials, std::size_t n_steps,
                                   const std::optional<Eigen::MatrixXd>& reference_C = std::nullopt);
DiffusionReport diffusion_estimate(std::span<const Trajectory> trajs,
                                   const std::optional<Eigen::MatrixXd>& reference_C = std::nullopt);

struct RecurrenceReport {
  std::size_t horizon = 0;
  double fraction_returned = 0.0;
  double std_error = 0.0;
  // floor(min_{1<=k<=n} |X_k|) -> trial count. Only filled when the horizon
  // equals the recorded length.
  std::map<std::int64_t, std::size_t> min_distance_histogram;
};
RecurrenceReport recurrence_report(std::span<const TrialSummary> trials, std::size_t n_steps,
                                   std::size_t horizon);
RecurrenceReport recurrence_report(std::span<const Trajectory> trajs);

// P_w(X_k = 0 for some 1 <= k <= n) by dynamic programming over Z^d.
double exact_return_probability(const Environment& env, std::size_t n);

struct CylinderDecayReport {
  double mean_rate = 0.0;
  double std_error = 0.0;
  double exact_rate = 0.0;
  double rel_err = 0.0;
  std::vector<LatticeVec> deterministic_sites;  // sites violating "no deterministic walks"
};
// -(1/n) log m(cylinder) over refresh-mode trajectories from the origin,
// against the exact entropy rate of the periodic environment.
CylinderDecayReport cylinder_decay_check(const Environment& env, std::size_t n, std::size_t trials,
                                         std::uint64_t seed, unsigned threads = 1);

struct ErgodicityReport {
  std::vector<double> per_realization_averages;
  double mean = 0.0;
  double cross_variance = 0.0;
  double threshold = 0.0;
  bool consistent_with_ergodicity = true;  // cross_variance < threshold
};
// One long Birkhoff average per sampled environment after a burn-in
// (default n_avg / 10); spread across realizations detects non-ergodicity.
ErgodicityReport ergodicity_diagnostic(const EnsembleSpec& spec, const SiteObservable& observable,
                                       std::optional<std::size_t> n_burn, std::size_t n_avg,
                                       double threshold);

}  // namespace rwre
