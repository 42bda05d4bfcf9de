#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rwre/env_model.hpp"

namespace rwre {

// The environment-viewed-from-the-particle chain of a periodic environment,
// reduced to its torus: M[x][x'] = sum of p_x(y) over y with x + y = x' mod L.
// Site k is env.torus_site(k), in the environment's own frame.
struct EvpChain {
  Environment env;
  Eigen::MatrixXd matrix;

  std::size_t size() const { return static_cast<std::size_t>(matrix.rows()); }
};

EvpChain build_evp_chain(const Environment& env);

struct StationaryMeasure {
  Eigen::VectorXd weights;
  // Not irreducible on the torus. Weights then describe the long-run law of
  // the chain started at site 0 (absorption-weighted mix of its closed classes).
  bool reducible = false;
  std::string method;  // "direct", "power" or "absorption"
};

inline constexpr double kStationaryResidualTol = 1e-10;
inline constexpr std::size_t kPowerIterationBudget = 1'000'000;
inline constexpr double kPowerIterationStepTol = 1e-12;

// Solves pi M = pi, sum pi = 1 by a direct solve of (M^T - I) with the
// normalisation row appended, falling back to power iteration.
StationaryMeasure stationary_distribution(const EvpChain& chain);

// Power iteration on the lazy chain (I + M)/2, which has the same stationary
// vectors as M and is aperiodic. Throws NumericalError when the budget runs out.
Eigen::VectorXd stationary_by_power_iteration(const EvpChain& chain,
                                              std::size_t budget = kPowerIterationBudget,
                                              double step_tol = kPowerIterationStepTol);

// max over singletons B = {y} of |pi(B) - sum_i sum_{x : x + d_i = y} pi(x) q_i(x)|,
// evaluated from the environment's jump laws rather than the matrix.
double verify_steady_state_identity(const EvpChain& chain, const StationaryMeasure& pi);

DriftVector exact_velocity(const Environment& env, const StationaryMeasure& pi);

// sum_x pi(x) sum_y p_x(y) y y^T. Requires a doubly stochastic, zero-drift
// environment; throws ContractError naming the failed check otherwise.
Eigen::MatrixXd exact_diffusion_matrix(const Environment& env, const StationaryMeasure& pi);

// sum_x pi(x) H(p_x): the almost-sure exponential decay rate of cylinder lengths.
double exact_entropy_rate(const Environment& env, const StationaryMeasure& pi);

// Densities pi(x) / (1/|torus|).
Eigen::VectorXd radon_nikodym(const StationaryMeasure& pi);

struct TransitivityReport {
  std::vector<LatticeVec> generators;
  std::size_t horizon = 0;
  std::vector<std::size_t> reachable;              // torus indices, sorted
  std::vector<std::vector<std::size_t>> sccs;      // each sorted; ordered by smallest member
  std::vector<std::vector<std::size_t>> sinks;     // closed SCCs
  bool transitive = false;
};

// Reachability from site 0 on the positive-probability jump graph within
// `horizon` steps, strongly connected components, and closed classes.
// Transitive when every torus site in the subgroup generated by
// `generators` is reachable. A truncated "no" is inconclusive.
TransitivityReport transitivity_report(const Environment& env, const std::vector<LatticeVec>& generators,
                                       std::size_t horizon);

std::vector<LatticeVec> standard_generators(int dim);

}  // namespace rwre
