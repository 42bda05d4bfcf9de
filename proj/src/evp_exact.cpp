#include "rwre/evp_exact.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>

#include "rwre/errors.hpp"
#include "rwre/pvp_core.hpp"
#include "rwre/rational.hpp"

namespace rwre {

EvpChain build_evp_chain(const Environment& env) {
  if (env.kind() != EnvKind::periodic) {
    throw UnsupportedError("the EVP chain is only finite for periodic environments, not " +
                           to_string(env.kind()));
  }
  const auto n = static_cast<Eigen::Index>(env.torus_size());
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const LatticeVec x = env.torus_site(static_cast<std::size_t>(k));
    for (const auto& e : env.dist_at(x).entries()) {
      m(k, static_cast<Eigen::Index>(env.torus_index(x + e.displacement))) += e.prob;
    }
  }
  return {env, std::move(m)};
}

namespace {

using Graph = std::vector<std::vector<std::size_t>>;

Graph positive_graph(const Eigen::MatrixXd& m) {
  Graph g(static_cast<std::size_t>(m.rows()));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      if (m(i, j) > 0.0) g[static_cast<std::size_t>(i)].push_back(static_cast<std::size_t>(j));
  return g;
}

// Tarjan's algorithm, iterative. Returns component id per vertex.
std::vector<std::size_t> strongly_connected(const Graph& g, std::size_t& count) {
  const std::size_t n = g.size();
  constexpr auto kUnset = std::numeric_limits<std::size_t>::max();
  std::vector<std::size_t> index(n, kUnset), low(n, 0), comp(n, kUnset);
  std::vector<bool> on_stack(n, false);
  std::vector<std::size_t> stack;
  std::vector<std::pair<std::size_t, std::size_t>> call;  // (vertex, next edge)
  std::size_t next_index = 0;
  count = 0;
  for (std::size_t root = 0; root < n; ++root) {
    if (index[root] != kUnset) continue;
    call.push_back({root, 0});
    while (!call.empty()) {
      auto& [v, edge] = call.back();
      if (edge == 0 && index[v] == kUnset) {
        index[v] = low[v] = next_index++;
        stack.push_back(v);
        on_stack[v] = true;
      }
      if (edge < g[v].size()) {
        const std::size_t w = g[v][edge++];
        if (index[w] == kUnset) {
          call.push_back({w, 0});
        } else if (on_stack[w]) {
          low[v] = std::min(low[v], index[w]);
        }
        continue;
      }
      if (low[v] == index[v]) {
        std::size_t w;
        do {
          w = stack.back();
          stack.pop_back();
          on_stack[w] = false;
          comp[w] = count;
        } while (w != v);
        ++count;
      }
      const std::size_t finished = v;
      call.pop_back();
      if (!call.empty()) {
        const std::size_t parent = call.back().first;
        low[parent] = std::min(low[parent], low[finished]);
      }
    }
  }
  return comp;
}

struct ClassStructure {
  std::vector<std::vector<std::size_t>> sccs;
  std::vector<std::vector<std::size_t>> closed;
};

ClassStructure classes(const Graph& g) {
  std::size_t count = 0;
  const auto comp = strongly_connected(g, count);
  ClassStructure cs;
  cs.sccs.resize(count);
  for (std::size_t v = 0; v < g.size(); ++v) cs.sccs[comp[v]].push_back(v);
  std::sort(cs.sccs.begin(), cs.sccs.end());  // members already ascending
  for (const auto& c : cs.sccs) {
    const std::size_t id = comp[c.front()];
    bool is_closed = true;
    for (auto v : c)
      for (auto w : g[v])
        if (comp[w] != id) is_closed = false;
    if (is_closed) cs.closed.push_back(c);
  }
  return cs;
}

std::vector<bool> reachable_from(const Graph& g, std::size_t start, std::size_t horizon) {
  std::vector<bool> seen(g.size(), false);
  std::vector<std::size_t> frontier{start};
  seen[start] = true;
  for (std::size_t depth = 0; depth < horizon && !frontier.empty(); ++depth) {
    std::vector<std::size_t> next;
    for (auto v : frontier)
      for (auto w : g[v])
        if (!seen[w]) {
          seen[w] = true;
          next.push_back(w);
        }
    frontier = std::move(next);
  }
  return seen;
}

double stationarity_residual(const Eigen::MatrixXd& m, const Eigen::VectorXd& pi) {
  const Eigen::VectorXd r = m.transpose() * pi - pi;
  return std::max(r.cwiseAbs().maxCoeff(), std::abs(pi.sum() - 1.0));
}

// Direct solve on an irreducible (sub)chain. nullopt when the result misses
// the residual tolerance or is not a probability vector.
std::optional<Eigen::VectorXd> direct_solve(const Eigen::MatrixXd& m) {
  const Eigen::Index n = m.rows();
  Eigen::MatrixXd a(n + 1, n);
  a.topRows(n) = m.transpose() - Eigen::MatrixXd::Identity(n, n);
  a.row(n).setOnes();
  Eigen::VectorXd b = Eigen::VectorXd::Zero(n + 1);
  b(n) = 1.0;
  Eigen::VectorXd pi = a.colPivHouseholderQr().solve(b);
  if (!pi.allFinite() || pi.minCoeff() < -kStationaryResidualTol) return std::nullopt;
  pi = pi.cwiseMax(0.0);
  pi /= pi.sum();
  if (stationarity_residual(m, pi) > kStationaryResidualTol) return std::nullopt;
  return pi;
}

Eigen::MatrixXd submatrix(const Eigen::MatrixXd& m, const std::vector<std::size_t>& rows,
                          const std::vector<std::size_t>& cols) {
  Eigen::MatrixXd s(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < cols.size(); ++j)
      s(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          m(static_cast<Eigen::Index>(rows[i]), static_cast<Eigen::Index>(cols[j]));
  return s;
}

}  // namespace

Eigen::VectorXd stationary_by_power_iteration(const EvpChain& chain, std::size_t budget,
                                              double step_tol) {
  const Eigen::Index n = chain.matrix.rows();
  const Eigen::MatrixXd mt = chain.matrix.transpose();
  Eigen::VectorXd v = Eigen::VectorXd::Zero(n);
  v(0) = 1.0;
  for (std::size_t it = 0; it < budget; ++it) {
    Eigen::VectorXd next = 0.5 * (v + mt * v);
    next /= next.sum();
    const double delta = (next - v).lpNorm<1>();
    v = std::move(next);
    if (delta < step_tol) return v;
  }
  throw NumericalError("power iteration did not reach step tolerance within " +
                       std::to_string(budget) + " iterations");
}

StationaryMeasure stationary_distribution(const EvpChain& chain) {
  const Graph g = positive_graph(chain.matrix);
  const ClassStructure cs = classes(g);
  const std::size_t n = chain.size();

  if (cs.sccs.size() == 1) {
    if (auto pi = direct_solve(chain.matrix)) return {*pi, false, "direct"};
    Eigen::VectorXd pi = stationary_by_power_iteration(chain);
    if (stationarity_residual(chain.matrix, pi) > kStationaryResidualTol) {
      throw NumericalError("no stationary measure within residual tolerance");
    }
    return {pi, false, "power"};
  }

  // Reducible: mix the closed classes reachable from 0 by their absorption
  // probabilities from 0.
  const auto reach = reachable_from(g, 0, n);
  std::vector<std::size_t> class_of(n, std::numeric_limits<std::size_t>::max());
  std::vector<std::vector<std::size_t>> sinks;
  for (const auto& c : cs.closed) {
    if (!reach[c.front()]) continue;
    for (auto v : c) class_of[v] = sinks.size();
    sinks.push_back(c);
  }
  std::vector<std::size_t> transient;
  for (std::size_t v = 0; v < n; ++v)
    if (reach[v] && class_of[v] == std::numeric_limits<std::size_t>::max()) transient.push_back(v);

  Eigen::VectorXd absorb = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(sinks.size()));
  if (class_of[0] != std::numeric_limits<std::size_t>::max()) {
    absorb(static_cast<Eigen::Index>(class_of[0])) = 1.0;
  } else {
    // h = M_TT h + M_TC 1_C for each closed class C.
    const auto t = static_cast<Eigen::Index>(transient.size());
    const Eigen::MatrixXd a = Eigen::MatrixXd::Identity(t, t) - submatrix(chain.matrix, transient, transient);
    const auto lu = a.partialPivLu();
    const auto zero_pos = static_cast<Eigen::Index>(
        std::find(transient.begin(), transient.end(), std::size_t{0}) - transient.begin());
    for (std::size_t c = 0; c < sinks.size(); ++c) {
      const Eigen::VectorXd rhs = submatrix(chain.matrix, transient, sinks[c]).rowwise().sum();
      absorb(static_cast<Eigen::Index>(c)) = lu.solve(rhs)(zero_pos);
    }
  }

  Eigen::VectorXd pi = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
  for (std::size_t c = 0; c < sinks.size(); ++c) {
    if (absorb(static_cast<Eigen::Index>(c)) <= 0.0) continue;
    const Eigen::MatrixXd sub = submatrix(chain.matrix, sinks[c], sinks[c]);
    auto local = direct_solve(sub);
    if (!local) {
      EvpChain sub_chain{chain.env, sub};
      local = stationary_by_power_iteration(sub_chain);
    }
    for (std::size_t i = 0; i < sinks[c].size(); ++i) {
      pi(static_cast<Eigen::Index>(sinks[c][i])) +=
          absorb(static_cast<Eigen::Index>(c)) * (*local)(static_cast<Eigen::Index>(i));
    }
  }
  pi /= pi.sum();
  if (stationarity_residual(chain.matrix, pi) > kStationaryResidualTol) {
    throw NumericalError("reducible chain: stationary mixture misses residual tolerance");
  }
  return {pi, true, "absorption"};
}

double verify_steady_state_identity(const EvpChain& chain, const StationaryMeasure& pi) {
  const Environment& env = chain.env;
  const std::size_t n = env.torus_size();
  if (static_cast<std::size_t>(pi.weights.size()) != n) throw ArgumentError("measure size mismatch");
  auto w = [&](std::size_t k) { return pi.weights(static_cast<Eigen::Index>(k)); };

  // With rational laws the identity is evaluated exactly on the given
  // weights, so the residual reflects the measure alone.
  if (env.all_exact()) {
    std::vector<Rational> inflow(n, Rational(0));
    for (std::size_t k = 0; k < n; ++k) {
      const LatticeVec x = env.torus_site(k);
      const Rational wk = rational_from_double(w(k));
      const auto& law = env.dist_at(x);
      for (std::size_t i = 0; i < law.size(); ++i)
        inflow[env.torus_index(x + law.entries()[i].displacement)] += wk * law.exact_probs()[i];
    }
    double worst = 0.0;
    for (std::size_t y = 0; y < n; ++y) {
      const Rational gap = abs(rational_from_double(w(y)) - inflow[y]);
      worst = std::max(worst, static_cast<double>(gap));
    }
    return worst;
  }

  std::vector<double> inflow(n, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    const LatticeVec x = env.torus_site(k);
    for (const auto& e : env.dist_at(x).entries()) inflow[env.torus_index(x + e.displacement)] += w(k) * e.prob;
  }
  double worst = 0.0;
  for (std::size_t y = 0; y < n; ++y) worst = std::max(worst, std::abs(w(y) - inflow[y]));
  return worst;
}

DriftVector exact_velocity(const Environment& env, const StationaryMeasure& pi) {
  DriftVector v{std::vector<double>(static_cast<std::size_t>(env.dim()), 0.0)};
  for (std::size_t k = 0; k < env.torus_size(); ++k) {
    const double w = pi.weights(static_cast<Eigen::Index>(k));
    const DriftVector l = local_drift(env, env.torus_site(k));
    for (int i = 0; i < env.dim(); ++i) v.components[static_cast<std::size_t>(i)] += w * l[i];
  }
  return v;
}

Eigen::MatrixXd exact_diffusion_matrix(const Environment& env, const StationaryMeasure& pi) {
  if (!check_doubly_stochastic(env, 1).ok) {
    throw ContractError("diffusion matrix needs a doubly stochastic environment: check_doubly_stochastic failed");
  }
  if (const auto z = check_zero_drift(env, 1); !z.ok) {
    throw ContractError("diffusion matrix needs zero local drift: check_zero_drift failed (max |drift| = " +
                        std::to_string(z.max_drift_norm) + ")");
  }
  const int d = env.dim();
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(d, d);
  for (std::size_t k = 0; k < env.torus_size(); ++k) {
    const double w = pi.weights(static_cast<Eigen::Index>(k));
    for (const auto& e : env.dist_at(env.torus_site(k)).entries()) {
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j)
          c(i, j) += w * e.prob * static_cast<double>(e.displacement[i]) *
                     static_cast<double>(e.displacement[j]);
    }
  }
  return c;
}

double exact_entropy_rate(const Environment& env, const StationaryMeasure& pi) {
  double h = 0.0;
  for (std::size_t k = 0; k < env.torus_size(); ++k) {
    h += pi.weights(static_cast<Eigen::Index>(k)) * step_entropy(env, env.torus_site(k));
  }
  return h;
}

Eigen::VectorXd radon_nikodym(const StationaryMeasure& pi) {
  return pi.weights * static_cast<double>(pi.weights.size());
}

std::vector<LatticeVec> standard_generators(int dim) {
  std::vector<LatticeVec> g;
  for (int i = 0; i < dim; ++i) g.push_back(LatticeVec::unit(dim, i));
  return g;
}

TransitivityReport transitivity_report(const Environment& env, const std::vector<LatticeVec>& generators,
                                       std::size_t horizon) {
  if (horizon < 1) throw ArgumentError("horizon must be >= 1");
  const EvpChain chain = build_evp_chain(env);
  const Graph g = positive_graph(chain.matrix);
  const std::size_t n = chain.size();

  TransitivityReport r;
  r.generators = generators;
  r.horizon = horizon;
  const auto reach = reachable_from(g, 0, horizon);
  for (std::size_t v = 0; v < n; ++v)
    if (reach[v]) r.reachable.push_back(v);

  ClassStructure cs = classes(g);
  r.sccs = std::move(cs.sccs);
  r.sinks = std::move(cs.closed);

  // Subgroup of the torus generated by the generators.
  std::vector<bool> in_group(n, false);
  std::deque<std::size_t> queue{0};
  in_group[0] = true;
  while (!queue.empty()) {
    const LatticeVec x = env.torus_site(queue.front());
    queue.pop_front();
    for (const auto& gen : generators) {
      if (gen.dim() != env.dim()) throw ArgumentError("generator dimension mismatch");
      for (const auto& y : {x + gen, x - gen}) {
        const std::size_t k = env.torus_index(y);
        if (!in_group[k]) {
          in_group[k] = true;
          queue.push_back(k);
        }
      }
    }
  }
  r.transitive = true;
  for (std::size_t v = 0; v < n; ++v)
    if (in_group[v] && !reach[v]) r.transitive = false;
  return r;
}

}  // namespace rwre
