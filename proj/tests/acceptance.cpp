// One PASS/FAIL line per acceptance criterion; exit status 1 if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "rwre/env_json.hpp"
#include "rwre/env_model.hpp"
#include "rwre/errors.hpp"
#include "rwre/evp_exact.hpp"
#include "rwre/harness.hpp"
#include "rwre/mc_stats.hpp"
#include "rwre/pvp_core.hpp"
#include "rwre/rational.hpp"
#include "rwre/rng.hpp"
#include "rwre/stats.hpp"
#include "test_util.hpp"

using namespace rwre;
namespace fs = std::filesystem;

namespace {

const unsigned kThreads = std::max(1u, std::thread::hardware_concurrency());

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4g", x);
  return buf;
}

JumpDistribution random_rational_law(int d, RngStream& rng) {
  std::vector<LatticeVec> support;
  const std::size_t k = 1 + rng.next_u64() % 5;
  while (support.size() < k) {
    LatticeVec y(d);
    for (int i = 0; i < d; ++i) y[i] = static_cast<std::int64_t>(rng.next_u64() % 5) - 2;
    bool dup = false;
    for (const auto& s : support) dup = dup || s == y;
    if (!dup) support.push_back(y);
  }
  std::vector<std::int64_t> w(k);
  std::int64_t total = 0;
  for (auto& x : w) total += x = 1 + static_cast<std::int64_t>(rng.next_u64() % 97);
  std::vector<std::pair<LatticeVec, Rational>> e;
  for (std::size_t i = 0; i < k; ++i) e.push_back({support[i], Rational(w[i], total)});
  return JumpDistribution(d, std::move(e));
}

// Positive laws on a fixed nearest-neighbour support (with holding).
JumpDistribution random_floor_law(int d, double floor, RngStream& rng) {
  std::vector<LatticeVec> support{LatticeVec(d)};
  for (int i = 0; i < d; ++i) {
    support.push_back(LatticeVec::unit(d, i, 1));
    support.push_back(LatticeVec::unit(d, i, -1));
  }
  std::vector<double> w(support.size());
  double total = 0.0;
  for (auto& x : w) total += x = rng.uniform();
  const double scale = 1.0 - floor * static_cast<double>(w.size());
  std::vector<JumpEntry> e;
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < w.size(); ++i) {
    const double p = floor + scale * w[i] / total;
    acc += p;
    e.push_back({support[i], p});
  }
  e.push_back({support.back(), 1.0 - acc});
  return JumpDistribution(d, std::move(e));
}

Environment random_periodic(RngStream& rng, int d, std::int64_t max_extent, double floor) {
  std::vector<std::int64_t> ext;
  std::size_t sites = 1;
  for (int i = 0; i < d; ++i) {
    ext.push_back(1 + static_cast<std::int64_t>(rng.next_u64() % static_cast<std::uint64_t>(max_extent)));
    sites *= static_cast<std::size_t>(ext.back());
  }
  std::vector<JumpDistribution> table;
  for (std::size_t k = 0; k < sites; ++k) table.push_back(random_floor_law(d, floor, rng));
  return Environment::periodic(ext, std::move(table));
}

bool irreducible(const Environment& env) {
  return transitivity_report(env, standard_generators(env.dim()), env.torus_size()).sccs.size() == 1;
}

// Return-by-n probability of the simple walk on Z, mass propagated directly.
double srw_return_oracle(std::size_t n) {
  const auto w = static_cast<std::ptrdiff_t>(n) + 1;
  std::vector<double> alive(static_cast<std::size_t>(2 * w + 1), 0.0);
  alive[static_cast<std::size_t>(w)] = 1.0;
  double returned = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    std::vector<double> next(alive.size(), 0.0);
    for (std::size_t i = 1; i + 1 < alive.size(); ++i) {
      next[i + 1] += 0.5 * alive[i];
      next[i - 1] += 0.5 * alive[i];
    }
    returned += next[static_cast<std::size_t>(w)];
    next[static_cast<std::size_t>(w)] = 0.0;
    alive = std::move(next);
  }
  return returned;
}

EnsembleSpec spec_for(std::variant<Environment, EnvSampler> src, std::size_t n, std::size_t trials,
                      std::uint64_t seed) {
  EnsembleSpec s;
  s.env_source = std::move(src);
  s.n_steps = n;
  s.n_trials = trials;
  s.master_seed = seed;
  s.threads = kThreads;
  return s;
}

Outcome coding_round_trip() {
  RngStream rng(1001, 0);
  std::size_t bad = 0;
  double worst = 0.0;
  for (int t = 0; t < 100; ++t) {
    const int d = 1 + t % 2;
    std::vector<std::int64_t> ext;
    std::size_t sites = 1;
    for (int i = 0; i < d; ++i) {
      ext.push_back(1 + static_cast<std::int64_t>(rng.next_u64() % 3));
      sites *= static_cast<std::size_t>(ext.back());
    }
    std::vector<JumpDistribution> table;
    for (std::size_t k = 0; k < sites; ++k) table.push_back(random_rational_law(d, rng));
    const auto env = Environment::periodic(ext, std::move(table));
    const std::int64_t den = 1 + static_cast<std::int64_t>(rng.next_u64() % 4294967291ULL);
    const Rational s(static_cast<std::int64_t>(rng.next_u64() % static_cast<std::uint64_t>(den)), den);

    const auto seq = encode_trajectory(PvpState::start_exact(env, s), 25);
    const auto cyl = decode_trajectory(env, seq);
    Rational product = 1;
    LatticeVec x(d);
    for (const auto& y : seq) {
      const auto& law = env.dist_at(x);
      for (std::size_t i = 0; i < law.size(); ++i)
        if (law.entries()[i].displacement == y) product *= law.exact_probs()[i];
      x += y;
    }
    const double lm = cylinder_log_measure(env, seq);
    const double gap = std::abs(log_of(cyl.width()) - lm) / std::max(1.0, std::abs(lm));
    worst = std::max(worst, gap);
    if (seq.size() != 25 || !cyl.contains(s) || cyl.width() != product || gap > 1e-12) ++bad;
  }
  return {bad == 0, "failures " + std::to_string(bad) + "/100, max rel log-width gap " + fmt(worst)};
}

Outcome stationarity() {
  const auto env = rwre::testing::striped_martingale(4, 2);
  if (!check_doubly_stochastic(env, 1).ok) return {false, "fixture is not doubly stochastic"};
  const auto res = run_ensemble(spec_for(annealed_sampler(env), 1000, 10000, 2002));
  std::vector<std::size_t> counts(env.torus_size(), 0);
  std::vector<double> s;
  for (const auto& t : res.trials) {
    ++counts[t.final_label];
    s.push_back(t.final_s);
  }
  const auto chi = stats::chi_square_uniform(counts);
  const auto ks = stats::ks_uniform(s);
  return {chi.passes(1e-3) && ks.passes(1e-3),
          "chi-square p " + fmt(chi.p_value) + " (dof " + std::to_string(chi.dof) + "), KS p " + fmt(ks.p_value)};
}

Outcome steady_state() {
  RngStream rng(3003, 0);
  double worst_res = 0.0, worst_gap = 0.0;
  int tested = 0;
  while (tested < 100) {
    const int d = 1 + tested % 2;
    const auto env = random_periodic(rng, d, d == 1 ? 36 : 6, 0.0);
    if (!irreducible(env)) continue;
    const auto chain = build_evp_chain(env);
    const auto pi = stationary_distribution(chain);
    worst_res = std::max(worst_res, verify_steady_state_identity(chain, pi));
    worst_gap = std::max(worst_gap, (stationary_by_power_iteration(chain) - pi.weights).cwiseAbs().maxCoeff());
    ++tested;
  }
  return {worst_res <= 1e-10 && worst_gap <= 1e-9,
          "max residual " + fmt(worst_res) + ", max |direct - power| " + fmt(worst_gap)};
}

Outcome ballisticity() {
  RngStream rng(4004, 0);
  int tested = 0, ok = 0;
  double worst_z = 0.0;
  while (tested < 20) {
    const int d = 1 + tested % 2;
    const auto env = random_periodic(rng, d, 3, 0.05);
    if (!irreducible(env)) continue;
    const auto exact = exact_velocity(env, stationary_distribution(build_evp_chain(env)));
    if (exact.norm() <= 0.05) continue;
    const auto res = run_ensemble(spec_for(stationary_sampler(env), 1000, 10000, rng.next_u64()));
    const auto v = velocity_estimate(res.trials, res.n_steps);
    bool pass = true;
    for (int i = 0; i < d; ++i) {
      const double z = std::abs(v.mean[i] - exact[i]) / v.std_error[static_cast<std::size_t>(i)];
      worst_z = std::max(worst_z, z);
      pass = pass && z <= 4.0;
    }
    ok += pass;
    ++tested;
  }
  return {ok == 20, std::to_string(ok) + "/20 within 4 stderr, worst |z| " + fmt(worst_z)};
}

Outcome quenched_ip() {
  const std::size_t n = 10000, trials = 10000;
  const auto srw2 = Environment::homogeneous(JumpDistribution::simple_walk(2));
  const auto a = diffusion_estimate(run_ensemble(spec_for(srw2, n, trials, 5005)).trials, n,
                                    Eigen::MatrixXd(0.5 * Eigen::MatrixXd::Identity(2, 2)));

  const auto env = rwre::testing::striped_martingale(4, 5);
  const Eigen::MatrixXd C = exact_diffusion_matrix(env, stationary_distribution(build_evp_chain(env)));
  const auto b = diffusion_estimate(run_ensemble(spec_for(stationary_sampler(env), n, trials, 5006)).trials, n, C);

  const auto srw1 = Environment::homogeneous(JumpDistribution::simple_walk(1));
  const auto c = diffusion_estimate(run_ensemble(spec_for(srw1, n, trials, 5007)).trials, n);
  const double skew = c.marginal_skewness[0], kurt = c.marginal_excess_kurtosis[0];

  const bool pass = *a.rel_frobenius_err < 0.05 && *b.rel_frobenius_err < 0.05 && std::abs(skew) < 0.1 &&
                    std::abs(kurt) < 0.2 && std::abs(C(0, 1)) > 0.01;
  return {pass, "(a) rel err " + fmt(*a.rel_frobenius_err) + ", (b) rel err " + fmt(*b.rel_frobenius_err) +
                    " vs C01 " + fmt(C(0, 1)) + ", (c) skew " + fmt(skew) + " kurt " + fmt(kurt)};
}

Outcome cylinder_decay() {
  const auto r = cylinder_decay_check(rwre::testing::two_entropy_env(), 1000, 1000, 6006, kThreads);
  const auto srw = Environment::periodic({2}, std::vector<JumpDistribution>(2, JumpDistribution::simple_walk(1)));
  const auto c = cylinder_decay_check(srw, 1000, 1000, 6007, kThreads);
  const bool control = std::abs(c.mean_rate - std::log(2.0)) < 1e-12 && c.std_error < 1e-12;
  return {r.rel_err < 0.05 && control, "rate " + fmt(r.mean_rate) + " vs exact " + fmt(r.exact_rate) + " (rel err " +
                                           fmt(r.rel_err) + "), control " + fmt(c.mean_rate) + " sd " +
                                           fmt(c.std_error)};
}

Outcome recurrence() {
  const auto srw1 = Environment::homogeneous(JumpDistribution::simple_walk(1));
  const auto r1 = recurrence_report(run_ensemble(spec_for(srw1, 100, 10000, 7007)).trials, 100, 100);
  const double exact = srw_return_oracle(100);
  const bool one = std::abs(r1.fraction_returned - exact) <= 3 * r1.std_error;

  const std::size_t n = 10000, trials = 4000;
  const auto r2 = recurrence_report(
      run_ensemble(spec_for(Environment::homogeneous(JumpDistribution::simple_walk(2)), n, trials, 7008)).trials, n, n);
  const auto r3 = recurrence_report(
      run_ensemble(spec_for(Environment::homogeneous(JumpDistribution::simple_walk(3)), n, trials, 7009)).trials, n, n);
  const double gap = r2.fraction_returned - r3.fraction_returned;
  return {one && gap > 0.1, "d=1 " + fmt(r1.fraction_returned) + " vs exact " + fmt(exact) + " (se " +
                                fmt(r1.std_error) + "), d=2 " + fmt(r2.fraction_returned) + " - d=3 " +
                                fmt(r3.fraction_returned) + " = " + fmt(gap)};
}

Outcome non_ergodicity() {
  EnsembleSpec ab;
  ab.env_source = annealed_sampler(Environment::column_ab(0.5, 0));
  ab.n_trials = 50;
  ab.master_seed = 8008;
  ab.threads = kThreads;
  const auto bad = ergodicity_diagnostic(ab, observables::label_indicator(1, LatticeVec{1, 0}), std::nullopt, 100000, 0.01);

  // Control: two simple-walk laws under different labels, so the walk is a
  // plain simple walk while the observable still varies from site to site.
  const auto srw = JumpDistribution::simple_walk(2);
  EnsembleSpec ctl = ab;
  ctl.env_source = annealed_sampler(Environment::seeded_iid(2, {{srw, 0.5}, {srw, 0.5}}, 0));
  ctl.master_seed = 8009;
  const auto good = ergodicity_diagnostic(ctl, observables::label_indicator(1, LatticeVec{1, 0}), std::nullopt, 100000, 1e-3);
  return {bad.cross_variance > 0.01 && good.cross_variance < 1e-3,
          "column field cross-variance " + fmt(bad.cross_variance) + ", control " + fmt(good.cross_variance)};
}

Outcome transitivity() {
  const auto srw = Environment::periodic({4, 4}, std::vector<JumpDistribution>(16, JumpDistribution::simple_walk(2)));
  const auto a = transitivity_report(srw, standard_generators(2), 16);
  const bool srw_ok = a.transitive && a.sccs.size() == 1;

  const auto ab = Environment::column_ab_periodic("ABAB", 3);
  const auto b = transitivity_report(ab, standard_generators(2), ab.torus_size());
  bool ab_ok = !b.transitive && b.sinks.size() == 2;
  for (const auto& sink : b.sinks) {
    const std::int64_t col = ab.torus_site(sink[0])[0];
    ab_ok = ab_ok && sink.size() == 3 && col % 2 == 1;
    for (auto k : sink) ab_ok = ab_ok && ab.torus_site(k)[0] == col;
  }

  using rwre::testing::law1;
  const auto chain4 = Environment::periodic({4}, {law1({{1, 0.5}, {2, 0.5}}), law1({{-1, 0.5}, {1, 0.5}}),
                                                  law1({{1, 0.6}, {0, 0.4}}), law1({{-1, 0.5}, {0, 0.5}})});
  const auto c = transitivity_report(chain4, standard_generators(1), 4);
  const bool chain_ok = c.sinks == std::vector<std::vector<std::size_t>>{{2, 3}};
  return {srw_ok && ab_ok && chain_ok, std::string("simple walk ") + (srw_ok ? "ok" : "bad") + ", ABAB " +
                                           (ab_ok ? "ok" : "bad") + ", absorbing pair " + (chain_ok ? "ok" : "bad")};
}

std::string slurp_dir(const fs::path& dir) {
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.path().extension() == ".csv") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  std::string all;
  for (const auto& f : files) {
    std::ifstream in(f, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    all += f.filename().string() + "\n" + ss.str();
  }
  return all;
}

Outcome determinism() {
  const fs::path root = fs::temp_directory_path() / "rwre_acceptance_determinism";
  fs::remove_all(root);
  nlohmann::json j{{"seed", 10010},
                   {"environment", environment_to_json(rwre::testing::striped_martingale(3, 10))},
                   {"simulate", {{"steps", 1000}, {"trials", 2000}, {"export_paths", 3}}}};
  std::vector<std::string> outputs;
  for (const auto& [name, threads] : std::vector<std::pair<std::string, unsigned>>{{"a", 1}, {"b", 1}, {"c", 8}}) {
    harness::Overrides ov;
    ov.out = (root / name).string();
    ov.threads = threads;
    const auto r = harness::cmd_simulate(harness::parse_config(j, ov));
    if (r.exit_code != harness::kPass) return {false, "simulate exited " + std::to_string(r.exit_code)};
    outputs.push_back(slurp_dir(root / name));
  }
  fs::remove_all(root);
  const bool same_runs = outputs[0] == outputs[1];
  const bool same_threads = outputs[0] == outputs[2];
  return {same_runs && same_threads && !outputs[0].empty(),
          std::string("two runs ") + (same_runs ? "identical" : "differ") + ", 1 vs 8 threads " +
              (same_threads ? "identical" : "differ") + " (" + std::to_string(outputs[0].size()) + " bytes)"};
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    double limit_s;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> all{
      {1, "partition/coding round-trip", 10, coding_round_trip},
      {2, "stationarity of the environment process", 60, stationarity},
      {3, "steady-state identity and stationary solve", 30, steady_state},
      {4, "ballistic velocity", 120, ballisticity},
      {5, "quenched invariance principle", 300, quenched_ip},
      {6, "cylinder decay", 30, cylinder_decay},
      {7, "recurrence", 120, recurrence},
      {8, "non-ergodicity counterexample", 120, non_ergodicity},
      {9, "transitivity and sinks", 1, transitivity},
      {10, "determinism", 60, determinism},
  };
  int failed = 0;
  for (const auto& c : all) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = secs < c.limit_s;
    const bool pass = o.pass && in_time;
    failed += !pass;
    std::printf("%s criterion %d: %s | %s | %.2fs (limit %.0fs%s)\n", pass ? "PASS" : "FAIL", c.id, c.name,
                o.detail.c_str(), secs, c.limit_s, in_time ? "" : ", exceeded");
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(all.size()) - failed, all.size());
  return failed == 0 ? 0 : 1;
}
