#include <doctest.h>

#include <cmath>
#include <set>
#include <vector>

#include "rwre/errors.hpp"
#include "rwre/evp_exact.hpp"
#include "rwre/mc_stats.hpp"
#include "test_util.hpp"

using namespace rwre;
using doctest::Approx;
using rwre::testing::law1;

namespace {

const Environment kSrw1 = Environment::homogeneous(JumpDistribution::simple_walk(1));

EnsembleSpec quenched(const Environment& env, std::size_t n, std::size_t trials, std::uint64_t seed,
                      unsigned threads = 1) {
  EnsembleSpec s;
  s.env_source = env;
  s.n_steps = n;
  s.n_trials = trials;
  s.master_seed = seed;
  s.threads = threads;
  return s;
}

// P(return to 0 by step n) for the simple walk on Z: probability mass that has
// not yet returned, propagated over positions -n..n, absorbed at 0.
double srw_return_oracle(std::size_t n) {
  const auto w = static_cast<std::ptrdiff_t>(n) + 1;
  std::vector<double> alive(static_cast<std::size_t>(2 * w + 1), 0.0);
  auto at = [&](std::ptrdiff_t x) -> double& { return alive[static_cast<std::size_t>(x + w)]; };
  at(0) = 1.0;
  double returned = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    std::vector<double> next(alive.size(), 0.0);
    for (std::ptrdiff_t x = -w + 1; x < w; ++x) {
      const double m = at(x);
      if (m == 0.0) continue;
      next[static_cast<std::size_t>(x + 1 + w)] += 0.5 * m;
      next[static_cast<std::size_t>(x - 1 + w)] += 0.5 * m;
    }
    returned += next[static_cast<std::size_t>(w)];
    next[static_cast<std::size_t>(w)] = 0.0;
    alive = std::move(next);
  }
  return returned;
}

}  // namespace

TEST_CASE("ensembles are reproducible") {
  auto spec = quenched(Environment::homogeneous(JumpDistribution::simple_walk(2)), 50, 64, 7);
  const auto a = sample_annealed(spec);
  const auto b = sample_annealed(spec);
  CHECK(a == b);
  spec.threads = 4;
  CHECK(sample_annealed(spec) == a);
  REQUIRE(a.size() == 64);
  CHECK(a[0].size() == 51);
  spec.master_seed = 8;
  CHECK(sample_annealed(spec) != a);

  spec.n_steps = 0;
  CHECK_THROWS_AS(run_ensemble(spec), ArgumentError);
}

TEST_CASE("annealed sampling draws distinct environment seeds") {
  const auto base = Environment::seeded_iid(
      1, {{JumpDistribution::simple_walk(1), 0.5}, {law1({{1, 0.6}, {-1, 0.4}}), 0.5}}, 1);
  EnsembleSpec spec;
  spec.env_source = annealed_sampler(base);
  spec.n_steps = 5;
  spec.n_trials = 10;
  spec.master_seed = 3;
  const auto r = run_ensemble(spec);
  std::set<std::uint64_t> seeds;
  for (std::size_t t = 0; t < r.trials.size(); ++t) {
    CHECK(r.trials[t].env_seed == derive_seed(3, t));
    seeds.insert(r.trials[t].env_seed);
  }
  CHECK(seeds.size() == 10);
  CHECK(annealed_sampler(base)(42).master_seed() == 42);

  // Periodic: the sampler translates; every torus offset appears.
  const auto per = rwre::testing::two_site_swap();
  std::set<std::int64_t> offsets;
  for (std::uint64_t s = 0; s < 50; ++s) offsets.insert(annealed_sampler(per)(s).offset()[0]);
  CHECK(offsets == std::set<std::int64_t>{0, 1});
}

TEST_CASE("parallel_for covers every index once") {
  std::vector<int> hits(1000, 0);
  parallel_for(hits.size(), 8, [&](std::size_t i) { ++hits[i]; });
  for (int h : hits) CHECK(h == 1);
}

TEST_CASE("velocity estimates") {
  SUBCASE("simple walk") {
    const auto r = run_ensemble(quenched(kSrw1, 1000, 10000, 1, 4));
    const auto v = velocity_estimate(r.trials, r.n_steps);
    CHECK(std::abs(v.mean[0]) < 4 * v.std_error[0]);
    CHECK(v.std_error[0] == Approx(1.0 / std::sqrt(1000.0 * 10000.0)).epsilon(0.05));
  }
  SUBCASE("homogeneous drift") {
    const auto r = run_ensemble(quenched(Environment::homogeneous(law1({{1, 0.7}, {-1, 0.3}})), 1000, 2000, 2, 4));
    const auto v = velocity_estimate(r.trials, r.n_steps);
    CHECK(std::abs(v.mean[0] - 0.4) < 4 * v.std_error[0]);
  }
  SUBCASE("doubly stochastic zero drift") {
    const auto env = rwre::testing::striped_martingale(4, 6);
    const auto exact = exact_velocity(env, stationary_distribution(build_evp_chain(env)));
    const auto r = run_ensemble(quenched(env, 1000, 2000, 3, 4));
    const auto v = velocity_estimate(r.trials, r.n_steps);
    for (int i = 0; i < 2; ++i) CHECK(std::abs(v.mean[i] - exact[i]) < 4 * v.std_error[static_cast<std::size_t>(i)]);
  }
  SUBCASE("two-site mixed drift against the exact velocity") {
    const auto env =
        Environment::periodic({2}, {law1({{1, 0.8}, {-1, 0.2}}), law1({{1, 0.4}, {-1, 0.1}, {0, 0.5}})});
    const auto exact = exact_velocity(env, stationary_distribution(build_evp_chain(env)));
    EnsembleSpec spec = quenched(env, 1000, 4000, 4, 4);
    spec.env_source = annealed_sampler(env);
    const auto r = run_ensemble(spec);
    const auto v = velocity_estimate(r.trials, r.n_steps);
    CHECK(std::abs(v.mean[0] - exact[0]) < 4 * v.std_error[0]);
  }
  SUBCASE("trajectory overload agrees with summaries") {
    const auto r = run_ensemble(quenched(kSrw1, 20, 200, 5), true);
    const auto a = velocity_estimate(r.trials, r.n_steps);
    const auto b = velocity_estimate(r.paths);
    CHECK(a.mean[0] == b.mean[0]);
    CHECK(a.std_error[0] == b.std_error[0]);
  }
}

TEST_CASE("rescaled trajectory") {
  const Trajectory x{LatticeVec{0}, LatticeVec{1}, LatticeVec{0}, LatticeVec{1}, LatticeVec{2}};
  const auto p = rescaled_trajectory(x);
  REQUIRE(p.size() == 5);
  const double ts[] = {0, 0.25, 0.5, 0.75, 1.0}, vs[] = {0, 0.5, 0, 0.5, 1.0};
  for (std::size_t k = 0; k < 5; ++k) {
    CHECK(p[k].t == ts[k]);
    CHECK(p[k].value[0] == vs[k]);
  }
}

TEST_CASE("diffusion estimates") {
  SUBCASE("simple walk d = 2") {
    const auto r = run_ensemble(quenched(Environment::homogeneous(JumpDistribution::simple_walk(2)), 1000, 10000, 9, 4));
    const Eigen::MatrixXd ref = 0.5 * Eigen::MatrixXd::Identity(2, 2);
    const auto d = diffusion_estimate(r.trials, r.n_steps, ref);
    REQUIRE(d.rel_frobenius_err);
    CHECK(*d.rel_frobenius_err < 0.05);
  }
  SUBCASE("mixed step martingale") {
    const auto env = rwre::testing::mixed_step_martingale();
    const auto c = exact_diffusion_matrix(env, stationary_distribution(build_evp_chain(env)));
    const auto r = run_ensemble(quenched(env, 1000, 10000, 10, 4));
    const auto d = diffusion_estimate(r.trials, r.n_steps, c);
    CHECK(*d.rel_frobenius_err < 0.05);
  }
  SUBCASE("too few trials") {
    const auto r = run_ensemble(quenched(kSrw1, 10, 50, 1));
    CHECK_THROWS_AS(diffusion_estimate(r.trials, r.n_steps), ArgumentError);
  }
}

TEST_CASE("recurrence") {
  CHECK(exact_return_probability(kSrw1, 100) == Approx(srw_return_oracle(100)).epsilon(1e-12));
  CHECK(exact_return_probability(kSrw1, 1) == 0.0);
  CHECK(exact_return_probability(kSrw1, 2) == Approx(0.5));

  const auto one = run_ensemble(quenched(kSrw1, 1, 100, 1));
  CHECK(recurrence_report(one.trials, 1, 1).fraction_returned == 0.0);

  const auto r = run_ensemble(quenched(kSrw1, 100, 10000, 2, 4));
  const auto rep = recurrence_report(r.trials, r.n_steps, 100);
  CHECK(std::abs(rep.fraction_returned - srw_return_oracle(100)) < 3 * rep.std_error);
  std::size_t total = 0;
  for (auto [k, c] : rep.min_distance_histogram) total += c;
  CHECK(total == 10000);
  CHECK(rep.min_distance_histogram.at(0) ==
        static_cast<std::size_t>(std::lround(rep.fraction_returned * 10000)));

  // Shorter horizons read first-return times from the same ensemble.
  CHECK(recurrence_report(r.trials, r.n_steps, 10).fraction_returned < rep.fraction_returned);
}

TEST_CASE("cylinder decay") {
  const auto srw = cylinder_decay_check(
      Environment::periodic({3}, std::vector<JumpDistribution>(3, JumpDistribution::simple_walk(1))), 1000, 1000, 1, 4);
  CHECK(srw.mean_rate == Approx(std::log(2.0)).epsilon(1e-12));
  CHECK(srw.std_error < 1e-12);

  const auto two = cylinder_decay_check(rwre::testing::two_entropy_env(), 1000, 1000, 2, 4);
  CHECK(two.exact_rate == Approx(0.5 * std::log(2.0) + 0.5 * 0.6108643020548935));
  CHECK(two.rel_err < 0.05);

  const auto det = cylinder_decay_check(
      Environment::periodic({2}, {law1({{1, 1.0}}), law1({{1, 0.5}, {-1, 0.5}})}), 100, 100, 3);
  REQUIRE(det.deterministic_sites.size() == 1);
  CHECK(det.deterministic_sites[0] == LatticeVec{0});
  CHECK(det.exact_rate == Approx(0.5 * std::log(2.0)));
}

TEST_CASE("ergodicity diagnostic") {
  SUBCASE("constant observable") {
    EnsembleSpec spec = quenched(Environment::homogeneous(JumpDistribution::simple_walk(2)), 0, 10, 1);
    const auto r = ergodicity_diagnostic(spec, observables::entropy(), std::nullopt, 10000, 1e-6);
    CHECK(r.cross_variance < 1e-6);
    CHECK(r.consistent_with_ergodicity);
    CHECK(r.per_realization_averages.size() == 10);
  }
  SUBCASE("column counterexample") {
    EnsembleSpec spec;
    spec.env_source = annealed_sampler(Environment::column_ab(0.5, 0));
    spec.n_trials = 20;
    spec.master_seed = 5;
    spec.threads = 4;
    const auto r = ergodicity_diagnostic(spec, observables::label_indicator(1, LatticeVec{1, 0}), std::nullopt,
                                         20000, 1e-3);
    CHECK(r.cross_variance > 0.01);
    CHECK_FALSE(r.consistent_with_ergodicity);
  }
}

TEST_CASE("stationary sampler follows the stationary measure") {
  const auto env = Environment::periodic({2}, {law1({{1, 0.8}, {-1, 0.2}}), law1({{1, 0.4}, {-1, 0.1}, {0, 0.5}})});
  const auto sampler = stationary_sampler(env);
  const int n = 30000;
  int at1 = 0;
  for (int s = 0; s < n; ++s) at1 += sampler(derive_seed(1, static_cast<std::uint64_t>(s))).offset()[0] == 1;
  const double se = std::sqrt((2.0 / 3) * (1.0 / 3) / n);
  CHECK(std::abs(static_cast<double>(at1) / n - 2.0 / 3) < 4 * se);
  CHECK_THROWS_AS(stationary_sampler(Environment::column_ab(0.5, 1)), UnsupportedError);
}
