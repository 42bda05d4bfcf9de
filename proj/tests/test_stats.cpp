#include <doctest.h>

#include <cmath>
#include <vector>

#include "rwre/rng.hpp"
#include "rwre/stats.hpp"

using namespace rwre;
using doctest::Approx;

// Reference values from an independent numerical library.
TEST_CASE("kolmogorov survival function") {
  const std::pair<double, double> table[] = {
      {0.3, 0.9999906941986655},   {0.5, 0.9639452436648751}, {0.8, 0.5441424115741981},
      {1.0, 0.26999967167735456},  {1.18, 0.1234538094297657}, {1.36, 0.049485876755377876},
      {2.0, 0.0006709252557796953}};
  for (auto [lambda, q] : table) CHECK(stats::kolmogorov_survival(lambda) == Approx(q).epsilon(1e-10));
  CHECK(stats::kolmogorov_survival(0.0) == 1.0);
  CHECK(stats::kolmogorov_survival(10.0) < 1e-80);
}

TEST_CASE("ks_uniform") {
  const auto r = stats::ks_uniform({0.1, 0.35, 0.4, 0.8, 0.95});
  CHECK(r.statistic == Approx(0.2).epsilon(1e-12));
  CHECK(r.p_value == Approx(0.9747892465409951).epsilon(1e-9));

  RngStream rng(3, 0);
  std::vector<double> u(20000), sq(20000);
  for (std::size_t i = 0; i < u.size(); ++i) {
    u[i] = rng.uniform();
    sq[i] = u[i] * u[i];
  }
  CHECK(stats::ks_uniform(u).passes(0.001));
  CHECK_FALSE(stats::ks_uniform(sq).passes(0.001));
}

TEST_CASE("chi_square_uniform") {
  const std::vector<std::size_t> counts{10, 20, 30, 40};
  const auto r = stats::chi_square_uniform(counts);
  CHECK(r.statistic == Approx(20.0));
  CHECK(r.dof == 3);
  CHECK(r.p_value == Approx(0.00016974243555282632).epsilon(1e-9));

  CHECK(stats::chi_square_uniform(std::vector<std::size_t>{5, 5, 5, 5, 5, 5}).p_value == Approx(1.0));
}

TEST_CASE("moments") {
  const std::vector<double> xs{1, 2, 3, 4, 10};
  const auto m = stats::moments(xs);
  CHECK(m.mean == Approx(4.0));
  CHECK(m.variance == Approx(12.5));
  CHECK(m.skewness == Approx(1.1384199576606167).epsilon(1e-12));
  CHECK(m.excess_kurtosis == Approx(-0.212).epsilon(1e-12));
}

TEST_CASE("gaussian sample moments") {
  RngStream rng(8, 1);
  std::vector<double> g(200000);
  for (auto& x : g) {
    const double u1 = 1.0 - rng.uniform(), u2 = rng.uniform();
    x = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }
  const auto m = stats::moments(g);
  CHECK(std::abs(m.mean) < 0.01);
  CHECK(m.variance == Approx(1.0).epsilon(0.01));
  CHECK(std::abs(m.skewness) < 0.03);
  CHECK(std::abs(m.excess_kurtosis) < 0.06);
}
