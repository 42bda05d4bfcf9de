#include <doctest.h>

#include <set>
#include <vector>

#include "rwre/rng.hpp"
#include "rwre/stats.hpp"

using namespace rwre;

// Known-answer vectors for Philox4x32-10 from the Random123 distribution.
TEST_CASE("philox known answers") {
  const auto zero = Philox4x32::apply({0, 0, 0, 0}, {0, 0});
  CHECK(zero == Philox4x32::Counter{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
  const auto ones = Philox4x32::apply({0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, {0xffffffff, 0xffffffff});
  CHECK(ones == Philox4x32::Counter{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
  const auto pi = Philox4x32::apply({0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, {0xa4093822, 0x299f31d0});
  CHECK(pi == Philox4x32::Counter{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});
}

TEST_CASE("streams are reproducible and distinct") {
  RngStream a(42, 7), b(42, 7), c(42, 8), d(43, 7);
  std::vector<std::uint64_t> va, vc, vd;
  for (int i = 0; i < 100; ++i) {
    const auto x = a.next_u64();
    REQUIRE(x == b.next_u64());
    va.push_back(x);
    vc.push_back(c.next_u64());
    vd.push_back(d.next_u64());
  }
  CHECK(va != vc);
  CHECK(va != vd);
  std::set<std::uint64_t> uniq(va.begin(), va.end());
  CHECK(uniq.size() == va.size());
}

TEST_CASE("uniform draws are uniform") {
  RngStream rng(1, 0);
  std::vector<double> u(50000);
  std::vector<std::size_t> bins(20, 0);
  for (auto& x : u) {
    x = rng.uniform();
    REQUIRE(x >= 0.0);
    REQUIRE(x < 1.0);
    ++bins[static_cast<std::size_t>(x * 20)];
  }
  CHECK(stats::ks_uniform(u).passes(1e-3));
  CHECK(stats::chi_square_uniform(bins).passes(1e-3));
}

TEST_CASE("derived seeds and site uniforms") {
  std::set<std::uint64_t> seeds;
  for (std::uint64_t i = 0; i < 1000; ++i) seeds.insert(derive_seed(5, i));
  CHECK(seeds.size() == 1000);
  CHECK(derive_seed(5, 3) == derive_seed(5, 3));
  CHECK(derive_seed(5, 3) != derive_seed(6, 3));

  CHECK(site_uniform(9, LatticeVec{3, -4}) == site_uniform(9, LatticeVec{3, -4}));
  CHECK(site_uniform(9, LatticeVec{3, -4}) != site_uniform(9, LatticeVec{-4, 3}));
  CHECK(site_uniform(9, LatticeVec{3}) != site_uniform(9, LatticeVec{3, 0}));

  std::vector<double> u;
  for (std::int64_t x = -100; x < 100; ++x)
    for (std::int64_t y = -50; y < 50; ++y) u.push_back(site_uniform(17, LatticeVec{x, y}));
  CHECK(stats::ks_uniform(u).passes(1e-3));
  std::vector<double> col;
  for (std::int64_t j = -10000; j < 10000; ++j) col.push_back(site_uniform(17, j));
  CHECK(stats::ks_uniform(col).passes(1e-3));
}
