#pragma once

#include <array>
#include <cstdint>

#include "rwre/lattice.hpp"

namespace rwre {

// Philox4x32-10 block function (Salmon et al., "Parallel random numbers:
// as easy as 1, 2, 3"). A keyed bijection on 128-bit counters.
struct Philox4x32 {
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;
  static Counter apply(Counter ctr, Key key);
};

// Uniform stream addressed by (seed, stream id). Draw i of stream s is a
// pure function of (seed, s, i), so streams can be handed to workers in any
// order without changing results.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream);

  std::uint64_t next_u64();
  // Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }

 private:
  void refill();

  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t block_ = 0;
  Philox4x32::Counter buf_{};
  int used_ = 4;  // 32-bit words consumed from buf_
};

// Child seed for (master, index); used for per-trial environment draws.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index);

// Pseudorandom uniform in [0, 1) attached to a lattice site. A pure function
// of (seed, x); this is what makes i.i.d. fields lazily evaluable.
double site_uniform(std::uint64_t seed, const LatticeVec& x);
// Same for a single integer coordinate (column labels).
double site_uniform(std::uint64_t seed, std::int64_t x);

}  // namespace rwre
