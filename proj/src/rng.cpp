#include "rwre/rng.hpp"

namespace rwre {

namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
  const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(p >> 32);
  lo = static_cast<std::uint32_t>(p);
}

inline Philox4x32::Key split(std::uint64_t v) {
  return {static_cast<std::uint32_t>(v), static_cast<std::uint32_t>(v >> 32)};
}

// Domain separators so that seeds, site labels and walk streams never share
// counters under the same key.
constexpr std::uint32_t kDomainStream = 0x5354524du;
constexpr std::uint32_t kDomainSeed = 0x53454544u;
constexpr std::uint32_t kDomainSite = 0x53495445u;

std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline double to_unit(std::uint32_t hi, std::uint32_t lo) {
  const std::uint64_t v = (static_cast<std::uint64_t>(hi) << 32) | lo;
  return static_cast<double>(v >> 11) * 0x1.0p-53;
}

}  // namespace

Philox4x32::Counter Philox4x32::apply(Counter c, Key k) {
  for (int round = 0; round < 10; ++round) {
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kMul0, c[0], hi0, lo0);
    mulhilo(kMul1, c[2], hi1, lo1);
    c = {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
    k[0] += kWeyl0;
    k[1] += kWeyl1;
  }
  return c;
}

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream) : seed_(seed), stream_(stream) {}

void RngStream::refill() {
  // Counter layout: [block lo, block hi ^ domain, stream lo, stream hi].
  const Philox4x32::Counter ctr{static_cast<std::uint32_t>(block_),
                                static_cast<std::uint32_t>(block_ >> 32) ^ kDomainStream,
                                static_cast<std::uint32_t>(stream_),
                                static_cast<std::uint32_t>(stream_ >> 32)};
  buf_ = Philox4x32::apply(ctr, split(seed_));
  ++block_;
  used_ = 0;
}

std::uint64_t RngStream::next_u64() {
  if (used_ > 2) refill();
  const std::uint64_t v = (static_cast<std::uint64_t>(buf_[static_cast<std::size_t>(used_)]) << 32) |
                          buf_[static_cast<std::size_t>(used_ + 1)];
  used_ += 2;
  return v;
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
  const Philox4x32::Counter ctr{static_cast<std::uint32_t>(index),
                                static_cast<std::uint32_t>(index >> 32), kDomainSeed, 0u};
  const auto out = Philox4x32::apply(ctr, split(master));
  return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

double site_uniform(std::uint64_t seed, const LatticeVec& x) {
  // Fold the coordinates into 64 bits; the fold is injective in practice for
  // the site windows a walk can reach, and Philox does the actual mixing.
  std::uint64_t h = splitmix64(static_cast<std::uint64_t>(x.dim()));
  for (int i = 0; i < x.dim(); ++i) h = splitmix64(h ^ static_cast<std::uint64_t>(x[i]));
  const Philox4x32::Counter ctr{static_cast<std::uint32_t>(h), static_cast<std::uint32_t>(h >> 32),
                                kDomainSite, static_cast<std::uint32_t>(x.dim())};
  const auto out = Philox4x32::apply(ctr, split(seed));
  return to_unit(out[0], out[1]);
}

double site_uniform(std::uint64_t seed, std::int64_t x) {
  const auto u = static_cast<std::uint64_t>(x);
  const Philox4x32::Counter ctr{static_cast<std::uint32_t>(u), static_cast<std::uint32_t>(u >> 32),
                                kDomainSite, 0u};
  const auto out = Philox4x32::apply(ctr, split(seed));
  return to_unit(out[0], out[1]);
}

}  // namespace rwre
