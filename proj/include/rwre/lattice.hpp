#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <span>
#include <string>

namespace rwre {

// Largest lattice dimension supported. Points are stored inline so the
// walker's hot loop never allocates.
inline constexpr int kMaxDim = 4;

// A point (or displacement) of Z^d, 1 <= d <= kMaxDim.
class LatticeVec {
 public:
  LatticeVec() = default;
  explicit LatticeVec(int dim);
  LatticeVec(std::initializer_list<std::int64_t> coords);
  static LatticeVec from(std::span<const std::int64_t> coords);
  static LatticeVec unit(int dim, int axis, std::int64_t sign = 1);

  int dim() const { return dim_; }
  std::int64_t operator[](int i) const { return c_[static_cast<std::size_t>(i)]; }
  std::int64_t& operator[](int i) { return c_[static_cast<std::size_t>(i)]; }

  LatticeVec& operator+=(const LatticeVec& o) {
    for (std::size_t i = 0; i < kMaxDim; ++i) c_[i] += o.c_[i];
    return *this;
  }
  LatticeVec& operator-=(const LatticeVec& o) {
    for (std::size_t i = 0; i < kMaxDim; ++i) c_[i] -= o.c_[i];
    return *this;
  }
  friend LatticeVec operator+(LatticeVec a, const LatticeVec& b) { return a += b; }
  friend LatticeVec operator-(LatticeVec a, const LatticeVec& b) { return a -= b; }
  LatticeVec operator-() const;
  LatticeVec scaled(std::int64_t k) const;

  std::int64_t l1_norm() const;
  double norm() const;  // Euclidean
  bool is_zero() const;

  friend bool operator==(const LatticeVec&, const LatticeVec&) = default;

  std::string to_string() const;

 private:
  std::array<std::int64_t, kMaxDim> c_{};
  int dim_ = 0;
};

// Canonical enumeration of displacements: ascending l1 norm, ties broken
// lexicographically component by component.
bool canonical_less(const LatticeVec& a, const LatticeVec& b);

// Throws ArgumentError unless 1 <= dim <= kMaxDim.
void require_dim(int dim);

struct LatticeVecHash {
  std::size_t operator()(const LatticeVec& v) const noexcept;
};

}  // namespace rwre
