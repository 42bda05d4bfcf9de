#include "rwre/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>

#include "rwre/errors.hpp"

namespace rwre {

void require_dim(int dim) {
  if (dim < 1 || dim > kMaxDim) {
    throw ArgumentError("lattice dimension must be in [1, " + std::to_string(kMaxDim) +
                        "], got " + std::to_string(dim));
  }
}

LatticeVec::LatticeVec(int dim) : dim_(dim) { require_dim(dim); }

LatticeVec::LatticeVec(std::initializer_list<std::int64_t> coords)
    : dim_(static_cast<int>(coords.size())) {
  require_dim(dim_);
  std::size_t i = 0;
  for (auto c : coords) c_[i++] = c;
}

LatticeVec LatticeVec::from(std::span<const std::int64_t> coords) {
  LatticeVec v(static_cast<int>(coords.size()));
  for (std::size_t i = 0; i < coords.size(); ++i) v.c_[i] = coords[i];
  return v;
}

LatticeVec LatticeVec::unit(int dim, int axis, std::int64_t sign) {
  LatticeVec v(dim);
  if (axis < 0 || axis >= dim) throw ArgumentError("unit vector axis out of range");
  v[axis] = sign;
  return v;
}

LatticeVec LatticeVec::operator-() const {
  LatticeVec v = *this;
  for (auto& c : v.c_) c = -c;
  return v;
}

LatticeVec LatticeVec::scaled(std::int64_t k) const {
  LatticeVec v = *this;
  for (auto& c : v.c_) c *= k;
  return v;
}

std::int64_t LatticeVec::l1_norm() const {
  std::int64_t s = 0;
  for (auto c : c_) s += std::llabs(c);
  return s;
}

double LatticeVec::norm() const {
  double s = 0.0;
  for (auto c : c_) s += static_cast<double>(c) * static_cast<double>(c);
  return std::sqrt(s);
}

bool LatticeVec::is_zero() const {
  for (auto c : c_)
    if (c != 0) return false;
  return true;
}

std::string LatticeVec::to_string() const {
  std::string out = "(";
  for (int i = 0; i < dim_; ++i) {
    if (i) out += ",";
    out += std::to_string((*this)[i]);
  }
  return out + ")";
}

bool canonical_less(const LatticeVec& a, const LatticeVec& b) {
  const auto na = a.l1_norm(), nb = b.l1_norm();
  if (na != nb) return na < nb;
  for (int i = 0; i < std::max(a.dim(), b.dim()); ++i) {
    if (a[i] != b[i]) return a[i] < b[i];
  }
  return false;
}

std::size_t LatticeVecHash::operator()(const LatticeVec& v) const noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL ^ static_cast<std::uint64_t>(v.dim());
  for (int i = 0; i < v.dim(); ++i) {
    h ^= static_cast<std::uint64_t>(v[i]) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
  }
  return static_cast<std::size_t>(h);
}

}  // namespace rwre
