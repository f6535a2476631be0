#pragma once

#include <cstddef>
#include <stdexcept>
#include <utility>
#include <vector>

#include "symsat/rng.hpp"

namespace symsat {

// Permutation of {0, ..., n-1} stored as its image table.
class Perm {
 public:
  Perm() = default;
  explicit Perm(std::vector<int> images) : img_(std::move(images)) {
    if (!is_valid()) throw std::invalid_argument("Perm: image table is not a bijection");
  }

  static Perm identity(int n) {
    std::vector<int> v(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) v[static_cast<std::size_t>(i)] = i;
    return Perm(std::move(v));
  }

  static Perm random(int n, Rng& rng) {
    Perm p = identity(n);
    for (int i = n - 1; i > 0; --i) {
      const int j = static_cast<int>(rng.bounded(static_cast<std::uint64_t>(i) + 1));
      std::swap(p.img_[static_cast<std::size_t>(i)], p.img_[static_cast<std::size_t>(j)]);
    }
    return p;
  }

  int size() const { return static_cast<int>(img_.size()); }
  int operator()(int i) const { return img_[static_cast<std::size_t>(i)]; }
  const std::vector<int>& images() const { return img_; }

  bool is_identity() const {
    for (int i = 0; i < size(); ++i)
      if ((*this)(i) != i) return false;
    return true;
  }

  // (a * b)(x) = a(b(x)).
  friend Perm operator*(const Perm& a, const Perm& b) {
    if (a.size() != b.size()) throw std::invalid_argument("Perm: degree mismatch");
    std::vector<int> v(a.img_.size());
    for (int i = 0; i < a.size(); ++i) v[static_cast<std::size_t>(i)] = a(b(i));
    return Perm(std::move(v));
  }

  Perm inverse() const {
    std::vector<int> v(img_.size());
    for (int i = 0; i < size(); ++i) v[static_cast<std::size_t>((*this)(i))] = i;
    return Perm(std::move(v));
  }

  friend bool operator==(const Perm& a, const Perm& b) { return a.img_ == b.img_; }
  friend bool operator!=(const Perm& a, const Perm& b) { return !(a == b); }
  friend bool operator<(const Perm& a, const Perm& b) { return a.img_ < b.img_; }

 private:
  bool is_valid() const {
    std::vector<char> seen(img_.size(), 0);
    for (int x : img_) {
      if (x < 0 || x >= size() || seen[static_cast<std::size_t>(x)]) return false;
      seen[static_cast<std::size_t>(x)] = 1;
    }
    return true;
  }

  std::vector<int> img_;
};

// Kronecker-indexed product: acts on {0,...,p*q-1} with x = i*q + j,
// (a (x) b)(i*q + j) = a(i)*q + b(j). The first factor is the coarse index.
inline Perm kron(const Perm& a, const Perm& b) {
  const int p = a.size(), q = b.size();
  std::vector<int> v(static_cast<std::size_t>(p) * static_cast<std::size_t>(q));
  for (int i = 0; i < p; ++i)
    for (int j = 0; j < q; ++j)
      v[static_cast<std::size_t>(i) * q + j] = a(i) * q + b(j);
  return Perm(std::move(v));
}

// Block direct sum: a acts on the first a.size() points, b on the rest.
inline Perm direct_sum(const Perm& a, const Perm& b) {
  const int p = a.size(), q = b.size();
  std::vector<int> v(static_cast<std::size_t>(p + q));
  for (int i = 0; i < p; ++i) v[static_cast<std::size_t>(i)] = a(i);
  for (int j = 0; j < q; ++j) v[static_cast<std::size_t>(p + j)] = p + b(j);
  return Perm(std::move(v));
}

}  // namespace symsat
