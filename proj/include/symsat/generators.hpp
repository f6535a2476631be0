#pragma once

#include <numeric>
#include <set>
#include <stdexcept>
#include <vector>

#include "symsat/group_expr.hpp"
#include "symsat/perm.hpp"

namespace symsat {

// Generating set for the group denoted by an expression. The generated
// permutation group equals the denoted group in every case; in particular,
// wreath inner generators are planted on one representative block per orbit
// of the outer group (for a transitive outer group that is just the first
// block, and outer conjugates reach the rest).
inline std::vector<Perm> generator_set(const GroupExpr& e);

// Point-orbit labels of the denoted group, computed structurally.
// Returns ids in 0..count-1; label of a point is stable under the recursive
// construction (coarse factor major).
inline std::vector<int> orbit_labels(const GroupExpr& e) {
  switch (e.kind()) {
    case GroupExpr::Kind::trivial: {
      std::vector<int> v(static_cast<std::size_t>(e.leaf_degree()));
      std::iota(v.begin(), v.end(), 0);
      return v;
    }
    case GroupExpr::Kind::cyclic:
    case GroupExpr::Kind::symmetric:
      return std::vector<int>(static_cast<std::size_t>(e.leaf_degree()), 0);
    case GroupExpr::Kind::sum: {
      std::vector<int> l = orbit_labels(e.left()), r = orbit_labels(e.right());
      const int shift = static_cast<int>(e.left().orbit_count());
      for (int& x : r) x += shift;
      l.insert(l.end(), r.begin(), r.end());
      return l;
    }
    case GroupExpr::Kind::product:
    case GroupExpr::Kind::wreath: {
      // Both act on pairs (block, offset) with independent orbit structure
      // on each coordinate: coarse factor is the right child for wreath
      // (the outer group) and the left child for products.
      const GroupExpr& coarse = e.kind() == GroupExpr::Kind::product ? e.left() : e.outer();
      const GroupExpr& fine = e.kind() == GroupExpr::Kind::product ? e.right() : e.inner();
      const std::vector<int> oc = orbit_labels(coarse), of = orbit_labels(fine);
      const int q = fine.degree();
      const int nf = static_cast<int>(fine.orbit_count());
      std::vector<int> v(static_cast<std::size_t>(e.degree()));
      for (int i = 0; i < coarse.degree(); ++i)
        for (int j = 0; j < q; ++j)
          v[static_cast<std::size_t>(i) * q + j] = oc[static_cast<std::size_t>(i)] * nf + of[static_cast<std::size_t>(j)];
      return v;
    }
  }
  return {};
}

inline std::vector<Perm> generator_set(const GroupExpr& e) {
  switch (e.kind()) {
    case GroupExpr::Kind::trivial:
      return {Perm::identity(e.leaf_degree())};
    case GroupExpr::Kind::cyclic: {
      const int m = e.leaf_degree();
      std::vector<int> v(static_cast<std::size_t>(m));
      for (int i = 0; i < m; ++i) v[static_cast<std::size_t>(i)] = (i + 1) % m;
      return {Perm(std::move(v))};
    }
    case GroupExpr::Kind::symmetric: {
      const int m = e.leaf_degree();
      if (m == 1) return {Perm::identity(1)};
      std::vector<int> cyc(static_cast<std::size_t>(m));
      for (int i = 0; i < m; ++i) cyc[static_cast<std::size_t>(i)] = (i + 1) % m;
      std::vector<int> swp(static_cast<std::size_t>(m));
      std::iota(swp.begin(), swp.end(), 0);
      swp[0] = 1;
      swp[1] = 0;
      Perm a{std::move(swp)}, b{std::move(cyc)};
      if (a == b) return {a};
      return {a, b};
    }
    case GroupExpr::Kind::sum: {
      std::vector<Perm> out;
      const Perm idl = Perm::identity(e.left().degree());
      const Perm idr = Perm::identity(e.right().degree());
      for (const Perm& g : generator_set(e.left())) out.push_back(direct_sum(g, idr));
      for (const Perm& h : generator_set(e.right())) out.push_back(direct_sum(idl, h));
      return out;
    }
    case GroupExpr::Kind::product: {
      std::vector<Perm> out;
      const Perm idl = Perm::identity(e.left().degree());
      const Perm idr = Perm::identity(e.right().degree());
      for (const Perm& g : generator_set(e.left())) out.push_back(kron(g, idr));
      for (const Perm& h : generator_set(e.right())) out.push_back(kron(idl, h));
      return out;
    }
    case GroupExpr::Kind::wreath: {
      const int q = e.inner().degree();
      const int p = e.outer().degree();
      std::vector<Perm> out;
      for (const Perm& g : generator_set(e.outer())) out.push_back(kron(g, Perm::identity(q)));
      // one representative block per outer orbit
      const std::vector<int> labels = orbit_labels(e.outer());
      std::vector<int> rep(static_cast<std::size_t>(e.outer().orbit_count()), -1);
      for (int i = 0; i < p; ++i)
        if (rep[static_cast<std::size_t>(labels[static_cast<std::size_t>(i)])] < 0)
          rep[static_cast<std::size_t>(labels[static_cast<std::size_t>(i)])] = i;
      for (int r : rep) {
        for (const Perm& h : generator_set(e.inner())) {
          std::vector<int> v(static_cast<std::size_t>(p) * q);
          std::iota(v.begin(), v.end(), 0);
          for (int j = 0; j < q; ++j) v[static_cast<std::size_t>(r) * q + j] = r * q + h(j);
          out.push_back(Perm(std::move(v)));
        }
      }
      return out;
    }
  }
  return {};
}

// Orbit labels of the group generated by `gens` (union-find), canonical ids
// in order of least orbit member.
inline std::vector<int> orbit_labels(int n, const std::vector<Perm>& gens) {
  std::vector<int> parent(static_cast<std::size_t>(n));
  std::iota(parent.begin(), parent.end(), 0);
  const auto find = [&](int x) {
    while (parent[static_cast<std::size_t>(x)] != x) {
      parent[static_cast<std::size_t>(x)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(x)])];
      x = parent[static_cast<std::size_t>(x)];
    }
    return x;
  };
  for (const Perm& g : gens) {
    if (g.size() != n) throw std::invalid_argument("orbit_labels: generator degree mismatch");
    for (int i = 0; i < n; ++i) {
      const int a = find(i), b = find(g(i));
      if (a != b) parent[static_cast<std::size_t>(std::max(a, b))] = std::min(a, b);
    }
  }
  std::vector<int> label(static_cast<std::size_t>(n), -1);
  int next = 0;
  for (int i = 0; i < n; ++i) {
    const int r = find(i);
    if (label[static_cast<std::size_t>(r)] < 0) label[static_cast<std::size_t>(r)] = next++;
    label[static_cast<std::size_t>(i)] = label[static_cast<std::size_t>(r)];
  }
  return label;
}

// Full enumeration by closure; test oracle for small groups only.
inline std::set<Perm> enumerate_group(const std::vector<Perm>& gens, std::size_t cap = 2000000) {
  if (gens.empty()) return {};
  std::set<Perm> seen;
  std::vector<Perm> frontier;
  const Perm id = Perm::identity(gens.front().size());
  seen.insert(id);
  frontier.push_back(id);
  while (!frontier.empty()) {
    const Perm cur = frontier.back();
    frontier.pop_back();
    for (const Perm& g : gens) {
      Perm nxt = g * cur;
      if (seen.insert(nxt).second) {
        if (seen.size() > cap) throw std::runtime_error("enumerate_group: cap exceeded");
        frontier.push_back(std::move(nxt));
      }
    }
  }
  return seen;
}

}  // namespace symsat
