#pragma once

#include <cstdint>
#include <vector>

#include "symsat/generators.hpp"
#include "symsat/group_expr.hpp"
#include "symsat/pair_partition.hpp"

namespace symsat {

namespace detail {

// Structural recursion producing the pair-orbit partition of the denoted
// group. Cell ids may be sparse at intermediate nodes; the caller
// canonicalizes once at the top.
inline PairPartition basis_recurse(const GroupExpr& e) {
  PairPartition p;
  p.n = e.degree();
  p.cell.assign(static_cast<std::size_t>(p.n) * p.n, -1);
  switch (e.kind()) {
    case GroupExpr::Kind::trivial: {
      for (std::int64_t f = 0; f < static_cast<std::int64_t>(p.cell.size()); ++f)
        p.cell[static_cast<std::size_t>(f)] = static_cast<std::int32_t>(f);
      p.num_cells = p.n * p.n;
      return p;
    }
    case GroupExpr::Kind::cyclic: {
      // Circulant space: one shift matrix per residue of j - i.
      for (int i = 0; i < p.n; ++i)
        for (int j = 0; j < p.n; ++j)
          p.cell[static_cast<std::size_t>(i) * p.n + j] = static_cast<std::int32_t>(((j - i) % p.n + p.n) % p.n);
      p.num_cells = p.n;
      return p;
    }
    case GroupExpr::Kind::symmetric: {
      // Identity and the off-diagonal all-ones pattern.
      for (int i = 0; i < p.n; ++i)
        for (int j = 0; j < p.n; ++j)
          p.cell[static_cast<std::size_t>(i) * p.n + j] = i == j ? 0 : 1;
      p.num_cells = p.n == 1 ? 1 : 2;
      return p;
    }
    case GroupExpr::Kind::sum: {
      const PairPartition a = basis_recurse(e.left());
      const PairPartition b = basis_recurse(e.right());
      const std::vector<int> la = orbit_labels(e.left());
      const std::vector<int> lb = orbit_labels(e.right());
      const int oa = static_cast<int>(e.left().orbit_count());
      const int ob = static_cast<int>(e.right().orbit_count());
      const int da = a.n;
      // Diagonal blocks keep the child partitions; each cross block splits
      // into one all-ones cell per pair of orbits.
      const std::int32_t cross_tr = a.num_cells + b.num_cells;
      const std::int32_t cross_bl = cross_tr + oa * ob;
      for (int i = 0; i < p.n; ++i)
        for (int j = 0; j < p.n; ++j) {
          std::int32_t c;
          if (i < da && j < da)
            c = a.at(i, j);
          else if (i >= da && j >= da)
            c = a.num_cells + b.at(i - da, j - da);
          else if (i < da)
            c = cross_tr + static_cast<std::int32_t>(la[static_cast<std::size_t>(i)]) * ob +
                lb[static_cast<std::size_t>(j - da)];
          else
            c = cross_bl + static_cast<std::int32_t>(lb[static_cast<std::size_t>(i - da)]) * oa +
                la[static_cast<std::size_t>(j)];
          p.cell[static_cast<std::size_t>(i) * p.n + j] = c;
        }
      p.num_cells = cross_bl + oa * ob;
      return p;
    }
    case GroupExpr::Kind::product: {
      // Kronecker pairs of the factor cells.
      const PairPartition a = basis_recurse(e.left());
      const PairPartition b = basis_recurse(e.right());
      const int q = b.n;
      for (int i = 0; i < p.n; ++i)
        for (int j = 0; j < p.n; ++j)
          p.cell[static_cast<std::size_t>(i) * p.n + j] =
              a.at(i / q, j / q) * b.num_cells + b.at(i % q, j % q);
      p.num_cells = a.num_cells * b.num_cells;
      return p;
    }
    case GroupExpr::Kind::wreath: {
      // Block structure indexed by the outer group. Diagonal blocks carry an
      // independent copy of the inner space per outer orbit; off-diagonal
      // blocks are constant on inner orbit pairs and follow the outer cells.
      const PairPartition in = basis_recurse(e.inner());
      const PairPartition out = basis_recurse(e.outer());
      const std::vector<int> lin = orbit_labels(e.inner());
      const std::vector<int> lout = orbit_labels(e.outer());
      const int oin = static_cast<int>(e.inner().orbit_count());
      const int q = in.n;
      const std::int32_t off_base =
          static_cast<std::int32_t>(e.outer().orbit_count()) * in.num_cells;
      for (int i = 0; i < p.n; ++i)
        for (int j = 0; j < p.n; ++j) {
          const int i1 = i / q, i2 = i % q, j1 = j / q, j2 = j % q;
          std::int32_t c;
          if (i1 == j1)
            c = static_cast<std::int32_t>(lout[static_cast<std::size_t>(i1)]) * in.num_cells + in.at(i2, j2);
          else
            c = off_base + out.at(i1, j1) * (oin * oin) +
                static_cast<std::int32_t>(lin[static_cast<std::size_t>(i2)]) * oin +
                lin[static_cast<std::size_t>(j2)];
          p.cell[static_cast<std::size_t>(i) * p.n + j] = c;
        }
      p.num_cells = off_base + out.num_cells * oin * oin;
      return p;
    }
  }
  return p;
}

}  // namespace detail

// Pair-orbit partition of the group denoted by `e`, built structurally
// (no group element enumeration). Agrees with pair_orbits over the
// generator set and has basis_dim(e) cells.
inline PairPartition basis_from_theorem(const GroupExpr& e) {
  PairPartition p = detail::basis_recurse(e);
  p.canonicalize();
  return p;
}

}  // namespace symsat
