#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <deque>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "symsat/perm.hpp"
#include "symsat/rng.hpp"

namespace symsat {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Partition of [n] x [n] into cells, stored as a row-major flat table of
// cell ids. The orbit partition of a pair action is the canonical instance;
// the 0/1 indicator matrices of the cells form the equivariant basis.
//
// Canonical labeling: ids numbered by first occurrence in row-major order,
// which orders cells by their lexicographically smallest (i, j) member.
struct PairPartition {
  int n = 0;
  int num_cells = 0;
  std::vector<std::int32_t> cell;  // size n*n, entry (i, j) at i*n + j

  std::int32_t at(int i, int j) const { return cell[static_cast<std::size_t>(i) * n + j]; }

  void canonicalize() {
    std::vector<std::int32_t> remap(static_cast<std::size_t>(num_cells), -1);
    std::int32_t next = 0;
    for (std::int32_t& c : cell) {
      if (remap[static_cast<std::size_t>(c)] < 0) remap[static_cast<std::size_t>(c)] = next++;
      c = remap[static_cast<std::size_t>(c)];
    }
    num_cells = next;
  }

  // Members of each cell as flat pair indices, in row-major order.
  std::vector<std::vector<std::int64_t>> cells() const {
    std::vector<std::vector<std::int64_t>> out(static_cast<std::size_t>(num_cells));
    for (std::int64_t f = 0; f < static_cast<std::int64_t>(cell.size()); ++f)
      out[static_cast<std::size_t>(cell[static_cast<std::size_t>(f)])].push_back(f);
    return out;
  }

  friend bool operator==(const PairPartition& a, const PairPartition& b) {
    return a.n == b.n && a.num_cells == b.num_cells && a.cell == b.cell;
  }
};

// Same partition up to renaming of cell ids.
inline bool same_partition(const PairPartition& a, const PairPartition& b) {
  PairPartition ca = a, cb = b;
  ca.canonicalize();
  cb.canonicalize();
  return ca == cb;
}

// Orbits of the pair action of the group generated by `gens`; breadth-first
// closure over (g(i), g(j)).
inline PairPartition pair_orbits(int n, const std::vector<Perm>& gens) {
  PairPartition p;
  p.n = n;
  p.cell.assign(static_cast<std::size_t>(n) * n, -1);
  std::int32_t next = 0;
  std::deque<std::int64_t> queue;
  for (std::int64_t start = 0; start < static_cast<std::int64_t>(p.cell.size()); ++start) {
    if (p.cell[static_cast<std::size_t>(start)] >= 0) continue;
    const std::int32_t id = next++;
    p.cell[static_cast<std::size_t>(start)] = id;
    queue.clear();
    queue.push_back(start);
    while (!queue.empty()) {
      const std::int64_t f = queue.front();
      queue.pop_front();
      const int i = static_cast<int>(f / n), j = static_cast<int>(f % n);
      for (const Perm& g : gens) {
        const std::int64_t t = static_cast<std::int64_t>(g(i)) * n + g(j);
        if (p.cell[static_cast<std::size_t>(t)] < 0) {
          p.cell[static_cast<std::size_t>(t)] = id;
          queue.push_back(t);
        }
      }
    }
  }
  p.num_cells = next;
  return p;
}

// Partition of the conjugate group: cell'(s(i), s(j)) = cell(i, j). Cell ids
// are preserved so callers holding per-cell coefficients stay aligned.
inline PairPartition conjugate(const PairPartition& p, const Perm& sigma) {
  if (sigma.size() != p.n) throw std::invalid_argument("conjugate: degree mismatch");
  PairPartition out;
  out.n = p.n;
  out.num_cells = p.num_cells;
  out.cell.resize(p.cell.size());
  for (int i = 0; i < p.n; ++i)
    for (int j = 0; j < p.n; ++j)
      out.cell[static_cast<std::size_t>(sigma(i)) * p.n + sigma(j)] = p.at(i, j);
  return out;
}

// Merges each cell with its transpose image; the result indexes the
// symmetric equivariant space. Ids preserved-then-canonicalized.
inline PairPartition symmetrize(const PairPartition& p) {
  std::vector<std::int32_t> parent(static_cast<std::size_t>(p.num_cells));
  std::iota(parent.begin(), parent.end(), 0);
  const auto find = [&](std::int32_t x) {
    while (parent[static_cast<std::size_t>(x)] != x) {
      parent[static_cast<std::size_t>(x)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(x)])];
      x = parent[static_cast<std::size_t>(x)];
    }
    return x;
  };
  for (int i = 0; i < p.n; ++i)
    for (int j = 0; j < p.n; ++j) {
      const std::int32_t a = find(p.at(i, j)), b = find(p.at(j, i));
      if (a != b) parent[static_cast<std::size_t>(std::max(a, b))] = std::min(a, b);
    }
  PairPartition out;
  out.n = p.n;
  out.num_cells = p.num_cells;
  out.cell.resize(p.cell.size());
  for (std::size_t f = 0; f < p.cell.size(); ++f) out.cell[f] = find(p.cell[f]);
  out.canonicalize();
  return out;
}

// True when every cell of `fine` lies inside a single cell of `coarse`,
// i.e. the group of `fine` is (at most) a subgroup of the group of `coarse`
// as far as pair orbits can tell.
inline bool is_refinement(const PairPartition& fine, const PairPartition& coarse) {
  if (fine.n != coarse.n) return false;
  std::vector<std::int32_t> image(static_cast<std::size_t>(fine.num_cells), -1);
  for (std::size_t f = 0; f < fine.cell.size(); ++f) {
    std::int32_t& img = image[static_cast<std::size_t>(fine.cell[f])];
    if (img < 0)
      img = coarse.cell[f];
    else if (img != coarse.cell[f])
      return false;
  }
  return true;
}

// Mean of the matrix entries over each cell of the partition.
inline Vector cell_means(const Matrix& m, const PairPartition& p) {
  if (m.rows() != p.n || m.cols() != p.n) throw std::invalid_argument("cell_means: shape mismatch");
  std::vector<double> sum(static_cast<std::size_t>(p.num_cells), 0.0);
  std::vector<double> comp(static_cast<std::size_t>(p.num_cells), 0.0);
  std::vector<std::int64_t> count(static_cast<std::size_t>(p.num_cells), 0);
  for (int i = 0; i < p.n; ++i)
    for (int j = 0; j < p.n; ++j) {
      const std::size_t c = static_cast<std::size_t>(p.at(i, j));
      const double y = m(i, j) - comp[c];
      const double t = sum[c] + y;
      comp[c] = (t - sum[c]) - y;
      sum[c] = t;
      ++count[c];
    }
  Vector means(p.num_cells);
  for (int c = 0; c < p.num_cells; ++c) means(c) = sum[static_cast<std::size_t>(c)] / static_cast<double>(count[static_cast<std::size_t>(c)]);
  return means;
}

// Reynolds operator: averaging over the group equals pooling each cell of
// the pair partition to its mean.
inline Matrix reynolds_project(const Matrix& m, const PairPartition& p) {
  const Vector means = cell_means(m, p);
  Matrix out(p.n, p.n);
  for (int i = 0; i < p.n; ++i)
    for (int j = 0; j < p.n; ++j) out(i, j) = means(p.at(i, j));
  return out;
}

// || prj(M) - M ||_F without materializing the projection.
inline double projection_distance(const Matrix& m, const PairPartition& p) {
  if (m.rows() != p.n || m.cols() != p.n) throw std::invalid_argument("projection_distance: shape mismatch");
  std::vector<double> sum(static_cast<std::size_t>(p.num_cells), 0.0);
  std::vector<double> comp(static_cast<std::size_t>(p.num_cells), 0.0);
  std::vector<std::int64_t> count(static_cast<std::size_t>(p.num_cells), 0);
  for (int i = 0; i < p.n; ++i)
    for (int j = 0; j < p.n; ++j) {
      const std::size_t c = static_cast<std::size_t>(p.at(i, j));
      const double y = m(i, j) - comp[c];
      const double t = sum[c] + y;
      comp[c] = (t - sum[c]) - y;
      sum[c] = t;
      ++count[c];
    }
  double acc = 0.0;
  for (int i = 0; i < p.n; ++i)
    for (int j = 0; j < p.n; ++j) {
      const std::size_t c = static_cast<std::size_t>(p.at(i, j));
      const double d = m(i, j) - sum[c] / static_cast<double>(count[c]);
      acc += d * d;
    }
  return std::sqrt(acc);
}

// Random element of the equivariant space of `p`: i.i.d. standard normal
// entries pooled by the partition. Pass a symmetrized partition to sample
// the symmetric equivariant space.
inline Matrix random_equivariant(const PairPartition& p, Rng& rng) {
  Matrix m(p.n, p.n);
  for (int i = 0; i < p.n; ++i)
    for (int j = 0; j < p.n; ++j) m(i, j) = rng.normal();
  return reynolds_project(m, p);
}

}  // namespace symsat
