#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "symsat/basis.hpp"
#include "symsat/generators.hpp"
#include "symsat/group_expr.hpp"
#include "symsat/pair_partition.hpp"
#include "symsat/perm.hpp"

namespace symsat {

// Matrices are rescaled to unit root-mean-square entries (||M||_F = m) before
// any threshold comparison, so lambda2 bounds an absolute residual on a
// scale-free input and lambda1/m^tol_exponent bounds entrywise deviations.
struct SymFindConfig {
  double lambda1 = 0.1;        // clustering tolerance scale, entrywise
  double lambda2 = 0.4;        // acceptance threshold on projection residual
  double tol_exponent = 1.0;   // entry tolerance is lambda1 * ||M||_F / m^tol_exponent
  double exact_cutoff = 1e-6;  // residual below this counts as an exact fit and
                               // beats any approximate fit of smaller dimension
  int gamma_max = 8;           // Kronecker rank cap per divisor
  int backtrack_budget = 64;   // alternative first-pick choices per block
  int max_depth = 16;
};

struct SymFindCandidate {
  GroupExpr expr;
  Perm sigma;
  std::int64_t dim = 0;
  double distance = 0.0;
};

struct SymFindResult {
  GroupExpr expr;
  Perm sigma;
  double distance = 0.0;
  bool budget_hit = false;
  std::vector<SymFindCandidate> candidates;  // top-level list, insertion order
};

// M_hat[(i2, i1), (j2, j1)] = M[(i1, j1), (i2, j2)], so a Kronecker product
// X (x) Y becomes the rank-one matrix vec(X) vec(Y)^T with column-major vec.
inline Matrix rearrange_hat(const Matrix& m, int p, int q) {
  if (m.rows() != m.cols() || m.rows() != static_cast<std::int64_t>(p) * q)
    throw std::invalid_argument("rearrange_hat: dimension mismatch");
  Matrix out(static_cast<std::int64_t>(p) * p, static_cast<std::int64_t>(q) * q);
  for (int i1 = 0; i1 < p; ++i1)
    for (int i2 = 0; i2 < p; ++i2)
      for (int j1 = 0; j1 < q; ++j1)
        for (int j2 = 0; j2 < q; ++j2)
          out(static_cast<std::int64_t>(i2) * p + i1, static_cast<std::int64_t>(j2) * q + j1) =
              m(static_cast<std::int64_t>(i1) * q + j1, static_cast<std::int64_t>(i2) * q + j2);
  return out;
}

// Decomposes M = A (x) 1_q + I_p (x) B when the q x q blocks of M have the
// required shape: constant off-diagonal blocks and pairwise differences of
// diagonal blocks constant. A's first diagonal entry is pinned to zero, the
// rest of the diagonal holds the block offsets relative to block 0.
inline std::optional<std::pair<Matrix, Matrix>> wreath_split(const Matrix& m, int p, int q, double tol) {
  if (m.rows() != m.cols() || m.rows() != static_cast<std::int64_t>(p) * q)
    throw std::invalid_argument("wreath_split: dimension mismatch");
  const auto block = [&](int i, int j) { return m.block(static_cast<std::int64_t>(i) * q, static_cast<std::int64_t>(j) * q, q, q); };
  Matrix a = Matrix::Zero(p, p);
  for (int i = 0; i < p; ++i)
    for (int j = 0; j < p; ++j) {
      if (i == j) continue;
      const Matrix b = block(i, j);
      const double mean = b.mean();
      if (((b.array() - mean).abs() > tol).any()) return std::nullopt;
      a(i, j) = mean;
    }
  const Matrix b0 = block(0, 0);
  for (int i = 1; i < p; ++i) {
    const Matrix d = block(i, i) - b0;
    const double mean = d.mean();
    if (((d.array() - mean).abs() > tol).any()) return std::nullopt;
    a(i, i) = mean;
  }
  for (int i = 2; i < p; ++i)
    for (int j = 1; j < i; ++j) {
      const Matrix d = block(i, i) - block(j, j);
      const double mean = d.mean();
      if (((d.array() - mean).abs() > tol).any()) return std::nullopt;
    }
  return std::make_pair(std::move(a), b0);
}

namespace detail {

class SymFinder {
 public:
  explicit SymFinder(const SymFindConfig& cfg) : cfg_(cfg) {}

  bool budget_hit = false;

  struct Found {
    GroupExpr expr;
    Perm sigma;
  };

  static double distance_to(const Matrix& m, const GroupExpr& expr, const Perm& sigma) {
    return projection_distance(m, conjugate(basis_from_theorem(expr), sigma));
  }

  Found find(const Matrix& m_in, int depth, bool allow_reorder, std::vector<SymFindCandidate>* table) {
    const int n = static_cast<int>(m_in.rows());
    const Perm id = Perm::identity(n);
    if (depth <= 0) return {GroupExpr::trivial(n), id};
    const double norm = m_in.norm();
    const Matrix m = norm > 0.0 ? Matrix(m_in * (static_cast<double>(n) / norm)) : m_in;

    std::vector<SymFindCandidate> cands;
    const auto add = [&](GroupExpr expr, Perm sigma) {
      const double d = distance_to(m, expr, sigma);
      const std::int64_t dim = expr.basis_dim();
      cands.push_back({std::move(expr), std::move(sigma), dim, d});
    };

    // The fully symmetric group has the smallest nontrivial basis, so as a
    // plain candidate it wins the dimension argmin whenever it fits at all;
    // an exact fit by a richer expression is the only thing that beats it.
    add(GroupExpr::symmetric(n), id);
    add(GroupExpr::trivial(n), id);
    add(GroupExpr::cyclic(n), id);
    for (Found& f : sum_candidates(m, depth, allow_reorder)) add(std::move(f.expr), std::move(f.sigma));
    for (int p = 2; p < n; ++p) {
      if (n % p != 0) continue;
      for (Found& f : prod_candidates(m, p, depth)) add(std::move(f.expr), std::move(f.sigma));
    }

    if (table)
      for (const SymFindCandidate& c : cands) table->push_back(c);
    const SymFindCandidate* best = nullptr;
    bool best_exact = false;
    for (const SymFindCandidate& c : cands) {
      if (c.distance > cfg_.lambda2) continue;
      const bool exact = c.distance <= cfg_.exact_cutoff && !c.expr.is_trivial_group();
      if (exact != best_exact) {
        if (exact) {
          best = &c;
          best_exact = true;
        }
        continue;
      }
      if (!best || c.dim < best->dim || (c.dim == best->dim && c.distance < best->distance)) best = &c;
    }
    if (!best) return {GroupExpr::trivial(n), id};
    return {best->expr, best->sigma};
  }

  // Direct-sum detection: orders indices so that the matrix becomes block
  // structured with constant off-diagonal blocks, then recurses on the
  // diagonal blocks. Returns the plain sum and, when equal-sized blocks can
  // be merged into a wreath pattern, a second clustered variant.
  std::vector<Found> sum_candidates(const Matrix& m, int depth, bool allow_reorder) {
    const int n = static_cast<int>(m.rows());
    const double tol = chain_tol(m);
    std::vector<int> ord(static_cast<std::size_t>(n));
    std::iota(ord.begin(), ord.end(), 0);
    const auto mo = [&](int a, int b) { return m(ord[static_cast<std::size_t>(a)], ord[static_cast<std::size_t>(b)]); };

    std::vector<int> sizes;
    int s = 0;
    while (s < n) {
      const std::vector<int> snapshot(ord.begin() + s, ord.end());
      int attempts = 0;
      int best_close = 0;
      std::vector<int> best_tail;
      for (int k1 = s + 1; k1 < n; ++k1) {
        if (std::abs(mo(k1, k1) - mo(s, s)) > tol) continue;
        if (attempts >= cfg_.backtrack_budget) {
          budget_hit = true;
          break;
        }
        ++attempts;
        std::swap(ord[static_cast<std::size_t>(s + 1)], ord[static_cast<std::size_t>(k1)]);
        int l = s + 1;
        while (l + 1 < n) {
          int next = -1;
          for (int k = l + 1; k < n; ++k)
            if (chain_ok(mo, s, l + 1, k, tol)) {
              next = k;
              break;
            }
          if (next < 0) break;
          std::swap(ord[static_cast<std::size_t>(l + 1)], ord[static_cast<std::size_t>(next)]);
          ++l;
        }
        if (strips_ok(mo, s, l, n, tol) && (best_close == 0 || l - s + 1 < best_close)) {
          best_close = l - s + 1;
          best_tail.assign(ord.begin() + s, ord.end());
        }
        std::copy(snapshot.begin(), snapshot.end(), ord.begin() + s);
        if (best_close == 2) break;
      }
      int closed = 1;
      if (best_close > 0) {
        std::copy(best_tail.begin(), best_tail.end(), ord.begin() + s);
        closed = best_close;
      }
      sizes.push_back(closed);
      s += closed;
    }

    const Perm sigma_ord(ord);
    const int nblocks = static_cast<int>(sizes.size());
    std::vector<int> starts(static_cast<std::size_t>(nblocks));
    for (int i = 0, acc = 0; i < nblocks; acc += sizes[static_cast<std::size_t>(i)], ++i) starts[static_cast<std::size_t>(i)] = acc;

    const auto block_matrix = [&](int bi, int bj) {
      Matrix out(sizes[static_cast<std::size_t>(bi)], sizes[static_cast<std::size_t>(bj)]);
      for (int r = 0; r < out.rows(); ++r)
        for (int c = 0; c < out.cols(); ++c)
          out(r, c) = mo(starts[static_cast<std::size_t>(bi)] + r, starts[static_cast<std::size_t>(bj)] + c);
      return out;
    };

    std::vector<Found> results;
    if (nblocks == 1) {
      if (!allow_reorder || Perm(ord).is_identity()) return results;
      Found inner = find(block_matrix(0, 0), depth - 1, false, nullptr);
      results.push_back({std::move(inner.expr), sigma_ord * inner.sigma});
      return results;
    }

    std::vector<Found> parts;
    parts.reserve(static_cast<std::size_t>(nblocks));
    for (int i = 0; i < nblocks; ++i)
      parts.push_back(find(block_matrix(i, i), depth - 1, true, nullptr));

    results.push_back(assemble_sum(parts, sigma_ord));

    if (std::optional<Found> clustered = cluster_candidate(m, parts, ord, sizes, starts, depth, tol))
      results.push_back(std::move(*clustered));
    return results;
  }

  // Kronecker detection for one divisor split m = p * q. Emits the wreath
  // reading first when the spectrum suggests one, then the generic product.
  std::vector<Found> prod_candidates(const Matrix& m, int p, int depth) {
    std::vector<Found> out;
    const int n = static_cast<int>(m.rows());
    const int q = n / p;
    const Matrix hat = rearrange_hat(m, p, q);
    Eigen::BDCSVD<Matrix> svd(hat, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Eigen::VectorXd& sv = svd.singularValues();
    if (sv.size() == 0 || sv(0) <= 0.0) return out;
    int gamma = 0;
    for (int i = 0; i < sv.size(); ++i)
      if (sv(i) >= sv(0) / 5.0) ++gamma;
    if (gamma > cfg_.gamma_max) return out;

    if (gamma == 2) {
      if (std::optional<std::pair<Matrix, Matrix>> ab = wreath_split(m, p, q, chain_tol(m))) {
        Found outer = find(ab->first, depth - 1, true, nullptr);
        Found inner = find(ab->second, depth - 1, true, nullptr);
        if (!(outer.expr.is_trivial_group() && inner.expr.is_trivial_group()))
          out.push_back({GroupExpr::wreath(std::move(inner.expr), std::move(outer.expr)),
                         kron(outer.sigma, inner.sigma)});
      }
    }

    const double scale = std::sqrt(sv(0));
    Matrix x(p, p), y(q, q);
    for (int c = 0; c < p; ++c)
      for (int r = 0; r < p; ++r) x(r, c) = scale * svd.matrixU()(static_cast<std::int64_t>(c) * p + r, 0);
    for (int c = 0; c < q; ++c)
      for (int r = 0; r < q; ++r) y(r, c) = scale * svd.matrixV()(static_cast<std::int64_t>(c) * q + r, 0);
    Found h = find(x, depth - 1, true, nullptr);
    Found k = find(y, depth - 1, true, nullptr);
    if (h.expr.is_trivial_group() && k.expr.is_trivial_group()) return out;
    if (gamma > std::min(h.expr.basis_dim(), k.expr.basis_dim())) return out;
    out.push_back({GroupExpr::product(std::move(h.expr), std::move(k.expr)), kron(h.sigma, k.sigma)});
    return out;
  }

 private:
  SymFindConfig cfg_;

  double chain_tol(const Matrix& m) const {
    return cfg_.lambda1 * m.norm() / std::pow(static_cast<double>(m.rows()), cfg_.tol_exponent);
  }

  template <typename Mo>
  static bool chain_ok(const Mo& mo, int s, int pos, int k, double tol) {
    if (std::abs(mo(k, k) - mo(pos - 1, pos - 1)) > tol) return false;
    for (int r = s + 1; r < pos; ++r) {
      if (std::abs(mo(r, k) - mo(r - 1, pos - 1)) > tol) return false;
      if (std::abs(mo(k, r) - mo(pos - 1, r - 1)) > tol) return false;
    }
    return true;
  }

  template <typename Mo>
  static bool strips_ok(const Mo& mo, int s, int l, int n, double tol) {
    for (int r = s + 1; r <= l; ++r)
      for (int c = l + 1; c < n; ++c)
        if (std::abs(mo(r, c) - mo(s, c)) > tol) return false;
    for (int r = l + 1; r < n; ++r)
      for (int c = s + 1; c <= l; ++c)
        if (std::abs(mo(r, c) - mo(r, s)) > tol) return false;
    return true;
  }

  // Folds per-block groups into a direct sum, collapsing runs of trivial
  // summands into single I blocks.
  static Found assemble_sum(const std::vector<Found>& parts, const Perm& sigma_ord) {
    std::vector<Found> norm;
    for (const Found& part : parts) {
      const int deg = part.expr.degree();
      const bool triv = part.expr.is_trivial_group();
      if (triv && !norm.empty() && norm.back().expr.is_trivial_group()) {
        const int merged = norm.back().expr.degree() + deg;
        norm.back() = {GroupExpr::trivial(merged), Perm::identity(merged)};
        continue;
      }
      if (triv)
        norm.push_back({GroupExpr::trivial(deg), Perm::identity(deg)});
      else
        norm.push_back(part);
    }
    GroupExpr expr = norm.front().expr;
    Perm tau = norm.front().sigma;
    for (std::size_t i = 1; i < norm.size(); ++i) {
      expr = GroupExpr::sum(std::move(expr), norm[i].expr);
      tau = direct_sum(tau, norm[i].sigma);
    }
    return {std::move(expr), sigma_ord * tau};
  }

  // Groups equal-sized diagonal blocks whose cross blocks are constant and
  // whose diagonal blocks agree up to a constant shift; each such class is a
  // wreath pattern. Classes are kept only when the wreath structure itself
  // explains the class submatrix within the acceptance threshold.
  std::optional<Found> cluster_candidate(const Matrix& m, const std::vector<Found>& parts,
                                         const std::vector<int>& ord, const std::vector<int>& sizes,
                                         const std::vector<int>& starts, int depth, double tol) {
    const int nblocks = static_cast<int>(sizes.size());
    const auto mo = [&](int a, int b) { return m(ord[static_cast<std::size_t>(a)], ord[static_cast<std::size_t>(b)]); };
    const auto constant_cross = [&](int bi, int bj) {
      const int q = sizes[static_cast<std::size_t>(bi)];
      double sum = 0.0;
      for (int r = 0; r < q; ++r)
        for (int c = 0; c < q; ++c) sum += mo(starts[static_cast<std::size_t>(bi)] + r, starts[static_cast<std::size_t>(bj)] + c);
      const double mean = sum / (static_cast<double>(q) * q);
      for (int r = 0; r < q; ++r)
        for (int c = 0; c < q; ++c)
          if (std::abs(mo(starts[static_cast<std::size_t>(bi)] + r, starts[static_cast<std::size_t>(bj)] + c) - mean) > tol)
            return false;
      return true;
    };
    const auto compatible = [&](int bi, int bj) {
      if (sizes[static_cast<std::size_t>(bi)] != sizes[static_cast<std::size_t>(bj)]) return false;
      if (!constant_cross(bi, bj) || !constant_cross(bj, bi)) return false;
      const int q = sizes[static_cast<std::size_t>(bi)];
      double sum = 0.0;
      for (int r = 0; r < q; ++r)
        for (int c = 0; c < q; ++c)
          sum += mo(starts[static_cast<std::size_t>(bi)] + r, starts[static_cast<std::size_t>(bi)] + c) -
                 mo(starts[static_cast<std::size_t>(bj)] + r, starts[static_cast<std::size_t>(bj)] + c);
      const double mean = sum / (static_cast<double>(q) * q);
      for (int r = 0; r < q; ++r)
        for (int c = 0; c < q; ++c) {
          const double d = mo(starts[static_cast<std::size_t>(bi)] + r, starts[static_cast<std::size_t>(bi)] + c) -
                           mo(starts[static_cast<std::size_t>(bj)] + r, starts[static_cast<std::size_t>(bj)] + c);
          if (std::abs(d - mean) > tol) return false;
        }
      return true;
    };

    std::vector<std::vector<int>> classes;
    for (int b = 0; b < nblocks; ++b) {
      bool joined = false;
      if (sizes[static_cast<std::size_t>(b)] >= 2) {
        for (std::vector<int>& cls : classes) {
          if (sizes[static_cast<std::size_t>(cls.front())] != sizes[static_cast<std::size_t>(b)]) continue;
          if (compatible(cls.front(), b)) {
            cls.push_back(b);
            joined = true;
            break;
          }
        }
      }
      if (!joined) classes.push_back({b});
    }
    if (std::none_of(classes.begin(), classes.end(), [](const std::vector<int>& c) { return c.size() > 1; }))
      return std::nullopt;

    std::vector<int> pi;
    pi.reserve(static_cast<std::size_t>(static_cast<int>(ord.size())));
    std::vector<Found> units;
    bool any_wreath = false;
    for (const std::vector<int>& cls : classes) {
      if (cls.size() == 1) {
        const int b = cls.front();
        for (int x = 0; x < sizes[static_cast<std::size_t>(b)]; ++x) pi.push_back(starts[static_cast<std::size_t>(b)] + x);
        units.push_back(parts[static_cast<std::size_t>(b)]);
        continue;
      }
      const int q = sizes[static_cast<std::size_t>(cls.front())];
      const int pc = static_cast<int>(cls.size());
      Matrix w(static_cast<std::int64_t>(pc) * q, static_cast<std::int64_t>(pc) * q);
      for (int bi = 0; bi < pc; ++bi)
        for (int bj = 0; bj < pc; ++bj)
          for (int r = 0; r < q; ++r)
            for (int c = 0; c < q; ++c)
              w(static_cast<std::int64_t>(bi) * q + r, static_cast<std::int64_t>(bj) * q + c) =
                  mo(starts[static_cast<std::size_t>(cls[static_cast<std::size_t>(bi)])] + r,
                     starts[static_cast<std::size_t>(cls[static_cast<std::size_t>(bj)])] + c);
      std::optional<std::pair<Matrix, Matrix>> ab = wreath_split(w, pc, q, tol);
      bool accepted = false;
      if (ab) {
        Found outer = find(ab->first, depth - 1, true, nullptr);
        Found inner = find(ab->second, depth - 1, true, nullptr);
        GroupExpr wexpr = GroupExpr::wreath(inner.expr, outer.expr);
        const Perm wsigma = kron(outer.sigma, inner.sigma);
        const double wnorm = w.norm();
        const Matrix wn = wnorm > 0.0 ? Matrix(w * (static_cast<double>(w.rows()) / wnorm)) : w;
        if (distance_to(wn, wexpr, wsigma) <= cfg_.lambda2) {
          for (int b : cls)
            for (int x = 0; x < q; ++x) pi.push_back(starts[static_cast<std::size_t>(b)] + x);
          units.push_back({std::move(wexpr), wsigma});
          any_wreath = true;
          accepted = true;
        }
      }
      if (!accepted) {
        for (int b : cls) {
          for (int x = 0; x < q; ++x) pi.push_back(starts[static_cast<std::size_t>(b)] + x);
          units.push_back(parts[static_cast<std::size_t>(b)]);
        }
      }
    }
    if (!any_wreath) return std::nullopt;

    Found folded = assemble_sum(units, Perm::identity(static_cast<int>(ord.size())));
    return Found{std::move(folded.expr), Perm(ord) * Perm(pi) * folded.sigma};
  }
};

}  // namespace detail

inline SymFindResult sym_find(const Matrix& m, const SymFindConfig& cfg = {}) {
  if (m.rows() != m.cols() || m.rows() < 1) throw std::invalid_argument("sym_find: matrix must be square");
  detail::SymFinder finder(cfg);
  std::vector<SymFindCandidate> table;
  detail::SymFinder::Found best = finder.find(m, cfg.max_depth, true, &table);
  SymFindResult out{std::move(best.expr), std::move(best.sigma), 0.0, finder.budget_hit, std::move(table)};
  const double norm = m.norm();
  const Matrix mn = norm > 0.0 ? Matrix(m * (static_cast<double>(m.rows()) / norm)) : m;
  out.distance = detail::SymFinder::distance_to(mn, out.expr, out.sigma);
  return out;
}

// Plain direct-sum detection result, without the clustered wreath variant.
inline std::pair<GroupExpr, Perm> sum_find(const Matrix& m, const SymFindConfig& cfg = {}) {
  detail::SymFinder finder(cfg);
  const double norm = m.norm();
  const Matrix mn = norm > 0.0 ? Matrix(m * (static_cast<double>(m.rows()) / norm)) : m;
  std::vector<detail::SymFinder::Found> cands = finder.sum_candidates(mn, cfg.max_depth, false);
  if (cands.empty()) {
    const int n = static_cast<int>(m.rows());
    return {GroupExpr::trivial(n), Perm::identity(n)};
  }
  return {std::move(cands.front().expr), std::move(cands.front().sigma)};
}

inline std::optional<std::pair<GroupExpr, Perm>> prod_find(const Matrix& m, int p, const SymFindConfig& cfg = {}) {
  const int n = static_cast<int>(m.rows());
  if (p <= 1 || p >= n || n % p != 0) throw std::invalid_argument("prod_find: p must be a proper divisor");
  detail::SymFinder finder(cfg);
  const double norm = m.norm();
  const Matrix mn = norm > 0.0 ? Matrix(m * (static_cast<double>(m.rows()) / norm)) : m;
  std::vector<detail::SymFinder::Found> cands = finder.prod_candidates(mn, p, cfg.max_depth);
  if (cands.empty()) return std::nullopt;
  return std::make_pair(std::move(cands.front().expr), std::move(cands.front().sigma));
}

}  // namespace symsat
