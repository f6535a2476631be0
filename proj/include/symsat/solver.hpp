#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "symsat/pair_partition.hpp"
#include "symsat/rng.hpp"

namespace symsat {

// Index split of the n solver columns. Column `truth` is the fixed truth
// direction and always an input; aux marks unsupervised output columns.
struct ProblemSplit {
  int n = 0;
  int truth = 0;
  std::vector<int> input_idx;
  std::vector<int> output_idx;
  std::vector<char> aux;

  void validate() const {
    if (n <= 0) throw std::invalid_argument("split: n must be positive");
    std::vector<char> seen(static_cast<std::size_t>(n), 0);
    for (int i : input_idx) seen.at(static_cast<std::size_t>(i)) += 1;
    for (int o : output_idx) seen.at(static_cast<std::size_t>(o)) += 1;
    for (char s : seen)
      if (s != 1) throw std::invalid_argument("split: inputs and outputs must partition [n]");
    bool truth_in = false;
    for (int i : input_idx) truth_in = truth_in || i == truth;
    if (!truth_in) throw std::invalid_argument("split: truth column must be an input");
    if (aux.size() != static_cast<std::size_t>(n)) throw std::invalid_argument("split: aux size mismatch");
    for (int i : input_idx)
      if (aux[static_cast<std::size_t>(i)]) throw std::invalid_argument("split: aux columns must be outputs");
  }
};

inline ProblemSplit make_split(int n, std::vector<int> outputs, int aux_tail = 0) {
  ProblemSplit s;
  s.n = n;
  s.truth = 0;
  s.output_idx = std::move(outputs);
  std::sort(s.output_idx.begin(), s.output_idx.end());
  s.aux.assign(static_cast<std::size_t>(n), 0);
  std::vector<char> is_out(static_cast<std::size_t>(n), 0);
  for (int o : s.output_idx) is_out.at(static_cast<std::size_t>(o)) = 1;
  for (int i = 0; i < n; ++i)
    if (!is_out[static_cast<std::size_t>(i)]) s.input_idx.push_back(i);
  for (int i = n - aux_tail; i < n; ++i) s.aux[static_cast<std::size_t>(i)] = 1;
  s.validate();
  return s;
}

struct EmbeddingState {
  int k = 0;
  Matrix V;       // k x n, unit columns after forward
  Vector g_norm;  // cached ||g_o|| from the final sweep, zero on inputs
  int sweeps = 0;
  int degenerate = 0;
};

struct PlainParams {
  Matrix S;  // m x n
  int n() const { return static_cast<int>(S.cols()); }
};

// theta over the pair-partition basis of the columns [offset, offset+basis.n);
// rows and columns outside the block (the truth direction) stay zero.
struct SymParams {
  Vector theta;
  PairPartition basis;
  int offset = 0;
  int n() const { return offset + basis.n; }
};

// Cells that are not their own transpose (cyclic shifts, cross blocks) get
// the mean of the two coefficients, keeping C symmetric for every theta.
inline Matrix assemble_C(const SymParams& params) {
  if (params.theta.size() != params.basis.num_cells)
    throw std::invalid_argument("assemble_C: theta length must match basis cell count");
  const int n = params.n();
  const int b = params.basis.n;
  Matrix c = Matrix::Zero(n, n);
  for (int i = 0; i < b; ++i)
    for (int j = i; j < b; ++j) {
      const double v = 0.5 * (params.theta(params.basis.at(i, j)) + params.theta(params.basis.at(j, i)));
      c(params.offset + i, params.offset + j) = v;
      c(params.offset + j, params.offset + i) = v;
    }
  return c;
}

struct ForwardOptions {
  double eps = 1e-4;
  int max_sweeps = 40;
};

struct BackwardOptions {
  double eps = 1e-4;
  int max_sweeps = 100;
};

inline double objective(const Matrix& c, const Matrix& v) {
  return ((v.transpose() * v).cwiseProduct(c)).sum();
}

namespace detail {

// One streaming pass over omega: applies the deferred rank-1 update for
// column pcol (omega += delta s_pcol^T) and accumulates g = omega s_ocol.
// pcol < 0 skips the update. Omega entries match the unfused two-pass form
// exactly. The fixed-width variants keep the accumulator in registers.
template <int K>
inline void rank1_then_gemv_fixed(double* od, const double* dd, double* gd, const double* sp,
                                  const double* so, int m) {
  using VecK = Eigen::Matrix<double, K, 1>;
  Eigen::Map<const VecK> delta(dd);
  VecK acc = VecK::Zero();
  if (sp) {
    for (int j = 0; j < m; ++j, od += K) {
      Eigen::Map<VecK> col(od);
      col += delta * sp[j];
      acc += col * so[j];
    }
  } else {
    for (int j = 0; j < m; ++j, od += K) {
      Eigen::Map<const VecK> col(od);
      acc += col * so[j];
    }
  }
  Eigen::Map<VecK> g(gd);
  g = acc;
}

inline void rank1_then_gemv(Matrix& omega, const Matrix& s, int pcol, const Vector& delta, int ocol,
                            Vector& g) {
  const int k = static_cast<int>(omega.rows());
  const int m = static_cast<int>(omega.cols());
  double* od = omega.data();
  const double* dd = delta.data();
  double* gd = g.data();
  const double* sp = pcol >= 0 ? s.col(pcol).data() : nullptr;
  const double* so = s.col(ocol).data();
  switch (k) {
    case 4: rank1_then_gemv_fixed<4>(od, dd, gd, sp, so, m); return;
    case 8: rank1_then_gemv_fixed<8>(od, dd, gd, sp, so, m); return;
    case 12: rank1_then_gemv_fixed<12>(od, dd, gd, sp, so, m); return;
    case 16: rank1_then_gemv_fixed<16>(od, dd, gd, sp, so, m); return;
    case 24: rank1_then_gemv_fixed<24>(od, dd, gd, sp, so, m); return;
    case 32: rank1_then_gemv_fixed<32>(od, dd, gd, sp, so, m); return;
    default: break;
  }
  g.setZero();
  for (int j = 0; j < m; ++j, od += k) {
    const double w = so[j];
    if (sp) {
      const double d = sp[j];
      for (int p = 0; p < k; ++p) {
        od[p] += dd[p] * d;
        gd[p] += od[p] * w;
      }
    } else {
      for (int p = 0; p < k; ++p) gd[p] += od[p] * w;
    }
  }
}

inline void init_output_columns(Matrix& v, const ProblemSplit& split, std::uint64_t seed) {
  Rng rng(seed);
  const int k = static_cast<int>(v.rows());
  for (int o : split.output_idx) {
    double norm = 0.0;
    Vector col(k);
    while (norm < 1e-12) {
      for (int p = 0; p < k; ++p) col(p) = rng.normal();
      norm = col.norm();
    }
    v.col(o) = col / norm;
  }
}

// Shared sweep loop. ComputeG(v, o, g) writes the coordinate gradient g_o
// into the preallocated g; Updated(o, delta) is called after v_o moves by
// delta. The workspaces keep the hot path free of allocations.
template <typename ComputeG, typename Updated>
EmbeddingState run_forward(Matrix v, const ProblemSplit& split, std::uint64_t seed, const ForwardOptions& opts,
                           ComputeG&& compute_g, Updated&& updated) {
  EmbeddingState state;
  state.k = static_cast<int>(v.rows());
  init_output_columns(v, split, seed);
  state.g_norm = Vector::Zero(split.n);
  Vector g(state.k), next(state.k), delta(state.k);
  for (int sweep = 0; sweep < opts.max_sweeps; ++sweep) {
    double max_move = 0.0;
    for (int o : split.output_idx) {
      compute_g(v, o, g);
      const double gn = g.norm();
      state.g_norm(o) = gn;
      if (gn < 1e-12) {
        ++state.degenerate;
        continue;
      }
      next = -g / gn;
      delta = next - v.col(o);
      const double move = delta.norm();
      if (move > 0.0) {
        v.col(o) = next;
        updated(o, delta);
        max_move = std::max(max_move, move);
      }
    }
    ++state.sweeps;
    if (max_move < opts.eps) break;
  }
  state.V = std::move(v);
  return state;
}

}  // namespace detail

inline EmbeddingState forward(const Matrix& c, const Matrix& v_in, const ProblemSplit& split,
                              std::uint64_t seed, const ForwardOptions& opts = {}) {
  return detail::run_forward(
      v_in, split, seed, opts,
      [&](const Matrix& v, int o, Vector& g) {
        g.noalias() = v * c.col(o);
        g -= c(o, o) * v.col(o);
      },
      [](int, const Vector&) {});
}

inline EmbeddingState forward(const SymParams& params, const Matrix& v_in, const ProblemSplit& split,
                              std::uint64_t seed, const ForwardOptions& opts = {}) {
  return forward(assemble_C(params), v_in, split, seed, opts);
}

inline EmbeddingState forward(const PlainParams& params, const Matrix& v_in, const ProblemSplit& split,
                              std::uint64_t seed, const ForwardOptions& opts = {}) {
  Matrix omega;  // k x m, maintained as V S^T by deferred rank-1 updates
  const Vector snorm2 = params.S.colwise().squaredNorm();
  bool ready = false;
  int pending = -1;
  Vector pending_delta;
  return detail::run_forward(
      v_in, split, seed, opts,
      [&](const Matrix& v, int o, Vector& g) {
        if (!ready) {
          omega = v * params.S.transpose();
          pending_delta.resize(omega.rows());
          ready = true;
        }
        detail::rank1_then_gemv(omega, params.S, pending, pending_delta, o, g);
        pending = -1;
        g -= snorm2(o) * v.col(o);
      },
      [&](int o, const Vector& delta) {
        pending = o;
        pending_delta = delta;
      });
}

struct Gradients {
  Matrix dV_in;   // k x n, zero on output columns
  Matrix dS;      // plain path only
  Vector dtheta;  // symmetric path only
  Matrix dC;      // shared intermediate, kept for inspection
  Matrix U;       // adjoint columns, zero on inputs
  bool converged = false;
  int sweeps = 0;
};

namespace detail {

// Iterates the adjoint fixed point u_o = -P_o dg_o / ||g_o|| and returns U.
// ComputeDg(u, o, dg) writes the raw adjoint gradient into dg.
template <typename ComputeDg, typename Updated>
std::pair<Matrix, std::pair<bool, int>> run_backward(const EmbeddingState& state, const ProblemSplit& split,
                                                     const Matrix& dl_dv, const BackwardOptions& opts,
                                                     ComputeDg&& compute_dg, Updated&& updated) {
  Matrix u = Matrix::Zero(state.k, split.n);
  bool converged = false;
  int sweeps = 0;
  Vector dg(state.k), next(state.k), delta(state.k);
  for (int sweep = 0; sweep < opts.max_sweeps && !converged; ++sweep) {
    double max_move = 0.0;
    for (int o : split.output_idx) {
      if (state.g_norm(o) < 1e-12) continue;
      compute_dg(u, o, dg);
      dg -= dl_dv.col(o);
      const auto vo = state.V.col(o);
      dg -= vo * (vo.dot(dg));
      next = -dg / state.g_norm(o);
      delta = next - u.col(o);
      const double move = delta.norm();
      if (move > 0.0) {
        u.col(o) = next;
        updated(o, delta);
        max_move = std::max(max_move, move);
      }
    }
    ++sweeps;
    converged = max_move < opts.eps;
  }
  return {std::move(u), {converged, sweeps}};
}

// Gradient of the loss with respect to the symmetric coefficient matrix,
// summed over both orderings of each pair: entry (p,q) carries
// dL/dC_pq + dL/dC_qp. Consumers that parametrize one matrix entry per
// ordered pair must halve accordingly.
inline Matrix grad_C_from_UV(const Matrix& u, const Matrix& v) {
  Matrix g = -(u.transpose() * v + v.transpose() * u);
  g.diagonal().setZero();
  return g;
}

}  // namespace detail

inline Gradients backward(const Matrix& c, const EmbeddingState& state, const ProblemSplit& split,
                          const Matrix& dl_dv, const BackwardOptions& opts = {}) {
  auto [u, status] = detail::run_backward(
      state, split, dl_dv, opts,
      [&](const Matrix& uu, int o, Vector& dg) {
        dg.noalias() = uu * c.col(o);
        dg -= c(o, o) * uu.col(o);
      },
      [](int, const Vector&) {});
  Gradients out;
  out.converged = status.first;
  out.sweeps = status.second;
  out.dC = detail::grad_C_from_UV(u, state.V);
  out.dV_in = -(u * c);
  for (int o : split.output_idx) out.dV_in.col(o).setZero();
  out.U = std::move(u);
  return out;
}

inline Gradients backward(const SymParams& params, const EmbeddingState& state, const ProblemSplit& split,
                          const Matrix& dl_dv, const BackwardOptions& opts = {}) {
  Gradients out = backward(assemble_C(params), state, split, dl_dv, opts);
  out.dtheta = Vector::Zero(params.theta.size());
  for (int i = 0; i < params.basis.n; ++i)
    for (int j = 0; j < params.basis.n; ++j)
      out.dtheta(params.basis.at(i, j)) += 0.5 * out.dC(params.offset + i, params.offset + j);
  return out;
}

inline Gradients backward(const PlainParams& params, const EmbeddingState& state, const ProblemSplit& split,
                          const Matrix& dl_dv, const BackwardOptions& opts = {}) {
  Matrix psi = Matrix::Zero(state.k, params.S.rows());  // U S^T
  const Vector snorm2 = params.S.colwise().squaredNorm();
  int pending = -1;
  Vector pending_delta(state.k);
  auto [u, status] = detail::run_backward(
      state, split, dl_dv, opts,
      [&](const Matrix& uu, int o, Vector& dg) {
        detail::rank1_then_gemv(psi, params.S, pending, pending_delta, o, dg);
        pending = -1;
        dg -= snorm2(o) * uu.col(o);
      },
      [&](int o, const Vector& delta) {
        pending = o;
        pending_delta = delta;
      });
  Gradients out;
  out.converged = status.first;
  out.sweeps = status.second;
  out.dC = detail::grad_C_from_UV(u, state.V);
  out.dS = params.S * out.dC;
  out.dV_in = -((u * params.S.transpose()) * params.S);
  for (int o : split.output_idx) out.dV_in.col(o).setZero();
  out.U = std::move(u);
  return out;
}

// Lean gradients for the training loop: only the parameter gradient is
// produced, computed in factored form so the n x n intermediate never
// materializes. Agrees with the full backward to rounding.
struct TrainGrads {
  Vector dtheta;
  Matrix dS;
  bool converged = false;
  int sweeps = 0;
};

// c must be assemble_C(params); callers cache it across a batch.
inline TrainGrads training_backward(const SymParams& params, const Matrix& c, const EmbeddingState& state,
                                    const ProblemSplit& split, const Matrix& dl_dv,
                                    const BackwardOptions& opts = {}) {
  auto [u, status] = detail::run_backward(
      state, split, dl_dv, opts,
      [&](const Matrix& uu, int o, Vector& dg) {
        dg.noalias() = uu * c.col(o);
        dg -= c(o, o) * uu.col(o);
      },
      [](int, const Vector&) {});
  TrainGrads out;
  out.converged = status.first;
  out.sweeps = status.second;
  out.dtheta = Vector::Zero(params.theta.size());
  const int lo = params.offset;
  const int hi = params.offset + params.basis.n;
  Vector w(split.n);
  for (int o : split.output_idx) {
    if (o < lo || o >= hi) continue;
    w.noalias() = state.V.transpose() * u.col(o);
    for (int j = lo; j < hi; ++j) {
      if (j == o) continue;
      const double half = 0.5 * w(j);
      out.dtheta(params.basis.at(o - lo, j - lo)) -= half;
      out.dtheta(params.basis.at(j - lo, o - lo)) -= half;
    }
  }
  return out;
}

inline TrainGrads training_backward(const PlainParams& params, const EmbeddingState& state,
                                    const ProblemSplit& split, const Matrix& dl_dv,
                                    const BackwardOptions& opts = {}) {
  Matrix psi = Matrix::Zero(state.k, params.S.rows());  // U S^T
  const Vector snorm2 = params.S.colwise().squaredNorm();
  int pending = -1;
  Vector pending_delta(state.k);
  auto [u, status] = detail::run_backward(
      state, split, dl_dv, opts,
      [&](const Matrix& uu, int o, Vector& dg) {
        detail::rank1_then_gemv(psi, params.S, pending, pending_delta, o, dg);
        pending = -1;
        dg -= snorm2(o) * uu.col(o);
      },
      [&](int o, const Vector& delta) {
        pending = o;
        pending_delta = delta;
      });
  TrainGrads out;
  out.converged = status.first;
  out.sweeps = status.second;
  const auto& outputs = split.output_idx;
  const int no = static_cast<int>(outputs.size());
  Matrix u_out(state.k, no), s_out(params.S.rows(), no);
  for (int i = 0; i < no; ++i) {
    u_out.col(i) = u.col(outputs[static_cast<std::size_t>(i)]);
    s_out.col(i) = params.S.col(outputs[static_cast<std::size_t>(i)]);
  }
  out.dS.noalias() = -(s_out * u_out.transpose()) * state.V;
  const Matrix b = params.S * state.V.transpose();
  Matrix cols(params.S.rows(), no);
  cols.noalias() = b * u_out;
  for (int i = 0; i < no; ++i) {
    const int o = outputs[static_cast<std::size_t>(i)];
    out.dS.col(o) -= cols.col(i);
    out.dS.col(o) += params.S.col(o) * (2.0 * u.col(o).dot(state.V.col(o)));
  }
  return out;
}

struct LossResult {
  double loss = 0.0;
  Matrix dV;  // k x n, nonzero only on supervised output columns
  int count = 0;
};

// Binary cross entropy on p_o = (1 + v_truth . v_o) / 2, averaged over the
// supervised outputs; aux columns carry no loss.
inline LossResult probs_and_loss(const EmbeddingState& state, const ProblemSplit& split,
                                 const std::vector<int>& targets) {
  constexpr double p_min = 1e-7;
  LossResult out;
  out.dV = Matrix::Zero(state.k, split.n);
  const Vector vt = state.V.col(split.truth);
  for (int o : split.output_idx) {
    if (split.aux[static_cast<std::size_t>(o)]) continue;
    double p = (1.0 + vt.dot(state.V.col(o))) / 2.0;
    p = std::min(std::max(p, p_min), 1.0 - p_min);
    const double z = static_cast<double>(targets.at(static_cast<std::size_t>(o)));
    out.loss += -(z * std::log(p) + (1.0 - z) * std::log1p(-p));
    out.dV.col(o) = ((p - z) / (p * (1.0 - p))) * vt / 2.0;
    ++out.count;
  }
  if (out.count > 0) {
    out.loss /= out.count;
    out.dV /= static_cast<double>(out.count);
  }
  return out;
}

// Inputs are embedded on the truth axis: bit 1 at +v_truth, bit 0 at -v_truth.
inline Matrix embed_inputs(const std::vector<int>& bits, const ProblemSplit& split, int k) {
  Matrix v = Matrix::Zero(k, split.n);
  v(0, split.truth) = 1.0;
  for (int i : split.input_idx) {
    if (i == split.truth) continue;
    v(0, i) = 2.0 * static_cast<double>(bits.at(static_cast<std::size_t>(i))) - 1.0;
  }
  return v;
}

struct AdamState {
  Vector m;
  Vector v;
  std::int64_t t = 0;
};

inline void adam_step(Eigen::Ref<Vector> param, const Vector& grad, AdamState& state, double lr,
                      double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8) {
  if (state.t == 0) {
    state.m = Vector::Zero(param.size());
    state.v = Vector::Zero(param.size());
  }
  ++state.t;
  state.m = beta1 * state.m + (1.0 - beta1) * grad;
  state.v = beta2 * state.v + (1.0 - beta2) * grad.cwiseProduct(grad);
  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(state.t));
  const Vector mhat = state.m / bc1;
  const Vector vhat = state.v / bc2;
  param -= lr * (mhat.array() / (vhat.array().sqrt() + eps)).matrix();
}

inline void adam_step_matrix(Matrix& param, const Matrix& grad, AdamState& state, double lr,
                             double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8) {
  Eigen::Map<Vector> p(param.data(), param.size());
  Eigen::Map<const Vector> g(grad.data(), grad.size());
  adam_step(p, Vector(g), state, lr, beta1, beta2, eps);
}

inline PlainParams init_plain(int n, int m, std::uint64_t seed, double scale = 1.0) {
  PlainParams params;
  params.S.resize(m, n);
  Rng rng(seed);
  const double sd = scale / std::sqrt(static_cast<double>(n));
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) params.S(i, j) = sd * rng.normal();
  return params;
}

inline SymParams init_sym(PairPartition basis, int offset, std::uint64_t seed) {
  SymParams params;
  params.basis = std::move(basis);
  params.offset = offset;
  const int d = params.basis.num_cells;
  params.theta.resize(d);
  Rng rng(seed);
  const double sd = 1.0 / std::sqrt(static_cast<double>(d));
  for (int i = 0; i < d; ++i) params.theta(i) = sd * rng.normal();
  return params;
}

}  // namespace symsat
