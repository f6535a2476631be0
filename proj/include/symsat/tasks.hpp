#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "symsat/group_expr.hpp"
#include "symsat/pair_partition.hpp"
#include "symsat/perm.hpp"
#include "symsat/rng.hpp"

namespace symsat {

// One training or test instance. assignment is the full one-hot solution,
// input_mask marks the given bits; both cover whole one-hot blocks.
struct Example {
  std::string task;  // "sudoku9" or "cube333"
  std::vector<char> assignment;
  std::vector<char> input_mask;
};

inline int task_block_size(const std::string& task) {
  if (task == "sudoku9") return 9;
  if (task == "cube333") return 6;
  throw std::invalid_argument("unknown task: " + task);
}

inline int task_n(const std::string& task) {
  if (task == "sudoku9") return 729;
  if (task == "cube333") return 324;
  throw std::invalid_argument("unknown task: " + task);
}

struct Difficulty {
  std::string name;
  int count = 0;  // masked cells (sudoku) or missing facelets (cube)
};

inline Difficulty sudoku_difficulty(const std::string& name) {
  if (name == "easy") return {name, 21};
  if (name == "normal") return {name, 31};
  if (name == "hard") return {name, 41};
  throw std::invalid_argument("unknown sudoku difficulty: " + name);
}

inline Difficulty cube_difficulty(const std::string& name) {
  if (name == "easy") return {name, 3};
  if (name == "normal") return {name, 4};
  if (name == "hard") return {name, 5};
  throw std::invalid_argument("unknown cube difficulty: " + name);
}

// ---------------------------------------------------------------------------
// Sudoku

using SudokuBoard = std::array<int, 81>;  // digits 0..8, row-major

inline bool sudoku_valid(const SudokuBoard& board) {
  for (int unit = 0; unit < 9; ++unit) {
    int row_seen = 0, col_seen = 0, box_seen = 0;
    for (int i = 0; i < 9; ++i) {
      row_seen |= 1 << board[static_cast<std::size_t>(unit * 9 + i)];
      col_seen |= 1 << board[static_cast<std::size_t>(i * 9 + unit)];
      const int r = (unit / 3) * 3 + i / 3;
      const int c = (unit % 3) * 3 + i % 3;
      box_seen |= 1 << board[static_cast<std::size_t>(r * 9 + c)];
    }
    if (row_seen != 0x1ff || col_seen != 0x1ff || box_seen != 0x1ff) return false;
  }
  return true;
}

namespace detail {

inline bool sudoku_fill(SudokuBoard& board, std::array<int, 9>& row_used, std::array<int, 9>& col_used,
                        std::array<int, 9>& box_used, int cell, Rng& rng) {
  if (cell == 81) return true;
  const int r = cell / 9, c = cell % 9, b = (r / 3) * 3 + c / 3;
  std::array<int, 9> order{0, 1, 2, 3, 4, 5, 6, 7, 8};
  for (int i = 8; i > 0; --i)
    std::swap(order[static_cast<std::size_t>(i)], order[rng.bounded(static_cast<std::uint64_t>(i) + 1)]);
  for (int d : order) {
    const int bit = 1 << d;
    if ((row_used[static_cast<std::size_t>(r)] | col_used[static_cast<std::size_t>(c)] |
         box_used[static_cast<std::size_t>(b)]) &
        bit)
      continue;
    board[static_cast<std::size_t>(cell)] = d;
    row_used[static_cast<std::size_t>(r)] |= bit;
    col_used[static_cast<std::size_t>(c)] |= bit;
    box_used[static_cast<std::size_t>(b)] |= bit;
    if (sudoku_fill(board, row_used, col_used, box_used, cell + 1, rng)) return true;
    row_used[static_cast<std::size_t>(r)] &= ~bit;
    col_used[static_cast<std::size_t>(c)] &= ~bit;
    box_used[static_cast<std::size_t>(b)] &= ~bit;
  }
  return false;
}

}  // namespace detail

inline SudokuBoard sudoku_random_board(Rng& rng) {
  SudokuBoard board{};
  std::array<int, 9> row_used{}, col_used{}, box_used{};
  if (!detail::sudoku_fill(board, row_used, col_used, box_used, 0, rng))
    throw std::logic_error("sudoku fill failed");
  return board;
}

inline std::vector<char> sudoku_encode(const SudokuBoard& board) {
  std::vector<char> bits(729, 0);
  for (int cell = 0; cell < 81; ++cell) bits[static_cast<std::size_t>(cell * 9 + board[static_cast<std::size_t>(cell)])] = 1;
  return bits;
}

inline SudokuBoard sudoku_decode(const std::vector<char>& bits) {
  if (bits.size() != 729) throw std::invalid_argument("sudoku_decode: need 729 bits");
  SudokuBoard board{};
  for (int cell = 0; cell < 81; ++cell) {
    int found = -1;
    for (int d = 0; d < 9; ++d)
      if (bits[static_cast<std::size_t>(cell * 9 + d)]) {
        if (found >= 0) throw std::invalid_argument("sudoku_decode: cell is not one-hot");
        found = d;
      }
    if (found < 0) throw std::invalid_argument("sudoku_decode: cell is not one-hot");
    board[static_cast<std::size_t>(cell)] = found;
  }
  return board;
}

// Masked cells per example drawn uniformly from [mask_lo, mask_hi].
inline std::vector<Example> sudoku_generate(int count, int mask_lo, int mask_hi, std::uint64_t seed) {
  if (mask_lo < 0 || mask_hi > 81 || mask_lo > mask_hi)
    throw std::invalid_argument("sudoku_generate: mask range must lie in [0, 81]");
  std::vector<Example> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int idx = 0; idx < count; ++idx) {
    Rng rng = Rng::derive(seed, {0x5d0cULL, static_cast<std::uint64_t>(idx)});
    const SudokuBoard board = sudoku_random_board(rng);
    const int masked = rng.uniform_int(mask_lo, mask_hi);
    std::array<int, 81> cells{};
    for (int i = 0; i < 81; ++i) cells[static_cast<std::size_t>(i)] = i;
    for (int i = 80; i > 0; --i)
      std::swap(cells[static_cast<std::size_t>(i)], cells[rng.bounded(static_cast<std::uint64_t>(i) + 1)]);
    Example ex;
    ex.task = "sudoku9";
    ex.assignment = sudoku_encode(board);
    ex.input_mask.assign(729, 1);
    for (int i = 0; i < masked; ++i) {
      const int cell = cells[static_cast<std::size_t>(i)];
      for (int d = 0; d < 9; ++d) ex.input_mask[static_cast<std::size_t>(cell * 9 + d)] = 0;
    }
    out.push_back(std::move(ex));
  }
  return out;
}

inline std::vector<Example> sudoku_generate(int count, int masked, std::uint64_t seed) {
  return sudoku_generate(count, masked, masked, seed);
}

inline GroupExpr sudoku_group() { return parse_group_expr("(S3 wr S3) * (S3 wr S3) * S9"); }

// ---------------------------------------------------------------------------
// Rubik's cube
//
// Stickers are derived from integer geometry: each facelet is a (normal,
// position) pair on the surface of [-1,1]^3, faces are numbered so that
// opposite faces sum to 5 (0=up +z, 1=front +x, 2=right +y, 3=back -x,
// 4=left -y, 5=down -z), and a face's 3x3 grid is row-major in fixed
// tangent coordinates. Moves rotate a layer of stickers; whole-cube
// rotations induce the color permutations.

namespace cube {

using Vec3 = std::array<int, 3>;

inline Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}

inline Vec3 scale(const Vec3& a, int s) { return {a[0] * s, a[1] * s, a[2] * s}; }

inline Vec3 add(const Vec3& a, const Vec3& b) { return {a[0] + b[0], a[1] + b[1], a[2] + b[2]}; }

// 90-degree rotation about +axis (right-hand rule), `turns` times.
inline Vec3 rotate(const Vec3& v, int axis, int turns) {
  Vec3 r = v;
  const int t = ((turns % 4) + 4) % 4;
  for (int i = 0; i < t; ++i) {
    const int a = (axis + 1) % 3, b = (axis + 2) % 3;
    const int va = r[static_cast<std::size_t>(a)], vb = r[static_cast<std::size_t>(b)];
    r[static_cast<std::size_t>(a)] = -vb;
    r[static_cast<std::size_t>(b)] = va;
  }
  return r;
}

struct Geometry {
  std::array<Vec3, 6> face_normal;
  std::array<Vec3, 6> face_a;  // column tangent
  std::array<Vec3, 6> face_b;  // row tangent
  std::array<Vec3, 54> pos;
  std::array<Vec3, 54> normal;

  Geometry() {
    face_normal = {Vec3{0, 0, 1}, Vec3{1, 0, 0}, Vec3{0, 1, 0}, Vec3{-1, 0, 0}, Vec3{0, -1, 0}, Vec3{0, 0, -1}};
    for (int f = 0; f < 6; ++f) {
      const Vec3 d = face_normal[static_cast<std::size_t>(f)];
      const Vec3 a = (d[0] == 0 && d[1] == 0) ? Vec3{1, 0, 0} : cross(Vec3{0, 0, 1}, d);
      face_a[static_cast<std::size_t>(f)] = a;
      face_b[static_cast<std::size_t>(f)] = cross(d, a);
      for (int row = 0; row < 3; ++row)
        for (int col = 0; col < 3; ++col) {
          const int s = f * 9 + row * 3 + col;
          pos[static_cast<std::size_t>(s)] =
              add(add(scale(d, 1), scale(a, col - 1)), scale(face_b[static_cast<std::size_t>(f)], 1 - row));
          normal[static_cast<std::size_t>(s)] = d;
        }
    }
  }

  int face_of(const Vec3& d) const {
    for (int f = 0; f < 6; ++f)
      if (face_normal[static_cast<std::size_t>(f)] == d) return f;
    throw std::logic_error("not a face normal");
  }

  int sticker_of(const Vec3& p, const Vec3& d) const {
    for (int s = 0; s < 54; ++s)
      if (pos[static_cast<std::size_t>(s)] == p && normal[static_cast<std::size_t>(s)] == d) return s;
    throw std::logic_error("not a sticker");
  }
};

inline const Geometry& geometry() {
  static const Geometry geo;
  return geo;
}

// Facelet permutation of a quarter turn of one layer: stickers whose cubie
// sits in the layer move by the rotation, everything else stays.
inline Perm layer_move(int axis, int layer, int turns) {
  const Geometry& geo = geometry();
  std::vector<int> img(54);
  for (int s = 0; s < 54; ++s) {
    const Vec3& p = geo.pos[static_cast<std::size_t>(s)];
    if (p[static_cast<std::size_t>(axis)] != layer) {
      img[static_cast<std::size_t>(s)] = s;
      continue;
    }
    img[static_cast<std::size_t>(s)] = geo.sticker_of(rotate(p, axis, turns),
                                                      rotate(geo.normal[static_cast<std::size_t>(s)], axis, turns));
  }
  return Perm(std::move(img));
}

// Whole-cube rotation as a permutation of the six colors.
inline Perm color_rotation(int axis, int turns) {
  const Geometry& geo = geometry();
  std::vector<int> img(6);
  for (int f = 0; f < 6; ++f)
    img[static_cast<std::size_t>(f)] = geo.face_of(rotate(geo.face_normal[static_cast<std::size_t>(f)], axis, turns));
  return Perm(std::move(img));
}

enum : int { corner = 0, edge = 1, center = 2 };

inline int sticker_type(int s) {
  const Vec3& p = geometry().pos[static_cast<std::size_t>(s)];
  const Vec3& d = geometry().normal[static_cast<std::size_t>(s)];
  int off = 0;
  for (int i = 0; i < 3; ++i)
    if (d[static_cast<std::size_t>(i)] == 0 && p[static_cast<std::size_t>(i)] != 0) ++off;
  return off == 2 ? corner : off == 1 ? edge : center;
}

}  // namespace cube

struct CubeGenerators {
  std::vector<Perm> facelets;  // R54 on [54]: U D F B L R M E S
  std::vector<Perm> colors;    // R6 on [6]: whole-cube x, y, z rotations
  std::vector<Perm> combined;  // on [324] = [54] x [6]
};

inline CubeGenerators cube_generators() {
  CubeGenerators g;
  // Face moves turn clockwise seen from outside; M follows L, E follows D,
  // S follows F.
  g.facelets.push_back(cube::layer_move(2, 1, -1));   // U
  g.facelets.push_back(cube::layer_move(2, -1, 1));   // D
  g.facelets.push_back(cube::layer_move(0, 1, -1));   // F
  g.facelets.push_back(cube::layer_move(0, -1, 1));   // B
  g.facelets.push_back(cube::layer_move(1, -1, 1));   // L
  g.facelets.push_back(cube::layer_move(1, 1, -1));   // R
  g.facelets.push_back(cube::layer_move(1, 0, 1));    // M
  g.facelets.push_back(cube::layer_move(2, 0, 1));    // E
  g.facelets.push_back(cube::layer_move(0, 0, -1));   // S
  for (int axis = 0; axis < 3; ++axis) g.colors.push_back(cube::color_rotation(axis, 1));
  for (const Perm& p : g.facelets) g.combined.push_back(kron(p, Perm::identity(6)));
  for (const Perm& p : g.colors) g.combined.push_back(kron(Perm::identity(54), p));
  return g;
}

using CubeState = std::array<int, 54>;  // color per facelet

inline CubeState cube_solved() {
  CubeState s{};
  for (int i = 0; i < 54; ++i) s[static_cast<std::size_t>(i)] = i / 9;
  return s;
}

inline CubeState cube_apply(const CubeState& state, const Perm& move) {
  CubeState out{};
  for (int s = 0; s < 54; ++s) out[static_cast<std::size_t>(move(s))] = state[static_cast<std::size_t>(s)];
  return out;
}

inline std::vector<char> cube_encode(const CubeState& state) {
  std::vector<char> bits(324, 0);
  for (int s = 0; s < 54; ++s) bits[static_cast<std::size_t>(s * 6 + state[static_cast<std::size_t>(s)])] = 1;
  return bits;
}

inline CubeState cube_decode(const std::vector<char>& bits) {
  if (bits.size() != 324) throw std::invalid_argument("cube_decode: need 324 bits");
  CubeState state{};
  for (int s = 0; s < 54; ++s) {
    int found = -1;
    for (int c = 0; c < 6; ++c)
      if (bits[static_cast<std::size_t>(s * 6 + c)]) {
        if (found >= 0) throw std::invalid_argument("cube_decode: facelet is not one-hot");
        found = c;
      }
    if (found < 0) throw std::invalid_argument("cube_decode: facelet is not one-hot");
    state[static_cast<std::size_t>(s)] = found;
  }
  return state;
}

struct CubeMissing {
  int corners = 2;
  int edges = 2;
  int centers = 1;
  int total() const { return corners + edges + centers; }
  bool valid() const {
    return corners >= 0 && corners <= 2 && edges >= 0 && edges <= 2 && centers >= 0 && centers <= 1;
  }
};

// Uniform over the type splits compatible with the caps.
inline CubeMissing cube_sample_missing(int total, Rng& rng) {
  std::vector<CubeMissing> options;
  for (int c = 0; c <= 2; ++c)
    for (int e = 0; e <= 2; ++e)
      for (int t = 0; t <= 1; ++t)
        if (c + e + t == total) options.push_back({c, e, t});
  if (options.empty()) throw std::invalid_argument("cube missing count incompatible with type caps");
  return options[rng.bounded(options.size())];
}

namespace detail {

inline std::vector<Example> cube_generate_impl(int count, const CubeMissing* fixed, int total_missing,
                                               std::uint64_t seed) {
  if (fixed && !fixed->valid()) throw std::invalid_argument("cube_generate: missing spec violates type caps");
  const CubeGenerators gens = cube_generators();
  std::array<std::vector<int>, 3> by_type;
  for (int s = 0; s < 54; ++s) by_type[static_cast<std::size_t>(cube::sticker_type(s))].push_back(s);
  std::vector<Example> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int idx = 0; idx < count; ++idx) {
    Rng rng = Rng::derive(seed, {0xcbeULL, static_cast<std::uint64_t>(idx)});
    CubeState state = cube_solved();
    const int moves = rng.uniform_int(20, 40);
    for (int m = 0; m < moves; ++m) {
      const Perm& move = gens.facelets[rng.bounded(gens.facelets.size())];
      if (rng.bounded(2) == 0) {
        state = cube_apply(state, move);
      } else {
        state = cube_apply(state, move.inverse());
      }
    }
    const CubeMissing miss = fixed ? *fixed : cube_sample_missing(total_missing, rng);
    Example ex;
    ex.task = "cube333";
    ex.assignment = cube_encode(state);
    ex.input_mask.assign(324, 1);
    const std::array<int, 3> want{miss.corners, miss.edges, miss.centers};
    for (int type = 0; type < 3; ++type) {
      std::vector<int> pool = by_type[static_cast<std::size_t>(type)];
      for (int i = 0; i < want[static_cast<std::size_t>(type)]; ++i) {
        const std::size_t j = static_cast<std::size_t>(i) + rng.bounded(pool.size() - static_cast<std::size_t>(i));
        std::swap(pool[static_cast<std::size_t>(i)], pool[j]);
        const int s = pool[static_cast<std::size_t>(i)];
        for (int c = 0; c < 6; ++c) ex.input_mask[static_cast<std::size_t>(s * 6 + c)] = 0;
      }
    }
    out.push_back(std::move(ex));
  }
  return out;
}

}  // namespace detail

// Fixed per-type missing counts for every example.
inline std::vector<Example> cube_generate(int count, const CubeMissing& missing, std::uint64_t seed) {
  return detail::cube_generate_impl(count, &missing, 0, seed);
}

// Total missing facelets; the type split is sampled per example within the
// caps (corners <= 2, edges <= 2, centers <= 1).
inline std::vector<Example> cube_generate(int count, int total_missing, std::uint64_t seed) {
  return detail::cube_generate_impl(count, nullptr, total_missing, seed);
}

// ---------------------------------------------------------------------------
// Shared

// Replaces the value of t distinct given blocks with a different random one.
inline void corrupt(std::vector<Example>& dataset, int t, std::uint64_t seed) {
  if (t < 0) throw std::invalid_argument("corrupt: t must be nonnegative");
  if (t == 0) return;
  for (std::size_t idx = 0; idx < dataset.size(); ++idx) {
    Example& ex = dataset[idx];
    const int bs = task_block_size(ex.task);
    const int blocks = static_cast<int>(ex.assignment.size()) / bs;
    std::vector<int> given;
    for (int b = 0; b < blocks; ++b)
      if (ex.input_mask[static_cast<std::size_t>(b * bs)]) given.push_back(b);
    if (static_cast<int>(given.size()) < t) throw std::invalid_argument("corrupt: not enough given blocks");
    Rng rng = Rng::derive(seed, {0xc0bbULL, static_cast<std::uint64_t>(idx)});
    for (int i = 0; i < t; ++i) {
      const std::size_t j = static_cast<std::size_t>(i) + rng.bounded(given.size() - static_cast<std::size_t>(i));
      std::swap(given[static_cast<std::size_t>(i)], given[j]);
      const int b = given[static_cast<std::size_t>(i)];
      int old = -1;
      for (int v = 0; v < bs; ++v)
        if (ex.assignment[static_cast<std::size_t>(b * bs + v)]) old = v;
      int repl = static_cast<int>(rng.bounded(static_cast<std::uint64_t>(bs - 1)));
      if (repl >= old) ++repl;
      for (int v = 0; v < bs; ++v) ex.assignment[static_cast<std::size_t>(b * bs + v)] = v == repl ? 1 : 0;
    }
  }
}

// Fraction of examples whose masked blocks all argmax to the ground truth.
// probs[i] has one probability per variable; ties break to the lowest index.
inline double board_accuracy(const std::vector<Vector>& probs, const std::vector<Example>& examples) {
  if (probs.size() != examples.size()) throw std::invalid_argument("board_accuracy: size mismatch");
  if (examples.empty()) return 0.0;
  int solved = 0;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    const Example& ex = examples[i];
    const int bs = task_block_size(ex.task);
    const int blocks = static_cast<int>(ex.assignment.size()) / bs;
    if (probs[i].size() != static_cast<int>(ex.assignment.size()))
      throw std::invalid_argument("board_accuracy: prediction length mismatch");
    bool ok = true;
    for (int b = 0; b < blocks && ok; ++b) {
      if (ex.input_mask[static_cast<std::size_t>(b * bs)]) continue;
      int best = 0, truth = 0;
      for (int v = 0; v < bs; ++v) {
        if (probs[i](b * bs + v) > probs[i](b * bs + best)) best = v;
        if (ex.assignment[static_cast<std::size_t>(b * bs + v)]) truth = v;
      }
      ok = best == truth;
    }
    solved += ok ? 1 : 0;
  }
  return static_cast<double>(solved) / static_cast<double>(examples.size());
}

inline bool example_valid(const Example& ex) {
  const int bs = task_block_size(ex.task);
  const int n = task_n(ex.task);
  if (static_cast<int>(ex.assignment.size()) != n || static_cast<int>(ex.input_mask.size()) != n) return false;
  for (int b = 0; b < n / bs; ++b) {
    int ones = 0;
    for (int v = 0; v < bs; ++v) {
      const std::size_t f = static_cast<std::size_t>(b * bs + v);
      if (ex.assignment[f]) ++ones;
      if (ex.input_mask[f] != ex.input_mask[static_cast<std::size_t>(b * bs)]) return false;
    }
    if (ones != 1) return false;
  }
  return true;
}

}  // namespace symsat
