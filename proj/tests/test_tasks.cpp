#include <algorithm>
#include <set>
#include <vector>

#include <catch2/catch_amalgamated.hpp>

#include "symsat/generators.hpp"
#include "symsat/pair_partition.hpp"
#include "symsat/tasks.hpp"

using namespace symsat;

namespace {

std::vector<char> apply_perm_bits(const Perm& g, const std::vector<char>& bits) {
  std::vector<char> out(bits.size());
  for (std::size_t i = 0; i < bits.size(); ++i) out[static_cast<std::size_t>(g(static_cast<int>(i)))] = bits[i];
  return out;
}

int given_blocks(const Example& ex) {
  const int bs = task_block_size(ex.task);
  int given = 0;
  for (std::size_t b = 0; b < ex.input_mask.size() / static_cast<std::size_t>(bs); ++b)
    given += ex.input_mask[b * static_cast<std::size_t>(bs)] ? 1 : 0;
  return given;
}

}  // namespace

TEST_CASE("generated sudoku boards satisfy all constraints", "[tasks]") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed);
    REQUIRE(sudoku_valid(sudoku_random_board(rng)));
  }

  const auto full = sudoku_generate(4, 0, 123);
  for (const Example& ex : full) {
    REQUIRE(ex.task == "sudoku9");
    REQUIRE(example_valid(ex));
    REQUIRE(given_blocks(ex) == 81);
    REQUIRE(sudoku_valid(sudoku_decode(ex.assignment)));
  }
}

TEST_CASE("sudoku mask range controls the given count", "[tasks]") {
  const auto ds = sudoku_generate(50, 31, 42, 7);
  std::set<int> seen;
  for (const Example& ex : ds) {
    REQUIRE(example_valid(ex));
    const int given = given_blocks(ex);
    REQUIRE(given >= 39);
    REQUIRE(given <= 50);
    seen.insert(given);
  }
  REQUIRE(seen.size() > 1);

  for (const Example& ex : sudoku_generate(5, 41, 11)) REQUIRE(given_blocks(ex) == 40);

  REQUIRE_THROWS_AS(sudoku_generate(1, -1, 5, 0), std::invalid_argument);
  REQUIRE_THROWS_AS(sudoku_generate(1, 10, 82, 0), std::invalid_argument);
  REQUIRE_THROWS_AS(sudoku_generate(1, 40, 30, 0), std::invalid_argument);
}

TEST_CASE("same seed reproduces the dataset exactly", "[tasks]") {
  const auto a = sudoku_generate(10, 31, 42, 555);
  const auto b = sudoku_generate(10, 31, 42, 555);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    REQUIRE(a[i].assignment == b[i].assignment);
    REQUIRE(a[i].input_mask == b[i].input_mask);
  }
  const auto c = sudoku_generate(10, 31, 42, 556);
  bool any_diff = false;
  for (std::size_t i = 0; i < a.size(); ++i) any_diff = any_diff || a[i].assignment != c[i].assignment;
  REQUIRE(any_diff);

  const auto x = cube_generate(6, 5, 99);
  const auto y = cube_generate(6, 5, 99);
  for (std::size_t i = 0; i < x.size(); ++i) {
    REQUIRE(x[i].assignment == y[i].assignment);
    REQUIRE(x[i].input_mask == y[i].input_mask);
  }
}

TEST_CASE("sudoku group matches the encoding", "[tasks]") {
  const GroupExpr g = sudoku_group();
  REQUIRE(g.degree() == 729);
  REQUIRE(g.basis_dim() == 18);
  REQUIRE(format_group_expr(g) == "(S3 wr S3) * (S3 wr S3) * S9");

  const std::vector<Perm> gens = generator_set(g);
  const std::vector<int> labels = orbit_labels(729, gens);
  REQUIRE(std::set<int>(labels.begin(), labels.end()).size() == 1);

  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    Rng rng(seed + 1000);
    const SudokuBoard board = sudoku_random_board(rng);
    const std::vector<char> bits = sudoku_encode(board);
    for (const Perm& p : gens) {
      const SudokuBoard moved = sudoku_decode(apply_perm_bits(p, bits));
      REQUIRE(sudoku_valid(moved));
    }
  }
}

TEST_CASE("cube moves are quarter turns", "[tasks]") {
  const CubeGenerators g = cube_generators();
  REQUIRE(g.facelets.size() == 9);
  REQUIRE(g.colors.size() == 3);
  REQUIRE(g.combined.size() == 12);

  for (const Perm& p : g.facelets) {
    REQUIRE(p.size() == 54);
    REQUIRE_FALSE(p.is_identity());
    REQUIRE((p * p * p * p).is_identity());
    REQUIRE_FALSE((p * p).is_identity());
  }
  for (const Perm& h : g.colors) {
    REQUIRE(h.size() == 6);
    REQUIRE((h * h * h * h).is_identity());
  }
  for (const Perm& c : g.combined) REQUIRE(c.size() == 324);

  std::set<Perm> distinct(g.facelets.begin(), g.facelets.end());
  REQUIRE(distinct.size() == 9);
}

TEST_CASE("combined cube group has the expected pair cells", "[tasks]") {
  const CubeGenerators g = cube_generators();
  const PairPartition part = pair_orbits(324, g.combined);
  REQUIRE(part.num_cells == 48);
}

TEST_CASE("cube generators map states the same way as the cube model", "[tasks]") {
  const CubeGenerators g = cube_generators();
  Rng rng(31);
  CubeState state = cube_solved();
  for (int m = 0; m < 30; ++m) state = cube_apply(state, g.facelets[rng.bounded(9)]);
  const std::vector<char> bits = cube_encode(state);

  for (std::size_t i = 0; i < 9; ++i) {
    const CubeState via_bits = cube_decode(apply_perm_bits(g.combined[i], bits));
    const CubeState via_model = cube_apply(state, g.facelets[i]);
    REQUIRE(via_bits == via_model);
  }
  for (std::size_t i = 0; i < 3; ++i) {
    const CubeState via_bits = cube_decode(apply_perm_bits(g.combined[9 + i], bits));
    CubeState recolored{};
    for (int s = 0; s < 54; ++s)
      recolored[static_cast<std::size_t>(s)] = g.colors[i](state[static_cast<std::size_t>(s)]);
    REQUIRE(via_bits == recolored);
  }
}

TEST_CASE("cube masking respects the facelet type caps", "[tasks]") {
  const auto standard = cube_generate(20, CubeMissing{2, 2, 1}, 3);
  for (const Example& ex : standard) {
    REQUIRE(ex.task == "cube333");
    REQUIRE(example_valid(ex));
    REQUIRE(given_blocks(ex) == 49);
  }

  const auto none = cube_generate(3, CubeMissing{0, 0, 0}, 3);
  for (const Example& ex : none) REQUIRE(given_blocks(ex) == 54);

  REQUIRE_THROWS_AS(cube_generate(1, CubeMissing{3, 1, 1}, 0), std::invalid_argument);
  REQUIRE_THROWS_AS(cube_generate(1, 6, 0), std::invalid_argument);

  std::set<std::array<int, 3>> splits;
  const auto hard = cube_generate(1000, 3, 77);
  for (const Example& ex : hard) {
    std::array<int, 3> missing{};
    for (int s = 0; s < 54; ++s)
      if (!ex.input_mask[static_cast<std::size_t>(s * 6)]) ++missing[static_cast<std::size_t>(cube::sticker_type(s))];
    REQUIRE(missing[0] + missing[1] + missing[2] == 3);
    REQUIRE(missing[0] <= 2);
    REQUIRE(missing[1] <= 2);
    REQUIRE(missing[2] <= 1);
    splits.insert(missing);
  }
  REQUIRE(splits.size() == 5);
}

TEST_CASE("corrupt changes exactly the requested cells", "[tasks]") {
  auto clean = sudoku_generate(8, 31, 42, 42);
  auto untouched = clean;
  corrupt(untouched, 0, 9);
  for (std::size_t i = 0; i < clean.size(); ++i) REQUIRE(untouched[i].assignment == clean[i].assignment);

  auto one = clean;
  corrupt(one, 1, 9);
  for (std::size_t i = 0; i < clean.size(); ++i) {
    REQUIRE(one[i].input_mask == clean[i].input_mask);
    REQUIRE(example_valid(one[i]));
    int diffs = 0;
    for (int b = 0; b < 81; ++b) {
      bool same = true;
      for (int d = 0; d < 9; ++d)
        same = same && one[i].assignment[static_cast<std::size_t>(b * 9 + d)] ==
                           clean[i].assignment[static_cast<std::size_t>(b * 9 + d)];
      if (!same) {
        ++diffs;
        REQUIRE(one[i].input_mask[static_cast<std::size_t>(b * 9)] == 1);
      }
    }
    REQUIRE(diffs == 1);
  }

  auto cubes = cube_generate(5, CubeMissing{2, 2, 1}, 4);
  auto noisy = cubes;
  corrupt(noisy, 3, 5);
  for (std::size_t i = 0; i < cubes.size(); ++i) {
    REQUIRE(example_valid(noisy[i]));
    int diffs = 0;
    for (int b = 0; b < 54; ++b) {
      bool same = true;
      for (int c = 0; c < 6; ++c)
        same = same && noisy[i].assignment[static_cast<std::size_t>(b * 6 + c)] ==
                           cubes[i].assignment[static_cast<std::size_t>(b * 6 + c)];
      if (!same) ++diffs;
    }
    REQUIRE(diffs == 3);
  }

  auto tiny = sudoku_generate(1, 79, 5);
  REQUIRE_THROWS_AS(corrupt(tiny, 3, 0), std::invalid_argument);
}

TEST_CASE("board accuracy counts fully solved boards", "[tasks]") {
  auto ds = sudoku_generate(4, 31, 42, 314);
  std::vector<Vector> probs;
  for (const Example& ex : ds) {
    Vector p(729);
    for (int i = 0; i < 729; ++i) p(i) = ex.assignment[static_cast<std::size_t>(i)] ? 0.9 : 0.1;
    probs.push_back(p);
  }
  REQUIRE(board_accuracy(probs, ds) == 1.0);

  // Break one masked block in half of the examples.
  for (std::size_t i = 0; i < 2; ++i) {
    for (int b = 0; b < 81; ++b) {
      if (ds[i].input_mask[static_cast<std::size_t>(b * 9)]) continue;
      int truth = 0;
      for (int d = 0; d < 9; ++d)
        if (ds[i].assignment[static_cast<std::size_t>(b * 9 + d)]) truth = d;
      probs[i](b * 9 + (truth + 1) % 9) = 0.95;
      break;
    }
  }
  REQUIRE(board_accuracy(probs, ds) == 0.5);

  std::vector<Vector> uniform(ds.size(), Vector::Constant(729, 0.5));
  REQUIRE(board_accuracy(uniform, ds) == 0.0);

  REQUIRE_THROWS_AS(board_accuracy(std::vector<Vector>{}, ds), std::invalid_argument);
}

TEST_CASE("task encodings round trip", "[tasks]") {
  Rng rng(88);
  for (int trial = 0; trial < 5; ++trial) {
    const SudokuBoard board = sudoku_random_board(rng);
    REQUIRE(sudoku_decode(sudoku_encode(board)) == board);
  }

  const CubeGenerators g = cube_generators();
  CubeState state = cube_solved();
  for (int m = 0; m < 25; ++m) state = cube_apply(state, g.facelets[rng.bounded(9)]);
  REQUIRE(cube_decode(cube_encode(state)) == state);

  std::vector<char> bad(729, 0);
  REQUIRE_THROWS_AS(sudoku_decode(bad), std::invalid_argument);
  bad.assign(729, 1);
  REQUIRE_THROWS_AS(sudoku_decode(bad), std::invalid_argument);
  REQUIRE_THROWS_AS(cube_decode(std::vector<char>(323, 0)), std::invalid_argument);
}
