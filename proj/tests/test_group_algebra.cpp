#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <set>
#include <string>
#include <vector>

#include "symsat/generators.hpp"
#include "symsat/group_expr.hpp"
#include "symsat/pair_partition.hpp"

using symsat::GroupExpr;
using symsat::Matrix;
using symsat::PairPartition;
using symsat::Perm;
using symsat::Rng;
using symsat::enumerate_group;
using symsat::generator_set;
using symsat::orbit_labels;
using symsat::pair_orbits;
using symsat::parse_group_expr;

namespace {

// Average of P_g M P_g^T over the whole group; slow reference for the
// Reynolds operator.
Matrix group_average(const Matrix& m, const std::set<Perm>& group) {
  const int n = static_cast<int>(m.rows());
  Matrix acc = Matrix::Zero(n, n);
  for (const Perm& g : group)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) acc(g(i), g(j)) += m(i, j);
  return acc / static_cast<double>(group.size());
}

Matrix random_matrix(int n, Rng& rng) {
  Matrix m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m(i, j) = rng.normal();
  return m;
}

}  // namespace

TEST_CASE("generator sets close to the expected group order", "[generators]") {
  const std::vector<std::pair<std::string, std::size_t>> cases = {
      {"S3", 6},          {"Z4", 4},      {"I5", 1},         {"S2 * S3", 12},
      {"Z2 + Z2", 4},     {"S2 wr S3", 48}, {"S3 wr S3", 1296}, {"S4", 24},
      {"Z2 + I3", 2},     {"S2 wr I2", 4},
  };
  for (const auto& [expr, order] : cases) {
    const GroupExpr e = parse_group_expr(expr);
    const std::vector<Perm> gens = generator_set(e);
    for (const Perm& g : gens) REQUIRE(g.size() == e.degree());
    REQUIRE(enumerate_group(gens).size() == order);
  }
}

TEST_CASE("structural orbit labels match the generated action", "[generators]") {
  const std::vector<std::string> exprs = {
      "I4", "Z6", "S5", "Z2 + I3", "S3 * Z3", "S2 wr I2", "S2 wr I2 + Z3", "(Z2 + I2) wr S2",
  };
  for (const std::string& s : exprs) {
    const GroupExpr e = parse_group_expr(s);
    const std::vector<int> structural = orbit_labels(e);
    const std::vector<int> generated = orbit_labels(e.degree(), generator_set(e));
    REQUIRE(structural == generated);
    REQUIRE(static_cast<std::int64_t>(*std::max_element(structural.begin(), structural.end())) + 1 ==
            e.orbit_count());
  }
}

TEST_CASE("pair orbits of small groups", "[pair_partition]") {
  const PairPartition s3 = pair_orbits(3, generator_set(parse_group_expr("S3")));
  REQUIRE(s3.num_cells == 2);
  REQUIRE(s3.at(0, 0) == s3.at(1, 1));
  REQUIRE(s3.at(0, 1) == s3.at(2, 0));
  REQUIRE(s3.at(0, 0) != s3.at(0, 1));

  const PairPartition z4 = pair_orbits(4, generator_set(parse_group_expr("Z4")));
  REQUIRE(z4.num_cells == 4);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) REQUIRE(z4.at(i, j) == z4.at(0, ((j - i) % 4 + 4) % 4));

  const PairPartition i3 = pair_orbits(3, generator_set(parse_group_expr("I3")));
  REQUIRE(i3.num_cells == 9);
}

TEST_CASE("pair orbit ids follow first occurrence", "[pair_partition]") {
  const PairPartition p = pair_orbits(4, generator_set(parse_group_expr("Z4")));
  REQUIRE(p.at(0, 0) == 0);
  REQUIRE(p.at(0, 1) == 1);
  REQUIRE(p.at(0, 2) == 2);
  REQUIRE(p.at(0, 3) == 3);

  PairPartition q = p;
  q.canonicalize();
  REQUIRE(q == p);
}

TEST_CASE("conjugation relabels points consistently", "[pair_partition]") {
  Rng rng(41);
  const GroupExpr e = parse_group_expr("S2 wr S3");
  const std::vector<Perm> gens = generator_set(e);
  const PairPartition base = pair_orbits(e.degree(), gens);
  for (int trial = 0; trial < 10; ++trial) {
    const Perm sigma = Perm::random(e.degree(), rng);
    std::vector<Perm> conj_gens;
    for (const Perm& g : gens) conj_gens.push_back(sigma * g * sigma.inverse());
    const PairPartition direct = pair_orbits(e.degree(), conj_gens);
    const PairPartition moved = symsat::conjugate(base, sigma);
    REQUIRE(symsat::same_partition(direct, moved));
    REQUIRE(symsat::conjugate(moved, sigma.inverse()) == base);
  }
}

TEST_CASE("symmetrize merges transpose cells", "[pair_partition]") {
  const PairPartition z3 = pair_orbits(3, generator_set(parse_group_expr("Z3")));
  REQUIRE(z3.num_cells == 3);
  const PairPartition z3s = symsat::symmetrize(z3);
  REQUIRE(z3s.num_cells == 2);
  const PairPartition s3 = pair_orbits(3, generator_set(parse_group_expr("S3")));
  REQUIRE(z3s == s3);

  const PairPartition z4s = symsat::symmetrize(pair_orbits(4, generator_set(parse_group_expr("Z4"))));
  REQUIRE(z4s.num_cells == 3);

  REQUIRE(symsat::symmetrize(z4s) == z4s);
}

TEST_CASE("refinement ordering of pair partitions", "[pair_partition]") {
  const PairPartition z3 = pair_orbits(3, generator_set(parse_group_expr("Z3")));
  const PairPartition s3 = pair_orbits(3, generator_set(parse_group_expr("S3")));
  const PairPartition i3 = pair_orbits(3, generator_set(parse_group_expr("I3")));

  REQUIRE(symsat::is_refinement(z3, s3));
  REQUIRE_FALSE(symsat::is_refinement(s3, z3));
  REQUIRE(symsat::is_refinement(i3, z3));
  REQUIRE(symsat::is_refinement(i3, s3));
  REQUIRE(symsat::is_refinement(z3, z3));
  REQUIRE_FALSE(symsat::is_refinement(z3, i3));
}

TEST_CASE("cell pooling equals group averaging", "[pair_partition]") {
  Rng rng(43);
  for (const std::string s : {"Z3", "S3", "S2 wr S2", "Z2 + Z3"}) {
    const GroupExpr e = parse_group_expr(s);
    const std::vector<Perm> gens = generator_set(e);
    const PairPartition p = pair_orbits(e.degree(), gens);
    const std::set<Perm> group = enumerate_group(gens);
    for (int trial = 0; trial < 5; ++trial) {
      const Matrix m = random_matrix(e.degree(), rng);
      const Matrix pooled = symsat::reynolds_project(m, p);
      const Matrix averaged = group_average(m, group);
      REQUIRE((pooled - averaged).cwiseAbs().maxCoeff() < 1e-12);
    }
  }
}

TEST_CASE("projection distance measures the equivariant residual", "[pair_partition]") {
  Rng rng(47);
  const GroupExpr e = parse_group_expr("S2 wr S2");
  const PairPartition p = pair_orbits(e.degree(), generator_set(e));

  const Matrix m = random_matrix(e.degree(), rng);
  const Matrix prj = symsat::reynolds_project(m, p);
  REQUIRE(symsat::projection_distance(m, p) == Catch::Approx((m - prj).norm()).margin(1e-12));
  REQUIRE(symsat::projection_distance(prj, p) < 1e-12);

  const Matrix eq = symsat::random_equivariant(p, rng);
  REQUIRE(symsat::projection_distance(eq, p) < 1e-12);
  REQUIRE((symsat::reynolds_project(eq, p) - eq).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("sampling a symmetrized partition yields symmetric matrices", "[pair_partition]") {
  Rng rng(53);
  const PairPartition p = symsat::symmetrize(pair_orbits(4, generator_set(parse_group_expr("Z4"))));
  const Matrix m = symsat::random_equivariant(p, rng);
  REQUIRE((m - m.transpose()).cwiseAbs().maxCoeff() < 1e-12);
}
