#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <set>
#include <vector>

#include "symsat/rng.hpp"

using symsat::Rng;

TEST_CASE("same seed reproduces the stream", "[rng]") {
  Rng a(42), b(42);
  for (int i = 0; i < 1000; ++i) REQUIRE(a.next_u64() == b.next_u64());
}

TEST_CASE("different seeds diverge", "[rng]") {
  Rng a(1), b(2);
  int same = 0;
  for (int i = 0; i < 64; ++i) same += a.next_u64() == b.next_u64();
  REQUIRE(same == 0);
}

TEST_CASE("uniform values lie in [0,1) with sane moments", "[rng]") {
  Rng rng(7);
  const int n = 200000;
  double sum = 0.0, sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    sum += u;
    sq += u * u;
  }
  const double mean = sum / n;
  const double var = sq / n - mean * mean;
  REQUIRE(std::abs(mean - 0.5) < 0.01);
  REQUIRE(std::abs(var - 1.0 / 12.0) < 0.01);
}

TEST_CASE("normal draws have unit variance", "[rng]") {
  Rng rng(11);
  const int n = 200000;
  double sum = 0.0, sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = rng.normal();
    sum += x;
    sq += x * x;
  }
  const double mean = sum / n;
  const double var = sq / n - mean * mean;
  REQUIRE(std::abs(mean) < 0.02);
  REQUIRE(std::abs(var - 1.0) < 0.03);
}

TEST_CASE("bounded stays in range and hits every residue", "[rng]") {
  Rng rng(3);
  std::set<std::uint64_t> seen;
  for (int i = 0; i < 1000; ++i) {
    const std::uint64_t v = rng.bounded(7);
    REQUIRE(v < 7);
    seen.insert(v);
  }
  REQUIRE(seen.size() == 7);

  for (int i = 0; i < 100; ++i) REQUIRE(rng.bounded(1) == 0);
}

TEST_CASE("uniform_int covers inclusive bounds", "[rng]") {
  Rng rng(5);
  std::set<int> seen;
  for (int i = 0; i < 2000; ++i) {
    const int v = rng.uniform_int(-3, 3);
    REQUIRE(v >= -3);
    REQUIRE(v <= 3);
    seen.insert(v);
  }
  REQUIRE(seen.size() == 7);
}

TEST_CASE("derived streams are stable and path sensitive", "[rng]") {
  Rng a = Rng::derive(9, {1, 2, 3});
  Rng b = Rng::derive(9, {1, 2, 3});
  REQUIRE(a.next_u64() == b.next_u64());
  REQUIRE(a.next_u64() == b.next_u64());

  Rng c = Rng::derive(9, {1, 2, 4});
  Rng d = Rng::derive(9, {1, 3, 2});
  Rng e = Rng::derive(8, {1, 2, 3});
  Rng base = Rng::derive(9, {1, 2, 3});
  const std::uint64_t first = base.next_u64();
  REQUIRE(first != c.next_u64());
  REQUIRE(first != d.next_u64());
  REQUIRE(first != e.next_u64());
}
