#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <catch2/catch_amalgamated.hpp>

#include "symsat/io.hpp"
#include "symsat/tasks.hpp"

using namespace symsat;

namespace {

struct TempDir {
  std::filesystem::path path;
  TempDir() {
    path = std::filesystem::temp_directory_path() /
           ("symsat-test-" + std::to_string(Catch::rngSeed()) + "-" + std::to_string(counter()++));
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
  static int& counter() {
    static int c = 0;
    return c;
  }
};

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

}  // namespace

TEST_CASE("base64 round trips and matches known vectors", "[io]") {
  REQUIRE(base64_encode({}) == "");
  REQUIRE(base64_encode({'f'}) == "Zg==");
  REQUIRE(base64_encode({'f', 'o'}) == "Zm8=");
  REQUIRE(base64_encode({'f', 'o', 'o'}) == "Zm9v");
  REQUIRE(base64_encode({'f', 'o', 'o', 'b'}) == "Zm9vYg==");
  REQUIRE(base64_encode({'f', 'o', 'o', 'b', 'a'}) == "Zm9vYmE=");
  REQUIRE(base64_encode({'f', 'o', 'o', 'b', 'a', 'r'}) == "Zm9vYmFy");

  Rng rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<std::uint8_t> data(rng.bounded(100));
    for (auto& b : data) b = static_cast<std::uint8_t>(rng.bounded(256));
    REQUIRE(base64_decode(base64_encode(data)) == data);
  }

  REQUIRE_THROWS_AS(base64_decode("abc"), std::invalid_argument);
  REQUIRE_THROWS_AS(base64_decode("ab=c"), std::invalid_argument);
  REQUIRE_THROWS_AS(base64_decode("a==="), std::invalid_argument);
  REQUIRE_THROWS_AS(base64_decode("ab!@"), std::invalid_argument);
}

TEST_CASE("bit packing round trips", "[io]") {
  Rng rng(13);
  for (std::size_t n : {0ul, 1ul, 7ul, 8ul, 9ul, 324ul, 729ul}) {
    std::vector<char> bits(n);
    for (auto& b : bits) b = rng.bounded(2) ? 1 : 0;
    const auto packed = pack_bits(bits);
    REQUIRE(packed.size() == (n + 7) / 8);
    REQUIRE(unpack_bits(packed, n) == bits);
  }
  REQUIRE(pack_bits({1, 0, 0, 0, 0, 0, 0, 0}) == std::vector<std::uint8_t>{0x80});
  REQUIRE(pack_bits({0, 0, 0, 0, 0, 0, 0, 1, 1}) == std::vector<std::uint8_t>{0x01, 0x80});
  REQUIRE_THROWS_AS(unpack_bits({0x00}, 9), std::invalid_argument);
}

TEST_CASE("datasets round trip through files byte-identically", "[io]") {
  TempDir dir;
  const auto sudoku = sudoku_generate(6, 31, 42, 2024);
  const auto cubes = cube_generate(4, CubeMissing{2, 2, 1}, 2024);
  std::vector<Example> mixed = sudoku;
  mixed.insert(mixed.end(), cubes.begin(), cubes.end());

  const std::string path = dir.file("mixed.jsonl");
  write_dataset(path, mixed);
  const auto loaded = read_dataset(path);
  REQUIRE(loaded.size() == mixed.size());
  for (std::size_t i = 0; i < mixed.size(); ++i) {
    REQUIRE(loaded[i].task == mixed[i].task);
    REQUIRE(loaded[i].assignment == mixed[i].assignment);
    REQUIRE(loaded[i].input_mask == mixed[i].input_mask);
  }

  const std::string again = dir.file("again.jsonl");
  write_dataset(again, mixed);
  REQUIRE(slurp(path) == slurp(again));
}

TEST_CASE("dataset reader rejects malformed input", "[io]") {
  TempDir dir;
  const std::string path = dir.file("bad.jsonl");

  {
    std::ofstream out(path);
    out << "{not json}\n";
  }
  REQUIRE_THROWS_AS(read_dataset(path), std::runtime_error);

  {
    auto ds = sudoku_generate(1, 31, 1);
    ds[0].assignment[0] = ds[0].assignment[0] ? 0 : 1;
    std::ofstream out(path);
    nlohmann::json j;
    j["task"] = ds[0].task;
    j["bits"] = base64_encode(pack_bits(ds[0].assignment));
    j["mask"] = base64_encode(pack_bits(ds[0].input_mask));
    out << j.dump() << "\n";
  }
  REQUIRE_THROWS_AS(read_dataset(path), std::runtime_error);

  REQUIRE_THROWS_AS(read_dataset(dir.file("missing.jsonl")), std::runtime_error);
}

TEST_CASE("matrix container round trips", "[io]") {
  TempDir dir;
  Rng rng(5);
  Matrix m(7, 3);
  for (int i = 0; i < m.rows(); ++i)
    for (int j = 0; j < m.cols(); ++j) m(i, j) = rng.normal();

  const std::string path = dir.file("m.ssn");
  save_matrix(path, m);
  const Matrix back = load_matrix(path);
  REQUIRE(back.rows() == 7);
  REQUIRE(back.cols() == 3);
  REQUIRE((back - m).cwiseAbs().maxCoeff() == 0.0);

  {
    std::ofstream out(dir.file("junk.ssn"), std::ios::binary);
    out << "XXXXjunk";
  }
  REQUIRE_THROWS_AS(load_matrix(dir.file("junk.ssn")), std::runtime_error);
}

TEST_CASE("checkpoints round trip for both model kinds", "[io]") {
  TempDir dir;
  Rng rng(11);

  Checkpoint plain;
  plain.model = "plain";
  plain.task = "sudoku9";
  plain.naux = 300;
  plain.S.resize(4, 6);
  for (int i = 0; i < plain.S.rows(); ++i)
    for (int j = 0; j < plain.S.cols(); ++j) plain.S(i, j) = rng.normal();
  save_checkpoint(dir.file("plain.ssn"), plain);
  const Checkpoint p = load_checkpoint(dir.file("plain.ssn"));
  REQUIRE(p.model == "plain");
  REQUIRE(p.task == "sudoku9");
  REQUIRE(p.naux == 300);
  REQUIRE((p.S - plain.S).cwiseAbs().maxCoeff() == 0.0);

  Checkpoint sym;
  sym.model = "sym";
  sym.task = "sudoku9";
  sym.group = "(S3 wr S3) * (S3 wr S3) * S9";
  sym.offset = 1;
  sym.theta.resize(18);
  for (int i = 0; i < 18; ++i) sym.theta(i) = rng.normal();
  save_checkpoint(dir.file("sym.ssn"), sym);
  const Checkpoint s = load_checkpoint(dir.file("sym.ssn"));
  REQUIRE(s.model == "sym");
  REQUIRE(s.group == sym.group);
  REQUIRE(s.offset == 1);
  REQUIRE((s.theta - sym.theta).cwiseAbs().maxCoeff() == 0.0);

  Checkpoint bad;
  bad.model = "mystery";
  REQUIRE_THROWS_AS(save_checkpoint(dir.file("bad.ssn"), bad), std::invalid_argument);
  save_matrix(dir.file("mat.ssn"), Matrix::Identity(2, 2));
  REQUIRE_THROWS_AS(load_checkpoint(dir.file("mat.ssn")), std::runtime_error);
}
