#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "symsat/pair_partition.hpp"
#include "symsat/tasks.hpp"

namespace symsat {

// ---------------------------------------------------------------------------
// Base64 (standard alphabet, '=' padding)

inline std::string base64_encode(const std::vector<std::uint8_t>& data) {
  static const char table[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
  std::string out;
  out.reserve((data.size() + 2) / 3 * 4);
  std::size_t i = 0;
  for (; i + 3 <= data.size(); i += 3) {
    const std::uint32_t v = (static_cast<std::uint32_t>(data[i]) << 16) |
                            (static_cast<std::uint32_t>(data[i + 1]) << 8) | data[i + 2];
    out.push_back(table[(v >> 18) & 63]);
    out.push_back(table[(v >> 12) & 63]);
    out.push_back(table[(v >> 6) & 63]);
    out.push_back(table[v & 63]);
  }
  const std::size_t rest = data.size() - i;
  if (rest == 1) {
    const std::uint32_t v = static_cast<std::uint32_t>(data[i]) << 16;
    out.push_back(table[(v >> 18) & 63]);
    out.push_back(table[(v >> 12) & 63]);
    out.push_back('=');
    out.push_back('=');
  } else if (rest == 2) {
    const std::uint32_t v = (static_cast<std::uint32_t>(data[i]) << 16) |
                            (static_cast<std::uint32_t>(data[i + 1]) << 8);
    out.push_back(table[(v >> 18) & 63]);
    out.push_back(table[(v >> 12) & 63]);
    out.push_back(table[(v >> 6) & 63]);
    out.push_back('=');
  }
  return out;
}

inline std::vector<std::uint8_t> base64_decode(const std::string& text) {
  auto value_of = [](char c) -> int {
    if (c >= 'A' && c <= 'Z') return c - 'A';
    if (c >= 'a' && c <= 'z') return c - 'a' + 26;
    if (c >= '0' && c <= '9') return c - '0' + 52;
    if (c == '+') return 62;
    if (c == '/') return 63;
    return -1;
  };
  if (text.size() % 4 != 0) throw std::invalid_argument("base64: length must be a multiple of 4");
  std::vector<std::uint8_t> out;
  out.reserve(text.size() / 4 * 3);
  for (std::size_t i = 0; i < text.size(); i += 4) {
    int vals[4];
    int pad = 0;
    for (int j = 0; j < 4; ++j) {
      const char c = text[i + static_cast<std::size_t>(j)];
      if (c == '=') {
        if (i + 4 != text.size() || j < 2) throw std::invalid_argument("base64: misplaced padding");
        vals[j] = 0;
        ++pad;
      } else {
        if (pad > 0) throw std::invalid_argument("base64: data after padding");
        vals[j] = value_of(c);
        if (vals[j] < 0) throw std::invalid_argument("base64: invalid character");
      }
    }
    const std::uint32_t v = (static_cast<std::uint32_t>(vals[0]) << 18) |
                            (static_cast<std::uint32_t>(vals[1]) << 12) |
                            (static_cast<std::uint32_t>(vals[2]) << 6) | static_cast<std::uint32_t>(vals[3]);
    out.push_back(static_cast<std::uint8_t>((v >> 16) & 0xff));
    if (pad < 2) out.push_back(static_cast<std::uint8_t>((v >> 8) & 0xff));
    if (pad < 1) out.push_back(static_cast<std::uint8_t>(v & 0xff));
  }
  return out;
}

// Bits pack MSB-first within each byte; trailing bits of the last byte are zero.
inline std::vector<std::uint8_t> pack_bits(const std::vector<char>& bits) {
  std::vector<std::uint8_t> out((bits.size() + 7) / 8, 0);
  for (std::size_t i = 0; i < bits.size(); ++i)
    if (bits[i]) out[i / 8] |= static_cast<std::uint8_t>(0x80u >> (i % 8));
  return out;
}

inline std::vector<char> unpack_bits(const std::vector<std::uint8_t>& bytes, std::size_t count) {
  if (bytes.size() != (count + 7) / 8) throw std::invalid_argument("unpack_bits: byte count mismatch");
  std::vector<char> out(count, 0);
  for (std::size_t i = 0; i < count; ++i)
    out[i] = (bytes[i / 8] & (0x80u >> (i % 8))) ? 1 : 0;
  return out;
}

// ---------------------------------------------------------------------------
// Datasets: JSON-lines, one example per line.

inline void write_dataset(const std::string& path, const std::vector<Example>& examples) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  for (const Example& ex : examples) {
    nlohmann::json line;
    line["task"] = ex.task;
    line["bits"] = base64_encode(pack_bits(ex.assignment));
    line["mask"] = base64_encode(pack_bits(ex.input_mask));
    out << line.dump() << '\n';
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

inline std::vector<Example> read_dataset(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open for reading: " + path);
  std::vector<Example> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
    Example ex;
    ex.task = j.at("task").get<std::string>();
    const std::size_t n = static_cast<std::size_t>(task_n(ex.task));
    ex.assignment = unpack_bits(base64_decode(j.at("bits").get<std::string>()), n);
    ex.input_mask = unpack_bits(base64_decode(j.at("mask").get<std::string>()), n);
    if (!example_valid(ex))
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": example violates one-hot structure");
    out.push_back(std::move(ex));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Binary container for matrices and checkpoints: 4-byte magic "SSN1",
// uint32 little-endian header length, JSON header, then float64
// little-endian payload in row-major order.

struct SsnFile {
  nlohmann::json header;
  std::vector<double> data;
};

static_assert(sizeof(double) == 8);

inline void write_ssn(const std::string& path, const nlohmann::json& header, const double* data,
                      std::size_t count) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  const std::string head = header.dump();
  const std::uint32_t len = static_cast<std::uint32_t>(head.size());
  char len_bytes[4] = {static_cast<char>(len & 0xff), static_cast<char>((len >> 8) & 0xff),
                       static_cast<char>((len >> 16) & 0xff), static_cast<char>((len >> 24) & 0xff)};
  out.write("SSN1", 4);
  out.write(len_bytes, 4);
  out.write(head.data(), static_cast<std::streamsize>(head.size()));
  out.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(count * sizeof(double)));
  if (!out) throw std::runtime_error("write failed: " + path);
}

inline SsnFile read_ssn(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open for reading: " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, "SSN1", 4) != 0) throw std::runtime_error("not a SSN1 file: " + path);
  char len_bytes[4];
  in.read(len_bytes, 4);
  if (!in) throw std::runtime_error("truncated header: " + path);
  std::uint32_t len = 0;
  for (int i = 3; i >= 0; --i) len = (len << 8) | static_cast<std::uint8_t>(len_bytes[i]);
  std::string head(len, '\0');
  in.read(head.data(), static_cast<std::streamsize>(len));
  if (!in) throw std::runtime_error("truncated header: " + path);
  SsnFile file;
  try {
    file.header = nlohmann::json::parse(head);
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(path + ": bad header: " + e.what());
  }
  std::vector<char> raw((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (raw.size() % sizeof(double) != 0) throw std::runtime_error("payload not a multiple of 8 bytes: " + path);
  file.data.resize(raw.size() / sizeof(double));
  std::memcpy(file.data.data(), raw.data(), raw.size());
  return file;
}

inline void save_matrix(const std::string& path, const Matrix& m) {
  nlohmann::json header;
  header["kind"] = "matrix";
  header["rows"] = m.rows();
  header["cols"] = m.cols();
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm = m;
  write_ssn(path, header, rm.data(), static_cast<std::size_t>(rm.size()));
}

inline Matrix load_matrix(const std::string& path) {
  const SsnFile file = read_ssn(path);
  if (file.header.value("kind", "") != "matrix") throw std::runtime_error("not a matrix file: " + path);
  const auto rows = file.header.at("rows").get<Eigen::Index>();
  const auto cols = file.header.at("cols").get<Eigen::Index>();
  if (rows < 0 || cols < 0 || static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols) != file.data.size())
    throw std::runtime_error("matrix shape does not match payload: " + path);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j)
      m(i, j) = file.data[static_cast<std::size_t>(i) * static_cast<std::size_t>(cols) +
                          static_cast<std::size_t>(j)];
  return m;
}

// Model checkpoint. Plain models store the clause matrix S; symmetric models
// store theta together with the group label it indexes (an expression string,
// or "builtin:<task>" for generator-defined groups) and the conjugation that
// aligns the group with the learned coordinates. offset is the position of
// the group's action inside the full variable vector (after the truth
// column); k is the embedding rank used in training.
struct Checkpoint {
  std::string model;  // "plain" or "sym"
  std::string task;
  int naux = 0;
  int k = 0;
  Matrix S;
  Vector theta;
  std::string group;
  std::vector<int> sigma;  // empty means identity
  int offset = 0;
};

inline void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  nlohmann::json header;
  header["kind"] = "checkpoint";
  header["model"] = ckpt.model;
  header["task"] = ckpt.task;
  header["naux"] = ckpt.naux;
  header["k"] = ckpt.k;
  if (ckpt.model == "plain") {
    header["rows"] = ckpt.S.rows();
    header["cols"] = ckpt.S.cols();
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm = ckpt.S;
    write_ssn(path, header, rm.data(), static_cast<std::size_t>(rm.size()));
  } else if (ckpt.model == "sym") {
    header["group"] = ckpt.group;
    header["offset"] = ckpt.offset;
    header["dim"] = ckpt.theta.size();
    if (!ckpt.sigma.empty()) header["sigma"] = ckpt.sigma;
    write_ssn(path, header, ckpt.theta.data(), static_cast<std::size_t>(ckpt.theta.size()));
  } else {
    throw std::invalid_argument("save_checkpoint: unknown model kind: " + ckpt.model);
  }
}

inline Checkpoint load_checkpoint(const std::string& path) {
  const SsnFile file = read_ssn(path);
  if (file.header.value("kind", "") != "checkpoint") throw std::runtime_error("not a checkpoint file: " + path);
  Checkpoint ckpt;
  ckpt.model = file.header.at("model").get<std::string>();
  ckpt.task = file.header.at("task").get<std::string>();
  ckpt.naux = file.header.value("naux", 0);
  ckpt.k = file.header.value("k", 0);
  if (ckpt.model == "plain") {
    const auto rows = file.header.at("rows").get<Eigen::Index>();
    const auto cols = file.header.at("cols").get<Eigen::Index>();
    if (static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols) != file.data.size())
      throw std::runtime_error("checkpoint shape does not match payload: " + path);
    ckpt.S.resize(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
      for (Eigen::Index j = 0; j < cols; ++j)
        ckpt.S(i, j) = file.data[static_cast<std::size_t>(i) * static_cast<std::size_t>(cols) +
                                 static_cast<std::size_t>(j)];
  } else if (ckpt.model == "sym") {
    ckpt.group = file.header.at("group").get<std::string>();
    ckpt.offset = file.header.at("offset").get<int>();
    if (file.header.contains("sigma")) ckpt.sigma = file.header.at("sigma").get<std::vector<int>>();
    const auto dim = file.header.at("dim").get<Eigen::Index>();
    if (static_cast<std::size_t>(dim) != file.data.size())
      throw std::runtime_error("checkpoint shape does not match payload: " + path);
    ckpt.theta = Eigen::Map<const Vector>(file.data.data(), dim);
  } else {
    throw std::runtime_error("unknown checkpoint model kind: " + ckpt.model);
  }
  return ckpt;
}

}  // namespace symsat
