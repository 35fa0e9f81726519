#include "fuselab/tensor_io.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

#include "fuselab/errors.hpp"

namespace fuselab {

namespace {

constexpr char kMagic[] = "BTEN1\n";
constexpr std::size_t kMagicLen = 6;

[[noreturn]] void fail(const std::string& origin, std::size_t offset,
                       const std::string& what) {
  throw IoError(origin + ": " + what + " at byte offset " + std::to_string(offset));
}

void append_le64(std::string& out, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, 8);
  for (int i = 0; i < 8; ++i) {
    out.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
  }
}

double read_le64(const unsigned char* p) {
  std::uint64_t bits = 0;
  for (int i = 7; i >= 0; --i) bits = (bits << 8) | p[i];
  double v;
  std::memcpy(&v, &bits, 8);
  return v;
}

// Reads digits up to the next '\n'; returns the values and advances `pos`
// past the newline.
std::vector<std::size_t> parse_int_line(const std::string& bytes, std::size_t& pos,
                                        const std::string& origin, const char* what) {
  const std::size_t line_start = pos;
  const std::size_t nl = bytes.find('\n', pos);
  if (nl == std::string::npos) fail(origin, line_start, std::string("unterminated ") + what);
  std::istringstream line(bytes.substr(pos, nl - pos));
  std::vector<std::size_t> out;
  long long v = 0;
  while (line >> v) {
    if (v < 0) fail(origin, line_start, std::string("negative value in ") + what);
    out.push_back(static_cast<std::size_t>(v));
  }
  if (!line.eof()) fail(origin, line_start, std::string("malformed ") + what);
  pos = nl + 1;
  return out;
}

}  // namespace

std::string encode_tensor(const Tensor& t) {
  std::string out(kMagic, kMagicLen);
  out += std::to_string(t.rank());
  out += '\n';
  for (std::size_t i = 0; i < t.rank(); ++i) {
    if (i) out += ' ';
    out += std::to_string(t.shape()[i]);
  }
  out += '\n';
  out.reserve(out.size() + 8 * t.size());
  for (std::size_t i = 0; i < t.size(); ++i) append_le64(out, t[i]);
  return out;
}

Tensor decode_tensor(const std::string& bytes, const std::string& origin) {
  if (bytes.size() < kMagicLen || bytes.compare(0, kMagicLen, kMagic, kMagicLen) != 0) {
    fail(origin, 0, "bad magic, expected \"BTEN1\"");
  }
  std::size_t pos = kMagicLen;
  const std::size_t rank_off = pos;
  const std::vector<std::size_t> rank_line = parse_int_line(bytes, pos, origin, "rank line");
  if (rank_line.size() != 1) fail(origin, rank_off, "rank line must hold one integer");
  const std::size_t rank = rank_line[0];
  if (rank == 0) fail(origin, rank_off, "rank must be at least 1");

  const std::size_t shape_off = pos;
  Shape shape = parse_int_line(bytes, pos, origin, "shape line");
  if (shape.size() != rank) {
    fail(origin, shape_off,
         "shape line holds " + std::to_string(shape.size()) + " dims, rank says " +
             std::to_string(rank));
  }
  for (std::size_t d : shape) {
    if (d == 0) fail(origin, shape_off, "zero dimension in shape line");
  }

  const std::size_t numel = shape_numel(shape);
  const std::size_t expected = 8 * numel;
  const std::size_t actual = bytes.size() - pos;
  if (actual < expected) {
    fail(origin, pos,
         "truncated payload, expected " + std::to_string(expected) + " bytes, got " +
             std::to_string(actual));
  }
  if (actual > expected) {
    fail(origin, pos + expected,
         "trailing data, expected " + std::to_string(expected) + " payload bytes, got " +
             std::to_string(actual));
  }
  std::vector<double> data(numel);
  const unsigned char* p = reinterpret_cast<const unsigned char*>(bytes.data()) + pos;
  for (std::size_t i = 0; i < numel; ++i) data[i] = read_le64(p + 8 * i);
  return Tensor(std::move(shape), std::move(data));
}

void save_tensor(const std::string& path, const Tensor& t) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError(path + ": cannot open for writing");
  const std::string bytes = encode_tensor(t);
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw IoError(path + ": write failed");
}

Tensor load_tensor(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError(path + ": cannot open for reading");
  std::ostringstream buf;
  buf << f.rdbuf();
  if (f.bad()) throw IoError(path + ": read failed");
  return decode_tensor(buf.str(), path);
}

}  // namespace fuselab
