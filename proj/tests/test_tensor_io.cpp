#include <cstdio>
#include <cstring>
#include <string>

#include "doctest.h"
#include "fuselab/errors.hpp"
#include "fuselab/rng.hpp"
#include "fuselab/tensor.hpp"
#include "fuselab/tensor_io.hpp"
#include "oracles.hpp"

using namespace fuselab;

namespace {

std::string payload_le(std::initializer_list<double> values) {
  std::string out;
  for (double v : values) {
    unsigned char bytes[8];
    std::memcpy(bytes, &v, 8);
    out.append(reinterpret_cast<char*>(bytes), 8);
  }
  return out;
}

}  // namespace

TEST_SUITE("tensor_io") {

TEST_CASE("encode header layout") {
  Tensor t({2, 2}, {1, 2, 3, 4});
  const std::string bytes = encode_tensor(t);
  const std::string header = "BTEN1\n2\n2 2\n";
  REQUIRE(bytes.size() == header.size() + 4 * 8);
  CHECK(bytes.substr(0, header.size()) == header);
}

TEST_CASE("round trip is bit-exact") {
  Rng rng(21);
  const Tensor t = oracle::randn(rng, {3, 4, 5});
  const Tensor back = decode_tensor(encode_tensor(t), "mem");
  CHECK(back.shape() == t.shape());
  CHECK(oracle::bitwise_equal(back, t));
}

TEST_CASE("file round trip is bit-exact") {
  Rng rng(22);
  const Tensor t = oracle::randn(rng, {2, 6});
  const std::string path = "bten_roundtrip.tmp";
  save_tensor(path, t);
  const Tensor back = load_tensor(path);
  CHECK(oracle::bitwise_equal(back, t));
  std::remove(path.c_str());
}

TEST_CASE("format walkthrough: 2x2 from raw bytes") {
  const std::string bytes = "BTEN1\n2\n2 2\n" + payload_le({1, 2, 3, 4});
  const Tensor t = decode_tensor(bytes, "walkthrough");
  REQUIRE(t.shape() == Shape{2, 2});
  CHECK(t.vec() == std::vector<double>{1, 2, 3, 4});
  const Tensor sq = matmul(t, t);
  CHECK(sq.vec() == std::vector<double>{7, 10, 15, 22});
}

TEST_CASE("bad magic") {
  CHECK_THROWS_WITH_AS(decode_tensor("NOPE1\n1\n1\n????????", "f"),
                       doctest::Contains("byte offset 0"), IoError);
}

TEST_CASE("truncated payload names expected and actual") {
  Tensor t({2, 2}, {1, 2, 3, 4});
  std::string bytes = encode_tensor(t);
  bytes.resize(bytes.size() - 5);
  try {
    decode_tensor(bytes, "short");
    FAIL("expected IoError");
  } catch (const IoError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("short") != std::string::npos);
    CHECK(msg.find("32") != std::string::npos);
    CHECK(msg.find("27") != std::string::npos);
    CHECK(msg.find("byte offset") != std::string::npos);
  }
}

TEST_CASE("trailing bytes rejected") {
  Tensor t({1}, {5.0});
  std::string bytes = encode_tensor(t);
  bytes += "x";
  CHECK_THROWS_AS(decode_tensor(bytes, "extra"), IoError);
}

TEST_CASE("malformed headers") {
  CHECK_THROWS_AS(decode_tensor("BTEN1\n0\n\n", "r0"), IoError);
  CHECK_THROWS_AS(decode_tensor("BTEN1\n2\n2\n" + payload_le({1, 2}), "dims"), IoError);
  CHECK_THROWS_AS(decode_tensor("BTEN1\n1\n0\n", "zerodim"), IoError);
  CHECK_THROWS_AS(decode_tensor("BTEN1\nx\n1\n" + payload_le({1}), "rank"), IoError);
}

TEST_CASE("missing file") {
  CHECK_THROWS_AS(load_tensor("definitely_missing_dir/nope.bten"), IoError);
}

}  // TEST_SUITE
