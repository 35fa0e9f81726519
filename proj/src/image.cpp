#include "fuselab/image.hpp"

#include <cmath>
#include <fstream>

#include "fuselab/errors.hpp"

namespace fuselab {
namespace {

[[noreturn]] void fail(const std::string& origin, const std::string& what,
                       std::size_t offset) {
  throw IoError(origin + ": " + what + " at byte offset " + std::to_string(offset));
}

bool is_space(std::uint8_t c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

// Skips whitespace and # comments, then reads one unsigned decimal token.
std::size_t next_uint(const std::vector<std::uint8_t>& bytes, std::size_t& pos,
                      const std::string& origin, const char* what) {
  for (;;) {
    while (pos < bytes.size() && is_space(bytes[pos])) ++pos;
    if (pos < bytes.size() && bytes[pos] == '#') {
      while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      continue;
    }
    break;
  }
  if (pos >= bytes.size() || bytes[pos] < '0' || bytes[pos] > '9') {
    fail(origin, std::string("expected ") + what, pos);
  }
  std::size_t value = 0;
  while (pos < bytes.size() && bytes[pos] >= '0' && bytes[pos] <= '9') {
    value = value * 10 + std::size_t(bytes[pos] - '0');
    if (value > 1000000000) fail(origin, std::string(what) + " out of range", pos);
    ++pos;
  }
  return value;
}

}  // namespace

Image8 decode_image(const std::vector<std::uint8_t>& bytes, const std::string& origin) {
  if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '5' && bytes[1] != '6')) {
    fail(origin, "bad magic, expected P5 or P6", 0);
  }
  const std::size_t channels = bytes[1] == '5' ? 1 : 3;
  std::size_t pos = 2;
  const std::size_t width = next_uint(bytes, pos, origin, "width");
  const std::size_t height = next_uint(bytes, pos, origin, "height");
  const std::size_t maxval = next_uint(bytes, pos, origin, "maxval");
  if (width == 0 || height == 0) fail(origin, "zero image dimension", pos);
  if (maxval != 255) {
    fail(origin, "unsupported maxval " + std::to_string(maxval) + ", expected 255", pos);
  }
  if (pos >= bytes.size() || !is_space(bytes[pos])) {
    fail(origin, "expected single whitespace before pixel data", pos);
  }
  ++pos;
  const std::size_t expected = channels * height * width;
  const std::size_t have = bytes.size() - pos;
  if (have < expected) {
    fail(origin,
         "truncated pixel data, expected " + std::to_string(expected) +
             " bytes, got " + std::to_string(have),
         bytes.size());
  }
  if (have > expected) {
    fail(origin, "trailing data after pixel payload", pos + expected);
  }
  Image8 img(channels, height, width);
  for (std::size_t y = 0; y < height; ++y) {
    for (std::size_t x = 0; x < width; ++x) {
      for (std::size_t c = 0; c < channels; ++c) {
        img.at(c, y, x) = bytes[pos++];
      }
    }
  }
  return img;
}

std::vector<std::uint8_t> encode_image(const Image8& img) {
  if (img.channels != 1 && img.channels != 3) {
    throw ParamError("encode_image: channels must be 1 or 3, got " +
                     std::to_string(img.channels));
  }
  if (img.height == 0 || img.width == 0) {
    throw ParamError("encode_image: empty image");
  }
  if (img.data.size() != img.channels * img.height * img.width) {
    throw ParamError("encode_image: data size does not match dimensions");
  }
  std::string header = std::string(img.channels == 1 ? "P5" : "P6") + "\n" +
                       std::to_string(img.width) + " " + std::to_string(img.height) +
                       "\n255\n";
  std::vector<std::uint8_t> bytes(header.begin(), header.end());
  bytes.reserve(bytes.size() + img.data.size());
  for (std::size_t y = 0; y < img.height; ++y) {
    for (std::size_t x = 0; x < img.width; ++x) {
      for (std::size_t c = 0; c < img.channels; ++c) {
        bytes.push_back(img.at(c, y, x));
      }
    }
  }
  return bytes;
}

Image8 load_image(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path + ": cannot open for reading");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError(path + ": read failure");
  return decode_image(bytes, path);
}

void save_image(const std::string& path, const Image8& img) {
  const std::vector<std::uint8_t> bytes = encode_image(img);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(path + ": cannot open for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()),
            std::streamsize(bytes.size()));
  if (!out) throw IoError(path + ": write failure");
}

Tensor image_to_tensor(const Image8& img) {
  Tensor t = Tensor::zeros({img.channels, img.height, img.width});
  for (std::size_t i = 0; i < img.data.size(); ++i) t[i] = double(img.data[i]);
  return t;
}

Image8 image_from_tensor(const Tensor& t) {
  if (t.shape().size() != 3) {
    throw ShapeError("image_from_tensor: tensor must have rank 3 {C,H,W}, got " +
                     shape_str(t.shape()));
  }
  Image8 img(t.shape()[0], t.shape()[1], t.shape()[2]);
  for (std::size_t i = 0; i < t.size(); ++i) {
    long long v = std::llround(t[i]);
    if (v < 0) v = 0;
    if (v > 255) v = 255;
    img.data[i] = std::uint8_t(v);
  }
  return img;
}

}  // namespace fuselab
