#pragma once

#include <cstdint>
#include <cstddef>
#include <string>
#include <vector>

#include "fuselab/tensor.hpp"

namespace fuselab {

// 8-bit image, planar storage: data[c*H*W + y*W + x].
struct Image8 {
  std::size_t channels = 0;
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<std::uint8_t> data;

  Image8() = default;
  Image8(std::size_t c, std::size_t h, std::size_t w, std::uint8_t fill = 0)
      : channels(c), height(h), width(w), data(c * h * w, fill) {}

  std::uint8_t& at(std::size_t c, std::size_t y, std::size_t x) {
    return data[(c * height + y) * width + x];
  }
  std::uint8_t at(std::size_t c, std::size_t y, std::size_t x) const {
    return data[(c * height + y) * width + x];
  }
};

struct BoxAnnotation {
  long x1 = 0;
  long y1 = 0;
  long x2 = 0;
  long y2 = 0;
};

// Binary netpbm: P5 for single-channel, P6 for three-channel, maxval 255.
// Comments (#) and arbitrary header whitespace are accepted on read.
Image8 load_image(const std::string& path);
void save_image(const std::string& path, const Image8& img);

std::vector<std::uint8_t> encode_image(const Image8& img);
Image8 decode_image(const std::vector<std::uint8_t>& bytes, const std::string& origin);

Tensor image_to_tensor(const Image8& img);          // {C,H,W}, values 0..255
Image8 image_from_tensor(const Tensor& t);          // rounds and clamps

}  // namespace fuselab
