#pragma once

#include <string>

#include "fuselab/tensor.hpp"

namespace fuselab {

// BTEN1 raw-tensor format:
//   "BTEN1\n"
//   "<rank>\n"
//   "<d0> <d1> ... \n"
//   numel little-endian 64-bit float values
// Write-then-read round trips are bit-exact. Decode failures raise IoError
// naming the byte offset; truncated payloads name expected vs actual length.

std::string encode_tensor(const Tensor& t);
Tensor decode_tensor(const std::string& bytes, const std::string& origin);

void save_tensor(const std::string& path, const Tensor& t);
Tensor load_tensor(const std::string& path);

}  // namespace fuselab
