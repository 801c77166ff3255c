// Copyright (c) 2026 The SASN Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Little-endian helpers shared by the binary file formats.

#ifndef SASN_SRC_BINARY_IO_H_
#define SASN_SRC_BINARY_IO_H_

#include <bit>
#include <cstdint>
#include <istream>
#include <ostream>
#include <string>

#include "sasn/error.h"

namespace sasn::internal {

inline void write_u32_le(std::ostream& os, std::uint32_t v) {
  char bytes[4];
  for (int i = 0; i < 4; ++i) bytes[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  os.write(bytes, 4);
}

inline void write_f64_le(std::ostream& os, double v) {
  const auto bits = std::bit_cast<std::uint64_t>(v);
  char bytes[8];
  for (int i = 0; i < 8; ++i)
    bytes[i] = static_cast<char>((bits >> (8 * i)) & 0xff);
  os.write(bytes, 8);
}

inline void read_exact(std::istream& is, char* dst, std::size_t n,
                       const std::string& what) {
  is.read(dst, static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(is.gcount()) != n)
    throw Error("truncated " + what);
}

inline std::uint32_t read_u32_le(std::istream& is, const std::string& what) {
  unsigned char bytes[4];
  read_exact(is, reinterpret_cast<char*>(bytes), 4, what);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes[i]) << (8 * i);
  return v;
}

inline std::uint16_t read_u16_le(std::istream& is, const std::string& what) {
  unsigned char bytes[2];
  read_exact(is, reinterpret_cast<char*>(bytes), 2, what);
  return static_cast<std::uint16_t>(bytes[0] | (bytes[1] << 8));
}

inline double read_f64_le(std::istream& is, const std::string& what) {
  unsigned char bytes[8];
  read_exact(is, reinterpret_cast<char*>(bytes), 8, what);
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
  return std::bit_cast<double>(bits);
}

}  // namespace sasn::internal

#endif  // SASN_SRC_BINARY_IO_H_
