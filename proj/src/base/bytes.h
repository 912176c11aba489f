// Copyright (c) 2026 The lcam Authors
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

#ifndef LCAM_BASE_BYTES_H_
#define LCAM_BASE_BYTES_H_

#include <bit>
#include <cstdint>
#include <cstring>
#include <string>
#include <string_view>
#include <vector>

#include "base/error.h"

namespace lcam {

// Little-endian serialization helpers. The host is assumed little-endian
// (checked at compile time) so values are copied byte-for-byte.
static_assert(std::endian::native == std::endian::little,
              "serialization assumes a little-endian host");

class ByteWriter {
 public:
  void Raw(const void* p, std::size_t n) {
    const auto* b = static_cast<const uint8_t*>(p);
    buf_.insert(buf_.end(), b, b + n);
  }
  void U32(uint32_t v) { Raw(&v, sizeof v); }
  void U64(uint64_t v) { Raw(&v, sizeof v); }
  void F32(float v) { Raw(&v, sizeof v); }
  void F64(double v) { Raw(&v, sizeof v); }
  void Str(std::string_view s) {
    U32(static_cast<uint32_t>(s.size()));
    Raw(s.data(), s.size());
  }

  std::vector<uint8_t>& bytes() { return buf_; }

 private:
  std::vector<uint8_t> buf_;
};

// Bounds-checked reader; running past the end throws kFormat with `what`.
class ByteReader {
 public:
  ByteReader(const uint8_t* data, std::size_t size, std::string what)
      : data_(data), size_(size), what_(std::move(what)) {}

  void Raw(void* p, std::size_t n) {
    LCAM_REQUIRE(n <= size_ - pos_, ErrorKind::kFormat, "truncated ", what_,
                 ": needed ", n, " bytes at offset ", pos_, ", only ",
                 size_ - pos_, " left");
    std::memcpy(p, data_ + pos_, n);
    pos_ += n;
  }
  uint32_t U32() { uint32_t v; Raw(&v, sizeof v); return v; }
  uint64_t U64() { uint64_t v; Raw(&v, sizeof v); return v; }
  double F64() { double v; Raw(&v, sizeof v); return v; }
  std::string Str() {
    std::string s(U32(), '\0');
    Raw(s.data(), s.size());
    return s;
  }

  std::size_t pos() const { return pos_; }
  std::size_t remaining() const { return size_ - pos_; }

 private:
  const uint8_t* data_;
  std::size_t size_;
  std::size_t pos_ = 0;
  std::string what_;
};

std::vector<uint8_t> ReadFileBytes(const std::string& path);
void WriteFileBytes(const std::string& path, const void* data, std::size_t n);
inline void WriteFileBytes(const std::string& path,
                           const std::vector<uint8_t>& bytes) {
  WriteFileBytes(path, bytes.data(), bytes.size());
}

}  // namespace lcam

#endif  // LCAM_BASE_BYTES_H_
