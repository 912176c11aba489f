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

#include "base/bytes.h"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>

namespace lcam {

std::vector<uint8_t> ReadFileBytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  LCAM_REQUIRE(in.good(), ErrorKind::kIo, "cannot open '", path, "'");
  return std::vector<uint8_t>((std::istreambuf_iterator<char>(in)),
                              std::istreambuf_iterator<char>());
}

void WriteFileBytes(const std::string& path, const void* data, std::size_t n) {
  // Write to a sibling temporary and rename so readers never observe a
  // partially written file.
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    LCAM_REQUIRE(out.good(), ErrorKind::kIo, "cannot write '", path, "'");
    out.write(static_cast<const char*>(data), static_cast<std::streamsize>(n));
    LCAM_REQUIRE(out.good(), ErrorKind::kIo, "write failed for '", path, "'");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::remove(tmp.c_str());
    Fail(ErrorKind::kIo, "cannot rename into '", path, "': ", ec.message());
  }
}

}  // namespace lcam
