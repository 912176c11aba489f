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

#ifndef LCAM_BASE_ERROR_H_
#define LCAM_BASE_ERROR_H_

#include <sstream>
#include <stdexcept>
#include <string>

namespace lcam {

// Coarse failure classes. The C API and the CLI map these onto status and
// exit codes, so keep the set small and stable.
enum class ErrorKind {
  kInvalidArgument,
  kShapeMismatch,
  kIo,
  kFormat,
  kConfig,
  kRuntime,
  kAcceptance,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

namespace internal {

template <typename... Args>
std::string Concat(const Args&... args) {
  std::ostringstream os;
  (os << ... << args);
  return os.str();
}

}  // namespace internal

template <typename... Args>
[[noreturn]] void Fail(ErrorKind kind, const Args&... args) {
  throw Error(kind, internal::Concat(args...));
}

}  // namespace lcam

#define LCAM_REQUIRE(cond, kind, ...)        \
  do {                                       \
    if (!(cond)) ::lcam::Fail(kind, __VA_ARGS__); \
  } while (0)

#endif  // LCAM_BASE_ERROR_H_
