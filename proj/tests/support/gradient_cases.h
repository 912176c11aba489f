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

#ifndef LCAM_TESTS_SUPPORT_GRADIENT_CASES_H_
#define LCAM_TESTS_SUPPORT_GRADIENT_CASES_H_

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "ad/ops.h"
#include "ad/tape.h"
#include "ad/tensor.h"

namespace lcam::testing {

// A scalar function of some tensors together with a way to get its
// analytic gradient. By default the gradient comes from a reverse sweep of
// the tape built by `build`; `analytic` overrides that for functions whose
// gradient is produced elsewhere (training losses, intermediate taps).
struct GradientCase {
  std::string name;
  std::vector<ad::Tensor> inputs;
  std::function<ad::Var(ad::Tape&, const std::vector<ad::Var>&)> build;
  std::function<double(const std::vector<ad::Tensor>&)> value;
  std::function<std::vector<ad::Tensor>(const std::vector<ad::Tensor>&)> analytic;
  // Coordinates probed per input; larger inputs are subsampled with a
  // fixed seed.
  std::size_t max_coords = 48;
};

struct GradientCheck {
  std::string name;
  // Largest over inputs of max|analytic - numeric| / max(|analytic|,
  // |numeric|) taken over the probed coordinates (infinity norms).
  double max_rel_error = 0.0;
  std::size_t coords = 0;
};

inline constexpr double kFdStep = 1e-5;
inline constexpr double kFdTolerance = 1e-3;

// Every primitive under several shapes and options, plus composites up to a
// small speaker network and both augmentation losses.
std::vector<GradientCase> GradientCases();

// Central differences with step h against the analytic gradient.
GradientCheck RunGradientCheck(const GradientCase& c, double h = kFdStep);

}  // namespace lcam::testing

#endif  // LCAM_TESTS_SUPPORT_GRADIENT_CASES_H_
