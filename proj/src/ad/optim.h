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

#ifndef LCAM_AD_OPTIM_H_
#define LCAM_AD_OPTIM_H_

#include <map>
#include <string>

#include "ad/tensor.h"

namespace lcam::ad {

using NamedTensors = std::map<std::string, Tensor>;

// Heavy-ball SGD: v <- momentum * v + g; p <- p - lr * v.
class SgdMomentum {
 public:
  SgdMomentum(double learning_rate, double momentum);

  // Updates every parameter that has a gradient. Throws kRuntime
  // ("training diverged") if any gradient is non-finite; parameters are left
  // untouched in that case.
  void Step(NamedTensors& params, const NamedTensors& grads);

  double learning_rate() const { return learning_rate_; }
  void set_learning_rate(double lr) { learning_rate_ = lr; }

 private:
  double learning_rate_;
  double momentum_;
  NamedTensors velocity_;
};

}  // namespace lcam::ad

#endif  // LCAM_AD_OPTIM_H_
