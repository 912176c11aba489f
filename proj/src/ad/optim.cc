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

#include "ad/optim.h"

#include "base/error.h"

namespace lcam::ad {

SgdMomentum::SgdMomentum(double learning_rate, double momentum)
    : learning_rate_(learning_rate), momentum_(momentum) {
  LCAM_REQUIRE(learning_rate >= 0.0 && momentum >= 0.0 && momentum < 1.0,
               ErrorKind::kInvalidArgument, "bad SGD hyperparameters (lr=",
               learning_rate, ", momentum=", momentum, ")");
}

void SgdMomentum::Step(NamedTensors& params, const NamedTensors& grads) {
  for (const auto& [name, grad] : grads) {
    auto it = params.find(name);
    LCAM_REQUIRE(it != params.end(), ErrorKind::kInvalidArgument,
                 "gradient for unknown parameter '", name, "'");
    CheckSameShape(it->second.shape(), grad.shape(), "sgd_step " + name);
    LCAM_REQUIRE(grad.AllFinite(), ErrorKind::kRuntime,
                 "training diverged: non-finite gradient for '", name, "'");
  }
  for (const auto& [name, grad] : grads) {
    Tensor& p = params.at(name);
    auto [vit, inserted] = velocity_.try_emplace(name, Tensor(grad.shape()));
    Tensor& v = vit->second;
    for (std::size_t i = 0; i < p.size(); ++i) {
      v[i] = momentum_ * v[i] + grad[i];
      p[i] -= learning_rate_ * v[i];
    }
  }
}

}  // namespace lcam::ad
