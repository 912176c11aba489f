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

#include "ad/tape.h"

#include <set>

#include "base/error.h"

namespace lcam::ad {

const Tensor& Var::value() const {
  LCAM_REQUIRE(valid(), ErrorKind::kInvalidArgument, "use of an unbound Var");
  return tape->value(id);
}

const Tensor& GradientMap::at(const Var& v) const {
  auto it = grads_.find(v.id);
  LCAM_REQUIRE(it != grads_.end(), ErrorKind::kInvalidArgument,
               "no gradient recorded for tape id ", v.id);
  return it->second;
}

Var Tape::Leaf(Tensor value) {
  LCAM_REQUIRE(value.defined(), ErrorKind::kInvalidArgument,
               "leaf from an undefined tensor");
  Node node;
  node.op = "leaf";
  node.needs_grad = value.requires_grad();
  node.value = std::move(value);
  nodes_.push_back(std::move(node));
  return Var{this, static_cast<int>(nodes_.size()) - 1};
}

Var Tape::Record(std::string op, Tensor value, std::vector<Var> inputs,
                 BackwardFn backward) {
  Node node;
  node.op = std::move(op);
  node.value = std::move(value);
  node.backward = std::move(backward);
  for (const Var& in : inputs) {
    LCAM_REQUIRE(in.tape == this && in.id >= 0 &&
                     in.id < static_cast<int>(nodes_.size()),
                 ErrorKind::kInvalidArgument, node.op,
                 ": input does not belong to this tape");
    node.inputs.push_back(in.id);
    node.needs_grad = node.needs_grad || nodes_[in.id].needs_grad;
  }
  nodes_.push_back(std::move(node));
  return Var{this, static_cast<int>(nodes_.size()) - 1};
}

GradientMap Tape::Backward(const Var& output, std::span<const Var> wrt) const {
  LCAM_REQUIRE(output.tape == this && output.id >= 0 &&
                   output.id < static_cast<int>(nodes_.size()),
               ErrorKind::kInvalidArgument, "backward: output not on this tape");
  const Tensor& out_value = nodes_[output.id].value;
  LCAM_REQUIRE(out_value.rank() == 0, ErrorKind::kShapeMismatch,
               "backward needs a scalar output, got shape ",
               ShapeString(out_value.shape()));
  std::set<int> keep;
  for (const Var& v : wrt) {
    LCAM_REQUIRE(v.tape == this && v.id >= 0 &&
                     v.id < static_cast<int>(nodes_.size()),
                 ErrorKind::kInvalidArgument, "backward: tape id ", v.id,
                 " is not on this tape");
    keep.insert(v.id);
  }

  // Only descendants of requested ids carry gradient toward them; every
  // other branch is skipped.
  std::vector<char> wanted(nodes_.size(), 0);
  for (int i = 0; i <= output.id; ++i) {
    bool w = keep.count(i) != 0;
    for (int in : nodes_[i].inputs) w = w || wanted[in];
    wanted[i] = w;
  }

  std::vector<Tensor> grads(output.id + 1);
  grads[output.id] = Tensor(Shape{}, 1.0);
  std::vector<const Tensor*> inputs;
  std::vector<Tensor*> grad_inputs;
  GradientMap result;
  for (int i = output.id; i >= 0; --i) {
    if (!grads[i].defined()) continue;
    const Node& node = nodes_[i];
    if (node.backward && !node.inputs.empty()) {
      inputs.clear();
      grad_inputs.clear();
      bool any = false;
      for (int in : node.inputs) {
        inputs.push_back(&nodes_[in].value);
        if (wanted[in]) {
          if (!grads[in].defined()) grads[in] = Tensor(nodes_[in].value.shape());
          grad_inputs.push_back(&grads[in]);
          any = true;
        } else {
          grad_inputs.push_back(nullptr);
        }
      }
      if (any) {
        node.backward(BackwardArgs{inputs, node.value, grads[i], grad_inputs});
      }
    }
    if (keep.count(i)) {
      result.Set(i, std::move(grads[i]));
    } else {
      grads[i] = Tensor();
    }
  }
  // Requested ids the output does not depend on get zero gradients.
  for (int id : keep) {
    Var v{const_cast<Tape*>(this), id};
    if (!result.contains(v)) result.Set(id, Tensor(nodes_[id].value.shape()));
  }
  return result;
}

}  // namespace lcam::ad
