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

#ifndef LCAM_AD_TAPE_H_
#define LCAM_AD_TAPE_H_

#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "ad/tensor.h"

namespace lcam::ad {

class Tape;

// Handle to a value recorded on a tape.
struct Var {
  Tape* tape = nullptr;
  int id = -1;

  bool valid() const { return tape != nullptr && id >= 0; }
  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
};

// What a node's backward function sees. `grad_inputs[i]` is null when input
// i does not need a gradient; otherwise the function accumulates into it.
struct BackwardArgs {
  std::span<const Tensor* const> inputs;
  const Tensor& output;
  const Tensor& grad_output;
  std::span<Tensor* const> grad_inputs;
};

using BackwardFn = std::function<void(const BackwardArgs&)>;

// Gradients keyed by tape id.
class GradientMap {
 public:
  const Tensor& at(const Var& v) const;
  bool contains(const Var& v) const { return grads_.count(v.id) != 0; }
  void Set(int id, Tensor grad) { grads_[id] = std::move(grad); }

 private:
  std::map<int, Tensor> grads_;
};

// Linear record of primitive applications. Nodes are appended in execution
// order, so the record is topologically sorted by construction. A tape is
// single-owner; separate tapes are independent.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // Leaf value; gradients are available for it iff value.requires_grad().
  Var Leaf(Tensor value);
  Var Constant(Tensor value) { return Leaf(std::move(value.set_requires_grad(false))); }

  Var Record(std::string op, Tensor value, std::vector<Var> inputs,
             BackwardFn backward);

  // Reverse sweep from a rank-0 output. Every id in `wrt` must be on this
  // tape; intermediate values are allowed. Gradient buffers are local to the
  // call, so repeated calls return identical results.
  GradientMap Backward(const Var& output, std::span<const Var> wrt) const;

  const Tensor& value(int id) const { return nodes_[id].value; }
  bool needs_grad(int id) const { return nodes_[id].needs_grad; }
  const std::string& op(int id) const { return nodes_[id].op; }
  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    std::string op;
    Tensor value;
    std::vector<int> inputs;
    BackwardFn backward;
    bool needs_grad = false;
  };
  std::vector<Node> nodes_;
};

}  // namespace lcam::ad

#endif  // LCAM_AD_TAPE_H_
