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

#include "ad/tensor.h"

#include <cmath>
#include <sstream>

#include "base/error.h"

namespace lcam::ad {

std::size_t NumElements(const Shape& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

std::string ShapeString(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ", ";
    os << shape[i];
  }
  os << ']';
  return os.str();
}

Tensor::Tensor(Shape shape, double fill)
    : shape_(std::move(shape)), data_(NumElements(shape_), fill), defined_(true) {}

Tensor::Tensor(Shape shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)), defined_(true) {
  LCAM_REQUIRE(data_.size() == NumElements(shape_), ErrorKind::kShapeMismatch,
               "tensor data length ", data_.size(), " does not match shape ",
               ShapeString(shape_));
}

double Tensor::item() const {
  LCAM_REQUIRE(data_.size() == 1, ErrorKind::kShapeMismatch,
               "item() on tensor of shape ", ShapeString(shape_));
  return data_[0];
}

void Tensor::Fill(double value) {
  for (double& v : data_) v = value;
}

void Tensor::Add(const Tensor& other) {
  CheckSameShape(shape_, other.shape_, "Tensor::Add");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
}

bool Tensor::AllFinite() const {
  for (double v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

void CheckSameShape(const Shape& expected, const Shape& actual,
                    const std::string& what) {
  LCAM_REQUIRE(expected == actual, ErrorKind::kShapeMismatch, what,
               ": expected shape ", ShapeString(expected), ", got ",
               ShapeString(actual));
}

}  // namespace lcam::ad
