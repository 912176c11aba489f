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

#ifndef LCAM_AD_TENSOR_H_
#define LCAM_AD_TENSOR_H_

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace lcam::ad {

using Shape = std::vector<std::size_t>;

std::size_t NumElements(const Shape& shape);
std::string ShapeString(const Shape& shape);

// Dense row-major tensor of doubles. A default-constructed tensor is
// undefined (no storage); a rank-0 tensor holds one value.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(Shape shape, std::vector<double> data);

  static Tensor Scalar(double value) { return Tensor(Shape{}, {value}); }

  bool defined() const { return defined_; }
  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t dim(std::size_t i) const { return shape_[i]; }
  std::size_t size() const { return data_.size(); }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }
  std::vector<double>& storage() { return data_; }
  const std::vector<double>& storage() const { return data_; }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }
  double item() const;

  bool requires_grad() const { return requires_grad_; }
  Tensor& set_requires_grad(bool value) {
    requires_grad_ = value;
    return *this;
  }

  void Fill(double value);
  // In-place this += other; shapes must match.
  void Add(const Tensor& other);
  bool AllFinite() const;

  friend bool operator==(const Tensor& a, const Tensor& b) {
    return a.shape_ == b.shape_ && a.data_ == b.data_;
  }

 private:
  Shape shape_;
  std::vector<double> data_;
  bool defined_ = false;
  bool requires_grad_ = false;
};

// Throws kShapeMismatch naming `what` when shapes differ.
void CheckSameShape(const Shape& expected, const Shape& actual,
                    const std::string& what);

}  // namespace lcam::ad

#endif  // LCAM_AD_TENSOR_H_
