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

#ifndef LCAM_AD_OPS_H_
#define LCAM_AD_OPS_H_

#include <vector>

#include "ad/tape.h"

// Differentiable primitives. Image tensors are NCHW; for speech features H is
// time (frames) and W is frequency (mel bins).
namespace lcam::ad {

struct Conv2dOptions {
  int stride = 1;
  int padding = 0;
};

// x [N,Cin,H,W], weight [Cout,Cin,kh,kw], optional bias [Cout].
Var Conv2d(const Var& x, const Var& weight, const Var& bias,
           Conv2dOptions options = {});

Var Relu(const Var& x);
Var Sigmoid(const Var& x);

struct BatchNormStats {
  Tensor mean;
  Tensor var;  // biased, over N*H*W
};

inline constexpr double kBatchNormEps = 1e-5;

// Training mode normalises with batch statistics and reports them through
// `batch_stats` (may be null); eval mode uses the given running statistics.
Var BatchNorm2d(const Var& x, const Var& gamma, const Var& beta,
                const Tensor& running_mean, const Tensor& running_var,
                bool training, BatchNormStats* batch_stats = nullptr);

// [N,C,H,W] -> [N,C]
Var GlobalAvgPool(const Var& x);
// Non-overlapping or strided average pooling without padding.
Var AvgPool2d(const Var& x, int kernel, int stride);

// x [N,in], weight [out,in], optional bias [out] -> [N,out]
Var Linear(const Var& x, const Var& weight, const Var& bias);

Var Add(const Var& a, const Var& b);
Var MulScalar(const Var& a, double s);
Var ElementwiseMul(const Var& a, const Var& b);
// x [N,C,H,W] scaled per (n,c) by s [N,C].
Var ScaleChannels(const Var& x, const Var& s);

Var Sum(const Var& x);
// Rank-0 view of one element (flat row-major index).
Var Pick(const Var& x, std::size_t index);

// Mean over the batch of -log softmax(logits)[label]. logits [N,C].
Var SoftmaxCrossEntropy(const Var& logits, const std::vector<int>& labels);

// Squared Euclidean distance between matching rows, averaged over rows.
// For rank-1 inputs this is simply ||a - b||^2.
Var SquaredL2Distance(const Var& a, const Var& b);

// Non-differentiable helper: row-wise softmax of a [N,C] tensor.
Tensor Softmax(const Tensor& logits);

}  // namespace lcam::ad

#endif  // LCAM_AD_OPS_H_
