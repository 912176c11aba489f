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

#include "ad/ops.h"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <memory>

#include "base/error.h"

namespace lcam::ad {

namespace {

using RowMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatrixMap = Eigen::Map<RowMatrix>;
using ConstMatrixMap = Eigen::Map<const RowMatrix>;

void RequireRank(const Var& v, std::size_t rank, const char* op) {
  LCAM_REQUIRE(v.value().rank() == rank, ErrorKind::kShapeMismatch, op,
               ": expected rank ", rank, ", got shape ",
               ShapeString(v.shape()));
}

struct ConvGeometry {
  int cin, h, w, kh, kw, stride, pad, ho, wo;
  int K() const { return cin * kh * kw; }
  int P() const { return ho * wo; }
};

// Output columns [lo, hi) whose input column ow*stride - pad + j is in range.
inline void ValidColumns(const ConvGeometry& g, int j, int* lo, int* hi) {
  const int first = g.pad - j;  // need ow*stride >= first
  *lo = first <= 0 ? 0 : (first + g.stride - 1) / g.stride;
  const int last = g.w - 1 + g.pad - j;  // need ow*stride <= last
  *hi = last < 0 ? 0 : std::min(g.wo, last / g.stride + 1);
  if (*lo > *hi) *lo = *hi;
}

void Im2Col(const double* x, const ConvGeometry& g, double* cols) {
  const int P = g.P();
  for (int c = 0; c < g.cin; ++c) {
    const double* xc = x + static_cast<std::size_t>(c) * g.h * g.w;
    for (int i = 0; i < g.kh; ++i) {
      for (int j = 0; j < g.kw; ++j) {
        double* row = cols + static_cast<std::size_t>((c * g.kh + i) * g.kw + j) * P;
        int lo, hi;
        ValidColumns(g, j, &lo, &hi);
        for (int oh = 0; oh < g.ho; ++oh) {
          const int ih = oh * g.stride - g.pad + i;
          double* dst = row + static_cast<std::size_t>(oh) * g.wo;
          if (ih < 0 || ih >= g.h) {
            std::fill(dst, dst + g.wo, 0.0);
            continue;
          }
          const double* src = xc + static_cast<std::size_t>(ih) * g.w;
          const int shift = j - g.pad;
          std::fill(dst, dst + lo, 0.0);
          if (g.stride == 1) {
            std::copy(src + lo + shift, src + hi + shift, dst + lo);
          } else {
            for (int ow = lo; ow < hi; ++ow) dst[ow] = src[ow * g.stride + shift];
          }
          std::fill(dst + hi, dst + g.wo, 0.0);
        }
      }
    }
  }
}

void Col2ImAdd(const double* cols, const ConvGeometry& g, double* x) {
  const int P = g.P();
  for (int c = 0; c < g.cin; ++c) {
    double* xc = x + static_cast<std::size_t>(c) * g.h * g.w;
    for (int i = 0; i < g.kh; ++i) {
      for (int j = 0; j < g.kw; ++j) {
        const double* row =
            cols + static_cast<std::size_t>((c * g.kh + i) * g.kw + j) * P;
        int lo, hi;
        ValidColumns(g, j, &lo, &hi);
        for (int oh = 0; oh < g.ho; ++oh) {
          const int ih = oh * g.stride - g.pad + i;
          if (ih < 0 || ih >= g.h) continue;
          const double* src = row + static_cast<std::size_t>(oh) * g.wo;
          double* dst = xc + static_cast<std::size_t>(ih) * g.w;
          const int shift = j - g.pad;
          for (int ow = lo; ow < hi; ++ow) dst[ow * g.stride + shift] += src[ow];
        }
      }
    }
  }
}

}  // namespace

Var Conv2d(const Var& x, const Var& weight, const Var& bias,
           Conv2dOptions options) {
  RequireRank(x, 4, "conv2d input");
  RequireRank(weight, 4, "conv2d weight");
  const Shape& xs = x.shape();
  const Shape& ws = weight.shape();
  LCAM_REQUIRE(ws[1] == xs[1], ErrorKind::kShapeMismatch,
               "conv2d: weight ", ShapeString(ws), " expects ", ws[1],
               " input channels, input is ", ShapeString(xs));
  LCAM_REQUIRE(options.stride >= 1 && options.padding >= 0,
               ErrorKind::kInvalidArgument, "conv2d: bad stride/padding");
  const int n = static_cast<int>(xs[0]);
  const int cout = static_cast<int>(ws[0]);
  ConvGeometry g;
  g.cin = static_cast<int>(xs[1]);
  g.h = static_cast<int>(xs[2]);
  g.w = static_cast<int>(xs[3]);
  g.kh = static_cast<int>(ws[2]);
  g.kw = static_cast<int>(ws[3]);
  g.stride = options.stride;
  g.pad = options.padding;
  LCAM_REQUIRE(g.h + 2 * g.pad >= g.kh && g.w + 2 * g.pad >= g.kw,
               ErrorKind::kShapeMismatch, "conv2d: kernel ", ShapeString(ws),
               " larger than padded input ", ShapeString(xs));
  g.ho = (g.h + 2 * g.pad - g.kh) / g.stride + 1;
  g.wo = (g.w + 2 * g.pad - g.kw) / g.stride + 1;
  const bool has_bias = bias.valid();
  if (has_bias) {
    CheckSameShape(Shape{ws[0]}, bias.shape(), "conv2d bias");
  }

  Tensor out(Shape{xs[0], ws[0], std::size_t(g.ho), std::size_t(g.wo)});
  const std::size_t in_stride = static_cast<std::size_t>(g.cin) * g.h * g.w;
  const std::size_t out_stride = static_cast<std::size_t>(cout) * g.P();
  std::vector<double> cols(static_cast<std::size_t>(g.K()) * g.P());
  ConstMatrixMap wmat(weight.value().data(), cout, g.K());
  for (int b = 0; b < n; ++b) {
    Im2Col(x.value().data() + b * in_stride, g, cols.data());
    MatrixMap o(out.data() + b * out_stride, cout, g.P());
    o.noalias() = wmat * ConstMatrixMap(cols.data(), g.K(), g.P());
    if (has_bias) {
      const double* bv = bias.value().data();
      for (int c = 0; c < cout; ++c) o.row(c).array() += bv[c];
    }
  }

  std::vector<Var> inputs{x, weight};
  if (has_bias) inputs.push_back(bias);
  return x.tape->Record(
      "conv2d", std::move(out), std::move(inputs),
      [g, n, cout, in_stride, out_stride, has_bias](const BackwardArgs& a) {
        const Tensor& xv = *a.inputs[0];
        ConstMatrixMap wmat(a.inputs[1]->data(), cout, g.K());
        std::vector<double> cols(static_cast<std::size_t>(g.K()) * g.P());
        for (int b = 0; b < n; ++b) {
          ConstMatrixMap dout(a.grad_output.data() + b * out_stride, cout, g.P());
          if (a.grad_inputs[1]) {
            Im2Col(xv.data() + b * in_stride, g, cols.data());
            MatrixMap dw(a.grad_inputs[1]->data(), cout, g.K());
            dw.noalias() += dout * ConstMatrixMap(cols.data(), g.K(), g.P()).transpose();
          }
          if (has_bias && a.grad_inputs[2]) {
            double* db = a.grad_inputs[2]->data();
            for (int c = 0; c < cout; ++c) db[c] += dout.row(c).sum();
          }
          if (a.grad_inputs[0]) {
            MatrixMap dcols(cols.data(), g.K(), g.P());
            dcols.noalias() = wmat.transpose() * dout;
            Col2ImAdd(cols.data(), g, a.grad_inputs[0]->data() + b * in_stride);
          }
        }
      });
}

namespace {

// Reductions with four independent accumulators so the compiler can keep
// several additions in flight. The summation order is fixed, so results
// stay deterministic.
double SumOf(const double* p, std::size_t n) {
  double a0 = 0.0, a1 = 0.0, a2 = 0.0, a3 = 0.0;
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    a0 += p[i];
    a1 += p[i + 1];
    a2 += p[i + 2];
    a3 += p[i + 3];
  }
  for (; i < n; ++i) a0 += p[i];
  return (a0 + a1) + (a2 + a3);
}

double DotOf(const double* p, const double* q, std::size_t n) {
  double a0 = 0.0, a1 = 0.0, a2 = 0.0, a3 = 0.0;
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    a0 += p[i] * q[i];
    a1 += p[i + 1] * q[i + 1];
    a2 += p[i + 2] * q[i + 2];
    a3 += p[i + 3] * q[i + 3];
  }
  for (; i < n; ++i) a0 += p[i] * q[i];
  return (a0 + a1) + (a2 + a3);
}

double SumOfSquaredDeviations(const double* p, std::size_t n, double m) {
  double a0 = 0.0, a1 = 0.0, a2 = 0.0, a3 = 0.0;
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const double d0 = p[i] - m, d1 = p[i + 1] - m, d2 = p[i + 2] - m,
                 d3 = p[i + 3] - m;
    a0 += d0 * d0;
    a1 += d1 * d1;
    a2 += d2 * d2;
    a3 += d3 * d3;
  }
  for (; i < n; ++i) a0 += (p[i] - m) * (p[i] - m);
  return (a0 + a1) + (a2 + a3);
}

}  // namespace

Var Relu(const Var& x) {
  Tensor out(x.shape());
  const Tensor& xv = x.value();
  for (std::size_t i = 0; i < xv.size(); ++i) out[i] = xv[i] > 0.0 ? xv[i] : 0.0;
  return x.tape->Record("relu", std::move(out), {x}, [](const BackwardArgs& a) {
    const Tensor& xv = *a.inputs[0];
    Tensor& dx = *a.grad_inputs[0];
    // Subgradient 0 at the kink.
    const double* x = xv.data();
    const double* g = a.grad_output.data();
    double* d = dx.data();
    for (std::size_t i = 0; i < xv.size(); ++i) d[i] += x[i] > 0.0 ? g[i] : 0.0;
  });
}

Var Sigmoid(const Var& x) {
  Tensor out(x.shape());
  const Tensor& xv = x.value();
  for (std::size_t i = 0; i < xv.size(); ++i) out[i] = 1.0 / (1.0 + std::exp(-xv[i]));
  return x.tape->Record("sigmoid", std::move(out), {x}, [](const BackwardArgs& a) {
    Tensor& dx = *a.grad_inputs[0];
    for (std::size_t i = 0; i < dx.size(); ++i) {
      const double s = a.output[i];
      dx[i] += a.grad_output[i] * s * (1.0 - s);
    }
  });
}

Var BatchNorm2d(const Var& x, const Var& gamma, const Var& beta,
                const Tensor& running_mean, const Tensor& running_var,
                bool training, BatchNormStats* batch_stats) {
  RequireRank(x, 4, "batchnorm_2d input");
  const Shape& xs = x.shape();
  const std::size_t n = xs[0], c = xs[1], hw = xs[2] * xs[3];
  CheckSameShape(Shape{c}, gamma.shape(), "batchnorm_2d gamma");
  CheckSameShape(Shape{c}, beta.shape(), "batchnorm_2d beta");
  const std::size_t count = n * hw;
  const Tensor& xv = x.value();

  std::vector<double> mean(c), inv_std(c);
  if (training) {
    LCAM_REQUIRE(count > 1, ErrorKind::kShapeMismatch,
                 "batchnorm_2d: training mode needs more than one value per "
                 "channel, got input ", ShapeString(xs));
    std::vector<double> var(c);
    for (std::size_t ch = 0; ch < c; ++ch) {
      double s = 0.0;
      for (std::size_t b = 0; b < n; ++b) s += SumOf(xv.data() + (b * c + ch) * hw, hw);
      const double m = s / count;
      double v = 0.0;
      for (std::size_t b = 0; b < n; ++b) {
        v += SumOfSquaredDeviations(xv.data() + (b * c + ch) * hw, hw, m);
      }
      mean[ch] = m;
      var[ch] = v / count;
      inv_std[ch] = 1.0 / std::sqrt(var[ch] + kBatchNormEps);
    }
    if (batch_stats) {
      batch_stats->mean = Tensor(Shape{c}, mean);
      batch_stats->var = Tensor(Shape{c}, var);
    }
  } else {
    CheckSameShape(Shape{c}, running_mean.shape(), "batchnorm_2d running_mean");
    CheckSameShape(Shape{c}, running_var.shape(), "batchnorm_2d running_var");
    for (std::size_t ch = 0; ch < c; ++ch) {
      mean[ch] = running_mean[ch];
      inv_std[ch] = 1.0 / std::sqrt(running_var[ch] + kBatchNormEps);
    }
  }

  auto xhat = std::make_shared<Tensor>(xs);
  Tensor out(xs);
  const double* gv = gamma.value().data();
  const double* bv = beta.value().data();
  for (std::size_t b = 0; b < n; ++b) {
    for (std::size_t ch = 0; ch < c; ++ch) {
      const std::size_t off = (b * c + ch) * hw;
      for (std::size_t i = 0; i < hw; ++i) {
        const double h = (xv[off + i] - mean[ch]) * inv_std[ch];
        (*xhat)[off + i] = h;
        out[off + i] = gv[ch] * h + bv[ch];
      }
    }
  }
  return x.tape->Record(
      training ? "batchnorm_2d_train" : "batchnorm_2d_eval", std::move(out),
      {x, gamma, beta},
      [xhat, inv_std, n, c, hw, count, training](const BackwardArgs& a) {
        const double* gv = a.inputs[1]->data();
        const Tensor& dy = a.grad_output;
        for (std::size_t ch = 0; ch < c; ++ch) {
          double sum_dy = 0.0, sum_dy_xhat = 0.0;
          for (std::size_t b = 0; b < n; ++b) {
            const std::size_t off = (b * c + ch) * hw;
            sum_dy += SumOf(dy.data() + off, hw);
            sum_dy_xhat += DotOf(dy.data() + off, xhat->data() + off, hw);
          }
          if (a.grad_inputs[1]) (*a.grad_inputs[1])[ch] += sum_dy_xhat;
          if (a.grad_inputs[2]) (*a.grad_inputs[2])[ch] += sum_dy;
          if (!a.grad_inputs[0]) continue;
          Tensor& dx = *a.grad_inputs[0];
          const double k = gv[ch] * inv_std[ch];
          if (training) {
            const double mean_dy = sum_dy / count;
            const double mean_dy_xhat = sum_dy_xhat / count;
            for (std::size_t b = 0; b < n; ++b) {
              const std::size_t off = (b * c + ch) * hw;
              for (std::size_t i = 0; i < hw; ++i) {
                dx[off + i] +=
                    k * (dy[off + i] - mean_dy - (*xhat)[off + i] * mean_dy_xhat);
              }
            }
          } else {
            for (std::size_t b = 0; b < n; ++b) {
              const std::size_t off = (b * c + ch) * hw;
              for (std::size_t i = 0; i < hw; ++i) dx[off + i] += k * dy[off + i];
            }
          }
        }
      });
}

Var GlobalAvgPool(const Var& x) {
  RequireRank(x, 4, "global_avg_pool input");
  const Shape& xs = x.shape();
  const std::size_t nc = xs[0] * xs[1], hw = xs[2] * xs[3];
  Tensor out(Shape{xs[0], xs[1]});
  const Tensor& xv = x.value();
  for (std::size_t i = 0; i < nc; ++i) {
    out[i] = SumOf(xv.data() + i * hw, hw) / hw;
  }
  return x.tape->Record("global_avg_pool", std::move(out), {x},
                        [nc, hw](const BackwardArgs& a) {
                          Tensor& dx = *a.grad_inputs[0];
                          for (std::size_t i = 0; i < nc; ++i) {
                            const double g = a.grad_output[i] / hw;
                            for (std::size_t j = 0; j < hw; ++j) dx[i * hw + j] += g;
                          }
                        });
}

Var AvgPool2d(const Var& x, int kernel, int stride) {
  RequireRank(x, 4, "avg_pool2d input");
  LCAM_REQUIRE(kernel >= 1 && stride >= 1, ErrorKind::kInvalidArgument,
               "avg_pool2d: kernel and stride must be positive");
  const Shape& xs = x.shape();
  const int h = static_cast<int>(xs[2]), w = static_cast<int>(xs[3]);
  LCAM_REQUIRE(h >= kernel && w >= kernel, ErrorKind::kShapeMismatch,
               "avg_pool2d: kernel ", kernel, " larger than input ",
               ShapeString(xs));
  const int ho = (h - kernel) / stride + 1, wo = (w - kernel) / stride + 1;
  const std::size_t planes = xs[0] * xs[1];
  Tensor out(Shape{xs[0], xs[1], std::size_t(ho), std::size_t(wo)});
  const Tensor& xv = x.value();
  const double inv = 1.0 / (kernel * kernel);
  for (std::size_t p = 0; p < planes; ++p) {
    const double* src = xv.data() + p * h * w;
    double* dst = out.data() + p * ho * wo;
    for (int oh = 0; oh < ho; ++oh) {
      for (int ow = 0; ow < wo; ++ow) {
        double s = 0.0;
        for (int i = 0; i < kernel; ++i) {
          for (int j = 0; j < kernel; ++j) {
            s += src[(oh * stride + i) * w + ow * stride + j];
          }
        }
        dst[oh * wo + ow] = s * inv;
      }
    }
  }
  return x.tape->Record(
      "avg_pool2d", std::move(out), {x},
      [planes, h, w, ho, wo, kernel, stride, inv](const BackwardArgs& a) {
        Tensor& dx = *a.grad_inputs[0];
        for (std::size_t p = 0; p < planes; ++p) {
          const double* g = a.grad_output.data() + p * ho * wo;
          double* d = dx.data() + p * h * w;
          for (int oh = 0; oh < ho; ++oh) {
            for (int ow = 0; ow < wo; ++ow) {
              const double v = g[oh * wo + ow] * inv;
              for (int i = 0; i < kernel; ++i) {
                for (int j = 0; j < kernel; ++j) {
                  d[(oh * stride + i) * w + ow * stride + j] += v;
                }
              }
            }
          }
        }
      });
}

Var Linear(const Var& x, const Var& weight, const Var& bias) {
  RequireRank(x, 2, "linear input");
  RequireRank(weight, 2, "linear weight");
  const std::size_t n = x.shape()[0], in = x.shape()[1], out_dim = weight.shape()[0];
  LCAM_REQUIRE(weight.shape()[1] == in, ErrorKind::kShapeMismatch,
               "linear: weight ", ShapeString(weight.shape()),
               " expects input width ", weight.shape()[1], ", input is ",
               ShapeString(x.shape()));
  const bool has_bias = bias.valid();
  if (has_bias) CheckSameShape(Shape{out_dim}, bias.shape(), "linear bias");
  Tensor out(Shape{n, out_dim});
  ConstMatrixMap xm(x.value().data(), n, in);
  ConstMatrixMap wm(weight.value().data(), out_dim, in);
  MatrixMap om(out.data(), n, out_dim);
  om.noalias() = xm * wm.transpose();
  if (has_bias) {
    for (std::size_t r = 0; r < n; ++r) {
      for (std::size_t j = 0; j < out_dim; ++j) om(r, j) += bias.value()[j];
    }
  }
  std::vector<Var> inputs{x, weight};
  if (has_bias) inputs.push_back(bias);
  return x.tape->Record(
      "linear", std::move(out), std::move(inputs),
      [n, in, out_dim, has_bias](const BackwardArgs& a) {
        ConstMatrixMap dy(a.grad_output.data(), n, out_dim);
        if (a.grad_inputs[0]) {
          MatrixMap dx(a.grad_inputs[0]->data(), n, in);
          dx.noalias() += dy * ConstMatrixMap(a.inputs[1]->data(), out_dim, in);
        }
        if (a.grad_inputs[1]) {
          MatrixMap dw(a.grad_inputs[1]->data(), out_dim, in);
          dw.noalias() += dy.transpose() * ConstMatrixMap(a.inputs[0]->data(), n, in);
        }
        if (has_bias && a.grad_inputs[2]) {
          for (std::size_t r = 0; r < n; ++r) {
            for (std::size_t j = 0; j < out_dim; ++j) {
              (*a.grad_inputs[2])[j] += dy(r, j);
            }
          }
        }
      });
}

Var Add(const Var& a, const Var& b) {
  CheckSameShape(a.shape(), b.shape(), "add");
  Tensor out = a.value();
  out.set_requires_grad(false);
  out.Add(b.value());
  return a.tape->Record("add", std::move(out), {a, b}, [](const BackwardArgs& g) {
    for (int k = 0; k < 2; ++k) {
      if (g.grad_inputs[k]) g.grad_inputs[k]->Add(g.grad_output);
    }
  });
}

Var MulScalar(const Var& a, double s) {
  Tensor out(a.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.value()[i] * s;
  return a.tape->Record("mul_scalar", std::move(out), {a}, [s](const BackwardArgs& g) {
    Tensor& dx = *g.grad_inputs[0];
    for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += s * g.grad_output[i];
  });
}

Var ElementwiseMul(const Var& a, const Var& b) {
  CheckSameShape(a.shape(), b.shape(), "elementwise_mul");
  Tensor out(a.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.value()[i] * b.value()[i];
  return a.tape->Record("elementwise_mul", std::move(out), {a, b},
                        [](const BackwardArgs& g) {
                          const Tensor& av = *g.inputs[0];
                          const Tensor& bv = *g.inputs[1];
                          if (g.grad_inputs[0]) {
                            Tensor& d = *g.grad_inputs[0];
                            for (std::size_t i = 0; i < d.size(); ++i) {
                              d[i] += g.grad_output[i] * bv[i];
                            }
                          }
                          if (g.grad_inputs[1]) {
                            Tensor& d = *g.grad_inputs[1];
                            for (std::size_t i = 0; i < d.size(); ++i) {
                              d[i] += g.grad_output[i] * av[i];
                            }
                          }
                        });
}

Var ScaleChannels(const Var& x, const Var& s) {
  RequireRank(x, 4, "scale_channels input");
  const Shape& xs = x.shape();
  CheckSameShape(Shape{xs[0], xs[1]}, s.shape(), "scale_channels scale");
  const std::size_t nc = xs[0] * xs[1], hw = xs[2] * xs[3];
  Tensor out(xs);
  for (std::size_t i = 0; i < nc; ++i) {
    const double k = s.value()[i];
    for (std::size_t j = 0; j < hw; ++j) out[i * hw + j] = x.value()[i * hw + j] * k;
  }
  return x.tape->Record("scale_channels", std::move(out), {x, s},
                        [nc, hw](const BackwardArgs& g) {
                          const Tensor& xv = *g.inputs[0];
                          const Tensor& sv = *g.inputs[1];
                          for (std::size_t i = 0; i < nc; ++i) {
                            double acc = 0.0;
                            for (std::size_t j = 0; j < hw; ++j) {
                              const double go = g.grad_output[i * hw + j];
                              if (g.grad_inputs[0]) (*g.grad_inputs[0])[i * hw + j] += go * sv[i];
                              acc += go * xv[i * hw + j];
                            }
                            if (g.grad_inputs[1]) (*g.grad_inputs[1])[i] += acc;
                          }
                        });
}

Var Sum(const Var& x) {
  double s = 0.0;
  for (double v : x.value().values()) s += v;
  return x.tape->Record("sum", Tensor::Scalar(s), {x}, [](const BackwardArgs& g) {
    Tensor& dx = *g.grad_inputs[0];
    const double go = g.grad_output[0];
    for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += go;
  });
}

Var Pick(const Var& x, std::size_t index) {
  LCAM_REQUIRE(index < x.value().size(), ErrorKind::kInvalidArgument,
               "pick: index ", index, " out of range for shape ",
               ShapeString(x.shape()));
  return x.tape->Record("pick", Tensor::Scalar(x.value()[index]), {x},
                        [index](const BackwardArgs& g) {
                          (*g.grad_inputs[0])[index] += g.grad_output[0];
                        });
}

Tensor Softmax(const Tensor& logits) {
  LCAM_REQUIRE(logits.rank() == 2, ErrorKind::kShapeMismatch,
               "softmax expects [N,C], got ", ShapeString(logits.shape()));
  const std::size_t n = logits.dim(0), c = logits.dim(1);
  Tensor p(logits.shape());
  for (std::size_t r = 0; r < n; ++r) {
    const double* z = logits.data() + r * c;
    double mx = z[0];
    for (std::size_t j = 1; j < c; ++j) mx = std::max(mx, z[j]);
    double s = 0.0;
    for (std::size_t j = 0; j < c; ++j) s += std::exp(z[j] - mx);
    for (std::size_t j = 0; j < c; ++j) p[r * c + j] = std::exp(z[j] - mx) / s;
  }
  return p;
}

Var SoftmaxCrossEntropy(const Var& logits, const std::vector<int>& labels) {
  RequireRank(logits, 2, "softmax_cross_entropy logits");
  const std::size_t n = logits.shape()[0], c = logits.shape()[1];
  LCAM_REQUIRE(labels.size() == n, ErrorKind::kShapeMismatch,
               "softmax_cross_entropy: ", labels.size(), " labels for ", n,
               " rows");
  for (int y : labels) {
    LCAM_REQUIRE(y >= 0 && static_cast<std::size_t>(y) < c,
                 ErrorKind::kInvalidArgument, "label ", y,
                 " out of range for ", c, " classes");
  }
  auto probs = std::make_shared<Tensor>(Softmax(logits.value()));
  double loss = 0.0;
  for (std::size_t r = 0; r < n; ++r) {
    const double* z = logits.value().data() + r * c;
    double mx = z[0];
    for (std::size_t j = 1; j < c; ++j) mx = std::max(mx, z[j]);
    double s = 0.0;
    for (std::size_t j = 0; j < c; ++j) s += std::exp(z[j] - mx);
    loss += mx + std::log(s) - z[labels[r]];
  }
  loss /= n;
  return logits.tape->Record(
      "softmax_cross_entropy", Tensor::Scalar(loss), {logits},
      [probs, labels, n, c](const BackwardArgs& g) {
        Tensor& dz = *g.grad_inputs[0];
        const double scale = g.grad_output[0] / n;
        for (std::size_t r = 0; r < n; ++r) {
          for (std::size_t j = 0; j < c; ++j) {
            const double target = static_cast<int>(j) == labels[r] ? 1.0 : 0.0;
            dz[r * c + j] += scale * ((*probs)[r * c + j] - target);
          }
        }
      });
}

Var SquaredL2Distance(const Var& a, const Var& b) {
  CheckSameShape(a.shape(), b.shape(), "squared_l2_distance");
  LCAM_REQUIRE(a.value().rank() == 1 || a.value().rank() == 2,
               ErrorKind::kShapeMismatch,
               "squared_l2_distance expects rank 1 or 2, got ",
               ShapeString(a.shape()));
  const std::size_t rows = a.value().rank() == 2 ? a.shape()[0] : 1;
  double s = 0.0;
  for (std::size_t i = 0; i < a.value().size(); ++i) {
    const double d = a.value()[i] - b.value()[i];
    s += d * d;
  }
  return a.tape->Record("squared_l2_distance", Tensor::Scalar(s / rows), {a, b},
                        [rows](const BackwardArgs& g) {
                          const Tensor& av = *g.inputs[0];
                          const Tensor& bv = *g.inputs[1];
                          const double k = 2.0 * g.grad_output[0] / rows;
                          for (std::size_t i = 0; i < av.size(); ++i) {
                            const double d = k * (av[i] - bv[i]);
                            if (g.grad_inputs[0]) (*g.grad_inputs[0])[i] += d;
                            if (g.grad_inputs[1]) (*g.grad_inputs[1])[i] -= d;
                          }
                        });
}

}  // namespace lcam::ad
