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

#include "gradient_cases.h"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>

#include "augment/train.h"
#include "base/rng.h"
#include "model/speaker_net.h"

namespace lcam::testing {

using ad::Shape;
using ad::Tape;
using ad::Tensor;
using ad::Var;

namespace {

Tensor RandomTensor(Shape shape, Rng& rng, double scale = 1.0) {
  Tensor t(std::move(shape));
  for (double& v : t.values()) v = scale * rng.Normal();
  return t;
}

// Values bounded away from zero so that ReLU kinks sit outside the
// finite-difference stencil.
Tensor AwayFromZero(Shape shape, Rng& rng) {
  Tensor t(std::move(shape));
  for (double& v : t.values()) {
    const double mag = 0.05 + rng.Uniform();
    v = rng.Uniform() < 0.5 ? -mag : mag;
  }
  return t;
}

// Sum of the elementwise product with a fixed random tensor, turning any
// output into a scalar with a generic gradient.
Var Project(const Var& v, uint64_t seed) {
  Rng rng(seed);
  return ad::Sum(ad::ElementwiseMul(v, v.tape->Constant(RandomTensor(v.shape(), rng))));
}

GradientCase Unary(std::string name, Tensor x, std::function<Var(const Var&)> f) {
  GradientCase c;
  c.name = std::move(name);
  c.inputs = {std::move(x)};
  c.build = [f](Tape&, const std::vector<Var>& in) { return Project(f(in[0]), 11); };
  return c;
}

GradientCase Binary(std::string name, Tensor a, Tensor b,
                    std::function<Var(const Var&, const Var&)> f) {
  GradientCase c;
  c.name = std::move(name);
  c.inputs = {std::move(a), std::move(b)};
  c.build = [f](Tape&, const std::vector<Var>& in) { return Project(f(in[0], in[1]), 13); };
  return c;
}

void AddConvCases(std::vector<GradientCase>* out, Rng& rng) {
  struct Spec {
    std::size_t n, cin, cout, h, w, k;
    int stride, padding;
    bool bias;
  };
  const Spec specs[] = {
      {1, 1, 1, 4, 4, 3, 1, 0, true},  {2, 2, 3, 5, 4, 3, 1, 1, true},
      {1, 2, 2, 6, 5, 3, 2, 1, true},  {2, 3, 2, 4, 4, 1, 1, 0, true},
      {1, 2, 2, 5, 5, 3, 1, 1, false}, {2, 1, 2, 7, 6, 2, 2, 0, true},
      {1, 2, 4, 3, 8, 3, 2, 1, false},
  };
  for (const Spec& s : specs) {
    GradientCase c;
    c.name = "conv2d n" + std::to_string(s.n) + " cin" + std::to_string(s.cin) + " cout" +
             std::to_string(s.cout) + " " + std::to_string(s.h) + "x" + std::to_string(s.w) +
             " k" + std::to_string(s.k) + " s" + std::to_string(s.stride) + " p" +
             std::to_string(s.padding) + (s.bias ? " bias" : " nobias");
    c.inputs = {RandomTensor({s.n, s.cin, s.h, s.w}, rng),
                RandomTensor({s.cout, s.cin, s.k, s.k}, rng, 0.5)};
    if (s.bias) c.inputs.push_back(RandomTensor({s.cout}, rng));
    const ad::Conv2dOptions opt{.stride = s.stride, .padding = s.padding};
    const bool bias = s.bias;
    c.build = [opt, bias](Tape&, const std::vector<Var>& in) {
      return Project(ad::Conv2d(in[0], in[1], bias ? in[2] : Var{}, opt), 17);
    };
    out->push_back(std::move(c));
  }
}

void AddBatchNormCases(std::vector<GradientCase>* out, Rng& rng) {
  const Shape train_shapes[] = {{4, 3, 3, 3}, {2, 2, 4, 5}, {3, 1, 2, 2}, {1, 2, 3, 4}};
  for (const Shape& s : train_shapes) {
    GradientCase c;
    c.name = "batchnorm2d train " + ad::ShapeString(s);
    c.inputs = {RandomTensor(s, rng, 2.0), RandomTensor({s[1]}, rng),
                RandomTensor({s[1]}, rng)};
    const std::size_t ch = s[1];
    c.build = [ch](Tape&, const std::vector<Var>& in) {
      const Tensor zeros({ch}, 0.0), ones({ch}, 1.0);
      return Project(ad::BatchNorm2d(in[0], in[1], in[2], zeros, ones, true), 19);
    };
    out->push_back(std::move(c));
  }
  const Shape eval_shapes[] = {{2, 3, 2, 2}, {1, 2, 3, 3}};
  for (const Shape& s : eval_shapes) {
    GradientCase c;
    c.name = "batchnorm2d eval " + ad::ShapeString(s);
    c.inputs = {RandomTensor(s, rng), RandomTensor({s[1]}, rng), RandomTensor({s[1]}, rng)};
    Tensor mean = RandomTensor({s[1]}, rng);
    Tensor var({s[1]});
    for (double& v : var.values()) v = 0.5 + rng.Uniform();
    c.build = [mean, var](Tape&, const std::vector<Var>& in) {
      return Project(ad::BatchNorm2d(in[0], in[1], in[2], mean, var, false), 23);
    };
    out->push_back(std::move(c));
  }
}

void AddElementwiseCases(std::vector<GradientCase>* out, Rng& rng) {
  out->push_back(Unary("relu 4d", AwayFromZero({2, 3, 4, 4}, rng), ad::Relu));
  out->push_back(Unary("relu 1d", AwayFromZero({7}, rng), ad::Relu));
  out->push_back(Unary("sigmoid 2d", RandomTensor({3, 5}, rng, 2.0), ad::Sigmoid));
  out->push_back(Unary("sigmoid 4d", RandomTensor({1, 2, 3, 3}, rng), ad::Sigmoid));
  out->push_back(Unary("global avg pool 2x3x4x5", RandomTensor({2, 3, 4, 5}, rng),
                       ad::GlobalAvgPool));
  out->push_back(Unary("global avg pool 1x1x3x3", RandomTensor({1, 1, 3, 3}, rng),
                       ad::GlobalAvgPool));
  const struct {
    int kernel, stride;
    Shape shape;
  } pools[] = {{2, 2, {1, 2, 4, 6}}, {3, 1, {2, 1, 5, 4}}, {2, 1, {1, 3, 3, 3}}};
  for (const auto& p : pools) {
    const int k = p.kernel, s = p.stride;
    out->push_back(Unary("avg pool k" + std::to_string(k) + " s" + std::to_string(s),
                         RandomTensor(p.shape, rng),
                         [k, s](const Var& x) { return ad::AvgPool2d(x, k, s); }));
  }
  out->push_back(Binary("add 4d", RandomTensor({2, 2, 3, 3}, rng),
                        RandomTensor({2, 2, 3, 3}, rng), ad::Add));
  out->push_back(Binary("add 2d", RandomTensor({4, 3}, rng), RandomTensor({4, 3}, rng),
                        ad::Add));
  out->push_back(Unary("mul scalar 2.5", RandomTensor({3, 4}, rng),
                       [](const Var& x) { return ad::MulScalar(x, 2.5); }));
  out->push_back(Unary("mul scalar -0.3", RandomTensor({2, 1, 2, 2}, rng),
                       [](const Var& x) { return ad::MulScalar(x, -0.3); }));
  out->push_back(Binary("elementwise mul 2d", RandomTensor({3, 4}, rng),
                        RandomTensor({3, 4}, rng), ad::ElementwiseMul));
  out->push_back(Binary("elementwise mul 4d", RandomTensor({1, 2, 3, 2}, rng),
                        RandomTensor({1, 2, 3, 2}, rng), ad::ElementwiseMul));
  out->push_back(Unary("elementwise mul self", RandomTensor({5}, rng),
                       [](const Var& x) { return ad::ElementwiseMul(x, x); }));
  out->push_back(Binary("scale channels 2x3", RandomTensor({2, 3, 2, 3}, rng),
                        RandomTensor({2, 3}, rng), ad::ScaleChannels));
  out->push_back(Binary("scale channels 1x4", RandomTensor({1, 4, 3, 2}, rng),
                        RandomTensor({1, 4}, rng), ad::ScaleChannels));
  {
    GradientCase c;
    c.name = "sum";
    c.inputs = {RandomTensor({3, 2, 2}, rng)};
    c.build = [](Tape&, const std::vector<Var>& in) {
      return ad::Sum(ad::ElementwiseMul(in[0], in[0]));
    };
    out->push_back(std::move(c));
  }
  {
    GradientCase c;
    c.name = "pick";
    c.inputs = {RandomTensor({2, 5}, rng)};
    c.build = [](Tape&, const std::vector<Var>& in) {
      return ad::MulScalar(ad::Pick(ad::Sigmoid(in[0]), 7), 3.0);
    };
    out->push_back(std::move(c));
  }
}

void AddLinearAndLossCases(std::vector<GradientCase>* out, Rng& rng) {
  const struct {
    std::size_t n, in, out;
    bool bias;
  } lins[] = {{3, 4, 2, true}, {2, 5, 3, false}, {1, 6, 4, true}};
  for (const auto& l : lins) {
    GradientCase c;
    c.name = "linear " + std::to_string(l.n) + "x" + std::to_string(l.in) + "->" +
             std::to_string(l.out) + (l.bias ? " bias" : " nobias");
    c.inputs = {RandomTensor({l.n, l.in}, rng), RandomTensor({l.out, l.in}, rng)};
    if (l.bias) c.inputs.push_back(RandomTensor({l.out}, rng));
    const bool bias = l.bias;
    c.build = [bias](Tape&, const std::vector<Var>& in) {
      return Project(ad::Linear(in[0], in[1], bias ? in[2] : Var{}), 31);
    };
    out->push_back(std::move(c));
  }
  const struct {
    std::size_t n, classes;
    double scale;
    std::vector<int> labels;
  } ces[] = {{1, 3, 1.0, {2}}, {4, 5, 1.0, {0, 4, 2, 2}}, {3, 4, 8.0, {1, 3, 0}}};
  for (const auto& ce : ces) {
    GradientCase c;
    c.name = "softmax cross entropy " + std::to_string(ce.n) + "x" +
             std::to_string(ce.classes) + " scale " + std::to_string(ce.scale);
    c.inputs = {RandomTensor({ce.n, ce.classes}, rng, ce.scale)};
    const std::vector<int> labels = ce.labels;
    c.build = [labels](Tape&, const std::vector<Var>& in) {
      return ad::SoftmaxCrossEntropy(in[0], labels);
    };
    out->push_back(std::move(c));
  }
  const Shape dists[] = {{6}, {3, 4}, {1, 5}};
  for (const Shape& s : dists) {
    GradientCase c;
    c.name = "squared l2 distance " + ad::ShapeString(s);
    c.inputs = {RandomTensor(s, rng), RandomTensor(s, rng)};
    c.build = [](Tape&, const std::vector<Var>& in) {
      return ad::SquaredL2Distance(in[0], in[1]);
    };
    out->push_back(std::move(c));
  }
}

void AddCompositeCases(std::vector<GradientCase>* out, Rng& rng) {
  {
    GradientCase c;
    c.name = "conv-bn-relu-pool-linear-ce";
    c.inputs = {RandomTensor({3, 1, 5, 4}, rng), RandomTensor({2, 1, 3, 3}, rng, 0.5),
                RandomTensor({2}, rng), RandomTensor({2}, rng), RandomTensor({3, 2}, rng)};
    c.build = [](Tape&, const std::vector<Var>& in) {
      const Tensor zeros({2}, 0.0), ones({2}, 1.0);
      Var h = ad::Conv2d(in[0], in[1], Var{}, {.stride = 1, .padding = 1});
      h = ad::Relu(ad::BatchNorm2d(h, in[2], in[3], zeros, ones, true));
      return ad::SoftmaxCrossEntropy(ad::Linear(ad::GlobalAvgPool(h), in[4], Var{}),
                                     {0, 2, 1});
    };
    out->push_back(std::move(c));
  }
  {
    GradientCase c;
    c.name = "squeeze-excitation gate";
    c.inputs = {RandomTensor({2, 4, 3, 3}, rng), RandomTensor({2, 4}, rng),
                RandomTensor({2}, rng), RandomTensor({4, 2}, rng), RandomTensor({4}, rng)};
    c.build = [](Tape&, const std::vector<Var>& in) {
      Var z = ad::GlobalAvgPool(in[0]);
      z = ad::Sigmoid(ad::Linear(ad::Sigmoid(ad::Linear(z, in[1], in[2])), in[3], in[4]));
      return Project(ad::ScaleChannels(in[0], z), 37);
    };
    out->push_back(std::move(c));
  }
  {
    GradientCase c;
    c.name = "residual add then relu";
    c.inputs = {RandomTensor({1, 2, 4, 4}, rng), RandomTensor({2, 2, 3, 3}, rng, 0.3)};
    c.build = [](Tape&, const std::vector<Var>& in) {
      Var y = ad::Conv2d(in[0], in[1], Var{}, {.stride = 1, .padding = 1});
      return Project(ad::Sigmoid(ad::Add(y, in[0])), 41);
    };
    out->push_back(std::move(c));
  }
  {
    // Gradient of a class score with respect to an intermediate activation
    // map, taken from the tape of the whole two-layer network.
    GradientCase c;
    c.name = "class score wrt intermediate activation";
    Tensor x = RandomTensor({1, 1, 4, 4}, rng);
    Tensor w1 = RandomTensor({2, 1, 3, 3}, rng, 0.5);
    Tensor w2 = RandomTensor({3, 2, 3, 3}, rng, 0.5);
    Tensor head = RandomTensor({4, 3}, rng);
    const auto tail = [w2, head](const Var& a) {
      Tape* t = a.tape;
      Var h = ad::Sigmoid(ad::Conv2d(a, t->Constant(w2), Var{}, {.stride = 1, .padding = 1}));
      return ad::Pick(ad::Linear(ad::GlobalAvgPool(h), t->Constant(head), Var{}), 2);
    };
    Tape probe;
    Var a0 = ad::Sigmoid(ad::Conv2d(probe.Constant(x), probe.Constant(w1), Var{},
                                    {.stride = 1, .padding = 1}));
    c.inputs = {a0.value()};
    c.build = [tail](Tape&, const std::vector<Var>& in) { return tail(in[0]); };
    c.analytic = [x, w1, tail](const std::vector<Tensor>&) {
      Tape tape;
      Var a = ad::Sigmoid(ad::Conv2d(tape.Leaf(Tensor(x).set_requires_grad(true)),
                                     tape.Leaf(Tensor(w1).set_requires_grad(true)), Var{},
                                     {.stride = 1, .padding = 1}));
      const Var y = tail(a);
      const Var wrt[] = {a};
      return std::vector<Tensor>{tape.Backward(y, wrt).at(a)};
    };
    out->push_back(std::move(c));
  }
}

model::ModelConfig TinyNetConfig() {
  model::ModelConfig mc;
  mc.n_mels = 8;
  mc.stage_channels = {2, 3, 4, 4};
  mc.blocks_per_stage = {1, 1, 1, 1};
  mc.embedding_dim = 4;
  mc.n_speakers = 3;
  mc.se_reduction = 2;
  mc.seed = 5;
  return mc;
}

std::vector<std::string> ParameterNames(const model::SpeakerNet& net) {
  std::vector<std::string> names;
  for (const auto& [name, t] : net.parameters()) names.push_back(name);
  return names;
}

model::BoundParams BindInputs(const std::vector<std::string>& names,
                              const std::vector<Var>& in) {
  model::BoundParams b;
  for (std::size_t i = 0; i < names.size(); ++i) b.vars.emplace(names[i], in[i]);
  return b;
}

void AddNetworkCases(std::vector<GradientCase>* out, Rng& rng) {
  auto net = std::make_shared<model::SpeakerNet>(TinyNetConfig());
  // Train-mode batch norm; running statistics are not touched by Forward.
  const std::vector<std::string> names = ParameterNames(*net);
  std::vector<Tensor> params;
  for (const auto& n : names) params.push_back(net->parameters().at(n));
  const Tensor x = RandomTensor({2, 1, 8, 8}, rng);
  const Tensor x_aug = RandomTensor({2, 1, 8, 8}, rng);
  const std::vector<int> labels = {1, 2};

  {
    GradientCase c;
    c.name = "speaker net cross entropy, train mode, all parameters";
    c.inputs = params;
    c.max_coords = 12;
    c.build = [net, names, x, labels](Tape& tape, const std::vector<Var>& in) {
      const auto r = net->Forward(BindInputs(names, in), tape.Constant(x), model::Mode::kTrain);
      return ad::SoftmaxCrossEntropy(r.logits, labels);
    };
    out->push_back(std::move(c));
  }
  {
    GradientCase c;
    c.name = "speaker net class score, eval mode, all parameters";
    c.inputs = params;
    c.max_coords = 12;
    c.build = [net, names, x](Tape& tape, const std::vector<Var>& in) {
      const auto r = net->Forward(BindInputs(names, in), tape.Constant(x), model::Mode::kEval);
      return ad::Pick(r.logits, 1);
    };
    out->push_back(std::move(c));
  }
  {
    // The embedding-distance term alone, against the first conv weight.
    GradientCase c;
    c.name = "embedding distance term wrt stem conv weight";
    const std::string stem = "stem.conv.weight";
    c.inputs = {net->parameters().at(stem)};
    c.build = [net, stem, x, x_aug](Tape& tape, const std::vector<Var>& in) {
      model::BoundParams b = net->Bind(tape);
      b.vars[stem] = in[0];
      const auto clean = net->Forward(b, tape.Constant(x), model::Mode::kTrain);
      const auto aug = net->Forward(b, tape.Constant(x_aug), model::Mode::kTrain);
      return ad::SquaredL2Distance(clean.embedding, aug.embedding);
    };
    out->push_back(std::move(c));
  }
  // Both augmentation losses as trained, with the gradient the training
  // step uses, against the stem weight and a deep SE weight.
  for (const bool act : {false, true}) {
    for (const std::string& pname : {std::string("stem.conv.weight"),
                                     std::string("stage4.block0.se.fc1.weight")}) {
      GradientCase c;
      c.name = std::string(act ? "act" : "vanilla") + " DA loss wrt " + pname;
      c.inputs = {net->parameters().at(pname)};
      const auto loss = [net, pname, x, x_aug, labels, act](const Tensor& p) {
        model::SpeakerNet copy = *net;
        copy.parameters().at(pname) = p;
        return act ? augment::ActDaLoss(copy, x, x_aug, labels)
                   : augment::VanillaDaLoss(copy, x, x_aug, labels);
      };
      c.value = [loss](const std::vector<Tensor>& in) { return loss(in[0]).terms.total; };
      c.analytic = [loss, pname](const std::vector<Tensor>& in) {
        return std::vector<Tensor>{loss(in[0]).grads.at(pname)};
      };
      out->push_back(std::move(c));
    }
  }
}

}  // namespace

std::vector<GradientCase> GradientCases() {
  Rng rng(20260419);
  std::vector<GradientCase> cases;
  AddConvCases(&cases, rng);
  AddBatchNormCases(&cases, rng);
  AddElementwiseCases(&cases, rng);
  AddLinearAndLossCases(&cases, rng);
  AddCompositeCases(&cases, rng);
  AddNetworkCases(&cases, rng);
  return cases;
}

GradientCheck RunGradientCheck(const GradientCase& c, double h) {
  const auto evaluate = [&](const std::vector<Tensor>& in) {
    if (c.value) return c.value(in);
    Tape tape;
    std::vector<Var> vars;
    for (const Tensor& t : in) vars.push_back(tape.Leaf(Tensor(t).set_requires_grad(true)));
    return c.build(tape, vars).value().item();
  };
  std::vector<Tensor> analytic;
  if (c.analytic) {
    analytic = c.analytic(c.inputs);
  } else {
    Tape tape;
    std::vector<Var> vars;
    for (const Tensor& t : c.inputs) {
      vars.push_back(tape.Leaf(Tensor(t).set_requires_grad(true)));
    }
    const Var y = c.build(tape, vars);
    const ad::GradientMap g = tape.Backward(y, vars);
    for (const Var& v : vars) analytic.push_back(g.at(v));
  }

  GradientCheck result{c.name, 0.0, 0};
  Rng pick(Fnv1a(c.name));
  std::vector<Tensor> probe = c.inputs;
  for (std::size_t i = 0; i < probe.size(); ++i) {
    std::vector<std::size_t> coords(probe[i].size());
    std::iota(coords.begin(), coords.end(), 0);
    if (coords.size() > c.max_coords) {
      for (std::size_t k = 0; k < c.max_coords; ++k) {
        std::swap(coords[k], coords[k + pick.Index(coords.size() - k)]);
      }
      coords.resize(c.max_coords);
    }
    double diff = 0.0, scale = 0.0;
    for (std::size_t k : coords) {
      const double saved = probe[i][k];
      probe[i][k] = saved + h;
      const double up = evaluate(probe);
      probe[i][k] = saved - h;
      const double down = evaluate(probe);
      probe[i][k] = saved;
      const double numeric = (up - down) / (2.0 * h);
      const double exact = analytic[i][k];
      diff = std::max(diff, std::fabs(exact - numeric));
      scale = std::max({scale, std::fabs(exact), std::fabs(numeric)});
    }
    result.coords += coords.size();
    const double rel = scale > 0.0 ? diff / scale : diff;
    result.max_rel_error = std::max(result.max_rel_error, rel);
  }
  return result;
}

}  // namespace lcam::testing
