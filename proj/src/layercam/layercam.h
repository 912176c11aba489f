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

#ifndef LCAM_LAYERCAM_LAYERCAM_H_
#define LCAM_LAYERCAM_LAYERCAM_H_

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "ad/tensor.h"
#include "base/grid.h"
#include "dsp/fbank.h"
#include "model/speaker_net.h"

namespace lcam::layercam {

enum class MapSource { kStage1, kStage2, kStage3, kStage4, kFused };

std::string ToString(MapSource source);
std::optional<MapSource> ParseMapSource(const std::string& text);

// frames x mel-bins saliency for one target class.
struct SaliencyMap {
  Grid values;
  int target_class = 0;
  MapSource source = MapSource::kFused;

  friend bool operator==(const SaliencyMap&, const SaliencyMap&) = default;
};

// Raw LayerCAM map of one stage for batch element `index`: the gradient is
// rectified into location-wise weights, the weighted activations are summed
// over channels and the sum is rectified. Both tensors are [N,C,H,W]; the
// result is H x W and nonnegative.
Grid LayerSaliency(const ad::Tensor& activation, const ad::Tensor& gradient,
                   std::size_t index = 0);

// (v - min) / (max - min); a constant map becomes all zeros. Throws on
// non-finite input.
Grid Normalize01(const Grid& map);

// Bilinear interpolation with corner alignment onto a grid at least as
// large on both axes.
Grid UpsampleTo(const Grid& map, std::size_t rows, std::size_t cols);

// Elementwise mean of equally shaped maps.
Grid MeanOfMaps(const std::vector<Grid>& maps);

struct SaliencyResult {
  SaliencyMap fused;
  // Upsampled and normalized map of each stage.
  std::array<SaliencyMap, model::kNumStages> stages;
  std::vector<double> logits;
};

// Eval-mode LayerCAM for the pre-softmax logit of `target_class`: each
// stage map is upsampled to the Fbank shape, normalized to [0,1], and the
// fused map is the mean of the four.
SaliencyResult FusedSaliency(const model::SpeakerNet& net,
                             const dsp::FbankMatrix& features, int target_class);

// The same for a batch of equally shaped utterances in one forward and one
// backward pass. Eval-mode samples do not interact, so each map depends only
// on its own utterance.
std::vector<SaliencyResult> FusedSaliencyBatch(
    const model::SpeakerNet& net, const std::vector<const dsp::FbankMatrix*>& batch,
    const std::vector<int>& target_classes);

// Portable grid file: a one-line text header
//   LCAMGRID rows=R cols=C class=K source=S
// followed by rows*cols little-endian 32-bit floats in row-major order.
std::vector<uint8_t> EncodeGrid(const SaliencyMap& map);
SaliencyMap DecodeGrid(const std::vector<uint8_t>& bytes);
void WriteGridFile(const SaliencyMap& map, const std::string& path);
SaliencyMap ReadGridFile(const std::string& path);

// 8-bit binary PGM (P5) with frames along the x axis and mel bins along y,
// low frequencies at the bottom. Values are clamped to [0,1].
std::vector<uint8_t> EncodePgm(const Grid& map);
void WritePgmFile(const Grid& map, const std::string& path);

}  // namespace lcam::layercam

#endif  // LCAM_LAYERCAM_LAYERCAM_H_
