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

#include "experiment/run_config.h"

#include <set>

#include "base/bytes.h"
#include "base/error.h"
#include "json.hpp"

namespace lcam::experiment {

using nlohmann::json;

namespace {

// Reads fields out of one JSON object, remembering which keys were used so
// that leftovers can be reported as unknown.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    LCAM_REQUIRE(j.is_object(), ErrorKind::kConfig, "config field '", Name(""),
                 "' must be an object");
  }

  template <typename T>
  void Read(const char* key, T* out) {
    used_.insert(key);
    if (!j_.contains(key)) return;
    try {
      *out = j_.at(key).get<T>();
    } catch (const json::exception&) {
      Fail(ErrorKind::kConfig, "config field '", Name(key), "' has the wrong type");
    }
  }

  template <std::size_t N>
  void ReadArray(const char* key, std::array<int, N>* out) {
    std::vector<int> v(out->begin(), out->end());
    Read(key, &v);
    LCAM_REQUIRE(v.size() == N, ErrorKind::kConfig, "config field '", Name(key),
                 "' needs ", N, " entries, got ", v.size());
    std::copy(v.begin(), v.end(), out->begin());
  }

  void ReadRange(const char* key, augment::MixSpec* out) {
    std::vector<double> v{out->alpha_min, out->alpha_max};
    Read(key, &v);
    LCAM_REQUIRE(v.size() == 2, ErrorKind::kConfig, "config field '", Name(key),
                 "' needs [min, max]");
    out->alpha_min = v[0];
    out->alpha_max = v[1];
  }

  Section Child(const char* key) {
    used_.insert(key);
    static const json kEmpty = json::object();
    return Section(j_.contains(key) ? j_.at(key) : kEmpty, Name(key));
  }

  void Finish() const {
    for (const auto& [key, value] : j_.items()) {
      LCAM_REQUIRE(used_.count(key) != 0, ErrorKind::kConfig,
                   "unknown config key '", Name(key), "'");
    }
  }

  std::string Name(const std::string& key) const {
    if (path_.empty()) return key;
    return key.empty() ? path_ : path_ + "." + key;
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> used_;
};

std::string WindowName(dsp::WindowType w) {
  return w == dsp::WindowType::kHann ? "hann" : "rectangular";
}

std::string LabelRuleName(corpus::LabelRule r) {
  return r == corpus::LabelRule::kParentDirectory ? "parent_directory"
                                                  : "filename_prefix";
}

}  // namespace

RunConfig DefaultRunConfig() {
  RunConfig c;
  c.model.stage_channels = {8, 16, 32, 64};
  c.train.epochs = 16;
  c.train.crop_frames = 64;
  c.ApplySeed(c.seed);
  return c;
}

void RunConfig::ApplySeed(uint64_t new_seed) {
  seed = new_seed;
  corpus.seed = new_seed;
  model.seed = new_seed;
  train.seed = new_seed;
}

void RunConfig::Validate() const {
  LCAM_REQUIRE(!results_dir.empty(), ErrorKind::kConfig,
               "config field 'paths.results' must not be empty");
  corpus.Validate();
  LCAM_REQUIRE(features.stft.frame_length > 0 && features.stft.hop > 0 &&
                   features.stft.hop <= features.stft.frame_length,
               ErrorKind::kConfig,
               "config fields 'features.frame_length'/'features.hop' must satisfy "
               "0 < hop <= frame_length");
  LCAM_REQUIRE(features.fbank.n_mels >= 2 &&
                   features.fbank.n_mels <= features.stft.frame_length / 2 + 1,
               ErrorKind::kConfig, "config field 'features.n_mels' out of range");
  LCAM_REQUIRE(features.fbank.floor_db < 0.0, ErrorKind::kConfig,
               "config field 'features.floor_db' must be negative");
  model.Validate();
  LCAM_REQUIRE(model.n_mels == features.fbank.n_mels, ErrorKind::kConfig,
               "model n_mels differs from 'features.n_mels'");
  augment::TrainConfig probe = train;
  probe.mode = augment::TrainMode::kBase;
  probe.Validate();
  LCAM_REQUIRE(analysis.frame_threshold_ratio > 0.0, ErrorKind::kConfig,
               "config field 'analysis.frame_threshold_ratio' must be positive");
  LCAM_REQUIRE(analysis.deletion_thresholds >= 2, ErrorKind::kConfig,
               "config field 'analysis.deletion_thresholds' must be >= 2");
  LCAM_REQUIRE(analysis.deletion_utterances >= 0, ErrorKind::kConfig,
               "config field 'analysis.deletion_utterances' must be >= 0");
  LCAM_REQUIRE(!analysis.topk.empty(), ErrorKind::kConfig,
               "config field 'analysis.topk' must not be empty");
  for (int k : analysis.topk) {
    LCAM_REQUIRE(k >= 1 && k <= corpus.n_speakers, ErrorKind::kConfig,
                 "config field 'analysis.topk' entry ", k, " outside [1, ",
                 corpus.n_speakers, "]");
  }
  LCAM_REQUIRE(analysis.saliency_exports >= 0, ErrorKind::kConfig,
               "config field 'analysis.saliency_exports' must be >= 0");
}

RunConfig ParseRunConfig(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::exception& e) {
    Fail(ErrorKind::kConfig, "config is not valid JSON: ", e.what());
  }
  RunConfig c = DefaultRunConfig();
  Section top(root, "");
  uint64_t seed = c.seed;
  top.Read("seed", &seed);
  {
    Section s = top.Child("paths");
    s.Read("results", &c.results_dir);
    s.Read("ingest", &c.ingest_dir);
    std::string rule = LabelRuleName(c.label_rule);
    s.Read("label_rule", &rule);
    if (rule == "parent_directory") {
      c.label_rule = corpus::LabelRule::kParentDirectory;
    } else if (rule == "filename_prefix") {
      c.label_rule = corpus::LabelRule::kFilenamePrefix;
    } else {
      Fail(ErrorKind::kConfig, "config field 'paths.label_rule' must be "
           "parent_directory or filename_prefix, got '", rule, "'");
    }
    s.Finish();
  }
  {
    Section s = top.Child("corpus");
    auto& k = c.corpus;
    s.Read("n_speakers", &k.n_speakers);
    s.Read("utterances_per_speaker", &k.utterances_per_speaker);
    s.Read("utterance_seconds", &k.utterance_seconds);
    s.Read("noise_clips", &k.noise_clips);
    s.Read("music_clips", &k.music_clips);
    s.Read("speech_clips_per_profile", &k.speech_clips_per_profile);
    s.Read("interference_seconds", &k.interference_seconds);
    s.Read("test_fraction", &k.test_fraction);
    s.ReadRange("test_alpha", &k.test_mix);
    s.Read("ramp_snr_db", &k.ramp_snr_db);
    s.Read("ramp_utterances", &k.ramp_utterances);
    s.Finish();
  }
  {
    Section s = top.Child("features");
    s.Read("sample_rate", &c.corpus.sample_rate);
    s.Read("frame_length", &c.features.stft.frame_length);
    s.Read("hop", &c.features.stft.hop);
    std::string window = WindowName(c.features.stft.window);
    s.Read("window", &window);
    if (window == "hann") {
      c.features.stft.window = dsp::WindowType::kHann;
    } else if (window == "rectangular") {
      c.features.stft.window = dsp::WindowType::kRectangular;
    } else {
      Fail(ErrorKind::kConfig, "config field 'features.window' must be hann or "
           "rectangular, got '", window, "'");
    }
    s.Read("n_mels", &c.features.fbank.n_mels);
    s.Read("floor_db", &c.features.fbank.floor_db);
    s.Finish();
  }
  {
    Section s = top.Child("model");
    s.ReadArray("stage_channels", &c.model.stage_channels);
    s.ReadArray("blocks_per_stage", &c.model.blocks_per_stage);
    s.Read("embedding_dim", &c.model.embedding_dim);
    s.Read("se_reduction", &c.model.se_reduction);
    s.Finish();
  }
  {
    Section s = top.Child("train");
    s.Read("epochs", &c.train.epochs);
    s.Read("batch_size", &c.train.batch_size);
    s.Read("learning_rate", &c.train.learning_rate);
    s.Read("momentum", &c.train.momentum);
    s.ReadRange("alpha", &c.train.mix);
    s.Read("crop_frames", &c.train.crop_frames);
    s.Finish();
  }
  {
    Section s = top.Child("analysis");
    s.Read("frame_threshold_ratio", &c.analysis.frame_threshold_ratio);
    s.Read("deletion_thresholds", &c.analysis.deletion_thresholds);
    s.Read("deletion_utterances", &c.analysis.deletion_utterances);
    s.Read("topk", &c.analysis.topk);
    s.Read("saliency_exports", &c.analysis.saliency_exports);
    s.Finish();
  }
  top.Finish();
  c.model.n_mels = c.features.fbank.n_mels;
  c.model.n_speakers = c.corpus.n_speakers;
  c.train.features = c.features;
  c.ApplySeed(seed);
  c.Validate();
  return c;
}

RunConfig LoadRunConfig(const std::string& path) {
  const std::vector<uint8_t> bytes = ReadFileBytes(path);
  try {
    return ParseRunConfig(std::string(bytes.begin(), bytes.end()));
  } catch (const Error& e) {
    Fail(e.kind(), path, ": ", e.what());
  }
}

std::string SerializeRunConfig(const RunConfig& c) {
  json j;
  j["seed"] = c.seed;
  j["paths"] = {{"results", c.results_dir},
                {"ingest", c.ingest_dir},
                {"label_rule", LabelRuleName(c.label_rule)}};
  const auto& k = c.corpus;
  j["corpus"] = {{"n_speakers", k.n_speakers},
                 {"utterances_per_speaker", k.utterances_per_speaker},
                 {"utterance_seconds", k.utterance_seconds},
                 {"noise_clips", k.noise_clips},
                 {"music_clips", k.music_clips},
                 {"speech_clips_per_profile", k.speech_clips_per_profile},
                 {"interference_seconds", k.interference_seconds},
                 {"test_fraction", k.test_fraction},
                 {"test_alpha", {k.test_mix.alpha_min, k.test_mix.alpha_max}},
                 {"ramp_snr_db", k.ramp_snr_db},
                 {"ramp_utterances", k.ramp_utterances}};
  j["features"] = {{"sample_rate", k.sample_rate},
                   {"frame_length", c.features.stft.frame_length},
                   {"hop", c.features.stft.hop},
                   {"window", WindowName(c.features.stft.window)},
                   {"n_mels", c.features.fbank.n_mels},
                   {"floor_db", c.features.fbank.floor_db}};
  j["model"] = {{"stage_channels", c.model.stage_channels},
                {"blocks_per_stage", c.model.blocks_per_stage},
                {"embedding_dim", c.model.embedding_dim},
                {"se_reduction", c.model.se_reduction}};
  j["train"] = {{"epochs", c.train.epochs},
                {"batch_size", c.train.batch_size},
                {"learning_rate", c.train.learning_rate},
                {"momentum", c.train.momentum},
                {"alpha", {c.train.mix.alpha_min, c.train.mix.alpha_max}},
                {"crop_frames", c.train.crop_frames}};
  j["analysis"] = {{"frame_threshold_ratio", c.analysis.frame_threshold_ratio},
                   {"deletion_thresholds", c.analysis.deletion_thresholds},
                   {"deletion_utterances", c.analysis.deletion_utterances},
                   {"topk", c.analysis.topk},
                   {"saliency_exports", c.analysis.saliency_exports}};
  return j.dump(2) + "\n";
}

}  // namespace lcam::experiment
