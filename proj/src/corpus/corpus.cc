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

#include "corpus/corpus.h"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <set>

#include "base/error.h"
#include "base/rng.h"

namespace lcam::corpus {

namespace fs = std::filesystem;

namespace {

constexpr uint64_t kHashBuckets = 10000;

std::string Pad(int value, int width) {
  std::string s = std::to_string(value);
  return std::string(std::max(0, width - static_cast<int>(s.size())), '0') + s;
}

std::size_t SamplesFor(double seconds, int sample_rate) {
  return static_cast<std::size_t>(std::llround(seconds * sample_rate));
}

std::size_t SourceLength(const SourceSpec& s, int sample_rate) {
  if (s.type == SourceType::kWav) return dsp::ReadWav(s.path).size();
  return SamplesFor(s.type == SourceType::kSynthSpeech ? std::max(s.duration_s, 0.5)
                                                        : s.duration_s,
                    sample_rate);
}

}  // namespace

void CorpusConfig::Validate() const {
  LCAM_REQUIRE(sample_rate > 0, ErrorKind::kConfig,
               "corpus.sample_rate must be positive");
  LCAM_REQUIRE(n_speakers >= 2, ErrorKind::kConfig,
               "corpus.n_speakers must be >= 2, got ", n_speakers);
  LCAM_REQUIRE(utterances_per_speaker >= 2, ErrorKind::kConfig,
               "corpus.utterances_per_speaker must be >= 2");
  LCAM_REQUIRE(utterance_seconds >= 0.5, ErrorKind::kConfig,
               "corpus.utterance_seconds must be >= 0.5");
  LCAM_REQUIRE(noise_clips >= 2 && music_clips >= 2 && speech_clips_per_profile >= 1,
               ErrorKind::kConfig, "corpus interference pools are too small");
  LCAM_REQUIRE(interference_seconds >= 0.5, ErrorKind::kConfig,
               "corpus.interference_seconds must be >= 0.5");
  LCAM_REQUIRE(test_fraction > 0.0 && test_fraction < 1.0, ErrorKind::kConfig,
               "corpus.test_fraction must lie in (0, 1)");
  LCAM_REQUIRE(ramp_utterances >= 0, ErrorKind::kConfig,
               "corpus.ramp_utterances must be >= 0");
  test_mix.Validate();
}

Split HashSplit(const std::string& key, double test_fraction) {
  const uint64_t bucket = MixSeed(Fnv1a(key), 0) % kHashBuckets;
  return bucket < static_cast<uint64_t>(test_fraction * kHashBuckets) ? Split::kTest
                                                                      : Split::kTrain;
}

Manifest BuildSyntheticManifest(const CorpusConfig& config) {
  config.Validate();
  Manifest m;
  m.seed = config.seed;
  m.sample_rate = config.sample_rate;
  m.n_speakers = config.n_speakers;
  for (int s = 0; s < config.n_speakers; ++s) {
    for (int u = 0; u < config.utterances_per_speaker; ++u) {
      ManifestRecord r;
      r.key = "utt/spk" + Pad(s, 3) + "/" + Pad(u, 3);
      r.kind = RecordKind::kUtterance;
      r.speaker = s;
      r.speaker_label = "spk" + Pad(s, 3);
      r.split = HashSplit(r.key, config.test_fraction);
      r.scenario = Scenario::kClean;
      r.source.type = SourceType::kSynthSpeech;
      r.source.profile = s;
      r.source.seed = MixSeed(config.seed, 0x0770ULL, static_cast<uint64_t>(s) * 100000 + u);
      r.source.duration_s = config.utterance_seconds;
      m.records.push_back(std::move(r));
    }
  }
  // Guarantee the closed-set property for tiny configurations.
  for (int s = 0; s < config.n_speakers; ++s) {
    auto is_train = [&](const ManifestRecord& r) {
      return r.speaker == s && r.split == Split::kTrain;
    };
    if (std::none_of(m.records.begin(), m.records.end(), is_train)) {
      for (auto& r : m.records) {
        if (r.speaker == s) {
          r.split = Split::kTrain;
          break;
        }
      }
    }
  }
  AddInterferenceScenarios(config, &m);
  return m;
}

void AddInterferenceScenarios(const CorpusConfig& config, Manifest* m) {
  config.Validate();
  auto add_clip = [&](InterferenceType type, const std::string& key, uint64_t seed) {
    ManifestRecord r;
    r.key = key;
    r.kind = RecordKind::kInterference;
    r.split = HashSplit(key, config.test_fraction);
    r.scenario = Scenario::kPool;
    r.interference = type;
    r.source.type = SourceType::kSynthInterference;
    r.source.seed = seed;
    r.source.duration_s = config.interference_seconds;
    m->records.push_back(std::move(r));
  };
  for (int i = 0; i < config.noise_clips; ++i) {
    add_clip(InterferenceType::kNoise, "pool/noise/" + Pad(i, 3),
             MixSeed(config.seed, 0x401eULL, i));
  }
  for (int i = 0; i < config.music_clips; ++i) {
    add_clip(InterferenceType::kMusic, "pool/music/" + Pad(i, 3),
             MixSeed(config.seed, 0x3051cULL, i));
  }
  for (int p = 0; p < kNumInterfererProfiles; ++p) {
    for (int i = 0; i < config.speech_clips_per_profile; ++i) {
      // SynthInterference picks the talker from seed mod the profile count.
      const uint64_t base = MixSeed(config.seed, 0x5eec4ULL, p * 1000 + i);
      const uint64_t seed = base - base % kNumInterfererProfiles + p;
      add_clip(InterferenceType::kSpeech,
               "pool/speech/p" + std::to_string(p) + "-" + Pad(i, 3), seed);
    }
  }
  // Each pool needs at least one clip on each side of the split.
  for (InterferenceType type : kAllInterferenceTypes) {
    for (Split split : {Split::kTrain, Split::kTest}) {
      const bool any = std::any_of(m->records.begin(), m->records.end(),
                                   [&](const ManifestRecord& r) {
                                     return r.interference == type &&
                                            r.kind == RecordKind::kInterference &&
                                            r.split == split;
                                   });
      if (!any) {
        for (auto& r : m->records) {
          if (r.kind == RecordKind::kInterference && r.interference == type) {
            r.split = split;
            break;
          }
        }
      }
    }
  }

  std::vector<ManifestRecord> tests;
  for (const auto& r : m->records) {
    if (r.kind == RecordKind::kUtterance && r.split == Split::kTest) tests.push_back(r);
  }
  std::sort(tests.begin(), tests.end(),
            [](const ManifestRecord& a, const ManifestRecord& b) { return a.key < b.key; });

  std::vector<ManifestRecord> mixtures;
  for (InterferenceType type : kAllInterferenceTypes) {
    std::vector<const ManifestRecord*> pool;
    for (const auto& r : m->records) {
      if (r.kind == RecordKind::kInterference && r.interference == type &&
          r.split == Split::kTest) {
        pool.push_back(&r);
      }
    }
    std::sort(pool.begin(), pool.end(),
              [](const ManifestRecord* a, const ManifestRecord* b) { return a->key < b->key; });
    const std::string tname = ToString(type);
    int ramp_left = type == InterferenceType::kNoise ? config.ramp_utterances : 0;
    for (const ManifestRecord& t : tests) {
      const std::size_t target_len = SourceLength(t.source, config.sample_rate);
      const std::string suffix = t.key.substr(4);  // drop the "utt/" or "wav/" prefix
      for (Scenario sc : {Scenario::kOverlap, Scenario::kConcat}) {
        ManifestRecord r;
        r.key = "mix/" + ToString(sc) + "/" + tname + "/" + suffix;
        r.kind = RecordKind::kMixture;
        r.speaker = t.speaker;
        r.speaker_label = t.speaker_label;
        r.split = Split::kTest;
        r.scenario = sc;
        r.interference = type;
        r.target = t.key;
        Rng rng(MixSeed(config.seed, Fnv1a(r.key)));
        const ManifestRecord& clip = *pool[rng.Index(pool.size())];
        r.interferer = clip.key;
        r.alpha = augment::SampleAlpha(config.test_mix, rng);
        r.offset = augment::SampleOffset(SourceLength(clip.source, config.sample_rate),
                                         target_len, rng);
        if (sc == Scenario::kConcat) r.boundary = target_len;
        mixtures.push_back(std::move(r));
      }
      if (ramp_left > 0) {
        --ramp_left;
        ManifestRecord r;
        r.key = "mix/ramp/" + tname + "/" + suffix;
        r.kind = RecordKind::kMixture;
        r.speaker = t.speaker;
        r.speaker_label = t.speaker_label;
        r.split = Split::kTest;
        r.scenario = Scenario::kRamp;
        r.interference = type;
        r.target = t.key;
        r.interferer = pool.front()->key;
        r.snr_db = config.ramp_snr_db;
        r.window_begin = target_len / 4;
        r.window_end = target_len - target_len / 4;
        mixtures.push_back(std::move(r));
      }
    }
  }
  for (auto& r : mixtures) m->records.push_back(std::move(r));
  m->mixture_policy =
      "test mixtures: interference gain alpha ~ Uniform(" +
      std::to_string(config.test_mix.alpha_min) + ", " +
      std::to_string(config.test_mix.alpha_max) +
      ") applied to the raw clip; clip cut at a uniform random offset to the "
      "target length; concat appends the scaled clip after the target";
  m->Finalize();
}

IngestResult IngestWav(const std::string& directory, LabelRule rule,
                       const CorpusConfig& config) {
  LCAM_REQUIRE(fs::is_directory(directory), ErrorKind::kIo, "'", directory,
               "' is not a directory");
  std::vector<fs::path> files;
  for (const auto& entry : fs::recursive_directory_iterator(directory)) {
    if (!entry.is_regular_file()) continue;
    std::string ext = entry.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), ::tolower);
    if (ext == ".wav") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());

  IngestResult result;
  struct Candidate {
    std::string rel;
    std::string label;
    std::string path;
  };
  std::vector<Candidate> usable;
  for (const fs::path& f : files) {
    const std::string rel = fs::relative(f, directory).generic_string();
    std::string label;
    if (rule == LabelRule::kParentDirectory) {
      const fs::path parent = fs::path(rel).parent_path();
      label = parent.empty() ? "" : parent.filename().string();
    } else {
      const std::string stem = f.stem().string();
      const auto cut = stem.find_first_of("_-");
      label = cut == std::string::npos ? "" : stem.substr(0, cut);
    }
    if (label.empty()) {
      result.rejects.emplace_back(rel, "labeling rule yields no speaker label");
      continue;
    }
    try {
      const dsp::Waveform w = dsp::ReadWav(f.string());
      if (w.sample_rate != config.sample_rate) {
        result.rejects.emplace_back(rel, "sample rate " + std::to_string(w.sample_rate) +
                                             " Hz, expected " +
                                             std::to_string(config.sample_rate));
        continue;
      }
      if (w.size() < 400) {
        result.rejects.emplace_back(rel, "shorter than one analysis frame");
        continue;
      }
    } catch (const Error& e) {
      result.rejects.emplace_back(rel, e.what());
      continue;
    }
    usable.push_back({rel, label, fs::absolute(f).lexically_normal().string()});
  }
  LCAM_REQUIRE(!usable.empty(), ErrorKind::kInvalidArgument, "no usable audio in '",
               directory, "' (", result.rejects.size(), " files rejected)");

  std::set<std::string> labels;
  for (const auto& c : usable) labels.insert(c.label);
  std::map<std::string, int> ids;
  for (const auto& l : labels) ids.emplace(l, static_cast<int>(ids.size()));
  LCAM_REQUIRE(ids.size() >= 2, ErrorKind::kInvalidArgument,
               "ingest found only one speaker label in '", directory, "'");

  Manifest& m = result.manifest;
  m.seed = config.seed;
  m.sample_rate = config.sample_rate;
  m.n_speakers = static_cast<int>(ids.size());
  std::map<int, std::pair<uint64_t, std::size_t>> lowest;  // speaker -> (hash, index)
  for (const auto& c : usable) {
    ManifestRecord r;
    r.key = "wav/" + c.rel;
    r.kind = RecordKind::kUtterance;
    r.speaker = ids.at(c.label);
    r.speaker_label = c.label;
    r.split = HashSplit(c.rel, config.test_fraction);
    r.scenario = Scenario::kClean;
    r.source.type = SourceType::kWav;
    r.source.path = c.path;
    const uint64_t h = Fnv1a(c.rel);
    auto it = lowest.find(r.speaker);
    if (it == lowest.end() || h < it->second.first) {
      lowest[r.speaker] = {h, m.records.size()};
    }
    m.records.push_back(std::move(r));
  }
  for (const auto& [speaker, entry] : lowest) {
    const bool has_train =
        std::any_of(m.records.begin(), m.records.end(), [&](const ManifestRecord& r) {
          return r.speaker == speaker && r.split == Split::kTrain;
        });
    if (!has_train) m.records[entry.second].split = Split::kTrain;
  }
  AddInterferenceScenarios(config, &m);
  return result;
}

Corpus::Corpus(Manifest manifest) : manifest_(std::move(manifest)) {
  manifest_.Finalize();
}

const ManifestRecord& Corpus::Record(const std::string& key) const {
  const ManifestRecord* r = manifest_.Find(key);
  LCAM_REQUIRE(r != nullptr, ErrorKind::kInvalidArgument, "no manifest record '",
               key, "'");
  return *r;
}

const dsp::Waveform& Corpus::Source(const ManifestRecord& r) {
  if (r.kind == RecordKind::kInterference) ++reads_[*r.interference];
  auto it = cache_.find(r.key);
  if (it != cache_.end()) return *it->second;
  dsp::Waveform w;
  switch (r.source.type) {
    case SourceType::kSynthSpeech:
      w = SynthUtterance(MakeProfile(r.source.profile, manifest_.seed),
                         r.source.duration_s, r.source.seed, manifest_.sample_rate);
      break;
    case SourceType::kSynthInterference:
      w = SynthInterference(*r.interference, r.source.duration_s, r.source.seed,
                            manifest_.seed, manifest_.sample_rate);
      break;
    case SourceType::kWav:
      w = dsp::ReadWav(r.source.path);
      break;
  }
  auto ptr = std::make_shared<const dsp::Waveform>(std::move(w));
  cache_[r.key] = ptr;
  return *ptr;
}

dsp::Waveform Corpus::Wave(const std::string& key) {
  const ManifestRecord& r = Record(key);
  if (r.kind != RecordKind::kMixture) return Source(r);
  const dsp::Waveform& target = Source(Record(r.target));
  if (r.scenario == Scenario::kRamp) return target;
  const dsp::Waveform& clip = Source(Record(r.interferer));
  if (r.scenario == Scenario::kOverlap) {
    return augment::Mix(target, clip, r.alpha, r.offset);
  }
  dsp::Waveform scaled{augment::FitToLength(clip.samples, target.size(), r.offset),
                       clip.sample_rate};
  for (double& v : scaled.samples) v *= r.alpha;
  return BuildConcat(target, scaled).wave;
}

ConcatResult Corpus::Concat(const std::string& key) {
  const ManifestRecord& r = Record(key);
  LCAM_REQUIRE(r.scenario == Scenario::kConcat, ErrorKind::kInvalidArgument,
               "record '", key, "' is not a concat mixture");
  ConcatResult out;
  out.wave = Wave(key);
  out.boundary = *r.boundary;
  out.labels = FrameLabels(out.wave.size(), out.boundary);
  return out;
}

std::vector<dsp::Waveform> Corpus::Ramp(const std::string& key) {
  const ManifestRecord& r = Record(key);
  LCAM_REQUIRE(r.scenario == Scenario::kRamp, ErrorKind::kInvalidArgument,
               "record '", key, "' is not a ramp mixture");
  const dsp::Waveform target = Source(Record(r.target));
  const dsp::Waveform clip = Source(Record(r.interferer));
  return BuildRamp(target, clip, r.snr_db, r.window_begin, r.window_end);
}

std::vector<const ManifestRecord*> Corpus::Select(
    const std::function<bool(const ManifestRecord&)>& pred) const {
  std::vector<const ManifestRecord*> out;
  for (const auto& r : manifest_.records) {
    if (pred(r)) out.push_back(&r);
  }
  return out;
}

std::vector<const ManifestRecord*> Corpus::Utterances(Split split) const {
  return Select([&](const ManifestRecord& r) {
    return r.kind == RecordKind::kUtterance && r.split == split;
  });
}

std::vector<const ManifestRecord*> Corpus::InterferencePool(InterferenceType type,
                                                            Split split) const {
  return Select([&](const ManifestRecord& r) {
    return r.kind == RecordKind::kInterference && r.interference == type &&
           r.split == split;
  });
}

int64_t Corpus::interference_reads(InterferenceType type) const {
  auto it = reads_.find(type);
  return it == reads_.end() ? 0 : it->second;
}

int64_t Corpus::interference_reads() const {
  int64_t total = 0;
  for (const auto& [type, n] : reads_) total += n;
  return total;
}

}  // namespace lcam::corpus
