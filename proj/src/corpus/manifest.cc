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

#include "corpus/manifest.h"

#include <algorithm>
#include <set>
#include <sstream>

#include "base/bytes.h"
#include "base/error.h"
#include "json.hpp"

namespace lcam::corpus {

using nlohmann::json;

namespace {

constexpr const char* kFormatName = "lcam-manifest";
constexpr int kFormatVersion = 1;

template <typename E, std::size_t N>
E ParseEnum(const std::string& text, const E (&values)[N], const char* field) {
  for (E v : values) {
    if (ToString(v) == text) return v;
  }
  Fail(ErrorKind::kFormat, "manifest field '", field, "' has invalid value '",
       text, "'");
}

constexpr RecordKind kKinds[] = {RecordKind::kUtterance, RecordKind::kInterference,
                                 RecordKind::kMixture};
constexpr Split kSplits[] = {Split::kTrain, Split::kTest};
constexpr Scenario kScenarios[] = {Scenario::kClean, Scenario::kPool,
                                   Scenario::kConcat, Scenario::kOverlap,
                                   Scenario::kRamp};
constexpr SourceType kSourceTypes[] = {SourceType::kSynthSpeech,
                                       SourceType::kSynthInterference,
                                       SourceType::kWav};

json SourceToJson(const SourceSpec& s) {
  json j;
  j["type"] = ToString(s.type);
  switch (s.type) {
    case SourceType::kSynthSpeech:
      j["profile"] = s.profile;
      [[fallthrough]];
    case SourceType::kSynthInterference:
      j["seed"] = s.seed;
      j["duration_s"] = s.duration_s;
      break;
    case SourceType::kWav:
      j["path"] = s.path;
      break;
  }
  return j;
}

SourceSpec SourceFromJson(const json& j) {
  SourceSpec s;
  s.type = ParseEnum(j.at("type").get<std::string>(), kSourceTypes, "source.type");
  switch (s.type) {
    case SourceType::kSynthSpeech:
      s.profile = j.at("profile").get<int>();
      [[fallthrough]];
    case SourceType::kSynthInterference:
      s.seed = j.at("seed").get<uint64_t>();
      s.duration_s = j.at("duration_s").get<double>();
      break;
    case SourceType::kWav:
      s.path = j.at("path").get<std::string>();
      break;
  }
  return s;
}

json RecordToJson(const ManifestRecord& r) {
  json j;
  j["key"] = r.key;
  j["kind"] = ToString(r.kind);
  j["split"] = ToString(r.split);
  j["scenario"] = ToString(r.scenario);
  j["interference"] = r.interference ? ToString(*r.interference) : "none";
  if (r.kind != RecordKind::kInterference) {
    j["speaker"] = r.speaker;
    if (!r.speaker_label.empty()) j["speaker_label"] = r.speaker_label;
  }
  if (r.kind == RecordKind::kMixture) {
    j["target"] = r.target;
    j["interferer"] = r.interferer;
    j["alpha"] = r.alpha;
    j["offset"] = r.offset;
    if (r.boundary) j["boundary"] = *r.boundary;
    if (r.scenario == Scenario::kRamp) {
      j["snr_db"] = r.snr_db;
      j["window"] = {r.window_begin, r.window_end};
    }
  } else {
    j["source"] = SourceToJson(r.source);
  }
  return j;
}

ManifestRecord RecordFromJson(const json& j) {
  ManifestRecord r;
  r.key = j.at("key").get<std::string>();
  r.kind = ParseEnum(j.at("kind").get<std::string>(), kKinds, "kind");
  r.split = ParseEnum(j.at("split").get<std::string>(), kSplits, "split");
  r.scenario = ParseEnum(j.at("scenario").get<std::string>(), kScenarios, "scenario");
  const std::string itype = j.at("interference").get<std::string>();
  if (itype != "none") {
    r.interference = ParseInterferenceType(itype);
    LCAM_REQUIRE(r.interference.has_value(), ErrorKind::kFormat,
                 "record '", r.key, "': invalid interference '", itype, "'");
  }
  if (r.kind != RecordKind::kInterference) {
    r.speaker = j.at("speaker").get<int>();
    if (j.contains("speaker_label")) r.speaker_label = j["speaker_label"].get<std::string>();
  }
  if (r.kind == RecordKind::kMixture) {
    r.target = j.at("target").get<std::string>();
    r.interferer = j.at("interferer").get<std::string>();
    r.alpha = j.at("alpha").get<double>();
    r.offset = j.at("offset").get<uint64_t>();
    if (j.contains("boundary")) r.boundary = j["boundary"].get<uint64_t>();
    if (r.scenario == Scenario::kRamp) {
      r.snr_db = j.at("snr_db").get<std::vector<double>>();
      const auto w = j.at("window").get<std::vector<uint64_t>>();
      LCAM_REQUIRE(w.size() == 2, ErrorKind::kFormat, "record '", r.key,
                   "': window needs two entries");
      r.window_begin = w[0];
      r.window_end = w[1];
    }
  } else {
    r.source = SourceFromJson(j.at("source"));
  }
  return r;
}

}  // namespace

std::string ToString(RecordKind v) {
  switch (v) {
    case RecordKind::kUtterance: return "utterance";
    case RecordKind::kInterference: return "interference";
    case RecordKind::kMixture: return "mixture";
  }
  return "?";
}
std::string ToString(Split v) { return v == Split::kTrain ? "train" : "test"; }
std::string ToString(Scenario v) {
  switch (v) {
    case Scenario::kClean: return "clean";
    case Scenario::kPool: return "pool";
    case Scenario::kConcat: return "concat";
    case Scenario::kOverlap: return "overlap";
    case Scenario::kRamp: return "ramp";
  }
  return "?";
}
std::string ToString(SourceType v) {
  switch (v) {
    case SourceType::kSynthSpeech: return "synth_speech";
    case SourceType::kSynthInterference: return "synth_interference";
    case SourceType::kWav: return "wav";
  }
  return "?";
}

void Manifest::Finalize() {
  std::sort(records.begin(), records.end(),
            [](const ManifestRecord& a, const ManifestRecord& b) { return a.key < b.key; });
  for (std::size_t i = 1; i < records.size(); ++i) {
    LCAM_REQUIRE(records[i].key != records[i - 1].key, ErrorKind::kFormat,
                 "duplicate manifest key '", records[i].key, "'");
  }
  LCAM_REQUIRE(n_speakers >= 2, ErrorKind::kFormat,
               "manifest needs at least 2 speakers, has ", n_speakers);
  std::set<int> train_speakers;
  for (const auto& r : records) {
    if (r.kind == RecordKind::kUtterance && r.split == Split::kTrain) {
      train_speakers.insert(r.speaker);
    }
  }
  for (const auto& r : records) {
    const bool concat = r.scenario == Scenario::kConcat;
    LCAM_REQUIRE(concat == r.boundary.has_value(), ErrorKind::kFormat,
                 "record '", r.key, "': segment boundary must be present iff ",
                 "scenario is concat");
    if (r.kind == RecordKind::kInterference) {
      LCAM_REQUIRE(r.interference.has_value() && r.scenario == Scenario::kPool,
                   ErrorKind::kFormat, "interference record '", r.key,
                   "' needs a type and scenario pool");
      continue;
    }
    LCAM_REQUIRE(r.speaker >= 0 && r.speaker < n_speakers, ErrorKind::kFormat,
                 "record '", r.key, "': speaker ", r.speaker, " outside [0, ",
                 n_speakers, ")");
    if (r.split == Split::kTest) {
      LCAM_REQUIRE(train_speakers.count(r.speaker) != 0, ErrorKind::kFormat,
                   "record '", r.key, "': test speaker ", r.speaker,
                   " has no training utterance");
    }
    if (r.kind == RecordKind::kMixture) {
      const ManifestRecord* t = Find(r.target);
      const ManifestRecord* n = Find(r.interferer);
      LCAM_REQUIRE(t && t->kind == RecordKind::kUtterance, ErrorKind::kFormat,
                   "mixture '", r.key, "' references unknown utterance '",
                   r.target, "'");
      LCAM_REQUIRE(n && n->kind == RecordKind::kInterference &&
                       n->interference == r.interference,
                   ErrorKind::kFormat, "mixture '", r.key,
                   "' references unknown or mistyped interference '",
                   r.interferer, "'");
      LCAM_REQUIRE(t->speaker == r.speaker, ErrorKind::kFormat, "mixture '",
                   r.key, "' speaker differs from its target");
    } else {
      LCAM_REQUIRE(r.scenario == Scenario::kClean, ErrorKind::kFormat,
                   "utterance '", r.key, "' must have scenario clean");
    }
  }
}

const ManifestRecord* Manifest::Find(const std::string& key) const {
  auto it = std::lower_bound(
      records.begin(), records.end(), key,
      [](const ManifestRecord& r, const std::string& k) { return r.key < k; });
  if (it == records.end() || it->key != key) return nullptr;
  return &*it;
}

std::string SerializeManifest(const Manifest& m) {
  std::string out;
  json header;
  header["format"] = kFormatName;
  header["version"] = kFormatVersion;
  header["seed"] = m.seed;
  header["sample_rate"] = m.sample_rate;
  header["n_speakers"] = m.n_speakers;
  header["mixture_policy"] = m.mixture_policy;
  header["records"] = m.records.size();
  out += header.dump() + "\n";
  for (const auto& r : m.records) out += RecordToJson(r).dump() + "\n";
  return out;
}

Manifest ParseManifest(const std::string& text) {
  std::istringstream is(text);
  std::string line;
  Manifest m;
  std::size_t line_no = 0;
  std::size_t declared = 0;
  try {
    LCAM_REQUIRE(std::getline(is, line), ErrorKind::kFormat, "empty manifest");
    ++line_no;
    const json header = json::parse(line);
    LCAM_REQUIRE(header.value("format", "") == kFormatName, ErrorKind::kFormat,
                 "not a manifest (missing format header)");
    LCAM_REQUIRE(header.at("version").get<int>() == kFormatVersion,
                 ErrorKind::kFormat, "unsupported manifest version ",
                 header.at("version").get<int>());
    m.seed = header.at("seed").get<uint64_t>();
    m.sample_rate = header.at("sample_rate").get<int>();
    m.n_speakers = header.at("n_speakers").get<int>();
    m.mixture_policy = header.at("mixture_policy").get<std::string>();
    declared = header.at("records").get<std::size_t>();
    while (std::getline(is, line)) {
      ++line_no;
      if (line.empty()) continue;
      m.records.push_back(RecordFromJson(json::parse(line)));
    }
  } catch (const json::exception& e) {
    Fail(ErrorKind::kFormat, "manifest line ", line_no, ": ", e.what());
  }
  LCAM_REQUIRE(m.records.size() == declared, ErrorKind::kFormat,
               "manifest declares ", declared, " records but holds ",
               m.records.size());
  m.Finalize();
  return m;
}

void WriteManifest(const Manifest& manifest, const std::string& path) {
  const std::string text = SerializeManifest(manifest);
  WriteFileBytes(path, text.data(), text.size());
}

Manifest ReadManifest(const std::string& path) {
  const std::vector<uint8_t> bytes = ReadFileBytes(path);
  try {
    return ParseManifest(std::string(bytes.begin(), bytes.end()));
  } catch (const Error& e) {
    Fail(e.kind(), path, ": ", e.what());
  }
}

}  // namespace lcam::corpus
