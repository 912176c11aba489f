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

#include "model/checkpoint.h"

#include <algorithm>
#include <cstring>
#include <map>
#include <sstream>
#include <zlib.h>

#include "base/bytes.h"
#include "base/error.h"

namespace lcam::model {

namespace {

constexpr char kMagic[8] = {'L', 'C', 'A', 'M', 'C', 'K', 'P', 'T'};
// magic + version + empty config + zero sections + crc
constexpr std::size_t kMinSize = 8 + 4 + 4 + 4 + 4;

uint32_t Crc32(const uint8_t* data, std::size_t n) {
  uLong crc = crc32(0L, Z_NULL, 0);
  // zlib takes uInt lengths; feed in chunks for very large buffers.
  while (n > 0) {
    const uInt chunk = static_cast<uInt>(std::min<std::size_t>(n, 1u << 30));
    crc = crc32(crc, data, chunk);
    data += chunk;
    n -= chunk;
  }
  return static_cast<uint32_t>(crc);
}

template <std::size_t N>
std::string JoinInts(const std::array<int, N>& v) {
  std::string s;
  for (std::size_t i = 0; i < N; ++i) {
    if (i) s += ',';
    s += std::to_string(v[i]);
  }
  return s;
}

template <std::size_t N>
std::array<int, N> SplitInts(const std::string& key, const std::string& text) {
  std::array<int, N> out{};
  std::istringstream is(text);
  std::string item;
  std::size_t i = 0;
  while (std::getline(is, item, ',')) {
    LCAM_REQUIRE(i < N, ErrorKind::kFormat, "checkpoint field ", key,
                 " has more than ", N, " entries");
    out[i++] = std::stoi(item);
  }
  LCAM_REQUIRE(i == N, ErrorKind::kFormat, "checkpoint field ", key, " has ",
               i, " entries, expected ", N);
  return out;
}

void ParseConfigText(const std::string& text, ModelConfig* config,
                     TrainingMetadata* meta) {
  std::map<std::string, std::string> kv;
  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto eq = line.find('=');
    LCAM_REQUIRE(eq != std::string::npos, ErrorKind::kFormat,
                 "malformed checkpoint config line '", line, "'");
    kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  auto take = [&](const std::string& key) {
    auto it = kv.find(key);
    LCAM_REQUIRE(it != kv.end(), ErrorKind::kFormat,
                 "checkpoint config lacks '", key, "'");
    std::string v = it->second;
    kv.erase(it);
    return v;
  };
  try {
    config->n_mels = std::stoi(take("model.n_mels"));
    config->stage_channels =
        SplitInts<kNumStages>("model.stage_channels", take("model.stage_channels"));
    config->blocks_per_stage = SplitInts<kNumStages>(
        "model.blocks_per_stage", take("model.blocks_per_stage"));
    config->embedding_dim = std::stoi(take("model.embedding_dim"));
    config->n_speakers = std::stoi(take("model.n_speakers"));
    config->se_reduction = std::stoi(take("model.se_reduction"));
    config->seed = std::stoull(take("model.seed"));
    meta->epochs = std::stoi(take("train.epochs"));
    meta->mode = take("train.mode");
    meta->interference = take("train.interference");
    meta->seed = std::stoull(take("train.seed"));
  } catch (const std::logic_error&) {
    Fail(ErrorKind::kFormat, "unparsable number in checkpoint config");
  }
  LCAM_REQUIRE(kv.empty(), ErrorKind::kFormat, "unknown checkpoint config key '",
               kv.begin()->first, "'");
}

void PutSection(ByteWriter* w, const std::string& name, const ad::Tensor& t) {
  w->Str(name);
  w->U32(static_cast<uint32_t>(t.rank()));
  for (std::size_t d : t.shape()) w->U64(d);
  w->Raw(t.data(), t.size() * sizeof(double));
}

}  // namespace

Checkpoint MakeCheckpoint(const SpeakerNet& net, const TrainingMetadata& meta) {
  return Checkpoint{net.config(), meta, net.parameters(), net.buffers()};
}

SpeakerNet NetFromCheckpoint(Checkpoint checkpoint) {
  return SpeakerNet(checkpoint.config, std::move(checkpoint.parameters),
                    std::move(checkpoint.buffers));
}

std::string CanonicalConfigText(const ModelConfig& c, const TrainingMetadata& m) {
  std::ostringstream os;
  os << "model.n_mels=" << c.n_mels << '\n'
     << "model.stage_channels=" << JoinInts(c.stage_channels) << '\n'
     << "model.blocks_per_stage=" << JoinInts(c.blocks_per_stage) << '\n'
     << "model.embedding_dim=" << c.embedding_dim << '\n'
     << "model.n_speakers=" << c.n_speakers << '\n'
     << "model.se_reduction=" << c.se_reduction << '\n'
     << "model.seed=" << c.seed << '\n'
     << "train.epochs=" << m.epochs << '\n'
     << "train.mode=" << m.mode << '\n'
     << "train.interference=" << m.interference << '\n'
     << "train.seed=" << m.seed << '\n';
  return os.str();
}

std::vector<uint8_t> EncodeCheckpoint(const Checkpoint& ckpt) {
  ByteWriter w;
  w.Raw(kMagic, sizeof kMagic);
  w.U32(kCheckpointVersion);
  w.Str(CanonicalConfigText(ckpt.config, ckpt.metadata));
  w.U32(static_cast<uint32_t>(ckpt.parameters.size() + ckpt.buffers.size()));
  for (const auto& [name, t] : ckpt.parameters) PutSection(&w, "param/" + name, t);
  for (const auto& [name, t] : ckpt.buffers) PutSection(&w, "buffer/" + name, t);
  w.U32(Crc32(w.bytes().data(), w.bytes().size()));
  return std::move(w.bytes());
}

Checkpoint DecodeCheckpoint(const std::vector<uint8_t>& bytes) {
  LCAM_REQUIRE(bytes.size() >= sizeof kMagic &&
                   std::equal(kMagic, kMagic + sizeof kMagic, bytes.begin()),
               ErrorKind::kFormat, "not a checkpoint file (bad magic)");
  LCAM_REQUIRE(bytes.size() >= kMinSize, ErrorKind::kFormat,
               "truncated checkpoint: ", bytes.size(), " bytes");
  ByteReader r(bytes.data(), bytes.size() - 4, "checkpoint");
  char magic[8];
  r.Raw(magic, sizeof magic);
  const uint32_t version = r.U32();
  LCAM_REQUIRE(version == kCheckpointVersion, ErrorKind::kFormat,
               "unsupported checkpoint version ", version, " (this build reads ",
               kCheckpointVersion, ")");

  // The structure is walked before the checksum is compared so that a short
  // file reports truncation rather than a checksum failure.
  Checkpoint ckpt;
  std::vector<std::pair<std::string, ad::Tensor>> sections;
  const std::string config_text = r.Str();
  const uint32_t n_sections = r.U32();
  for (uint32_t i = 0; i < n_sections; ++i) {
    std::string name = r.Str();
    const uint32_t rank = r.U32();
    LCAM_REQUIRE(rank <= 8, ErrorKind::kFormat, "checkpoint section '", name,
                 "' has implausible rank ", rank);
    ad::Shape shape(rank);
    std::size_t numel = 1;
    for (auto& d : shape) {
      d = r.U64();
      LCAM_REQUIRE(d <= r.remaining() / sizeof(double) + 1, ErrorKind::kFormat,
                   "truncated checkpoint: section '", name,
                   "' declares more data than the file holds");
      numel *= d;
    }
    LCAM_REQUIRE(numel * sizeof(double) <= r.remaining(), ErrorKind::kFormat,
                 "truncated checkpoint: section '", name, "' needs ",
                 numel * sizeof(double), " bytes, only ", r.remaining(), " left");
    std::vector<double> data(numel);
    r.Raw(data.data(), numel * sizeof(double));
    sections.emplace_back(std::move(name), ad::Tensor(std::move(shape), std::move(data)));
  }
  LCAM_REQUIRE(r.remaining() == 0, ErrorKind::kFormat, "checkpoint has ",
               r.remaining(), " unexpected trailing bytes");

  uint32_t stored_crc;
  std::memcpy(&stored_crc, bytes.data() + bytes.size() - 4, 4);
  const uint32_t actual_crc = Crc32(bytes.data(), bytes.size() - 4);
  LCAM_REQUIRE(stored_crc == actual_crc, ErrorKind::kFormat,
               "checkpoint checksum mismatch (stored ", stored_crc, ", computed ",
               actual_crc, ")");

  ParseConfigText(config_text, &ckpt.config, &ckpt.metadata);
  for (auto& [name, t] : sections) {
    if (name.rfind("param/", 0) == 0) {
      ckpt.parameters[name.substr(6)] = std::move(t);
    } else if (name.rfind("buffer/", 0) == 0) {
      ckpt.buffers[name.substr(7)] = std::move(t);
    } else {
      Fail(ErrorKind::kFormat, "unknown checkpoint section '", name, "'");
    }
  }
  return ckpt;
}

void SaveCheckpoint(const Checkpoint& checkpoint, const std::string& path) {
  WriteFileBytes(path, EncodeCheckpoint(checkpoint));
}

Checkpoint LoadCheckpoint(const std::string& path) {
  try {
    return DecodeCheckpoint(ReadFileBytes(path));
  } catch (const Error& e) {
    Fail(e.kind(), path, ": ", e.what());
  }
}

void RequireCompatible(const ModelConfig& loaded, int expected_n_mels,
                       int expected_n_speakers) {
  std::string diffs;
  if (expected_n_mels >= 0 && loaded.n_mels != expected_n_mels) {
    diffs += " n_mels: checkpoint " + std::to_string(loaded.n_mels) +
             ", expected " + std::to_string(expected_n_mels) + ";";
  }
  if (expected_n_speakers >= 0 && loaded.n_speakers != expected_n_speakers) {
    diffs += " n_speakers: checkpoint " + std::to_string(loaded.n_speakers) +
             ", expected " + std::to_string(expected_n_speakers) + ";";
  }
  LCAM_REQUIRE(diffs.empty(), ErrorKind::kConfig, "checkpoint config mismatch:",
               diffs);
}

}  // namespace lcam::model
