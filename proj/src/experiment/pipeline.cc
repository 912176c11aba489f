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

#include "experiment/pipeline.h"

#include <fcntl.h>
#include <signal.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "analysis/analysis.h"
#include "base/bytes.h"
#include "base/error.h"
#include "dsp/fbank.h"
#include "json.hpp"
#include "layercam/layercam.h"

#ifndef LCAM_VERSION_STRING
#define LCAM_VERSION_STRING "0.0.0"
#endif

namespace lcam::experiment {

namespace fs = std::filesystem;
using corpus::InterferenceType;
using corpus::ManifestRecord;
using nlohmann::json;

std::string ToolVersion() { return LCAM_VERSION_STRING; }

std::string ModelId::Name() const {
  if (mode == augment::TrainMode::kBase) return "base";
  return augment::ToString(mode) + "-" + corpus::ToString(*interference);
}

ModelId MakeModelId(augment::TrainMode mode,
                    std::optional<InterferenceType> interference) {
  if (mode == augment::TrainMode::kBase) return {mode, std::nullopt};
  LCAM_REQUIRE(interference.has_value(), ErrorKind::kConfig, "mode ",
               augment::ToString(mode), " needs an interference type");
  return {mode, interference};
}

std::vector<ModelId> ModelsFor(InterferenceType type) {
  return {MakeModelId(augment::TrainMode::kBase, std::nullopt),
          MakeModelId(augment::TrainMode::kVanillaDa, type),
          MakeModelId(augment::TrainMode::kActDa, type)};
}

std::vector<ModelId> AllModels() {
  std::vector<ModelId> ids = {MakeModelId(augment::TrainMode::kBase, std::nullopt)};
  for (InterferenceType t : corpus::kAllInterferenceTypes) {
    ids.push_back(MakeModelId(augment::TrainMode::kVanillaDa, t));
    ids.push_back(MakeModelId(augment::TrainMode::kActDa, t));
  }
  return ids;
}

// ---------------------------------------------------------------------------
// Result tables

namespace {

constexpr char kCsvHeader[] = "condition,model,metric,value";

std::string FormatValue(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

void RequirePlainField(const std::string& s) {
  LCAM_REQUIRE(!s.empty() && s.find_first_of(",\n\r\"") == std::string::npos,
               ErrorKind::kInvalidArgument, "table field '", s,
               "' must be non-empty without commas, quotes or newlines");
}

}  // namespace

void ResultTable::Add(std::string condition, std::string model, std::string metric,
                      double value) {
  RequirePlainField(condition);
  RequirePlainField(model);
  RequirePlainField(metric);
  rows_.push_back({std::move(condition), std::move(model), std::move(metric), value});
}

std::optional<double> ResultTable::Find(const std::string& condition,
                                        const std::string& model,
                                        const std::string& metric) const {
  for (const TableRow& r : rows_) {
    if (r.condition == condition && r.model == model && r.metric == metric) {
      return r.value;
    }
  }
  return std::nullopt;
}

std::string ResultTable::ToCsv() const {
  std::string out = std::string(kCsvHeader) + "\n";
  for (const TableRow& r : rows_) {
    out += r.condition + "," + r.model + "," + r.metric + "," + FormatValue(r.value) + "\n";
  }
  return out;
}

ResultTable ResultTable::FromCsv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  LCAM_REQUIRE(std::getline(in, line) && line == kCsvHeader, ErrorKind::kFormat,
               "result table must start with '", kCsvHeader, "'");
  ResultTable table;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::size_t start = 0;
    for (std::size_t pos; (pos = line.find(',', start)) != std::string::npos;
         start = pos + 1) {
      f.push_back(line.substr(start, pos - start));
    }
    f.push_back(line.substr(start));
    LCAM_REQUIRE(f.size() == 4, ErrorKind::kFormat, "result table line ", line_no,
                 " has ", f.size(), " fields, expected 4");
    char* end = nullptr;
    const double v = std::strtod(f[3].c_str(), &end);
    LCAM_REQUIRE(end != f[3].c_str() && *end == '\0', ErrorKind::kFormat,
                 "result table line ", line_no, ": bad value '", f[3], "'");
    table.Add(f[0], f[1], f[2], v);
  }
  return table;
}

std::optional<ExportFormat> ParseExportFormat(const std::string& text) {
  if (text == "grid") return ExportFormat::kGrid;
  if (text == "pgm") return ExportFormat::kPgm;
  if (text == "csv") return ExportFormat::kCsv;
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Trend checks

namespace {

std::string Cond(const char* scenario, InterferenceType t) {
  return std::string(scenario) + "-" + corpus::ToString(t);
}

class Checker {
 public:
  explicit Checker(std::vector<TrendCheck>* out) : out_(out) {}

  // Records a comparison of two table entries; a missing entry fails.
  void Compare(const std::string& criterion, const std::string& name,
               const ResultTable* table, const std::string& cond,
               const std::string& lhs_model, const char* op, const std::string& rhs_model,
               const std::string& metric, double margin = 0.0) {
    const std::optional<double> a = Lookup(table, cond, lhs_model, metric);
    const std::optional<double> b = Lookup(table, cond, rhs_model, metric);
    if (!a || !b) {
      Missing(criterion, name, cond, !a ? lhs_model : rhs_model, metric);
      return;
    }
    const double rhs = *b + margin;
    bool ok = false;
    const std::string o = op;
    if (o == "<") ok = *a < rhs;
    if (o == "<=") ok = *a <= rhs;
    if (o == ">") ok = *a > rhs;
    if (o == ">=") ok = *a >= rhs;
    if (o == "==") ok = *a == rhs;
    std::string detail = lhs_model + " " + FormatValue(*a) + " " + o + " " + rhs_model +
                         " " + FormatValue(*b);
    if (margin != 0.0) detail += (margin > 0 ? " + " : " - ") + FormatValue(std::fabs(margin));
    out_->push_back({criterion, name, ok, cond + ": " + detail});
  }

  void Bound(const std::string& criterion, const std::string& name,
             const ResultTable* table, const std::string& cond, const std::string& model,
             const std::string& metric, const char* op, double bound) {
    const std::optional<double> a = Lookup(table, cond, model, metric);
    if (!a) {
      Missing(criterion, name, cond, model, metric);
      return;
    }
    const std::string o = op;
    const bool ok = o == ">=" ? *a >= bound : o == "==" ? *a == bound : false;
    out_->push_back({criterion, name, ok,
                     cond + ": " + model + " " + metric + " " + FormatValue(*a) + " " + o +
                         " " + FormatValue(bound)});
  }

  void Equal(const std::string& criterion, const std::string& name,
             std::optional<double> a, std::optional<double> b, const std::string& what) {
    if (!a || !b) {
      out_->push_back({criterion, name, false, what + ": missing entry"});
      return;
    }
    out_->push_back({criterion, name, *a == *b,
                     what + ": " + FormatValue(*a) + " == " + FormatValue(*b)});
  }

 private:
  static std::optional<double> Lookup(const ResultTable* table, const std::string& cond,
                                      const std::string& model, const std::string& metric) {
    if (table == nullptr) return std::nullopt;
    return table->Find(cond, model, metric);
  }

  void Missing(const std::string& criterion, const std::string& name,
               const std::string& cond, const std::string& model,
               const std::string& metric) {
    out_->push_back({criterion, name, false,
                     "missing entry " + cond + "/" + model + "/" + metric});
  }

  std::vector<TrendCheck>* out_;
};

}  // namespace

std::vector<TrendCheck> CheckTrends(const TrendTables& tables) {
  std::vector<TrendCheck> checks;
  Checker c(&checks);
  const std::string speech = corpus::ToString(InterferenceType::kSpeech);

  c.Bound("4a", "base clean top-1 >= 0.90", tables.topk, "clean", "base", "top1", ">=",
          0.90);
  for (InterferenceType t : corpus::kAllInterferenceTypes) {
    const ModelId v = MakeModelId(augment::TrainMode::kVanillaDa, t);
    c.Compare("4b", "vanilla DA gains >= 15 points on " + corpus::ToString(t), tables.topk,
              Cond("overlap", t), v.Name(), ">=", "base", "top1", 0.15 - 1e-12);
  }
  c.Compare("4c", "act DA >= vanilla DA on speech (1 point tie)", tables.topk,
            "overlap-" + speech, "act_da-" + speech, ">=", "vanilla_da-" + speech, "top1",
            -0.01 - 1e-12);

  for (InterferenceType t : corpus::kAllInterferenceTypes) {
    const std::string cond = Cond("concat", t);
    const std::string name = corpus::ToString(t);
    c.Compare("5", "IPR vanilla < base on " + name, tables.spr_ipr, cond,
              "vanilla_da-" + name, "<", "base", "ipr");
    c.Compare("5", "IPR act < base on " + name, tables.spr_ipr, cond, "act_da-" + name,
              "<", "base", "ipr");
    for (const ModelId& id : ModelsFor(t)) {
      c.Bound("5", "SPR >= 0.8 for " + id.Name() + " on " + name, tables.spr_ipr, cond,
              id.Name(), "spr", ">=", 0.8);
    }
  }
  c.Compare("5", "IPR act <= vanilla on speech", tables.spr_ipr, "concat-" + speech,
            "act_da-" + speech, "<=", "vanilla_da-" + speech, "ipr");

  for (InterferenceType t : corpus::kAllInterferenceTypes) {
    const std::string cond = Cond("overlap", t);
    const std::string name = corpus::ToString(t);
    c.Compare("6", "base-masked SNR > noisy on " + name, tables.denoise, cond, "base", ">",
              "noisy", "snr_db");
    c.Compare("6", "vanilla-masked SNR > base-masked on " + name, tables.denoise, cond,
              "vanilla_da-" + name, ">", "base", "snr_db");
    c.Compare("6", "act-masked SNR > base-masked on " + name, tables.denoise, cond,
              "act_da-" + name, ">", "base", "snr_db");
  }
  c.Compare("6", "act-masked SNR >= vanilla-masked on speech", tables.denoise,
            "overlap-" + speech, "act_da-" + speech, ">=", "vanilla_da-" + speech, "snr_db");

  for (InterferenceType t : corpus::kAllInterferenceTypes) {
    const std::string cond = Cond("overlap", t);
    const std::string name = corpus::ToString(t);
    c.Compare("7", "AUC vanilla < base on " + name, tables.deletion, cond,
              "vanilla_da-" + name, "<", "base", "auc");
    c.Compare("7", "AUC act < base on " + name, tables.deletion, cond, "act_da-" + name,
              "<", "base", "auc");
    const ResultTable* d = tables.deletion;
    for (const ModelId& id : ModelsFor(t)) {
      const auto find = [&](const std::string& model, const std::string& metric) {
        return d ? d->Find(cond, model, metric) : std::nullopt;
      };
      c.Equal("7", "theta=0 top-1 equals unmasked judge for " + id.Name() + " on " + name,
              find(id.Name(), "top1_at_zero"), find("judge", "unmasked_top1"), cond);
      c.Bound("7", "masked sets nested for " + id.Name() + " on " + name, d, cond,
              id.Name(), "sets_nested", "==", 1.0);
    }
    // With the whole test set in the deletion test, the judge's unmasked
    // accuracy is exactly the clean top-1 reported by eval.
    if (d && d->Find(cond, "judge", "full_test_set") == 1.0) {
      c.Equal("7", "unmasked judge equals eval clean top-1 on " + name,
              d->Find(cond, "judge", "unmasked_top1"),
              tables.topk ? tables.topk->Find("clean", "base", "top1") : std::nullopt,
              cond);
    }
  }
  return checks;
}

// ---------------------------------------------------------------------------
// Results directory lock

namespace {

std::string AcquireLock(const std::string& dir) {
  const std::string path = dir + "/.lock";
  for (int attempt = 0; attempt < 2; ++attempt) {
    const int fd = ::open(path.c_str(), O_WRONLY | O_CREAT | O_EXCL, 0644);
    if (fd >= 0) {
      const std::string pid = std::to_string(::getpid()) + "\n";
      const bool wrote = ::write(fd, pid.data(), pid.size()) ==
                         static_cast<ssize_t>(pid.size());
      ::close(fd);
      LCAM_REQUIRE(wrote, ErrorKind::kIo, "cannot write lock file ", path);
      return path;
    }
    LCAM_REQUIRE(errno == EEXIST, ErrorKind::kIo, "cannot create lock file ", path, ": ",
                 std::strerror(errno));
    long owner = 0;
    std::ifstream(path) >> owner;
    if (owner > 0 && (::kill(static_cast<pid_t>(owner), 0) == 0 || errno == EPERM)) {
      Fail(ErrorKind::kRuntime, "results directory ", dir, " is locked by process ",
           owner);
    }
    // The owner is gone; the lock is stale.
    ::unlink(path.c_str());
  }
  Fail(ErrorKind::kRuntime, "cannot lock results directory ", dir);
}

void WriteText(const std::string& path, const std::string& text) {
  WriteFileBytes(path, text.data(), text.size());
}

std::string ReadText(const std::string& path) {
  const std::vector<uint8_t> b = ReadFileBytes(path);
  return std::string(b.begin(), b.end());
}

// Writes `text` to `path`, or checks that an existing file already holds it.
void WriteOrVerify(const std::string& path, const std::string& text) {
  if (fs::exists(path)) {
    LCAM_REQUIRE(ReadText(path) == text, ErrorKind::kConfig, "results directory holds ",
                 path, " from a different config or seed; use a fresh --out");
    return;
  }
  WriteText(path, text);
}

json TableJson(const ResultTable& table) {
  json j = json::object();
  for (const TableRow& r : table.rows()) j[r.condition][r.model][r.metric] = r.value;
  return j;
}

std::string KeyStem(const std::string& key, const std::string& prefix) {
  std::string s = key.rfind(prefix, 0) == 0 ? key.substr(prefix.size()) : key;
  for (char& ch : s) {
    if (ch == '/' || ch == '\\') ch = '_';
  }
  return s;
}

std::string SnrTag(double snr) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "snr%+g", snr);
  return buf;
}

std::string ThetaTag(double theta) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", theta);
  return buf;
}

// Fused saliency for many utterances, batched like analysis::ClassifyAll.
std::vector<layercam::SaliencyMap> SaliencyAll(
    const model::SpeakerNet& net, const std::vector<const dsp::FbankMatrix*>& inputs,
    const std::vector<int>& classes) {
  std::vector<layercam::SaliencyMap> out;
  out.reserve(inputs.size());
  std::size_t i = 0;
  while (i < inputs.size()) {
    std::size_t j = i + 1;
    while (j < inputs.size() && j - i < analysis::kEvalBatch &&
           inputs[j]->values.SameShape(inputs[i]->values)) {
      ++j;
    }
    const std::vector<const dsp::FbankMatrix*> chunk(inputs.begin() + i,
                                                     inputs.begin() + j);
    const std::vector<int> chunk_classes(classes.begin() + i, classes.begin() + j);
    for (auto& r : layercam::FusedSaliencyBatch(net, chunk, chunk_classes)) {
      out.push_back(std::move(r.fused));
    }
    i = j;
  }
  return out;
}

std::string GridCsv(const Grid& g) {
  std::string out;
  for (std::size_t r = 0; r < g.rows(); ++r) {
    for (std::size_t c = 0; c < g.cols(); ++c) {
      if (c) out += ',';
      out += FormatValue(g(r, c));
    }
    out += '\n';
  }
  return out;
}

double Seconds(std::chrono::steady_clock::time_point since) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - since).count();
}

}  // namespace

// ---------------------------------------------------------------------------
// Experiment

struct Experiment::Cache {
  std::unique_ptr<corpus::Corpus> data;
  std::map<std::string, dsp::FbankMatrix> features;
  std::map<std::string, std::vector<corpus::SegmentLabel>> labels;
  std::map<std::string, std::unique_ptr<model::SpeakerNet>> nets;
};

Experiment::Experiment(RunConfig config, LogSink log)
    : config_(std::move(config)), log_(std::move(log)), cache_(std::make_unique<Cache>()) {
  config_.Validate();
  if (!config_.ingest_dir.empty()) {
    LCAM_REQUIRE(fs::is_directory(config_.ingest_dir), ErrorKind::kConfig,
                 "config field 'paths.ingest' names a missing directory: ",
                 config_.ingest_dir);
  }
  std::error_code ec;
  fs::create_directories(config_.results_dir, ec);
  LCAM_REQUIRE(!ec && fs::is_directory(config_.results_dir), ErrorKind::kIo,
               "cannot create results directory ", config_.results_dir);
  lock_path_ = AcquireLock(config_.results_dir);
  try {
    const std::string config_text = SerializeRunConfig(config_);
    json provenance = {{"tool", "lcam"},
                       {"version", ToolVersion()},
                       {"seed", config_.seed},
                       {"config", json::parse(config_text)}};
    WriteOrVerify(config_.results_dir + "/provenance.json", provenance.dump(2) + "\n");
    WriteOrVerify(config_.results_dir + "/config.json", config_text);
  } catch (...) {
    ::unlink(lock_path_.c_str());
    throw;
  }
}

Experiment::~Experiment() { ::unlink(lock_path_.c_str()); }

void Experiment::Log(const std::string& line) const {
  if (log_) log_(line);
}

std::string Experiment::CheckpointPath(const ModelId& id) const {
  return config_.results_dir + "/checkpoints/" + id.Name() + ".ckpt";
}

const corpus::Manifest& Experiment::BuildCorpus() {
  if (cache_->data) return cache_->data->manifest();
  const std::string dir = config_.results_dir + "/corpus";
  const std::string path = dir + "/manifest.jsonl";
  corpus::Manifest manifest;
  if (fs::exists(path)) {
    manifest = corpus::ReadManifest(path);
  } else {
    fs::create_directories(dir);
    if (config_.ingest_dir.empty()) {
      manifest = corpus::BuildSyntheticManifest(config_.corpus);
    } else {
      corpus::IngestResult ingest =
          corpus::IngestWav(config_.ingest_dir, config_.label_rule, config_.corpus);
      std::string rejects = "path\treason\n";
      for (const auto& [file, reason] : ingest.rejects) rejects += file + "\t" + reason + "\n";
      WriteText(dir + "/rejects.tsv", rejects);
      if (!ingest.rejects.empty()) {
        Log("ingest rejected " + std::to_string(ingest.rejects.size()) +
            " files, see corpus/rejects.tsv");
      }
      manifest = std::move(ingest.manifest);
    }
    corpus::WriteManifest(manifest, path);
  }
  cache_->data = std::make_unique<corpus::Corpus>(std::move(manifest));
  const corpus::Manifest& m = cache_->data->manifest();
  Log("corpus: " + std::to_string(m.records.size()) + " records, " +
      std::to_string(m.n_speakers) + " speakers, " +
      std::to_string(cache_->data->Utterances(corpus::Split::kTrain).size()) + " train / " +
      std::to_string(cache_->data->Utterances(corpus::Split::kTest).size()) +
      " test utterances");
  return m;
}

corpus::Corpus& Experiment::Data() {
  BuildCorpus();
  return *cache_->data;
}

namespace {

model::ModelConfig ModelConfigFor(const RunConfig& config, const corpus::Manifest& m) {
  model::ModelConfig mc = config.model;
  mc.n_mels = config.features.fbank.n_mels;
  mc.n_speakers = m.n_speakers;
  mc.seed = config.seed;
  return mc;
}

}  // namespace

model::Checkpoint Experiment::Train(const ModelId& id) {
  corpus::Corpus& data = Data();
  augment::TrainConfig tc = config_.train;
  tc.mode = id.mode;
  tc.interference = id.interference;
  tc.features = config_.features;
  const model::ModelConfig mc = ModelConfigFor(config_, data.manifest());

  fs::create_directories(config_.results_dir + "/logs");
  fs::create_directories(config_.results_dir + "/checkpoints");
  const std::string log_path = config_.results_dir + "/logs/train-" + id.Name() + ".jsonl";
  std::ofstream log_file(log_path, std::ios::trunc);
  LCAM_REQUIRE(log_file.good(), ErrorKind::kIo, "cannot write ", log_path);

  const int64_t reads_before = data.interference_reads();
  const auto start = std::chrono::steady_clock::now();
  model::Checkpoint ck = augment::Train(data, mc, tc, [&](const augment::EpochLog& e) {
    const json line = {{"epoch", e.epoch},
                       {"loss", e.mean_terms.total},
                       {"ce_clean", e.mean_terms.ce_clean},
                       {"ce_augmented", e.mean_terms.ce_augmented},
                       {"distance", e.mean_terms.distance},
                       {"train_accuracy", e.train_accuracy},
                       {"seconds", e.seconds}};
    log_file << line.dump() << "\n" << std::flush;
    char buf[160];
    std::snprintf(buf, sizeof buf, "train %s: epoch %d/%d loss %.4f acc %.3f (%.1fs)",
                  id.Name().c_str(), e.epoch, tc.epochs, e.mean_terms.total,
                  e.train_accuracy, e.seconds);
    Log(buf);
  });
  if (id.mode == augment::TrainMode::kBase) {
    LCAM_REQUIRE(data.interference_reads() == reads_before, ErrorKind::kRuntime,
                 "base training read interference audio");
  }
  model::SaveCheckpoint(ck, CheckpointPath(id));
  cache_->nets.erase(id.Name());
  char buf[160];
  std::snprintf(buf, sizeof buf, "train %s: done in %.1fs", id.Name().c_str(),
                Seconds(start));
  Log(buf);
  return ck;
}

const model::SpeakerNet& Experiment::Net(const ModelId& id) {
  auto it = cache_->nets.find(id.Name());
  if (it != cache_->nets.end()) return *it->second;
  const std::string path = CheckpointPath(id);
  LCAM_REQUIRE(fs::exists(path), ErrorKind::kIo, "missing checkpoint ", path,
               "; run train --mode ", augment::ToString(id.mode),
               id.interference ? " --interference " + corpus::ToString(*id.interference)
                               : std::string());
  model::Checkpoint ck = model::LoadCheckpoint(path);
  const model::ModelConfig expected = ModelConfigFor(config_, BuildCorpus());
  model::RequireCompatible(ck.config, expected.n_mels, expected.n_speakers);
  LCAM_REQUIRE(ck.config == expected, ErrorKind::kConfig, path,
               ": trained under a different model config");
  const std::string want_interference =
      id.interference ? corpus::ToString(*id.interference) : "none";
  LCAM_REQUIRE(ck.metadata.mode == augment::ToString(id.mode) &&
                   ck.metadata.interference == want_interference,
               ErrorKind::kConfig, path, ": holds a ", ck.metadata.mode, "/",
               ck.metadata.interference, " model");
  auto net = std::make_unique<model::SpeakerNet>(model::NetFromCheckpoint(std::move(ck)));
  return *cache_->nets.emplace(id.Name(), std::move(net)).first->second;
}

const dsp::FbankMatrix& Experiment::Features(const std::string& key) {
  auto it = cache_->features.find(key);
  if (it != cache_->features.end()) return it->second;
  corpus::Corpus& data = Data();
  dsp::Waveform wave;
  if (data.Record(key).scenario == corpus::Scenario::kConcat) {
    corpus::ConcatResult cr = data.Concat(key);
    cache_->labels[key] = std::move(cr.labels);
    wave = std::move(cr.wave);
  } else {
    wave = data.Wave(key);
  }
  return cache_->features.emplace(key, dsp::ComputeFbank(wave, config_.features))
      .first->second;
}

void Experiment::WriteTable(const std::string& name, const ResultTable& table) {
  fs::create_directories(config_.results_dir + "/tables");
  WriteText(config_.results_dir + "/tables/" + name + ".csv", table.ToCsv());
  const std::string summary_path = config_.results_dir + "/summary.json";
  json summary = json::object();
  if (fs::exists(summary_path)) {
    try {
      summary = json::parse(ReadText(summary_path));
    } catch (const json::exception& e) {
      Fail(ErrorKind::kFormat, summary_path, ": ", e.what());
    }
  }
  summary[name] = TableJson(table);
  WriteText(summary_path, summary.dump(2) + "\n");
}

namespace {

std::vector<const ManifestRecord*> Mixtures(const corpus::Corpus& data,
                                            corpus::Scenario scenario,
                                            InterferenceType type) {
  return data.Select([&](const ManifestRecord& r) {
    return r.kind == corpus::RecordKind::kMixture && r.scenario == scenario &&
           r.interference == type;
  });
}

std::vector<int> Labels(const std::vector<const ManifestRecord*>& records) {
  std::vector<int> labels;
  for (const ManifestRecord* r : records) labels.push_back(r->speaker);
  return labels;
}

}  // namespace

ResultTable Experiment::Eval(std::vector<ModelId> ids) {
  corpus::Corpus& data = Data();
  if (ids.empty()) {
    for (const ModelId& id : AllModels()) {
      if (fs::exists(CheckpointPath(id))) ids.push_back(id);
    }
    LCAM_REQUIRE(!ids.empty(), ErrorKind::kIo, "no checkpoints under ",
                 config_.results_dir, "/checkpoints; run train first");
  }
  for (int k : config_.analysis.topk) {
    LCAM_REQUIRE(k <= data.manifest().n_speakers, ErrorKind::kConfig, "top-", k,
                 " exceeds the ", data.manifest().n_speakers, " speakers of the corpus");
  }
  std::vector<std::pair<std::string, std::vector<const ManifestRecord*>>> conditions;
  conditions.emplace_back("clean", data.Utterances(corpus::Split::kTest));
  for (InterferenceType t : corpus::kAllInterferenceTypes) {
    conditions.emplace_back(Cond("overlap", t),
                            Mixtures(data, corpus::Scenario::kOverlap, t));
  }
  const auto start = std::chrono::steady_clock::now();
  ResultTable table;
  for (const auto& [cond, records] : conditions) {
    if (records.empty()) continue;
    std::vector<const dsp::FbankMatrix*> inputs;
    for (const ManifestRecord* r : records) inputs.push_back(&Features(r->key));
    const std::vector<int> labels = Labels(records);
    for (const ModelId& id : ids) {
      const std::vector<double> acc = analysis::TopKAccuracy(
          analysis::ClassifyAll(Net(id), inputs), labels, config_.analysis.topk);
      for (std::size_t i = 0; i < acc.size(); ++i) {
        table.Add(cond, id.Name(), "top" + std::to_string(config_.analysis.topk[i]),
                  acc[i]);
      }
    }
  }
  WriteTable("topk", table);
  char buf[96];
  std::snprintf(buf, sizeof buf, "eval: %zu models in %.1fs", ids.size(), Seconds(start));
  Log(buf);
  return table;
}

std::vector<std::string> Experiment::ExportSaliency(
    const ModelId& id, InterferenceType type, const std::vector<ExportFormat>& formats) {
  LCAM_REQUIRE(!formats.empty(), ErrorKind::kInvalidArgument,
               "saliency export needs at least one format");
  corpus::Corpus& data = Data();
  const model::SpeakerNet& net = Net(id);
  const std::string dir =
      config_.results_dir + "/saliency/" + id.Name() + "/" + corpus::ToString(type);
  fs::create_directories(dir);
  std::vector<std::string> written;
  const auto emit = [&](const layercam::SaliencyMap& map, const std::string& stem) {
    for (ExportFormat f : formats) {
      const std::string base = dir + "/" + stem;
      switch (f) {
        case ExportFormat::kGrid:
          layercam::WriteGridFile(map, base + ".grid");
          written.push_back(base + ".grid");
          break;
        case ExportFormat::kPgm:
          layercam::WritePgmFile(map.values, base + ".pgm");
          written.push_back(base + ".pgm");
          break;
        case ExportFormat::kCsv:
          WriteText(base + ".csv", GridCsv(map.values));
          written.push_back(base + ".csv");
          break;
      }
    }
  };

  std::vector<const ManifestRecord*> records =
      Mixtures(data, corpus::Scenario::kOverlap, type);
  if (records.size() > static_cast<std::size_t>(config_.analysis.saliency_exports)) {
    records.resize(config_.analysis.saliency_exports);
  }
  std::vector<const dsp::FbankMatrix*> inputs;
  for (const ManifestRecord* r : records) inputs.push_back(&Features(r->key));
  const std::vector<layercam::SaliencyMap> maps = SaliencyAll(net, inputs, Labels(records));
  const std::string prefix = "mix/overlap/" + corpus::ToString(type) + "/";
  for (std::size_t i = 0; i < records.size(); ++i) {
    emit(maps[i], "overlap_" + KeyStem(records[i]->key, prefix));
  }

  const std::vector<const ManifestRecord*> ramps =
      Mixtures(data, corpus::Scenario::kRamp, type);
  const std::string ramp_prefix = "mix/ramp/" + corpus::ToString(type) + "/";
  for (const ManifestRecord* r : ramps) {
    const std::vector<dsp::Waveform> levels = data.Ramp(r->key);
    std::vector<dsp::FbankMatrix> feats;
    for (const dsp::Waveform& w : levels) feats.push_back(dsp::ComputeFbank(w, config_.features));
    std::vector<const dsp::FbankMatrix*> ptrs;
    for (const auto& f : feats) ptrs.push_back(&f);
    const std::vector<layercam::SaliencyMap> ramp_maps =
        SaliencyAll(net, ptrs, std::vector<int>(ptrs.size(), r->speaker));
    for (std::size_t i = 0; i < ramp_maps.size(); ++i) {
      emit(ramp_maps[i],
           "ramp_" + KeyStem(r->key, ramp_prefix) + "_" + SnrTag(r->snr_db[i]));
    }
  }
  Log("saliency " + id.Name() + " on " + corpus::ToString(type) + ": " +
      std::to_string(written.size()) + " files under " + dir);
  return written;
}

ResultTable Experiment::AnalyzeSprIpr(const std::vector<InterferenceType>& types) {
  corpus::Corpus& data = Data();
  const double threshold = config_.analysis.frame_threshold_ratio *
                           static_cast<double>(config_.features.fbank.n_mels);
  const auto start = std::chrono::steady_clock::now();
  ResultTable table;
  for (InterferenceType t : types) {
    const std::vector<const ManifestRecord*> records =
        Mixtures(data, corpus::Scenario::kConcat, t);
    LCAM_REQUIRE(!records.empty(), ErrorKind::kRuntime, "no concatenated test mixtures for ",
                 corpus::ToString(t));
    std::vector<const dsp::FbankMatrix*> inputs;
    for (const ManifestRecord* r : records) inputs.push_back(&Features(r->key));
    const std::vector<int> labels = Labels(records);
    for (const ModelId& id : ModelsFor(t)) {
      const std::vector<layercam::SaliencyMap> maps = SaliencyAll(Net(id), inputs, labels);
      analysis::RetentionCounts counts;
      for (std::size_t i = 0; i < records.size(); ++i) {
        counts.Add(analysis::CountRetention(maps[i].values,
                                            cache_->labels.at(records[i]->key), threshold));
      }
      const std::string cond = Cond("concat", t);
      if (counts.Spr()) table.Add(cond, id.Name(), "spr", *counts.Spr());
      if (counts.Ipr()) table.Add(cond, id.Name(), "ipr", *counts.Ipr());
    }
  }
  WriteTable("spr_ipr", table);
  char buf[96];
  std::snprintf(buf, sizeof buf, "analyze spr-ipr: %.1fs", Seconds(start));
  Log(buf);
  return table;
}

ResultTable Experiment::AnalyzeDenoise(const std::vector<InterferenceType>& types) {
  corpus::Corpus& data = Data();
  const auto start = std::chrono::steady_clock::now();
  ResultTable table;
  for (InterferenceType t : types) {
    const std::vector<const ManifestRecord*> records =
        Mixtures(data, corpus::Scenario::kOverlap, t);
    LCAM_REQUIRE(!records.empty(), ErrorKind::kRuntime, "no overlapped test mixtures for ",
                 corpus::ToString(t));
    std::vector<const dsp::FbankMatrix*> inputs;
    for (const ManifestRecord* r : records) inputs.push_back(&Features(r->key));
    const std::vector<int> labels = Labels(records);
    const std::string cond = Cond("overlap", t);
    const auto mean_snr = [&](const std::vector<const Grid*>& masks) {
      double sum = 0.0;
      for (std::size_t i = 0; i < records.size(); ++i) {
        sum += analysis::MaskedResynthesisSnr(data.Wave(records[i]->target),
                                              data.Wave(records[i]->key), *masks[i],
                                              config_.features);
      }
      return sum / static_cast<double>(records.size());
    };
    std::vector<Grid> ones;
    for (const dsp::FbankMatrix* f : inputs) {
      ones.emplace_back(f->frames(), f->n_mels(), 1.0);
    }
    std::vector<const Grid*> ones_ptrs;
    for (const Grid& g : ones) ones_ptrs.push_back(&g);
    table.Add(cond, "noisy", "snr_db", mean_snr(ones_ptrs));
    for (const ModelId& id : ModelsFor(t)) {
      const std::vector<layercam::SaliencyMap> maps = SaliencyAll(Net(id), inputs, labels);
      std::vector<const Grid*> masks;
      for (const auto& m : maps) masks.push_back(&m.values);
      table.Add(cond, id.Name(), "snr_db", mean_snr(masks));
    }
  }
  WriteTable("denoise", table);
  char buf[96];
  std::snprintf(buf, sizeof buf, "analyze denoise: %.1fs", Seconds(start));
  Log(buf);
  return table;
}

DeletionTables Experiment::AnalyzeDeletion(const std::vector<InterferenceType>& types) {
  corpus::Corpus& data = Data();
  const std::vector<double> thresholds =
      analysis::ThresholdGrid(config_.analysis.deletion_thresholds);
  const ModelId judge_id = MakeModelId(augment::TrainMode::kBase, std::nullopt);
  const model::SpeakerNet& judge = Net(judge_id);
  const auto start = std::chrono::steady_clock::now();
  DeletionTables out;
  for (InterferenceType t : types) {
    std::vector<const ManifestRecord*> records =
        Mixtures(data, corpus::Scenario::kOverlap, t);
    LCAM_REQUIRE(!records.empty(), ErrorKind::kRuntime, "no overlapped test mixtures for ",
                 corpus::ToString(t));
    const std::size_t limit = static_cast<std::size_t>(config_.analysis.deletion_utterances);
    const bool full_set = limit == 0 || limit >= records.size();
    if (!full_set) records.resize(limit);
    std::vector<const dsp::FbankMatrix*> noisy;
    std::vector<const dsp::FbankMatrix*> clean;
    for (const ManifestRecord* r : records) {
      noisy.push_back(&Features(r->key));
      clean.push_back(&Features(r->target));
    }
    const std::vector<int> labels = Labels(records);
    const std::string cond = Cond("overlap", t);
    out.summary.Add(cond, "judge", "unmasked_top1",
                    analysis::TopKAccuracy(analysis::ClassifyAll(judge, clean), labels, {1})[0]);
    out.summary.Add(cond, "judge", "full_test_set", full_set ? 1.0 : 0.0);
    for (const ModelId& id : ModelsFor(t)) {
      const std::vector<layercam::SaliencyMap> maps = SaliencyAll(Net(id), noisy, labels);
      std::vector<analysis::DeletionItem> items;
      bool nested = true;
      for (std::size_t i = 0; i < records.size(); ++i) {
        items.push_back({clean[i], &maps[i].values, labels[i]});
        nested = nested && analysis::DeletionSetsNested(maps[i].values, thresholds);
      }
      const analysis::DeletionCurve curve = analysis::DeletionTest(judge, items, thresholds);
      for (const analysis::DeletionPoint& p : curve.points) {
        out.curves.Add(cond, id.Name(), "top1@" + ThetaTag(p.threshold), p.top1);
        out.curves.Add(cond, id.Name(), "masked_fraction@" + ThetaTag(p.threshold),
                       p.masked_fraction);
      }
      out.summary.Add(cond, id.Name(), "auc", curve.auc);
      out.summary.Add(cond, id.Name(), "top1_at_zero", curve.points.front().top1);
      out.summary.Add(cond, id.Name(), "sets_nested", nested ? 1.0 : 0.0);
    }
  }
  WriteTable("deletion", out.curves);
  WriteTable("deletion_auc", out.summary);
  char buf[96];
  std::snprintf(buf, sizeof buf, "analyze deletion: %.1fs", Seconds(start));
  Log(buf);
  return out;
}

std::vector<TrendCheck> Experiment::ReproducePaperTrends() {
  const auto start = std::chrono::steady_clock::now();
  BuildCorpus();
  for (const ModelId& id : AllModels()) {
    if (fs::exists(CheckpointPath(id))) {
      Net(id);
      Log("train " + id.Name() + ": reusing " + CheckpointPath(id));
    } else {
      Train(id);
    }
  }
  const std::vector<InterferenceType> types(std::begin(corpus::kAllInterferenceTypes),
                                            std::end(corpus::kAllInterferenceTypes));
  const ResultTable topk = Eval(AllModels());
  const ResultTable spr_ipr = AnalyzeSprIpr(types);
  const ResultTable denoise = AnalyzeDenoise(types);
  const DeletionTables deletion = AnalyzeDeletion(types);
  const std::vector<TrendCheck> checks =
      CheckTrends({&topk, &spr_ipr, &denoise, &deletion.summary});

  ResultTable trends;
  for (const TrendCheck& c : checks) {
    trends.Add("criterion-" + c.criterion, "all", c.name, c.passed ? 1.0 : 0.0);
  }
  fs::create_directories(config_.results_dir + "/tables");
  WriteText(config_.results_dir + "/tables/trends.csv", trends.ToCsv());
  const std::string summary_path = config_.results_dir + "/summary.json";
  json summary = json::parse(ReadText(summary_path));
  json list = json::array();
  std::size_t failed = 0;
  for (const TrendCheck& c : checks) {
    list.push_back({{"criterion", c.criterion},
                    {"check", c.name},
                    {"passed", c.passed},
                    {"detail", c.detail}});
    if (!c.passed) ++failed;
    Log(std::string(c.passed ? "PASS " : "FAIL ") + "[" + c.criterion + "] " + c.name +
        " (" + c.detail + ")");
  }
  summary["trends"] = {{"checks", list}, {"failed", failed}, {"total", checks.size()}};
  WriteText(summary_path, summary.dump(2) + "\n");
  char buf[128];
  std::snprintf(buf, sizeof buf, "reproduce-paper-trends: %zu/%zu checks passed in %.1fs",
                checks.size() - failed, checks.size(), Seconds(start));
  Log(buf);
  return checks;
}

}  // namespace lcam::experiment
