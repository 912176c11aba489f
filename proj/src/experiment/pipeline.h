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

#ifndef LCAM_EXPERIMENT_PIPELINE_H_
#define LCAM_EXPERIMENT_PIPELINE_H_

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "augment/train.h"
#include "corpus/corpus.h"
#include "experiment/run_config.h"
#include "model/checkpoint.h"

namespace lcam::experiment {

std::string ToolVersion();

// One trained model of an experiment. Base models carry no interference.
struct ModelId {
  augment::TrainMode mode = augment::TrainMode::kBase;
  std::optional<corpus::InterferenceType> interference;

  // "base", "vanilla_da-noise", "act_da-speech", ...
  std::string Name() const;
  friend bool operator==(const ModelId&, const ModelId&) = default;
};

// Base plus both DA modes for every interference type.
std::vector<ModelId> AllModels();
// Base, vanilla DA and Act DA trained on `type`.
std::vector<ModelId> ModelsFor(corpus::InterferenceType type);
// Throws kConfig for a DA mode without an interference type.
ModelId MakeModelId(augment::TrainMode mode,
                    std::optional<corpus::InterferenceType> interference);

struct TableRow {
  std::string condition;
  std::string model;
  std::string metric;
  double value = 0.0;
};

// Long-format result table (condition, model, metric, value).
class ResultTable {
 public:
  void Add(std::string condition, std::string model, std::string metric, double value);
  const std::vector<TableRow>& rows() const { return rows_; }
  std::optional<double> Find(const std::string& condition, const std::string& model,
                             const std::string& metric) const;
  // Header line plus one line per row; values printed with six decimals.
  std::string ToCsv() const;
  static ResultTable FromCsv(const std::string& text);

 private:
  std::vector<TableRow> rows_;
};

enum class ExportFormat { kGrid, kPgm, kCsv };
std::optional<ExportFormat> ParseExportFormat(const std::string& text);

struct DeletionTables {
  ResultTable curves;  // top1@theta and masked_fraction@theta rows
  ResultTable summary; // auc, sets_nested and the judge's unmasked top-1
};

// Result of one directional comparison checked by reproduce-paper-trends.
struct TrendCheck {
  std::string criterion;  // e.g. "4b"
  std::string name;
  bool passed = false;
  std::string detail;
};

struct TrendTables {
  const ResultTable* topk = nullptr;
  const ResultTable* spr_ipr = nullptr;
  const ResultTable* denoise = nullptr;
  const ResultTable* deletion = nullptr;  // DeletionTables::summary
};

// Evaluates every directional trend on finished tables. A missing entry
// counts as a failed check.
std::vector<TrendCheck> CheckTrends(const TrendTables& tables);

using LogSink = std::function<void(const std::string&)>;

// One results directory under one config. Construction validates the config,
// takes the directory lock and writes the provenance record, or verifies it
// when the directory already belongs to the same config and seed.
class Experiment {
 public:
  explicit Experiment(RunConfig config, LogSink log = {});
  ~Experiment();
  Experiment(const Experiment&) = delete;
  Experiment& operator=(const Experiment&) = delete;

  const RunConfig& config() const { return config_; }
  const std::string& results_dir() const { return config_.results_dir; }
  std::string CheckpointPath(const ModelId& id) const;

  // Loads the manifest of the results directory, building and writing it
  // first if absent.
  const corpus::Manifest& BuildCorpus();

  model::Checkpoint Train(const ModelId& id);

  // Top-k on clean test utterances and on every overlapped test set. With no
  // ids given, every model with a checkpoint on disk is evaluated.
  ResultTable Eval(std::vector<ModelId> ids = {});

  // Fused saliency of the first overlapped test mixtures of `type` (and of
  // the ramp series, where present) in each requested format. Returns the
  // written paths.
  std::vector<std::string> ExportSaliency(const ModelId& id,
                                          corpus::InterferenceType type,
                                          const std::vector<ExportFormat>& formats);

  // Each analysis uses base, vanilla DA and Act DA of the listed types.
  ResultTable AnalyzeSprIpr(const std::vector<corpus::InterferenceType>& types);
  ResultTable AnalyzeDenoise(const std::vector<corpus::InterferenceType>& types);
  DeletionTables AnalyzeDeletion(const std::vector<corpus::InterferenceType>& types);

  // Corpus, every model (trained unless its checkpoint already exists),
  // every analysis and the trend checks, which are also recorded in the
  // summary file.
  std::vector<TrendCheck> ReproducePaperTrends();

 private:
  struct Cache;

  void Log(const std::string& line) const;
  corpus::Corpus& Data();
  const model::SpeakerNet& Net(const ModelId& id);
  const dsp::FbankMatrix& Features(const std::string& key);
  void WriteTable(const std::string& name, const ResultTable& table);

  RunConfig config_;
  LogSink log_;
  std::string lock_path_;
  std::unique_ptr<Cache> cache_;
};

}  // namespace lcam::experiment

#endif  // LCAM_EXPERIMENT_PIPELINE_H_
