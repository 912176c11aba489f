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

#include <malloc.h>

#include <cstdint>
#include <cstdio>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "lcam/lcam.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;
constexpr int kExitAcceptance = 4;

int ExitCodeFor(lcam_status status) {
  switch (status) {
    case LCAM_OK: return kExitOk;
    case LCAM_ERR_CONFIG:
    case LCAM_ERR_INVALID_ARGUMENT: return kExitConfig;
    case LCAM_ERR_ACCEPTANCE: return kExitAcceptance;
    default: return kExitRuntime;
  }
}

// One machine-parseable line: the status name, then the message with
// newlines flattened.
int Report(lcam_status status) {
  if (status == LCAM_OK) return kExitOk;
  std::string message = lcam_last_error();
  for (char& c : message) {
    if (c == '\n' || c == '\r') c = ' ';
  }
  std::fprintf(stderr, "lcam: error: kind=%s message=%s\n", lcam_status_name(status),
               message.c_str());
  return ExitCodeFor(status);
}

void PrintLine(const char* line, void*) {
  std::fprintf(stderr, "%s\n", line);
  std::fflush(stderr);
}

struct Options {
  std::string config;
  std::optional<uint64_t> seed;
  std::string out;
  std::string mode;
  std::string interference;
  std::string format;
  std::string analysis;
};

// Holds an open experiment for the duration of one command.
class Session {
 public:
  ~Session() { lcam_experiment_close(experiment_); }

  lcam_status Open(const Options& o) {
    lcam_open_options opts{};
    opts.config_path = o.config.empty() ? nullptr : o.config.c_str();
    opts.has_seed = o.seed.has_value();
    opts.seed = o.seed.value_or(0);
    opts.out_dir = o.out.empty() ? nullptr : o.out.c_str();
    opts.log = &PrintLine;
    return lcam_experiment_open(&opts, &experiment_);
  }

  lcam_experiment* get() const { return experiment_; }

 private:
  lcam_experiment* experiment_ = nullptr;
};

lcam_status ParseInterference(const std::string& text, lcam_interference* out) {
  *out = LCAM_INTERFERENCE_NONE;
  if (text.empty()) return LCAM_OK;
  return lcam_parse_interference(text.c_str(), out);
}

lcam_status Run(const std::string& command, const Options& o) {
  lcam_mode mode = LCAM_MODE_BASE;
  lcam_interference interference = LCAM_INTERFERENCE_NONE;
  lcam_status st = LCAM_OK;
  if (!o.mode.empty() && (st = lcam_parse_mode(o.mode.c_str(), &mode)) != LCAM_OK) return st;
  if ((st = ParseInterference(o.interference, &interference)) != LCAM_OK) return st;
  lcam_analysis analysis = LCAM_ANALYSIS_SPR_IPR;
  if (command == "analyze" &&
      (st = lcam_parse_analysis(o.analysis.c_str(), &analysis)) != LCAM_OK) {
    return st;
  }

  Session session;
  if ((st = session.Open(o)) != LCAM_OK) return st;
  lcam_experiment* e = session.get();

  // Base models carry no interference; for them the flag only selects
  // which mixtures the saliency command uses.
  const lcam_interference model_interference =
      mode == LCAM_MODE_BASE ? LCAM_INTERFERENCE_NONE : interference;
  if (command == "corpus") return lcam_corpus(e);
  if (command == "train") return lcam_train(e, mode, model_interference);
  if (command == "eval") return lcam_eval(e, o.mode.empty(), mode, model_interference);
  if (command == "saliency") {
    unsigned formats = LCAM_EXPORT_GRID | LCAM_EXPORT_PGM;
    if (o.format == "grid") formats = LCAM_EXPORT_GRID;
    if (o.format == "pgm") formats = LCAM_EXPORT_PGM;
    if (o.format == "csv") formats = LCAM_EXPORT_CSV;
    size_t written = 0;
    st = lcam_saliency(e, mode, model_interference, interference, formats, &written);
    if (st == LCAM_OK) std::printf("%zu files written\n", written);
    return st;
  }
  if (command == "analyze") return lcam_analyze(e, analysis, interference);
  size_t passed = 0;
  size_t total = 0;
  st = lcam_reproduce_paper_trends(e, &passed, &total);
  std::printf("%zu/%zu trend checks passed\n", passed, total);
  return st;
}

}  // namespace

int main(int argc, char** argv) {
  // The training loop allocates and frees many large tensors; keeping them
  // on the heap instead of fresh mappings avoids page-fault churn.
  mallopt(M_MMAP_THRESHOLD, 1 << 30);
  mallopt(M_TRIM_THRESHOLD, 1 << 30);

  CLI::App app{"Speaker-ID saliency experiments: corpus, training, LayerCAM and analyses"};
  app.set_version_flag("--version", std::string(lcam_version()));
  app.require_subcommand(1, 1);
  app.fallthrough();

  Options o;
  app.add_option("--config", o.config, "Experiment config (JSON)")->check(CLI::ExistingFile);
  app.add_option("--seed", o.seed, "Global seed; overrides the config");
  app.add_option("--out", o.out, "Results directory; overrides the config");

  const auto mode_check = CLI::IsMember({"base", "vanilla_da", "act_da"});
  const auto type_check = CLI::IsMember({"noise", "speech", "music"});

  app.add_subcommand("corpus", "Generate or ingest the corpus manifest");
  auto* train = app.add_subcommand("train", "Train one model");
  train->add_option("--mode", o.mode, "Training mode")->required()->check(mode_check);
  train->add_option("--interference", o.interference, "Interference type for DA modes")
      ->check(type_check);
  auto* eval = app.add_subcommand("eval", "Top-k accuracy of trained models");
  eval->add_option("--mode", o.mode, "Model to evaluate (default: all trained)")
      ->check(mode_check);
  eval->add_option("--interference", o.interference, "Interference type of a DA model")
      ->check(type_check);
  auto* saliency = app.add_subcommand("saliency", "Export fused LayerCAM maps");
  saliency->add_option("--mode", o.mode, "Model")->required()->check(mode_check);
  saliency->add_option("--interference", o.interference, "Mixture interference type")
      ->required()
      ->check(type_check);
  saliency->add_option("--format", o.format, "Export format (default: grid and pgm)")
      ->check(CLI::IsMember({"grid", "pgm", "csv"}));
  auto* analyze = app.add_subcommand("analyze", "Run one analysis protocol");
  analyze->add_option("protocol", o.analysis, "spr-ipr, denoise or deletion")
      ->required()
      ->check(CLI::IsMember({"spr-ipr", "denoise", "deletion"}));
  analyze->add_option("--interference", o.interference, "One type (default: all)")
      ->check(type_check);
  app.add_subcommand("reproduce-paper-trends",
                     "Corpus, all models, all analyses and the trend checks");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }
  return Report(Run(app.get_subcommands().front()->get_name(), o));
}
