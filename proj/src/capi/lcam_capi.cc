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

#include <algorithm>
#include <cstring>
#include <exception>
#include <memory>
#include <new>
#include <optional>
#include <string>
#include <vector>

#include "base/error.h"
#include "experiment/pipeline.h"
#include "experiment/run_config.h"
#include "lcam/lcam.h"

struct lcam_experiment {
  std::unique_ptr<lcam::experiment::Experiment> impl;
};

namespace {

using lcam::ErrorKind;
using lcam::experiment::Experiment;
using lcam::experiment::ModelId;

thread_local std::string g_last_error;

lcam_status StatusOf(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInvalidArgument: return LCAM_ERR_INVALID_ARGUMENT;
    case ErrorKind::kShapeMismatch: return LCAM_ERR_SHAPE;
    case ErrorKind::kIo: return LCAM_ERR_IO;
    case ErrorKind::kFormat: return LCAM_ERR_FORMAT;
    case ErrorKind::kConfig: return LCAM_ERR_CONFIG;
    case ErrorKind::kRuntime: return LCAM_ERR_RUNTIME;
    case ErrorKind::kAcceptance: return LCAM_ERR_ACCEPTANCE;
  }
  return LCAM_ERR_RUNTIME;
}

// Runs `fn`, translating exceptions into a status and the thread's last
// error message.
template <typename Fn>
lcam_status Guard(Fn&& fn) {
  g_last_error.clear();
  try {
    return fn();
  } catch (const lcam::Error& e) {
    g_last_error = e.what();
    return StatusOf(e.kind());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return LCAM_ERR_RUNTIME;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return LCAM_ERR_RUNTIME;
  } catch (...) {
    g_last_error = "unknown failure";
    return LCAM_ERR_RUNTIME;
  }
}

void RequireHandle(const lcam_experiment* e) {
  LCAM_REQUIRE(e != nullptr && e->impl != nullptr, ErrorKind::kInvalidArgument,
               "null experiment handle");
}

lcam::augment::TrainMode ToMode(lcam_mode mode) {
  switch (mode) {
    case LCAM_MODE_BASE: return lcam::augment::TrainMode::kBase;
    case LCAM_MODE_VANILLA_DA: return lcam::augment::TrainMode::kVanillaDa;
    case LCAM_MODE_ACT_DA: return lcam::augment::TrainMode::kActDa;
  }
  lcam::Fail(ErrorKind::kInvalidArgument, "unknown mode value ", static_cast<int>(mode));
}

std::optional<lcam::corpus::InterferenceType> ToInterference(lcam_interference t) {
  switch (t) {
    case LCAM_INTERFERENCE_NONE: return std::nullopt;
    case LCAM_INTERFERENCE_NOISE: return lcam::corpus::InterferenceType::kNoise;
    case LCAM_INTERFERENCE_SPEECH: return lcam::corpus::InterferenceType::kSpeech;
    case LCAM_INTERFERENCE_MUSIC: return lcam::corpus::InterferenceType::kMusic;
  }
  lcam::Fail(ErrorKind::kInvalidArgument, "unknown interference value ",
             static_cast<int>(t));
}

ModelId ToModel(lcam_mode mode, lcam_interference t) {
  const auto m = ToMode(mode);
  if (m == lcam::augment::TrainMode::kBase) {
    LCAM_REQUIRE(t == LCAM_INTERFERENCE_NONE, ErrorKind::kConfig,
                 "mode base takes no interference type");
  }
  return lcam::experiment::MakeModelId(m, ToInterference(t));
}

std::vector<lcam::corpus::InterferenceType> TypesOf(lcam_interference t) {
  if (t == LCAM_INTERFERENCE_NONE) {
    return {std::begin(lcam::corpus::kAllInterferenceTypes),
            std::end(lcam::corpus::kAllInterferenceTypes)};
  }
  return {*ToInterference(t)};
}

}  // namespace

extern "C" {

const char* lcam_version(void) {
  static const std::string v = lcam::experiment::ToolVersion();
  return v.c_str();
}

const char* lcam_last_error(void) { return g_last_error.c_str(); }

const char* lcam_status_name(lcam_status status) {
  switch (status) {
    case LCAM_OK: return "ok";
    case LCAM_ERR_INVALID_ARGUMENT: return "invalid_argument";
    case LCAM_ERR_CONFIG: return "config";
    case LCAM_ERR_IO: return "io";
    case LCAM_ERR_FORMAT: return "format";
    case LCAM_ERR_SHAPE: return "shape";
    case LCAM_ERR_RUNTIME: return "runtime";
    case LCAM_ERR_ACCEPTANCE: return "acceptance";
  }
  return "unknown";
}

lcam_status lcam_parse_mode(const char* text, lcam_mode* out) {
  return Guard([&] {
    LCAM_REQUIRE(text && out, ErrorKind::kInvalidArgument, "null argument");
    const auto m = lcam::augment::ParseTrainMode(text);
    LCAM_REQUIRE(m.has_value(), ErrorKind::kConfig, "mode must be base, vanilla_da or "
                 "act_da, got '", text, "'");
    *out = *m == lcam::augment::TrainMode::kBase        ? LCAM_MODE_BASE
           : *m == lcam::augment::TrainMode::kVanillaDa ? LCAM_MODE_VANILLA_DA
                                                        : LCAM_MODE_ACT_DA;
    return LCAM_OK;
  });
}

lcam_status lcam_parse_interference(const char* text, lcam_interference* out) {
  return Guard([&] {
    LCAM_REQUIRE(text && out, ErrorKind::kInvalidArgument, "null argument");
    const auto t = lcam::corpus::ParseInterferenceType(text);
    LCAM_REQUIRE(t.has_value(), ErrorKind::kConfig, "interference must be noise, speech "
                 "or music, got '", text, "'");
    *out = *t == lcam::corpus::InterferenceType::kNoise    ? LCAM_INTERFERENCE_NOISE
           : *t == lcam::corpus::InterferenceType::kSpeech ? LCAM_INTERFERENCE_SPEECH
                                                           : LCAM_INTERFERENCE_MUSIC;
    return LCAM_OK;
  });
}

lcam_status lcam_parse_analysis(const char* text, lcam_analysis* out) {
  return Guard([&] {
    LCAM_REQUIRE(text && out, ErrorKind::kInvalidArgument, "null argument");
    const std::string s = text;
    if (s == "spr-ipr") {
      *out = LCAM_ANALYSIS_SPR_IPR;
    } else if (s == "denoise") {
      *out = LCAM_ANALYSIS_DENOISE;
    } else if (s == "deletion") {
      *out = LCAM_ANALYSIS_DELETION;
    } else {
      lcam::Fail(ErrorKind::kConfig, "analysis must be spr-ipr, denoise or deletion, got '",
                 s, "'");
    }
    return LCAM_OK;
  });
}

lcam_status lcam_experiment_open(const lcam_open_options* options, lcam_experiment** out) {
  return Guard([&] {
    LCAM_REQUIRE(options && out, ErrorKind::kInvalidArgument, "null argument");
    *out = nullptr;
    lcam::experiment::RunConfig config =
        options->config_path ? lcam::experiment::LoadRunConfig(options->config_path)
                             : lcam::experiment::DefaultRunConfig();
    if (options->has_seed) config.ApplySeed(options->seed);
    if (options->out_dir) config.results_dir = options->out_dir;
    lcam::experiment::LogSink sink;
    if (options->log) {
      lcam_log_fn fn = options->log;
      void* user = options->log_user;
      sink = [fn, user](const std::string& line) { fn(line.c_str(), user); };
    }
    auto handle = std::make_unique<lcam_experiment>();
    handle->impl = std::make_unique<Experiment>(std::move(config), std::move(sink));
    *out = handle.release();
    return LCAM_OK;
  });
}

void lcam_experiment_close(lcam_experiment* experiment) { delete experiment; }

size_t lcam_experiment_results_dir(const lcam_experiment* experiment, char* buf,
                                   size_t size) {
  if (experiment == nullptr || experiment->impl == nullptr) return 0;
  const std::string& dir = experiment->impl->results_dir();
  if (buf != nullptr && size > 0) {
    const size_t n = std::min(size - 1, dir.size());
    std::memcpy(buf, dir.data(), n);
    buf[n] = '\0';
  }
  return dir.size();
}

lcam_status lcam_corpus(lcam_experiment* experiment) {
  return Guard([&] {
    RequireHandle(experiment);
    experiment->impl->BuildCorpus();
    return LCAM_OK;
  });
}

lcam_status lcam_train(lcam_experiment* experiment, lcam_mode mode,
                       lcam_interference interference) {
  return Guard([&] {
    RequireHandle(experiment);
    experiment->impl->Train(ToModel(mode, interference));
    return LCAM_OK;
  });
}

lcam_status lcam_eval(lcam_experiment* experiment, int all_models, lcam_mode mode,
                      lcam_interference interference) {
  return Guard([&] {
    RequireHandle(experiment);
    std::vector<ModelId> ids;
    if (!all_models) ids.push_back(ToModel(mode, interference));
    experiment->impl->Eval(ids);
    return LCAM_OK;
  });
}

lcam_status lcam_saliency(lcam_experiment* experiment, lcam_mode mode,
                          lcam_interference model_interference, lcam_interference mixtures,
                          unsigned formats, size_t* files_written) {
  return Guard([&] {
    RequireHandle(experiment);
    const auto type = ToInterference(mixtures);
    LCAM_REQUIRE(type.has_value(), ErrorKind::kConfig,
                 "saliency export needs an interference type for its mixtures");
    std::vector<lcam::experiment::ExportFormat> list;
    if (formats & LCAM_EXPORT_GRID) list.push_back(lcam::experiment::ExportFormat::kGrid);
    if (formats & LCAM_EXPORT_PGM) list.push_back(lcam::experiment::ExportFormat::kPgm);
    if (formats & LCAM_EXPORT_CSV) list.push_back(lcam::experiment::ExportFormat::kCsv);
    LCAM_REQUIRE(!list.empty() && (formats & ~7u) == 0, ErrorKind::kInvalidArgument,
                 "bad export format set ", formats);
    const auto written =
        experiment->impl->ExportSaliency(ToModel(mode, model_interference), *type, list);
    if (files_written) *files_written = written.size();
    return LCAM_OK;
  });
}

lcam_status lcam_analyze(lcam_experiment* experiment, lcam_analysis analysis,
                         lcam_interference interference) {
  return Guard([&] {
    RequireHandle(experiment);
    const auto types = TypesOf(interference);
    switch (analysis) {
      case LCAM_ANALYSIS_SPR_IPR: experiment->impl->AnalyzeSprIpr(types); break;
      case LCAM_ANALYSIS_DENOISE: experiment->impl->AnalyzeDenoise(types); break;
      case LCAM_ANALYSIS_DELETION: experiment->impl->AnalyzeDeletion(types); break;
      default:
        lcam::Fail(ErrorKind::kInvalidArgument, "unknown analysis value ",
                   static_cast<int>(analysis));
    }
    return LCAM_OK;
  });
}

lcam_status lcam_reproduce_paper_trends(lcam_experiment* experiment, size_t* checks_passed,
                                        size_t* checks_total) {
  return Guard([&] {
    RequireHandle(experiment);
    const auto checks = experiment->impl->ReproducePaperTrends();
    size_t passed = 0;
    std::string failed;
    for (const auto& c : checks) {
      if (c.passed) {
        ++passed;
      } else if (failed.empty()) {
        failed = "[" + c.criterion + "] " + c.name + " (" + c.detail + ")";
      }
    }
    if (checks_passed) *checks_passed = passed;
    if (checks_total) *checks_total = checks.size();
    LCAM_REQUIRE(passed == checks.size(), ErrorKind::kAcceptance,
                 checks.size() - passed, " of ", checks.size(),
                 " trend checks failed; first: ", failed);
    return LCAM_OK;
  });
}

}  // extern "C"
