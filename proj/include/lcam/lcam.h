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

#ifndef LCAM_LCAM_H_
#define LCAM_LCAM_H_

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(__GNUC__)
#define LCAM_API __attribute__((visibility("default")))
#else
#define LCAM_API
#endif

/* Every fallible call returns a status; on failure lcam_last_error() holds
 * a one-line message for the calling thread until its next call. */
typedef enum lcam_status {
  LCAM_OK = 0,
  LCAM_ERR_INVALID_ARGUMENT = 1,
  LCAM_ERR_CONFIG = 2,
  LCAM_ERR_IO = 3,
  LCAM_ERR_FORMAT = 4,
  LCAM_ERR_SHAPE = 5,
  LCAM_ERR_RUNTIME = 6,
  LCAM_ERR_ACCEPTANCE = 7,
} lcam_status;

typedef enum lcam_mode {
  LCAM_MODE_BASE = 0,
  LCAM_MODE_VANILLA_DA = 1,
  LCAM_MODE_ACT_DA = 2,
} lcam_mode;

typedef enum lcam_interference {
  LCAM_INTERFERENCE_NONE = -1,
  LCAM_INTERFERENCE_NOISE = 0,
  LCAM_INTERFERENCE_SPEECH = 1,
  LCAM_INTERFERENCE_MUSIC = 2,
} lcam_interference;

typedef enum lcam_analysis {
  LCAM_ANALYSIS_SPR_IPR = 0,
  LCAM_ANALYSIS_DENOISE = 1,
  LCAM_ANALYSIS_DELETION = 2,
} lcam_analysis;

/* Bit set of saliency export formats. */
enum {
  LCAM_EXPORT_GRID = 1,
  LCAM_EXPORT_PGM = 2,
  LCAM_EXPORT_CSV = 4,
};

/* Opaque experiment: one config bound to one locked results directory. */
typedef struct lcam_experiment lcam_experiment;

/* Receives one progress line at a time (no trailing newline). */
typedef void (*lcam_log_fn)(const char* line, void* user);

LCAM_API const char* lcam_version(void);
LCAM_API const char* lcam_last_error(void);
LCAM_API const char* lcam_status_name(lcam_status status);

/* Parses a mode, interference type or analysis name; returns
 * LCAM_ERR_CONFIG for anything else. */
LCAM_API lcam_status lcam_parse_mode(const char* text, lcam_mode* out);
LCAM_API lcam_status lcam_parse_interference(const char* text, lcam_interference* out);
LCAM_API lcam_status lcam_parse_analysis(const char* text, lcam_analysis* out);

/* Options for lcam_experiment_open. Zero-initialize, then set fields. */
typedef struct lcam_open_options {
  const char* config_path; /* NULL: built-in defaults */
  int has_seed;            /* nonzero: seed overrides the config */
  uint64_t seed;
  const char* out_dir; /* NULL: results path of the config */
  lcam_log_fn log;     /* NULL: silent */
  void* log_user;
} lcam_open_options;

/* Validates the config, locks the results directory and writes or verifies
 * its provenance record. */
LCAM_API lcam_status lcam_experiment_open(const lcam_open_options* options,
                                          lcam_experiment** out);
/* Releases the lock. Accepts NULL. */
LCAM_API void lcam_experiment_close(lcam_experiment* experiment);

/* Copies the results directory path into buf (NUL-terminated, truncated to
 * size); returns the full length. */
LCAM_API size_t lcam_experiment_results_dir(const lcam_experiment* experiment, char* buf,
                                            size_t size);

LCAM_API lcam_status lcam_corpus(lcam_experiment* experiment);

/* interference must be NONE for base and a type for the DA modes. */
LCAM_API lcam_status lcam_train(lcam_experiment* experiment, lcam_mode mode,
                                lcam_interference interference);

/* Evaluates one model, or every model with a checkpoint when all_models is
 * nonzero (mode and interference are then ignored). */
LCAM_API lcam_status lcam_eval(lcam_experiment* experiment, int all_models, lcam_mode mode,
                               lcam_interference interference);

/* Exports fused saliency maps of the model on mixtures of `mixtures`
 * (which must name a type) in every format of the bit set. */
LCAM_API lcam_status lcam_saliency(lcam_experiment* experiment, lcam_mode mode,
                                   lcam_interference model_interference,
                                   lcam_interference mixtures, unsigned formats,
                                   size_t* files_written);

/* Runs one analysis for one interference type, or for all three when
 * interference is NONE. */
LCAM_API lcam_status lcam_analyze(lcam_experiment* experiment, lcam_analysis analysis,
                                  lcam_interference interference);

/* Runs the whole chain and checks every directional trend. Returns
 * LCAM_ERR_ACCEPTANCE when any check fails; the counts are filled in either
 * way. */
LCAM_API lcam_status lcam_reproduce_paper_trends(lcam_experiment* experiment,
                                                 size_t* checks_passed,
                                                 size_t* checks_total);

#ifdef __cplusplus
}  /* extern "C" */
#endif

#endif  /* LCAM_LCAM_H_ */
