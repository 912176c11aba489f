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

// Acceptance runner: one PASS/FAIL line per criterion, exit status 0 only
// when every criterion passes.

#include <sys/wait.h>

#include <CLI11.hpp>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "augment/train.h"
#include "base/rng.h"
#include "dsp/stft.h"
#include "dsp/wave.h"
#include "experiment/pipeline.h"
#include "layercam/layercam.h"
#include "model/checkpoint.h"
#include "model/speaker_net.h"
#include "support/gradient_cases.h"
#include "support/layercam_toy.h"

namespace {

namespace fs = std::filesystem;
using namespace lcam;

struct Outcome {
  bool passed = false;
  std::string detail;
};

double SecondsSince(std::chrono::steady_clock::time_point t) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t).count();
}

std::string Fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::string Slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

model::ModelConfig SmallNet() {
  model::ModelConfig c;
  c.n_mels = 8;
  c.stage_channels = {2, 3, 4, 4};
  c.embedding_dim = 4;
  c.n_speakers = 5;
  c.se_reduction = 2;
  return c;
}

Outcome GradientChecks() {
  const auto start = std::chrono::steady_clock::now();
  const std::vector<testing::GradientCase> cases = testing::GradientCases();
  double worst = 0.0;
  std::string worst_name;
  std::size_t failures = 0;
  for (const auto& c : cases) {
    const testing::GradientCheck r = testing::RunGradientCheck(c);
    if (!(r.max_rel_error < testing::kFdTolerance)) ++failures;
    if (!(r.max_rel_error <= worst)) {
      worst = r.max_rel_error;
      worst_name = r.name;
    }
  }
  const double secs = SecondsSince(start);
  return {cases.size() >= 50 && failures == 0 && secs < 60.0,
          std::to_string(cases.size()) + " cases, " + std::to_string(failures) +
              " over tolerance, worst " + Fmt("%.2e", worst) + " (" + worst_name + "), " +
              Fmt("%.1fs", secs)};
}

Outcome LayerCamChecks() {
  const testing::ToyLayerCam toy = testing::RunToyLayerCam();
  const double raw = testing::MaxAbsDiff(toy.raw, toy.expected_raw);
  const double norm = testing::MaxAbsDiff(toy.normalized, toy.expected_normalized);

  const model::SpeakerNet net(SmallNet());
  bool fused_exact = true;
  for (uint64_t s = 0; s < 5; ++s) {
    dsp::FbankMatrix f;
    f.values = Grid(12 + s, 8);
    Rng rng(s);
    for (double& v : f.values.data()) v = rng.Uniform(f.FloorLog(), 0.0);
    const layercam::SaliencyResult r =
        layercam::FusedSaliency(net, f, static_cast<int>(s % 5));
    std::vector<Grid> stages;
    for (const auto& m : r.stages) stages.push_back(m.values);
    fused_exact = fused_exact && r.fused.values.data() == layercam::MeanOfMaps(stages).data();
  }
  return {raw <= 1e-9 && norm <= 1e-9 && fused_exact,
          "toy raw err " + Fmt("%.1e", raw) + ", normalized err " + Fmt("%.1e", norm) +
              ", fused == mean of stages: " + (fused_exact ? "yes" : "no")};
}

Outcome RoundTrips() {
  Rng rng(11);
  dsp::Waveform x{std::vector<double>(16000), 16000};
  for (double& v : x.samples) v = 0.3 * rng.Normal();
  const dsp::Waveform y = dsp::Istft(dsp::Stft(x));
  double err = 0.0;
  for (std::size_t i = 400; i + 400 < x.size(); ++i) {
    err = std::max(err, std::fabs(x.samples[i] - y.samples[i]));
  }

  dsp::Waveform q = x;
  for (double& v : q.samples) v = std::round(std::clamp(v, -1.0, 0.999) * 32768.0) / 32768.0;
  const std::vector<uint8_t> wav = dsp::EncodeWav(q);
  const dsp::Waveform q2 = dsp::DecodeWav(wav);
  const bool wav_exact = q2.samples == q.samples && dsp::EncodeWav(q2) == wav;

  const model::Checkpoint ck = model::MakeCheckpoint(model::SpeakerNet(SmallNet()), {});
  const std::vector<uint8_t> bytes = model::EncodeCheckpoint(ck);
  const model::Checkpoint back = model::DecodeCheckpoint(bytes);
  const bool ckpt_exact = back.parameters == ck.parameters && back.buffers == ck.buffers &&
                          model::EncodeCheckpoint(back) == bytes;
  return {err <= 1e-6 && wav_exact && ckpt_exact,
          "istft(stft) err " + Fmt("%.1e", err) + ", wav exact: " + (wav_exact ? "yes" : "no") +
              ", checkpoint exact: " + (ckpt_exact ? "yes" : "no")};
}

Outcome ObjectivesAgree() {
  const model::SpeakerNet net(SmallNet());
  Rng rng(8);
  int mismatches = 0;
  for (int i = 0; i < 100; ++i) {
    // Train-mode batch norm needs two values per channel at the 1x1 last
    // stage, so batches start at two.
    const std::size_t n = 2 + rng.Index(4), t = 8 + rng.Index(8);
    ad::Tensor x({n, 1, t, 8});
    for (double& v : x.storage()) v = rng.Uniform();
    std::vector<int> labels(n);
    for (int& l : labels) l = static_cast<int>(rng.Index(5));
    const auto a = augment::ActDaLoss(net, x, x, labels);
    const auto v = augment::VanillaDaLoss(net, x, x, labels);
    mismatches += !(a.terms.total == v.terms.total && a.grads == v.grads);
  }
  return {mismatches == 0, std::to_string(100 - mismatches) + "/100 inputs identical"};
}

struct Run {
  int exit_code = -1;
  double seconds = 0.0;
  fs::path dir;
};

Run RunCli(const std::string& cli, const std::string& config, const fs::path& dir) {
  fs::remove_all(dir);
  fs::create_directories(dir.parent_path());
  const std::string cmd = "'" + cli + "' --config '" + config + "' --out '" + dir.string() +
                          "' reproduce-paper-trends > '" + dir.string() + ".log' 2>&1";
  const auto start = std::chrono::steady_clock::now();
  const int status = std::system(cmd.c_str());
  Run r;
  r.seconds = SecondsSince(start);
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.dir = dir;
  return r;
}

// Trend rows of one criterion from the run's trends table.
Outcome TrendCriterion(const experiment::ResultTable& trends, const std::string& prefix) {
  int total = 0, passed = 0;
  std::string first_failure;
  for (const auto& row : trends.rows()) {
    if (row.condition.rfind("criterion-" + prefix, 0) != 0) continue;
    ++total;
    if (row.value == 1.0) {
      ++passed;
    } else if (first_failure.empty()) {
      first_failure = row.metric;
    }
  }
  std::string detail = std::to_string(passed) + "/" + std::to_string(total) + " checks";
  if (!first_failure.empty()) detail += "; first failure: " + first_failure;
  return {total > 0 && passed == total, detail};
}

Outcome Reproducible(const Run& a, const Run& b) {
  std::vector<fs::path> files{"summary.json"};
  for (const auto& e : fs::directory_iterator(a.dir / "tables")) {
    files.push_back(fs::path("tables") / e.path().filename());
  }
  std::sort(files.begin(), files.end());
  int differ = 0;
  std::string which;
  for (const auto& f : files) {
    if (!fs::exists(b.dir / f) || Slurp(a.dir / f) != Slurp(b.dir / f)) {
      ++differ;
      if (which.empty()) which = f.string();
    }
  }
  std::string detail = std::to_string(files.size() - differ) + "/" +
                       std::to_string(files.size()) + " files byte-identical";
  if (!which.empty()) detail += "; first difference: " + which;
  return {differ == 0 && a.exit_code == b.exit_code, detail};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance runner"};
  std::string cli, config, work;
  app.add_option("--cli", cli, "Path of the lcam executable")->required();
  app.add_option("--config", config, "Run config for the full experiment")->required();
  app.add_option("--work", work, "Scratch directory for the two runs")->required();
  CLI11_PARSE(app, argc, argv);

  std::map<std::string, Outcome> results;
  const auto report = [&](const std::string& id, const Outcome& o) {
    results[id] = o;
    std::printf("%s criterion %s: %s\n", o.passed ? "PASS" : "FAIL", id.c_str(),
                o.detail.c_str());
    std::fflush(stdout);
  };
  // A criterion that throws is reported as failed; the others still run.
  const auto check = [&](const std::string& id, const std::function<Outcome()>& fn) {
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    report(id, o);
  };

  check("1", GradientChecks);
  check("2", LayerCamChecks);
  check("3", RoundTrips);

  const Run first = RunCli(cli, config, fs::path(work) / "run-a");
  experiment::ResultTable trends;
  if (fs::exists(first.dir / "tables/trends.csv")) {
    trends = experiment::ResultTable::FromCsv(Slurp(first.dir / "tables/trends.csv"));
  }
  const std::string run_note = "cli exit " + std::to_string(first.exit_code) + ", " +
                               Fmt("%.0fs", first.seconds);
  Outcome c4 = TrendCriterion(trends, "4");
  c4.passed = c4.passed && first.seconds < 30 * 60;
  c4.detail += "; " + run_note;
  report("4", c4);
  report("5", TrendCriterion(trends, "5"));
  report("6", TrendCriterion(trends, "6"));
  report("7", TrendCriterion(trends, "7"));
  check("8", ObjectivesAgree);

  const Run second = RunCli(cli, config, fs::path(work) / "run-b");
  check("9", [&] { return Reproducible(first, second); });

  int failed = 0;
  for (const auto& [id, o] : results) failed += !o.passed;
  std::printf("%d/%zu criteria passed\n", static_cast<int>(results.size()) - failed,
              results.size());
  return failed == 0 ? 0 : 1;
}
