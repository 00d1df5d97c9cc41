/*
 * Copyright 2026 The OCAE Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <filesystem>

#include "doctest.h"
#include "ocae/error.h"
#include "ocae/pipeline.h"
#include "test_support.h"

namespace ocae {
namespace {

namespace fs = std::filesystem;

PipelineOptions Fast() {
  PipelineOptions o;
  o.params = HyperParams{16, 32, 3e-3, 3};
  return o;
}

TEST_CASE("pipeline writes a loadable bundle and reports its stages") {
  testing::TempDir dir;
  std::vector<PipelineStage> stages;
  const auto frames = testing::NormalFrames(400, 1);
  const PipelineResult r = RunTrainingPipeline(
      frames, Fast(), dir / "bundle",
      [&](PipelineStage s) { stages.push_back(s); });
  CHECK(stages.back() == PipelineStage::kDeploying);
  CHECK(std::find(stages.begin(), stages.end(), PipelineStage::kTraining) !=
        stages.end());
  CHECK_FALSE(r.tune.has_value());
  CHECK(r.threshold.n == frames.size());
  const DetectorBundle b = LoadBundle(dir / "bundle");
  CHECK(b.model_id == r.files.model_id);
  CHECK(b.model.hidden_dim() == 16);
  // The threshold is calibrated with the deployed float model on all rows.
  const auto scaled = TransformAll(b.scaler, frames);
  CHECK(Calibrate(ScoreAll(b.model, scaled)).value == b.threshold.value);
}

TEST_CASE("pipeline enforces the row floor before training") {
  testing::TempDir dir;
  PipelineOptions o = Fast();
  o.min_rows = 500;
  try {
    RunTrainingPipeline(testing::NormalFrames(10, 1), o, dir / "b");
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kInsufficientData);
    CHECK(std::string(e.what()).find("insufficient data") != std::string::npos);
  }
  CHECK_FALSE(fs::exists(dir / "b" / "model.ocae"));
}

TEST_CASE("tuned pipeline is byte-for-byte reproducible") {
  testing::TempDir dir;
  const auto frames = testing::NormalFrames(300, 2);
  PipelineOptions o = Fast();
  o.tune = true;
  o.trials = 3;
  o.seed = 7;
  const PipelineResult a = RunTrainingPipeline(frames, o, dir / "a");
  const PipelineResult b = RunTrainingPipeline(frames, o, dir / "b");
  REQUIRE(a.tune.has_value());
  CHECK(a.params == a.tune->best);
  for (const char* name : {kModelFileName, kScalerFileName, kThresholdFileName}) {
    CHECK(ReadFileBytes(dir / "a" / name) == ReadFileBytes(dir / "b" / name));
  }
}

TEST_CASE("TrainFromCsv cleans before training") {
  testing::TempDir dir;
  const auto frames = testing::NormalFrames(300, 3);
  std::ostringstream csv;
  WriteRowsCsv(csv, InjectCorruption(frames, CorruptionConfig{0.1, 3}));
  testing::WriteText(dir / "data.csv", csv.str());
  const PipelineResult r = TrainFromCsv(dir / "data.csv", Fast(), dir / "b");
  CHECK(r.clean_report.rows_in == 300);
  CHECK(r.clean_report.rows_dropped_sentinel > 0);
  CHECK(r.threshold.n == r.clean_report.rows_out);
}

}  // namespace
}  // namespace ocae
