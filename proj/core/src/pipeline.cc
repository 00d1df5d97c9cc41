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

#include "ocae/pipeline.h"

#include <string>

#include "ocae/error.h"

namespace ocae {

std::string_view PipelineStageName(PipelineStage stage) {
  switch (stage) {
    case PipelineStage::kCollecting:
      return "collecting";
    case PipelineStage::kTuning:
      return "tuning";
    case PipelineStage::kTraining:
      return "training";
    case PipelineStage::kDeploying:
      return "deploying";
  }
  return "unknown";
}

PipelineResult RunTrainingPipeline(std::span<const SensorFrame> frames,
                                   const PipelineOptions& options,
                                   const std::filesystem::path& bundle_dir,
                                   const StageCallback& on_stage) {
  auto notify = [&on_stage](PipelineStage stage) {
    if (on_stage) on_stage(stage);
  };
  const std::size_t floor = std::max(options.min_rows, kMinTrainingRows);
  if (frames.size() < floor) {
    throw Error(ErrorKind::kInsufficientData,
                "insufficient data: " + std::to_string(frames.size()) +
                    " clean rows, need at least " + std::to_string(floor));
  }

  PipelineResult result;
  result.clean_report.rows_in = frames.size();
  result.clean_report.rows_out = frames.size();
  result.scaler = ChannelScaler::Fit(frames);
  const std::vector<ChannelVector> scaled = TransformAll(result.scaler, frames);

  std::uint64_t train_seed = options.seed;
  result.params = options.params;
  if (options.tune) {
    notify(PipelineStage::kTuning);
    TuneOptions tune_options;
    tune_options.n_trials = options.trials;
    tune_options.seed = options.seed;
    tune_options.patience = options.patience;
    tune_options.val_fraction = options.val_fraction;
    tune_options.threads = options.threads;
    result.tune = Tune(scaled, tune_options);
    result.params = result.tune->best;
    // Same seed as the winning trial, so the final model is that trial's.
    train_seed = options.seed + static_cast<std::uint64_t>(result.tune->best_trial);
  }

  notify(PipelineStage::kTraining);
  const TrainConfig config = MakeTrainConfig(
      result.params, train_seed, options.patience, options.val_fraction);
  result.train = Train(AttentionAutoencoder::Init(result.params.hidden_dim,
                                                  train_seed, options.layout),
                       scaled, config);

  // Threshold over every training row, scored by the deployed float model.
  const AttentionAutoencoder deployed = result.train->model.RoundedToFloat();
  result.threshold = Calibrate(ScoreAll(deployed, scaled));

  notify(PipelineStage::kDeploying);
  result.files = SaveBundle(bundle_dir, deployed, result.scaler,
                            result.threshold.value);
  return result;
}

PipelineResult TrainFromCsv(const std::filesystem::path& csv_path,
                            const PipelineOptions& options,
                            const std::filesystem::path& bundle_dir,
                            const StageCallback& on_stage) {
  if (on_stage) on_stage(PipelineStage::kCollecting);
  const ParseResult parsed = ReadCsvFile(csv_path);
  const CleanResult cleaned = Clean(parsed.rows);
  PipelineResult result =
      RunTrainingPipeline(cleaned.frames, options, bundle_dir, on_stage);
  result.clean_report = cleaned.report;
  result.rejected_lines = parsed.rejects.size();
  return result;
}

}  // namespace ocae
