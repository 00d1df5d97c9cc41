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

#pragma once

// End-to-end training workflow shared by the CLI and the monitor's retrain
// job: clean -> fit scaler -> (tune) -> train -> calibrate -> save bundle.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string_view>

#include "ocae/autoencoder.h"
#include "ocae/detector.h"
#include "ocae/model_store.h"
#include "ocae/preprocess.h"
#include "ocae/tuner.h"

namespace ocae {

enum class PipelineStage { kCollecting, kTuning, kTraining, kDeploying };

std::string_view PipelineStageName(PipelineStage stage);

struct PipelineOptions {
  bool tune = false;
  // Used when tune is false.
  HyperParams params;
  int trials = 10;
  std::uint64_t seed = 42;
  int patience = 5;
  double val_fraction = 0.10;
  int threads = 0;
  Layout layout = Layout::kChannelTokens;
  // Cleaned-row floor enforced before any training starts.
  std::size_t min_rows = kMinTrainingRows;
};

struct PipelineResult {
  CleanReport clean_report;
  std::size_t rejected_lines = 0;
  ChannelScaler scaler;
  std::optional<TuneResult> tune;
  HyperParams params;
  std::optional<TrainResult> train;
  Threshold threshold;
  BundleFiles files;
};

using StageCallback = std::function<void(PipelineStage)>;

// Trains on already-cleaned frames and writes the bundle to `bundle_dir`.
PipelineResult RunTrainingPipeline(std::span<const SensorFrame> frames,
                                   const PipelineOptions& options,
                                   const std::filesystem::path& bundle_dir,
                                   const StageCallback& on_stage = {});

// Reads and cleans the CSV first (the collecting stage).
PipelineResult TrainFromCsv(const std::filesystem::path& csv_path,
                            const PipelineOptions& options,
                            const std::filesystem::path& bundle_dir,
                            const StageCallback& on_stage = {});

}  // namespace ocae
