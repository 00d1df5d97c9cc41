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

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>

#include "ocae/autoencoder.h"
#include "ocae/preprocess.h"

namespace ocae {

// Decision threshold on reconstruction error: mean + 2 * population std of
// the calibration errors. n == 0 marks the fallback default used when no
// threshold file is deployed.
struct Threshold {
  double value = 0.0;
  double mean = 0.0;
  double std = 0.0;
  std::size_t n = 0;
  bool is_default = false;
};

inline constexpr double kDefaultThreshold = 0.02;
inline constexpr double kThresholdSigmas = 2.0;

Threshold Calibrate(std::span<const double> errors);
Threshold DefaultThreshold();

// Threshold from a plain value (as read from a threshold file).
Threshold ThresholdFromValue(double value);

struct Verdict {
  double score = 0.0;
  bool is_anomaly = false;
};

// Strict comparison: a score equal to the threshold is normal.
inline Verdict Classify(double score, const Threshold& threshold) {
  return Verdict{score, score > threshold.value};
}

double Score(const AttentionAutoencoder& model, const ChannelScaler& scaler,
             const SensorFrame& frame);

std::vector<double> ScoreAll(const AttentionAutoencoder& model,
                             std::span<const ChannelVector> scaled);

// Threshold file: one decimal number and a newline.
std::string FormatThreshold(double value);
double ParseThreshold(std::string_view text);
void SaveThreshold(const std::filesystem::path& path, double value);
double LoadThreshold(const std::filesystem::path& path);

}  // namespace ocae
