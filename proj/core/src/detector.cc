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

#include "ocae/detector.h"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "ocae/error.h"

namespace ocae {

Threshold Calibrate(std::span<const double> errors) {
  if (errors.size() < 2) {
    throw Error(ErrorKind::kInsufficientData,
                "threshold calibration needs at least 2 errors");
  }
  const auto n = static_cast<double>(errors.size());
  double sum = 0.0;
  for (double e : errors) sum += e;
  const double mean = sum / n;
  double sq = 0.0;
  for (double e : errors) sq += (e - mean) * (e - mean);
  const double std = std::sqrt(sq / n);
  return Threshold{mean + kThresholdSigmas * std, mean, std, errors.size(),
                   false};
}

Threshold DefaultThreshold() {
  Threshold t = ThresholdFromValue(kDefaultThreshold);
  t.is_default = true;
  return t;
}

Threshold ThresholdFromValue(double value) {
  return Threshold{value, value, 0.0, 0, false};
}

double Score(const AttentionAutoencoder& model, const ChannelScaler& scaler,
             const SensorFrame& frame) {
  return model.ReconstructionError(scaler.Transform(frame));
}

std::vector<double> ScoreAll(const AttentionAutoencoder& model,
                             std::span<const ChannelVector> scaled) {
  std::vector<double> scores;
  scores.reserve(scaled.size());
  for (const ChannelVector& x : scaled) {
    scores.push_back(model.ReconstructionError(x));
  }
  return scores;
}

std::string FormatThreshold(double value) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc()) {
    throw Error(ErrorKind::kInvalidArgument, "cannot format threshold");
  }
  return std::string(buf, ptr) + "\n";
}

double ParseThreshold(std::string_view text) {
  const auto begin = text.find_first_not_of(" \t\r\n");
  const auto end = text.find_last_not_of(" \t\r\n");
  if (begin == std::string_view::npos) {
    throw Error(ErrorKind::kSchema, "threshold file is empty");
  }
  text = text.substr(begin, end - begin + 1);
  double value = 0.0;
  const auto [ptr, ec] =
      std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size() ||
      !std::isfinite(value) || value < 0.0) {
    throw Error(ErrorKind::kSchema,
                "threshold file does not hold a non-negative number");
  }
  return value;
}

void SaveThreshold(const std::filesystem::path& path, double value) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << FormatThreshold(value);
  if (!out) throw Error(ErrorKind::kIo, "cannot write " + path.string());
}

double LoadThreshold(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIo, "cannot open " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return ParseThreshold(buffer.str());
}

}  // namespace ocae
