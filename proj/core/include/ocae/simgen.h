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

// Synthetic seven-channel sensor streams, micro-anomaly and corruption
// injection, and detection metrics.

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "ocae/preprocess.h"

namespace ocae {

struct ChannelModel {
  double mean = 0.0;
  double sigma = 0.0;            // white noise, native units
  double drift_amplitude = 0.0;  // slow sinusoid
  double drift_period_s = 1800.0;
  double drift_phase = 0.0;      // radians
  double resolution = 0.0;       // quantization step; 0 disables
};

// Stirring cycles / reagent additions: a step offset held for
// `duration_s`, starting as a Poisson process.
struct EventModel {
  double rate_per_hour = 0.0;
  double duration_s = 60.0;
  ChannelVector offsets{};
};

// Isolated single-sample transients on a random channel, sized in units of
// that channel's drift amplitude. Part of normal operation.
struct SpikeModel {
  double rate = 0.0;  // per-row probability
  double min_amplitudes = 2.0;
  double max_amplitudes = 4.0;
};

struct GeneratorConfig {
  double rate_hz = 1.0;
  std::int64_t start_epoch_s = 1735689600;  // 2025-01-01T00:00:00Z
  std::array<ChannelModel, kNumChannels> channels{};
  EventModel events;
  SpikeModel spikes;
  std::uint64_t seed = 42;

  void Validate() const;

  std::string ToJson() const;
  static GeneratorConfig FromJson(std::string_view json);
  static GeneratorConfig Load(const std::filesystem::path& path);
};

// Preset shipped as config/generator_default.json.
GeneratorConfig DefaultGeneratorConfig();

// ISO-8601 UTC with millisecond precision when needed.
std::string FormatTimestamp(double epoch_seconds);

// channel_i(t) = mean_i + drift_i sin(2 pi t / period_i + phase_i)
//                + noise_i(t) + active event offsets, quantized.
// Frames carry seq = first_seq + k and timestamps 1/rate_hz apart.
std::vector<SensorFrame> Generate(const GeneratorConfig& config,
                                  std::size_t n_rows,
                                  std::uint64_t first_seq = 0);

struct LabeledStream {
  std::vector<SensorFrame> frames;
  std::vector<bool> labels;
};

struct InjectionConfig {
  double rate = 0.05;
  double magnitude_lo = 0.02;
  double magnitude_hi = 0.03;
  std::uint64_t seed = 42;
};

// Each row is selected independently with probability `rate`; a selected
// row has pH or conductivity (fair coin) scaled by (1 +/- m), with m uniform
// in [magnitude_lo, magnitude_hi].
LabeledStream InjectAnomalies(std::vector<SensorFrame> frames,
                              const InjectionConfig& config);

inline constexpr std::string_view kDisconnectedProbe =
    "DS18B20 error: not connected";

struct CorruptionConfig {
  double rate = 0.0;
  std::uint64_t seed = 42;
};

// Replaces one channel cell of each selected row with "255" or the probe
// error text. Rows whose label is true are never corrupted when `protect`
// is given.
std::vector<RawRow> InjectCorruption(std::span<const SensorFrame> frames,
                                     const CorruptionConfig& config,
                                     const std::vector<bool>* protect =
                                         nullptr);

void WriteRowsCsv(std::ostream& out, std::span<const RawRow> rows);
void WriteLabelsCsv(std::ostream& out, std::span<const SensorFrame> frames,
                    const std::vector<bool>& labels);

struct LabelRecord {
  std::uint64_t seq = 0;
  bool label = false;
};
std::vector<LabelRecord> ReadLabelsCsv(const std::filesystem::path& path);

struct Metrics {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t tn = 0;
  std::size_t fn = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;

  std::size_t total() const { return tp + fp + tn + fn; }
  std::string ToJson() const;
};

// Position-wise confusion counts; 0/0 ratios are reported as 0.
Metrics Evaluate(const std::vector<bool>& labels,
                 const std::vector<bool>& predictions);

}  // namespace ocae
