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

// Sensor CSV parsing, corrupted-row scrubbing and per-channel min-max scaling.

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace ocae {

inline constexpr std::size_t kNumChannels = 7;

// Column 0 is the timestamp, column 1 the row sequence number; channels
// follow in this fixed order.
inline constexpr std::size_t kFirstChannelColumn = 2;
inline constexpr std::size_t kNumColumns = kFirstChannelColumn + kNumChannels;

inline constexpr std::array<std::string_view, kNumColumns> kCsvColumns = {
    "timestamp",  "seq",          "ph",      "liq_temp_c", "cond_us_cm",
    "amb_temp_c", "humidity_pct", "co2_ppm", "light_lux"};

// Index of each channel within a ChannelVector.
enum Channel : std::size_t {
  kPh = 0,
  kLiquidTemp = 1,
  kConductivity = 2,
  kAmbientTemp = 3,
  kHumidity = 4,
  kCo2 = 5,
  kLight = 6,
};

inline constexpr std::string_view kSaturationSentinel = "255";
inline constexpr std::string_view kProbeErrorMarker = "DS18B20 error";

using ChannelVector = std::array<double, kNumChannels>;

struct SensorFrame {
  std::string timestamp;  // ISO-8601, kept verbatim from the source
  std::uint64_t seq = 0;
  ChannelVector channels{};

  friend bool operator==(const SensorFrame&, const SensorFrame&) = default;
};

struct RawRow {
  std::size_t line = 0;  // 1-based line number in the source text
  std::vector<std::string> cells;

  friend bool operator==(const RawRow&, const RawRow&) = default;
};

struct ParseResult {
  std::vector<RawRow> rows;
  // Lines whose cell count differs from kNumColumns.
  std::vector<RawRow> rejects;
  bool has_header = false;
};

// Splits comma-separated text into rows. A first line whose seq cell is not
// numeric is treated as a header and skipped. Blank lines are ignored.
ParseResult ParseCsv(std::string_view text);
ParseResult ParseCsv(std::istream& in);
ParseResult ReadCsvFile(const std::filesystem::path& path);

// Splits a single line (without its terminator) into cells.
std::vector<std::string> SplitCsvLine(std::string_view line);

// True when `cell` (after trimming) is a sequence number, i.e. the line is
// data rather than a header.
bool LooksLikeSeq(std::string_view cell);

struct CleanReport {
  std::size_t rows_in = 0;
  std::size_t rows_dropped_sentinel = 0;
  std::size_t rows_dropped_nonnumeric = 0;
  std::size_t rows_out = 0;

  CleanReport& operator+=(const CleanReport& other);
  friend bool operator==(const CleanReport&, const CleanReport&) = default;
};

enum class RowStatus { kOk, kSentinel, kNonNumeric };

// Classifies one row and, when it is clean, fills `frame`.
RowStatus ClassifyRow(const RawRow& row, SensorFrame* frame);

struct CleanResult {
  std::vector<SensorFrame> frames;
  CleanReport report;
};

// Drops rows carrying a sentinel cell ("255" exactly, or a DS18B20 error
// message) or any cell that does not parse as a finite number.
CleanResult Clean(std::span<const RawRow> rows);

// CSV line for a frame, without a trailing newline. Channels use a fixed
// number of decimals per channel so a reading of 255.0 never prints as the
// bare saturation sentinel.
std::string FormatFrame(const SensorFrame& frame);
std::string CsvHeaderLine();
RawRow FrameToRow(const SensorFrame& frame);
void WriteCsv(std::ostream& out, std::span<const SensorFrame> frames);

class ChannelScaler {
 public:
  ChannelScaler() = default;
  ChannelScaler(const ChannelVector& mins, const ChannelVector& maxs);

  // Exact column-wise extrema. Requires at least two frames.
  static ChannelScaler Fit(std::span<const SensorFrame> frames);

  // (x - min) / (max - min); a zero-width channel maps to 0. Not clamped.
  ChannelVector Transform(const ChannelVector& raw) const;
  ChannelVector Transform(const SensorFrame& frame) const {
    return Transform(frame.channels);
  }

  const ChannelVector& mins() const { return mins_; }
  const ChannelVector& maxs() const { return maxs_; }

  // {"version":1,"mins":[...],"maxs":[...]} with round-trip precision.
  std::string ToJson() const;
  static ChannelScaler FromJson(std::string_view json);
  void Save(const std::filesystem::path& path) const;
  static ChannelScaler Load(const std::filesystem::path& path);

  friend bool operator==(const ChannelScaler&,
                         const ChannelScaler&) = default;

 private:
  ChannelVector mins_{};
  ChannelVector maxs_{};
};

std::vector<ChannelVector> TransformAll(const ChannelScaler& scaler,
                                        std::span<const SensorFrame> frames);

// Token layout of the model input. Channel tokens: one token per channel
// holding a single scalar (7 x 1). Time axis: a single token holding the
// whole vector (1 x 7).
enum class Layout : std::uint8_t {
  kTimeAxis = 0,
  kChannelTokens = 1,
};

using TokenMatrix = Eigen::MatrixXd;  // tokens x token_dim

TokenMatrix ToModelInput(const ChannelVector& scaled,
                         Layout layout = Layout::kChannelTokens);
ChannelVector FlattenTokens(const TokenMatrix& tokens);

}  // namespace ocae
