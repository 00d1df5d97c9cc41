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

#include "ocae/preprocess.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iterator>
#include <ostream>
#include <sstream>

#include "json.hpp"
#include "ocae/error.h"

namespace ocae {
namespace {

constexpr std::array<int, kNumChannels> kChannelDecimals = {3, 4, 1, 2,
                                                            2, 1, 1};

std::string_view Trim(std::string_view s) {
  constexpr std::string_view kSpace = " \t\r\n";
  const auto begin = s.find_first_not_of(kSpace);
  if (begin == std::string_view::npos) return {};
  const auto end = s.find_last_not_of(kSpace);
  return s.substr(begin, end - begin + 1);
}

bool ParseFiniteDouble(std::string_view cell, double* out) {
  cell = Trim(cell);
  if (cell.empty()) return false;
  if (cell.front() == '+') cell.remove_prefix(1);
  double value = 0.0;
  const auto [ptr, ec] =
      std::from_chars(cell.data(), cell.data() + cell.size(), value);
  if (ec != std::errc() || ptr != cell.data() + cell.size()) return false;
  if (!std::isfinite(value)) return false;
  *out = value;
  return true;
}

bool ParseSeq(std::string_view cell, std::uint64_t* out) {
  cell = Trim(cell);
  if (cell.empty()) return false;
  std::uint64_t value = 0;
  const auto [ptr, ec] =
      std::from_chars(cell.data(), cell.data() + cell.size(), value);
  if (ec != std::errc() || ptr != cell.data() + cell.size()) return false;
  *out = value;
  return true;
}

bool IsSentinelCell(std::string_view cell) {
  return Trim(cell) == kSaturationSentinel ||
         cell.find(kProbeErrorMarker) != std::string_view::npos;
}

void AppendFixed(std::string& out, double value, int decimals) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value,
                                       std::chars_format::fixed, decimals);
  if (ec != std::errc()) {
    throw Error(ErrorKind::kInvalidArgument, "cannot format channel value");
  }
  out.append(buf, ptr);
}

}  // namespace

std::vector<std::string> SplitCsvLine(std::string_view line) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      cells.emplace_back(line.substr(start));
      break;
    }
    cells.emplace_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  if (!cells.empty() && !cells.back().empty() && cells.back().back() == '\r') {
    cells.back().pop_back();
  }
  return cells;
}

bool LooksLikeSeq(std::string_view cell) {
  std::uint64_t unused = 0;
  return ParseSeq(cell, &unused);
}

ParseResult ParseCsv(std::string_view text) {
  ParseResult result;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  bool first_content_line = true;
  while (pos < text.size()) {
    auto eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    const std::string_view line = text.substr(pos, eol - pos);
    pos = eol + 1;
    ++line_no;
    if (Trim(line).empty()) continue;

    RawRow row{line_no, SplitCsvLine(line)};
    if (first_content_line) {
      first_content_line = false;
      if (row.cells.size() < 2 || !LooksLikeSeq(row.cells[1])) {
        if (row.cells.size() == kNumColumns) {
          result.has_header = true;
          continue;
        }
      }
    }
    if (row.cells.size() != kNumColumns) {
      result.rejects.push_back(std::move(row));
    } else {
      result.rows.push_back(std::move(row));
    }
  }
  return result;
}

ParseResult ParseCsv(std::istream& in) {
  if (!in) throw Error(ErrorKind::kIo, "unreadable CSV stream");
  std::string text{std::istreambuf_iterator<char>(in),
                   std::istreambuf_iterator<char>()};
  if (in.bad()) throw Error(ErrorKind::kIo, "error reading CSV stream");
  return ParseCsv(std::string_view(text));
}

ParseResult ReadCsvFile(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorKind::kIo, "cannot open CSV file " + path.string());
  }
  return ParseCsv(in);
}

CleanReport& CleanReport::operator+=(const CleanReport& other) {
  rows_in += other.rows_in;
  rows_dropped_sentinel += other.rows_dropped_sentinel;
  rows_dropped_nonnumeric += other.rows_dropped_nonnumeric;
  rows_out += other.rows_out;
  return *this;
}

RowStatus ClassifyRow(const RawRow& row, SensorFrame* frame) {
  if (row.cells.size() != kNumColumns) return RowStatus::kNonNumeric;
  for (std::size_t c = kFirstChannelColumn; c < kNumColumns; ++c) {
    if (IsSentinelCell(row.cells[c])) return RowStatus::kSentinel;
  }
  SensorFrame parsed;
  if (!ParseSeq(row.cells[1], &parsed.seq)) return RowStatus::kNonNumeric;
  for (std::size_t i = 0; i < kNumChannels; ++i) {
    if (!ParseFiniteDouble(row.cells[kFirstChannelColumn + i],
                           &parsed.channels[i])) {
      return RowStatus::kNonNumeric;
    }
  }
  parsed.timestamp = std::string(Trim(row.cells[0]));
  if (frame != nullptr) *frame = std::move(parsed);
  return RowStatus::kOk;
}

CleanResult Clean(std::span<const RawRow> rows) {
  CleanResult result;
  result.report.rows_in = rows.size();
  result.frames.reserve(rows.size());
  for (const RawRow& row : rows) {
    SensorFrame frame;
    switch (ClassifyRow(row, &frame)) {
      case RowStatus::kOk:
        result.frames.push_back(std::move(frame));
        break;
      case RowStatus::kSentinel:
        ++result.report.rows_dropped_sentinel;
        break;
      case RowStatus::kNonNumeric:
        ++result.report.rows_dropped_nonnumeric;
        break;
    }
  }
  result.report.rows_out = result.frames.size();
  return result;
}

std::string CsvHeaderLine() {
  std::string line;
  for (std::size_t c = 0; c < kNumColumns; ++c) {
    if (c > 0) line.push_back(',');
    line.append(kCsvColumns[c]);
  }
  return line;
}

std::string FormatFrame(const SensorFrame& frame) {
  std::string line = frame.timestamp;
  line.push_back(',');
  line.append(std::to_string(frame.seq));
  for (std::size_t i = 0; i < kNumChannels; ++i) {
    line.push_back(',');
    AppendFixed(line, frame.channels[i], kChannelDecimals[i]);
  }
  return line;
}

RawRow FrameToRow(const SensorFrame& frame) {
  return RawRow{0, SplitCsvLine(FormatFrame(frame))};
}

void WriteCsv(std::ostream& out, std::span<const SensorFrame> frames) {
  out << CsvHeaderLine() << '\n';
  for (const SensorFrame& frame : frames) out << FormatFrame(frame) << '\n';
}

ChannelScaler::ChannelScaler(const ChannelVector& mins,
                             const ChannelVector& maxs)
    : mins_(mins), maxs_(maxs) {
  for (std::size_t i = 0; i < kNumChannels; ++i) {
    if (!std::isfinite(mins[i]) || !std::isfinite(maxs[i]) ||
        mins[i] > maxs[i]) {
      throw Error(ErrorKind::kSchema,
                  "scaler channel " + std::to_string(i) +
                      " has invalid range");
    }
  }
}

ChannelScaler ChannelScaler::Fit(std::span<const SensorFrame> frames) {
  if (frames.size() < 2) {
    throw Error(ErrorKind::kInsufficientData,
                "scaler needs at least 2 frames, got " +
                    std::to_string(frames.size()));
  }
  ChannelVector mins = frames.front().channels;
  ChannelVector maxs = frames.front().channels;
  for (const SensorFrame& frame : frames) {
    for (std::size_t i = 0; i < kNumChannels; ++i) {
      mins[i] = std::min(mins[i], frame.channels[i]);
      maxs[i] = std::max(maxs[i], frame.channels[i]);
    }
  }
  return ChannelScaler(mins, maxs);
}

ChannelVector ChannelScaler::Transform(const ChannelVector& raw) const {
  ChannelVector out{};
  for (std::size_t i = 0; i < kNumChannels; ++i) {
    const double width = maxs_[i] - mins_[i];
    out[i] = width > 0.0 ? (raw[i] - mins_[i]) / width : 0.0;
  }
  return out;
}

std::string ChannelScaler::ToJson() const {
  nlohmann::ordered_json j;
  j["version"] = 1;
  j["mins"] = mins_;
  j["maxs"] = maxs_;
  return j.dump();
}

ChannelScaler ChannelScaler::FromJson(std::string_view json) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorKind::kSchema, std::string("scaler JSON: ") + e.what());
  }
  if (!j.is_object() || !j.contains("version") ||
      j["version"] != 1) {
    throw Error(ErrorKind::kSchema, "scaler JSON: unsupported version");
  }
  auto read_vector = [&j](const char* key) {
    if (!j.contains(key) || !j[key].is_array() ||
        j[key].size() != kNumChannels) {
      throw Error(ErrorKind::kSchema,
                  std::string("scaler JSON: '") + key + "' must hold " +
                      std::to_string(kNumChannels) + " numbers");
    }
    ChannelVector v{};
    for (std::size_t i = 0; i < kNumChannels; ++i) {
      if (!j[key][i].is_number()) {
        throw Error(ErrorKind::kSchema,
                    std::string("scaler JSON: non-numeric '") + key + "'");
      }
      v[i] = j[key][i].get<double>();
    }
    return v;
  };
  return ChannelScaler(read_vector("mins"), read_vector("maxs"));
}

void ChannelScaler::Save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << ToJson() << '\n';
  if (!out) throw Error(ErrorKind::kIo, "cannot write " + path.string());
}

ChannelScaler ChannelScaler::Load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIo, "cannot open " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return FromJson(buffer.str());
}

std::vector<ChannelVector> TransformAll(const ChannelScaler& scaler,
                                        std::span<const SensorFrame> frames) {
  std::vector<ChannelVector> out;
  out.reserve(frames.size());
  for (const SensorFrame& frame : frames) {
    out.push_back(scaler.Transform(frame));
  }
  return out;
}

TokenMatrix ToModelInput(const ChannelVector& scaled, Layout layout) {
  if (layout == Layout::kChannelTokens) {
    TokenMatrix tokens(kNumChannels, 1);
    for (std::size_t i = 0; i < kNumChannels; ++i) tokens(i, 0) = scaled[i];
    return tokens;
  }
  TokenMatrix tokens(1, kNumChannels);
  for (std::size_t i = 0; i < kNumChannels; ++i) tokens(0, i) = scaled[i];
  return tokens;
}

ChannelVector FlattenTokens(const TokenMatrix& tokens) {
  if (static_cast<std::size_t>(tokens.size()) != kNumChannels) {
    throw Error(ErrorKind::kInvalidArgument,
                "token matrix must hold exactly 7 scalars");
  }
  ChannelVector out{};
  // Row-major walk covers both 7x1 and 1x7.
  std::size_t k = 0;
  for (Eigen::Index r = 0; r < tokens.rows(); ++r) {
    for (Eigen::Index c = 0; c < tokens.cols(); ++c) out[k++] = tokens(r, c);
  }
  return out;
}

}  // namespace ocae
