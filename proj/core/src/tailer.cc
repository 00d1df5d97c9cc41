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

#include "ocae/tailer.h"

#include <fstream>
#include <string>
#include <system_error>

#include "ocae/error.h"

namespace ocae {

CsvTailer::CsvTailer(std::filesystem::path path, std::uint64_t last_row)
    : path_(std::move(path)), last_row_(last_row), skip_(last_row) {}

void CsvTailer::Reset() {
  offset_ = 0;
  last_row_ = 0;
  skip_ = 0;
  at_file_start_ = true;
}

TailBatch CsvTailer::Poll() {
  TailBatch batch;
  std::error_code ec;
  if (!std::filesystem::exists(path_, ec)) return batch;
  const std::uintmax_t size = std::filesystem::file_size(path_, ec);
  if (ec) {
    throw Error(ErrorKind::kIo, "cannot stat " + path_.string() + ": " +
                                    ec.message());
  }
  if (size < offset_) {
    Reset();
    batch.rotated = true;
  }
  if (size == offset_) return batch;

  std::ifstream in(path_, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIo, "cannot open " + path_.string());
  in.seekg(static_cast<std::streamoff>(offset_));
  std::string chunk(static_cast<std::size_t>(size - offset_), '\0');
  in.read(chunk.data(), static_cast<std::streamsize>(chunk.size()));
  chunk.resize(static_cast<std::size_t>(in.gcount()));
  if (in.bad()) throw Error(ErrorKind::kIo, "cannot read " + path_.string());

  const auto last_newline = chunk.rfind('\n');
  if (last_newline == std::string::npos) return batch;
  offset_ += last_newline + 1;

  std::vector<RawRow> rows;
  std::size_t pos = 0;
  while (pos <= last_newline) {
    const auto eol = chunk.find('\n', pos);
    const std::string_view line(chunk.data() + pos, eol - pos);
    pos = eol + 1;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    RawRow row{0, SplitCsvLine(line)};
    if (at_file_start_) {
      at_file_start_ = false;
      if (row.cells.size() == kNumColumns && !LooksLikeSeq(row.cells[1])) {
        continue;  // header
      }
    }
    if (skip_ > 0) {
      --skip_;
      continue;
    }
    ++batch.rows_consumed;
    if (row.cells.size() != kNumColumns) {
      ++batch.rejected;
      ++batch.report.rows_in;
      ++batch.report.rows_dropped_nonnumeric;
      continue;
    }
    rows.push_back(std::move(row));
  }
  CleanResult cleaned = Clean(rows);
  batch.report += cleaned.report;
  batch.frames = std::move(cleaned.frames);
  last_row_ += batch.rows_consumed;
  return batch;
}

}  // namespace ocae
