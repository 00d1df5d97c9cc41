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

#include <cstdint>
#include <filesystem>
#include <vector>

#include "ocae/preprocess.h"

namespace ocae {

struct TailBatch {
  std::vector<SensorFrame> frames;  // cleaned
  std::uint64_t rows_consumed = 0;  // data rows read, including dropped ones
  std::size_t rejected = 0;         // malformed lines among rows_consumed
  CleanReport report;
  bool rotated = false;
};

// Incrementally follows a growing sensor CSV. Only complete lines are
// consumed; a trailing partial line waits for the next poll. A file that
// shrinks is treated as rotated and re-read from the start.
class CsvTailer {
 public:
  // Rows with index < last_row are treated as already consumed.
  explicit CsvTailer(std::filesystem::path path, std::uint64_t last_row = 0);

  // An absent file yields an empty batch. Read failures throw Error(kIo).
  TailBatch Poll();

  std::uint64_t last_row() const { return last_row_; }
  std::uintmax_t offset() const { return offset_; }
  const std::filesystem::path& path() const { return path_; }

 private:
  void Reset();

  std::filesystem::path path_;
  std::uintmax_t offset_ = 0;
  std::uint64_t last_row_ = 0;
  std::uint64_t skip_ = 0;
  bool at_file_start_ = true;
};

}  // namespace ocae
