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

// Deployable detector bundle: model.ocae (binary weights), scaler.json and
// threshold.txt in one directory.
//
// model.ocae layout, little-endian:
//   0   4  magic "OCAE"
//   4   2  format version (1)
//   6   1  layout (1 = channel tokens, 0 = time axis)
//   7   2  hidden_dim
//   9   2  channel count (7)
//   11  4*P parameters as float32, in ParameterLayout order
//   ..  4  CRC-32 of every preceding byte

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "ocae/autoencoder.h"
#include "ocae/detector.h"
#include "ocae/preprocess.h"

namespace ocae {

inline constexpr std::array<char, 4> kModelMagic = {'O', 'C', 'A', 'E'};
inline constexpr std::uint16_t kModelFormatVersion = 1;
inline constexpr std::size_t kModelHeaderBytes = 11;
inline constexpr std::size_t kModelTrailerBytes = 4;

inline constexpr const char* kModelFileName = "model.ocae";
inline constexpr const char* kScalerFileName = "scaler.json";
inline constexpr const char* kThresholdFileName = "threshold.txt";

struct ModelFileHeader {
  std::array<char, 4> magic = kModelMagic;
  std::uint16_t version = kModelFormatVersion;
  Layout layout = Layout::kChannelTokens;
  std::uint16_t hidden_dim = 0;
  std::uint16_t n_channels = kNumChannels;
};

// 11 + 4 * parameter_count + 4.
std::size_t ModelFileSize(int hidden_dim,
                          Layout layout = Layout::kChannelTokens);

std::vector<std::uint8_t> SerializeModel(const AttentionAutoencoder& model);
ModelFileHeader ParseModelHeader(std::span<const std::uint8_t> bytes);
// Rejects bad magic, unknown version, size mismatch and CRC mismatch.
AttentionAutoencoder DeserializeModel(std::span<const std::uint8_t> bytes);

// Returns the number of bytes written.
std::size_t SaveModel(const AttentionAutoencoder& model,
                      const std::filesystem::path& path);
AttentionAutoencoder LoadModel(const std::filesystem::path& path);

std::uint32_t Crc32(std::span<const std::uint8_t> bytes);
// Lower-case hex SHA-256.
std::string ContentHash(std::span<const std::uint8_t> bytes);

std::vector<std::uint8_t> ReadFileBytes(const std::filesystem::path& path);
// Writes through a temporary sibling and renames it into place.
void WriteFileAtomically(const std::filesystem::path& path,
                         std::span<const std::uint8_t> bytes);
void WriteFileAtomically(const std::filesystem::path& path,
                         std::string_view text);

struct DetectorBundle {
  AttentionAutoencoder model;  // float32-exact weights
  ChannelScaler scaler;
  Threshold threshold;
  std::string model_id;  // ContentHash of model.ocae
  std::filesystem::path dir;
};

struct BundleFiles {
  std::filesystem::path dir;
  std::size_t model_bytes = 0;
  std::size_t scaler_bytes = 0;
  std::size_t threshold_bytes = 0;
  std::string model_id;
};

BundleFiles SaveBundle(const std::filesystem::path& dir,
                       const AttentionAutoencoder& model,
                       const ChannelScaler& scaler, double threshold);

// model.ocae and scaler.json are required. A missing threshold.txt yields
// the 0.02 default (Threshold::n == 0); a present but unreadable one is an
// error.
DetectorBundle LoadBundle(const std::filesystem::path& dir);

}  // namespace ocae
