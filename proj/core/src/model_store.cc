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

#include "ocae/model_store.h"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <system_error>

#include <openssl/evp.h>
#include <zlib.h>

#include "ocae/error.h"

namespace ocae {
namespace {

void PutU16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v & 0xff));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void PutU32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int shift = 0; shift < 32; shift += 8) {
    out.push_back(static_cast<std::uint8_t>((v >> shift) & 0xff));
  }
}

std::uint16_t GetU16(std::span<const std::uint8_t> b, std::size_t at) {
  return static_cast<std::uint16_t>(b[at] | (b[at + 1] << 8));
}

std::uint32_t GetU32(std::span<const std::uint8_t> b, std::size_t at) {
  std::uint32_t v = 0;
  for (int k = 3; k >= 0; --k) v = (v << 8) | b[at + static_cast<std::size_t>(k)];
  return v;
}

Error Corrupt(const std::string& what) {
  return Error(ErrorKind::kCorrupt, "model file: " + what);
}

}  // namespace

std::size_t ModelFileSize(int hidden_dim, Layout layout) {
  return kModelHeaderBytes +
         4 * AttentionAutoencoder::ParameterCount(hidden_dim, layout) +
         kModelTrailerBytes;
}

std::uint32_t Crc32(std::span<const std::uint8_t> bytes) {
  uLong crc = crc32(0L, Z_NULL, 0);
  crc = crc32_z(crc, bytes.data(), bytes.size());
  return static_cast<std::uint32_t>(crc);
}

std::string ContentHash(std::span<const std::uint8_t> bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &length, EVP_sha256(),
                 nullptr) != 1) {
    throw Error(ErrorKind::kIo, "SHA-256 digest failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string hex;
  hex.reserve(2 * length);
  for (unsigned int k = 0; k < length; ++k) {
    hex.push_back(kHex[digest[k] >> 4]);
    hex.push_back(kHex[digest[k] & 0xf]);
  }
  return hex;
}

std::vector<std::uint8_t> SerializeModel(const AttentionAutoencoder& model) {
  std::vector<std::uint8_t> out;
  out.reserve(ModelFileSize(model.hidden_dim(), model.layout()));
  out.insert(out.end(), kModelMagic.begin(), kModelMagic.end());
  PutU16(out, kModelFormatVersion);
  out.push_back(static_cast<std::uint8_t>(model.layout()));
  PutU16(out, static_cast<std::uint16_t>(model.hidden_dim()));
  PutU16(out, static_cast<std::uint16_t>(kNumChannels));
  const Eigen::VectorXd& params = model.parameters();
  for (Eigen::Index k = 0; k < params.size(); ++k) {
    PutU32(out, std::bit_cast<std::uint32_t>(static_cast<float>(params(k))));
  }
  PutU32(out, Crc32(out));
  return out;
}

ModelFileHeader ParseModelHeader(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kModelHeaderBytes + kModelTrailerBytes) {
    throw Corrupt("truncated (" + std::to_string(bytes.size()) + " bytes)");
  }
  ModelFileHeader header;
  std::memcpy(header.magic.data(), bytes.data(), header.magic.size());
  if (header.magic != kModelMagic) throw Corrupt("bad magic");
  header.version = GetU16(bytes, 4);
  if (header.version != kModelFormatVersion) {
    throw Corrupt("unsupported version " + std::to_string(header.version));
  }
  const std::uint8_t layout = bytes[6];
  if (layout > static_cast<std::uint8_t>(Layout::kChannelTokens)) {
    throw Corrupt("unknown layout " + std::to_string(layout));
  }
  header.layout = static_cast<Layout>(layout);
  header.hidden_dim = GetU16(bytes, 7);
  header.n_channels = GetU16(bytes, 9);
  if (header.hidden_dim == 0 || header.hidden_dim % 2 != 0) {
    throw Corrupt("hidden_dim must be even and positive");
  }
  if (header.n_channels != kNumChannels) {
    throw Corrupt("expected 7 channels, found " +
                  std::to_string(header.n_channels));
  }
  return header;
}

AttentionAutoencoder DeserializeModel(std::span<const std::uint8_t> bytes) {
  const ModelFileHeader header = ParseModelHeader(bytes);
  const std::size_t expected =
      ModelFileSize(header.hidden_dim, header.layout);
  if (bytes.size() != expected) {
    throw Corrupt("length " + std::to_string(bytes.size()) + ", expected " +
                  std::to_string(expected));
  }
  const std::size_t body = bytes.size() - kModelTrailerBytes;
  if (Crc32(bytes.first(body)) != GetU32(bytes, body)) {
    throw Corrupt("CRC mismatch");
  }
  const std::size_t count = (body - kModelHeaderBytes) / 4;
  Eigen::VectorXd params(static_cast<Eigen::Index>(count));
  for (std::size_t k = 0; k < count; ++k) {
    params(static_cast<Eigen::Index>(k)) = std::bit_cast<float>(
        GetU32(bytes, kModelHeaderBytes + 4 * k));
  }
  try {
    return AttentionAutoencoder::FromParameters(header.hidden_dim,
                                                header.layout,
                                                std::move(params));
  } catch (const Error& e) {
    throw Corrupt(e.what());
  }
}

std::vector<std::uint8_t> ReadFileBytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIo, "cannot open " + path.string());
  std::vector<std::uint8_t> bytes{std::istreambuf_iterator<char>(in),
                                  std::istreambuf_iterator<char>()};
  if (in.bad()) throw Error(ErrorKind::kIo, "cannot read " + path.string());
  return bytes;
}

void WriteFileAtomically(const std::filesystem::path& path,
                         std::span<const std::uint8_t> bytes) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) throw Error(ErrorKind::kIo, "cannot write " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    throw Error(ErrorKind::kIo,
                "cannot move " + tmp.string() + " into place: " + ec.message());
  }
}

void WriteFileAtomically(const std::filesystem::path& path,
                         std::string_view text) {
  WriteFileAtomically(
      path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()),
                      text.size()));
}

std::size_t SaveModel(const AttentionAutoencoder& model,
                      const std::filesystem::path& path) {
  const std::vector<std::uint8_t> bytes = SerializeModel(model);
  WriteFileAtomically(path, bytes);
  return bytes.size();
}

AttentionAutoencoder LoadModel(const std::filesystem::path& path) {
  return DeserializeModel(ReadFileBytes(path));
}

BundleFiles SaveBundle(const std::filesystem::path& dir,
                       const AttentionAutoencoder& model,
                       const ChannelScaler& scaler, double threshold) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) {
    throw Error(ErrorKind::kIo,
                "cannot create bundle directory " + dir.string());
  }
  BundleFiles files;
  files.dir = dir;
  const std::vector<std::uint8_t> model_bytes = SerializeModel(model);
  const std::string scaler_json = scaler.ToJson() + "\n";
  const std::string threshold_text = FormatThreshold(threshold);
  // Model last: a directory with a readable model.ocae is complete.
  WriteFileAtomically(dir / kScalerFileName, scaler_json);
  WriteFileAtomically(dir / kThresholdFileName, threshold_text);
  WriteFileAtomically(dir / kModelFileName, model_bytes);
  files.model_bytes = model_bytes.size();
  files.scaler_bytes = scaler_json.size();
  files.threshold_bytes = threshold_text.size();
  files.model_id = ContentHash(model_bytes);
  return files;
}

DetectorBundle LoadBundle(const std::filesystem::path& dir) {
  const auto model_path = dir / kModelFileName;
  const auto scaler_path = dir / kScalerFileName;
  const auto threshold_path = dir / kThresholdFileName;
  if (!std::filesystem::exists(model_path)) {
    throw Error(ErrorKind::kIo, "bundle has no " + model_path.string());
  }
  if (!std::filesystem::exists(scaler_path)) {
    throw Error(ErrorKind::kIo, "bundle has no " + scaler_path.string());
  }
  const std::vector<std::uint8_t> bytes = ReadFileBytes(model_path);
  Threshold threshold = DefaultThreshold();
  if (std::filesystem::exists(threshold_path)) {
    threshold = ThresholdFromValue(LoadThreshold(threshold_path));
  }
  return DetectorBundle{DeserializeModel(bytes),
                        ChannelScaler::Load(scaler_path), threshold,
                        ContentHash(bytes), dir};
}

}  // namespace ocae
