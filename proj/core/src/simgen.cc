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

#include "ocae/simgen.h"

#include <cmath>
#include <ctime>
#include <fstream>
#include <numbers>
#include <ostream>
#include <random>
#include <sstream>

#include "json.hpp"
#include "ocae/error.h"

namespace ocae {
namespace {

double Quantize(double value, double resolution) {
  if (resolution <= 0.0) return value;
  return std::round(value / resolution) * resolution;
}

double Ratio(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0
                  : static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

void GeneratorConfig::Validate() const {
  if (!(rate_hz >= 0.5 && rate_hz <= 1.0)) {
    throw Error(ErrorKind::kInvalidArgument,
                "rate_hz must lie in [0.5, 1] Hz");
  }
  for (const ChannelModel& c : channels) {
    if (!(c.sigma >= 0.0) || !(c.drift_period_s > 0.0) ||
        !(c.resolution >= 0.0) || !std::isfinite(c.mean) ||
        !std::isfinite(c.drift_amplitude)) {
      throw Error(ErrorKind::kInvalidArgument, "invalid channel model");
    }
  }
  if (!(spikes.rate >= 0.0 && spikes.rate < 1.0) ||
      !(spikes.min_amplitudes >= 0.0 &&
        spikes.min_amplitudes <= spikes.max_amplitudes)) {
    throw Error(ErrorKind::kInvalidArgument, "invalid spike model");
  }
  if (!(events.rate_per_hour >= 0.0) || !(events.duration_s >= 0.0)) {
    throw Error(ErrorKind::kInvalidArgument, "invalid event model");
  }
}

std::string GeneratorConfig::ToJson() const {
  nlohmann::ordered_json j;
  j["rate_hz"] = rate_hz;
  j["start_epoch_s"] = start_epoch_s;
  j["seed"] = seed;
  nlohmann::ordered_json chans = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < kNumChannels; ++i) {
    const ChannelModel& c = channels[i];
    chans.push_back({{"name", kCsvColumns[kFirstChannelColumn + i]},
                     {"mean", c.mean},
                     {"sigma", c.sigma},
                     {"drift_amplitude", c.drift_amplitude},
                     {"drift_period_s", c.drift_period_s},
                     {"drift_phase", c.drift_phase},
                     {"resolution", c.resolution}});
  }
  j["channels"] = std::move(chans);
  j["events"] = {{"rate_per_hour", events.rate_per_hour},
                 {"duration_s", events.duration_s},
                 {"offsets", events.offsets}};
  j["spikes"] = {{"rate", spikes.rate},
                 {"min_amplitudes", spikes.min_amplitudes},
                 {"max_amplitudes", spikes.max_amplitudes}};
  return j.dump(2);
}

GeneratorConfig GeneratorConfig::FromJson(std::string_view json) {
  GeneratorConfig config = DefaultGeneratorConfig();
  try {
    const nlohmann::json j = nlohmann::json::parse(json);
    config.rate_hz = j.value("rate_hz", config.rate_hz);
    config.start_epoch_s = j.value("start_epoch_s", config.start_epoch_s);
    config.seed = j.value("seed", config.seed);
    if (j.contains("channels")) {
      const auto& chans = j.at("channels");
      if (!chans.is_array() || chans.size() != kNumChannels) {
        throw Error(ErrorKind::kSchema,
                    "generator config needs 7 channel entries");
      }
      for (std::size_t i = 0; i < kNumChannels; ++i) {
        ChannelModel& c = config.channels[i];
        const auto& src = chans[i];
        c.mean = src.value("mean", c.mean);
        c.sigma = src.value("sigma", c.sigma);
        c.drift_amplitude = src.value("drift_amplitude", c.drift_amplitude);
        c.drift_period_s = src.value("drift_period_s", c.drift_period_s);
        c.drift_phase = src.value("drift_phase", c.drift_phase);
        c.resolution = src.value("resolution", c.resolution);
      }
    }
    if (j.contains("events")) {
      const auto& ev = j.at("events");
      config.events.rate_per_hour =
          ev.value("rate_per_hour", config.events.rate_per_hour);
      config.events.duration_s =
          ev.value("duration_s", config.events.duration_s);
      if (ev.contains("offsets")) {
        config.events.offsets = ev.at("offsets").get<ChannelVector>();
      }
    }
    if (j.contains("spikes")) {
      const auto& sp = j.at("spikes");
      config.spikes.rate = sp.value("rate", config.spikes.rate);
      config.spikes.min_amplitudes =
          sp.value("min_amplitudes", config.spikes.min_amplitudes);
      config.spikes.max_amplitudes =
          sp.value("max_amplitudes", config.spikes.max_amplitudes);
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kSchema,
                std::string("generator config: ") + e.what());
  }
  config.Validate();
  return config;
}

GeneratorConfig GeneratorConfig::Load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIo, "cannot open " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return FromJson(buffer.str());
}

GeneratorConfig DefaultGeneratorConfig() {
  constexpr double kPi = std::numbers::pi;
  GeneratorConfig config;
  // One shared 30-minute thermal cycle drives every channel: conductivity and
  // CO2/light follow temperature, pH and relative humidity move against it.
  // mean, sigma, drift amplitude, drift period, drift phase, resolution
  config.channels[kPh] = {7.0, 0.003, 0.10, 1800.0, kPi, 0.001};
  config.channels[kLiquidTemp] = {24.5, 0.01, 0.40, 1800.0, 0.0, 0.0625};
  config.channels[kConductivity] = {1500.0, 0.5, 20.0, 1800.0, 0.0, 0.1};
  config.channels[kAmbientTemp] = {22.0, 0.02, 0.50, 1800.0, 0.0, 0.01};
  config.channels[kHumidity] = {40.0, 0.05, 1.50, 1800.0, kPi, 0.01};
  config.channels[kCo2] = {420.0, 1.0, 12.0, 1800.0, 0.0, 1.0};
  config.channels[kLight] = {300.0, 0.5, 6.0, 1800.0, 0.0, 1.0};
  // Stirring bursts: slight warming and conductivity rise.
  config.events.rate_per_hour = 4.0;
  config.events.duration_s = 60.0;
  config.events.offsets = {-0.02, 0.10, 3.0, 0.0, 0.0, 0.0, 0.0};
  config.spikes.rate = 0.01;
  config.spikes.min_amplitudes = 1.0;
  config.spikes.max_amplitudes = 2.0;
  return config;
}

std::string FormatTimestamp(double epoch_seconds) {
  const double whole = std::floor(epoch_seconds);
  auto millis = static_cast<int>(std::lround((epoch_seconds - whole) * 1000.0));
  auto secs = static_cast<std::time_t>(whole);
  if (millis == 1000) {
    ++secs;
    millis = 0;
  }
  std::tm tm{};
  gmtime_r(&secs, &tm);
  char buf[40];
  std::size_t n = std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%S", &tm);
  std::string out(buf, n);
  if (millis != 0) {
    char frac[8];
    std::snprintf(frac, sizeof(frac), ".%03d", millis);
    out += frac;
  }
  out += 'Z';
  return out;
}

std::vector<SensorFrame> Generate(const GeneratorConfig& config,
                                  std::size_t n_rows,
                                  std::uint64_t first_seq) {
  config.Validate();
  std::mt19937_64 rng(config.seed);
  std::normal_distribution<double> unit_normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_real_distribution<double> spike_size(
      config.spikes.min_amplitudes, config.spikes.max_amplitudes);
  std::uniform_int_distribution<std::size_t> spike_channel(0,
                                                           kNumChannels - 1);

  const double dt = 1.0 / config.rate_hz;
  const double event_start_p = config.events.rate_per_hour / 3600.0 * dt;
  double event_left_s = 0.0;

  std::vector<SensorFrame> frames;
  frames.reserve(n_rows);
  for (std::size_t k = 0; k < n_rows; ++k) {
    const double t = static_cast<double>(k) * dt;
    if (event_left_s <= 0.0 && unit(rng) < event_start_p) {
      event_left_s = config.events.duration_s;
    }
    const bool in_event = event_left_s > 0.0;

    SensorFrame frame;
    frame.seq = first_seq + k;
    frame.timestamp =
        FormatTimestamp(static_cast<double>(config.start_epoch_s) + t);
    for (std::size_t i = 0; i < kNumChannels; ++i) {
      const ChannelModel& c = config.channels[i];
      double v = c.mean +
                 c.drift_amplitude *
                     std::sin(2.0 * std::numbers::pi * t / c.drift_period_s +
                              c.drift_phase) +
                 c.sigma * unit_normal(rng);
      if (in_event) v += config.events.offsets[i];
      frame.channels[i] = v;
    }
    if (config.spikes.rate > 0.0 && unit(rng) < config.spikes.rate) {
      const std::size_t i = spike_channel(rng);
      const double sign = unit(rng) < 0.5 ? -1.0 : 1.0;
      frame.channels[i] +=
          sign * spike_size(rng) * config.channels[i].drift_amplitude;
    }
    for (std::size_t i = 0; i < kNumChannels; ++i) {
      frame.channels[i] =
          Quantize(frame.channels[i], config.channels[i].resolution);
    }
    if (in_event) event_left_s -= dt;
    frames.push_back(std::move(frame));
  }
  return frames;
}

LabeledStream InjectAnomalies(std::vector<SensorFrame> frames,
                              const InjectionConfig& config) {
  if (!(config.rate >= 0.0 && config.rate < 1.0) ||
      !(config.magnitude_lo >= 0.0 &&
        config.magnitude_lo <= config.magnitude_hi)) {
    throw Error(ErrorKind::kInvalidArgument, "invalid injection config");
  }
  std::mt19937_64 rng(config.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_real_distribution<double> magnitude(config.magnitude_lo,
                                                   config.magnitude_hi);
  LabeledStream out;
  out.labels.assign(frames.size(), false);
  for (std::size_t k = 0; k < frames.size(); ++k) {
    if (!(unit(rng) < config.rate)) continue;
    const std::size_t channel = unit(rng) < 0.5 ? kPh : kConductivity;
    const double sign = unit(rng) < 0.5 ? -1.0 : 1.0;
    const double m = config.magnitude_lo == config.magnitude_hi
                         ? config.magnitude_lo
                         : magnitude(rng);
    frames[k].channels[channel] *= 1.0 + sign * m;
    out.labels[k] = true;
  }
  out.frames = std::move(frames);
  return out;
}

std::vector<RawRow> InjectCorruption(std::span<const SensorFrame> frames,
                                     const CorruptionConfig& config,
                                     const std::vector<bool>* protect) {
  if (!(config.rate >= 0.0 && config.rate < 1.0)) {
    throw Error(ErrorKind::kInvalidArgument, "corruption rate outside [0,1)");
  }
  if (protect != nullptr && protect->size() != frames.size()) {
    throw Error(ErrorKind::kInvalidArgument,
                "protect mask length differs from the stream");
  }
  std::mt19937_64 rng(config.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> channel(0, kNumChannels - 1);
  std::vector<RawRow> rows;
  rows.reserve(frames.size());
  for (std::size_t k = 0; k < frames.size(); ++k) {
    RawRow row = FrameToRow(frames[k]);
    row.line = k + 2;  // after the header line
    const bool selected = unit(rng) < config.rate;
    if (selected && !(protect != nullptr && (*protect)[k])) {
      const std::size_t c = channel(rng);
      const bool saturation = unit(rng) < 0.5;
      row.cells[kFirstChannelColumn + c] =
          saturation ? std::string(kSaturationSentinel)
                     : std::string(kDisconnectedProbe);
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

void WriteRowsCsv(std::ostream& out, std::span<const RawRow> rows) {
  out << CsvHeaderLine() << '\n';
  for (const RawRow& row : rows) {
    for (std::size_t c = 0; c < row.cells.size(); ++c) {
      if (c > 0) out << ',';
      out << row.cells[c];
    }
    out << '\n';
  }
}

void WriteLabelsCsv(std::ostream& out, std::span<const SensorFrame> frames,
                    const std::vector<bool>& labels) {
  if (labels.size() != frames.size()) {
    throw Error(ErrorKind::kInvalidArgument,
                "labels and frames differ in length");
  }
  out << "seq,label\n";
  for (std::size_t k = 0; k < frames.size(); ++k) {
    out << frames[k].seq << ',' << (labels[k] ? 1 : 0) << '\n';
  }
}

std::vector<LabelRecord> ReadLabelsCsv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "cannot open " + path.string());
  std::vector<LabelRecord> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto cells = SplitCsvLine(line);
    if (cells.size() == 1 && cells[0].find_first_not_of(" \t\r") ==
                                 std::string::npos) {
      continue;
    }
    if (line_no == 1 && cells.size() == 2 && !LooksLikeSeq(cells[0])) {
      continue;  // header
    }
    LabelRecord record;
    if (cells.size() != 2 || !LooksLikeSeq(cells[0]) ||
        (cells[1] != "0" && cells[1] != "1")) {
      throw Error(ErrorKind::kSchema, "labels line " +
                                          std::to_string(line_no) +
                                          " is not 'seq,0|1'");
    }
    record.seq = std::stoull(cells[0]);
    record.label = cells[1] == "1";
    records.push_back(record);
  }
  return records;
}

std::string Metrics::ToJson() const {
  nlohmann::ordered_json j;
  j["tp"] = tp;
  j["fp"] = fp;
  j["tn"] = tn;
  j["fn"] = fn;
  j["precision"] = precision;
  j["recall"] = recall;
  j["f1"] = f1;
  return j.dump();
}

Metrics Evaluate(const std::vector<bool>& labels,
                 const std::vector<bool>& predictions) {
  if (labels.size() != predictions.size()) {
    throw Error(ErrorKind::kInvalidArgument,
                "labels and predictions differ in length (" +
                    std::to_string(labels.size()) + " vs " +
                    std::to_string(predictions.size()) + ")");
  }
  Metrics m;
  for (std::size_t k = 0; k < labels.size(); ++k) {
    if (labels[k]) {
      predictions[k] ? ++m.tp : ++m.fn;
    } else {
      predictions[k] ? ++m.fp : ++m.tn;
    }
  }
  m.precision = Ratio(m.tp, m.tp + m.fp);
  m.recall = Ratio(m.tp, m.tp + m.fn);
  const double denom = m.precision + m.recall;
  m.f1 = denom > 0.0 ? 2.0 * m.precision * m.recall / denom : 0.0;
  return m;
}

}  // namespace ocae
