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

#include <filesystem>
#include <random>

#include "doctest.h"
#include "json.hpp"
#include "ocae/broadcaster.h"
#include "ocae/monitor.h"
#include "ocae/tailer.h"
#include "test_support.h"

namespace ocae {
namespace {

namespace fs = std::filesystem;
using testing::AppendText;
using testing::TempDir;
using testing::WriteText;

std::string Line(std::uint64_t seq, const std::string& cond = "1500") {
  return "2025-01-01T00:00:00Z," + std::to_string(seq) + ",7.0,25," + cond +
         ",22,40,420,300\n";
}

TEST_CASE("tailer: absent file and no new rows give empty batches") {
  TempDir dir;
  CsvTailer tailer(dir / "data.csv");
  CHECK(tailer.Poll().frames.empty());
  WriteText(dir / "data.csv", CsvHeaderLine() + "\n" + Line(0));
  CHECK(tailer.Poll().frames.size() == 1);
  const TailBatch again = tailer.Poll();
  CHECK(again.frames.empty());
  CHECK(again.rows_consumed == 0);
  CHECK(tailer.last_row() == 1);
}

TEST_CASE("tailer: a sentinel row is consumed but not returned") {
  TempDir dir;
  WriteText(dir / "data.csv", CsvHeaderLine() + "\n" + Line(0));
  CsvTailer tailer(dir / "data.csv");
  tailer.Poll();
  AppendText(dir / "data.csv", Line(1) + Line(2, "255") + Line(3));
  const TailBatch b = tailer.Poll();
  CHECK(b.frames.size() == 2);
  CHECK(b.rows_consumed == 3);
  CHECK(b.report.rows_dropped_sentinel == 1);
  CHECK(tailer.last_row() == 4);
  CHECK(b.frames[0].seq == 1);
  CHECK(b.frames[1].seq == 3);
}

TEST_CASE("tailer: a partial final line waits for the next poll") {
  TempDir dir;
  const std::string line = Line(0);
  WriteText(dir / "data.csv", line.substr(0, 20));
  CsvTailer tailer(dir / "data.csv");
  CHECK(tailer.Poll().rows_consumed == 0);
  AppendText(dir / "data.csv", line.substr(20));
  const TailBatch b = tailer.Poll();
  REQUIRE(b.frames.size() == 1);
  CHECK(b.frames[0].seq == 0);
}

TEST_CASE("tailer: resumes after last_row and never re-reads") {
  TempDir dir;
  WriteText(dir / "data.csv", CsvHeaderLine() + "\n" + Line(0) + Line(1) + Line(2));
  CsvTailer tailer(dir / "data.csv", 2);
  const TailBatch b = tailer.Poll();
  REQUIRE(b.frames.size() == 1);
  CHECK(b.frames[0].seq == 2);
  CHECK(tailer.last_row() == 3);
}

TEST_CASE("tailer: a shrinking file is treated as rotated") {
  TempDir dir;
  WriteText(dir / "data.csv", Line(0) + Line(1) + Line(2));
  CsvTailer tailer(dir / "data.csv");
  CHECK(tailer.Poll().frames.size() == 3);
  WriteText(dir / "data.csv", Line(10));
  const TailBatch b = tailer.Poll();
  CHECK(b.rotated);
  REQUIRE(b.frames.size() == 1);
  CHECK(b.frames[0].seq == 10);
  CHECK(tailer.last_row() == 1);
}

TEST_CASE("tailer: malformed lines are consumed and counted") {
  TempDir dir;
  WriteText(dir / "data.csv", Line(0) + "a,b,c\n" + Line(1));
  CsvTailer tailer(dir / "data.csv");
  const TailBatch b = tailer.Poll();
  CHECK(b.frames.size() == 2);
  CHECK(b.rejected == 1);
  CHECK(b.rows_consumed == 3);
}

TEST_CASE("property: last_row never decreases without rotation") {
  TempDir dir;
  std::mt19937_64 rng(4);
  std::uniform_int_distribution<int> burst(0, 5);
  CsvTailer tailer(dir / "data.csv");
  std::uint64_t seq = 0, previous = 0;
  std::string pending;
  for (int round = 0; round < 200; ++round) {
    std::string chunk = pending;
    for (int k = burst(rng); k > 0; --k) chunk += Line(seq++);
    // Leave a random split so some polls see a partial line.
    const std::size_t cut = chunk.empty() ? 0 : rng() % (chunk.size() + 1);
    AppendText(dir / "data.csv", chunk.substr(0, cut));
    pending = chunk.substr(cut);
    const TailBatch b = tailer.Poll();
    CHECK_FALSE(b.rotated);
    CHECK(tailer.last_row() >= previous);
    previous = tailer.last_row();
  }
  AppendText(dir / "data.csv", pending);
  tailer.Poll();
  CHECK(tailer.last_row() == seq);
}

std::vector<bool> Verdicts(const std::string& pattern) {
  std::vector<bool> v;
  for (char c : pattern) v.push_back(c == 'A');
  return v;
}

std::vector<std::size_t> AlarmPositions(const std::vector<bool>& verdicts,
                                        int alarm_n = 2) {
  Debouncer d(alarm_n);
  std::vector<std::size_t> at;
  for (std::size_t i = 0; i < verdicts.size(); ++i) {
    if (d.Update(verdicts[i])) at.push_back(i + 1);
  }
  return at;
}

TEST_CASE("debounce: scripted verdict streams") {
  CHECK(AlarmPositions(Verdicts("NANAA")) == std::vector<std::size_t>{5});
  CHECK(AlarmPositions(Verdicts("A")).empty());
  CHECK(AlarmPositions(Verdicts("NNANNANNA")).empty());
  CHECK(AlarmPositions(Verdicts("AAAA")) == std::vector<std::size_t>{2});
  CHECK(AlarmPositions(Verdicts("AANAA")) == std::vector<std::size_t>{2, 5});
  CHECK(AlarmPositions(Verdicts("AAAAA"), 3) == std::vector<std::size_t>{3});
}

TEST_CASE("property: alarm count equals the number of qualifying runs") {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 500; ++trial) {
    std::bernoulli_distribution coin(0.1 + 0.8 * (trial % 10) / 10.0);
    const int alarm_n = 1 + trial % 4;
    std::vector<bool> v(1 + rng() % 300);
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = coin(rng);
    CHECK(AlarmPositions(v, alarm_n).size() == CountAlarmRuns(v, alarm_n));
  }
}

// Bundle whose scores are controlled by the pH channel: the zero model
// reconstructs 0.5 everywhere, so a frame at the scaler midpoint scores 0.
std::shared_ptr<const DetectorBundle> ControlledBundle(double threshold) {
  auto bundle = std::make_shared<DetectorBundle>(DetectorBundle{
      AttentionAutoencoder::Zeros(8),
      ChannelScaler(ChannelVector{0, 0, 0, 0, 0, 0, 0},
                    ChannelVector{2, 2, 2, 2, 2, 2, 2}),
      ThresholdFromValue(threshold), "controlled", {}});
  return bundle;
}

SensorFrame FrameFor(bool anomaly, std::uint64_t seq) {
  // Normal scores 0; anomalous pH 2 scales to 1 and scores 0.25 / 7.
  return SensorFrame{"t", seq, {anomaly ? 2.0 : 1.0, 1, 1, 1, 1, 1, 1}};
}

TEST_CASE("step: streak and alarm transitions") {
  MonitorState state;
  state.bundle = ControlledBundle(0.01);
  const std::vector<bool> v = Verdicts("NANAA");
  std::vector<std::size_t> alarms;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const StepResult r = Step(state, FrameFor(v[i], i));
    REQUIRE(r.verdict.has_value());
    CHECK(r.verdict->is_anomaly == v[i]);
    CHECK(r.model_id == "controlled");
    if (!v[i]) CHECK(state.streak == 0);
    if (r.alarm) {
      alarms.push_back(i + 1);
      CHECK(r.alarm->streak == 2);
      CHECK(r.alarm->score > r.alarm->threshold);
      CHECK(r.alarm->seq == i);
    }
  }
  CHECK(alarms == std::vector<std::size_t>{5});
}

TEST_CASE("step: unscorable frames are skipped and keep the streak") {
  MonitorState state;
  state.bundle = ControlledBundle(0.01);
  Step(state, FrameFor(true, 0));
  CHECK(state.streak == 1);
  SensorFrame huge{"t", 1, {1e308, 1, 1, 1, 1, 1, 1}};
  huge.channels[1] = -1e308;
  const StepResult skipped = Step(state, huge);
  CHECK_FALSE(skipped.verdict.has_value());
  CHECK(state.streak == 1);
  const StepResult fire = Step(state, FrameFor(true, 2));
  CHECK(fire.alarm.has_value());
}

TEST_CASE("100-row replay with 5 anomaly pairs raises exactly 5 alarms") {
  MonitorState state;
  state.bundle = ControlledBundle(0.01);
  std::vector<bool> v(100, false);
  for (std::size_t start : {10, 30, 50, 70, 90}) v[start] = v[start + 1] = true;
  std::size_t alarms = 0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    alarms += Step(state, FrameFor(v[i], i)).alarm.has_value();
  }
  CHECK(alarms == CountAlarmRuns(v, 2));
  CHECK(alarms == 5);
}

TEST_CASE("stream messages carry the documented fields") {
  const SensorFrame f{"2025-01-01T00:00:00Z", 7, {1, 2, 3, 4, 5, 6, 7}};
  const auto reading = nlohmann::json::parse(ReadingMessage(f, Verdict{0.5, true}, "m1"));
  CHECK(reading["type"] == "reading");
  CHECK(reading["seq"] == 7);
  CHECK(reading["channels"].size() == 7);
  CHECK(reading["anomaly"] == true);
  CHECK(reading["model_id"] == "m1");
  const auto alarm = nlohmann::json::parse(
      AlarmMessage(AlarmEvent{3, "ts", 7, 0.5, 0.1, 2, "m1"}));
  for (const char* key : {"type", "id", "ts", "seq", "score", "threshold", "streak", "model_id"}) {
    CHECK(alarm.contains(key));
  }
  const auto retrain = nlohmann::json::parse(RetrainMessage("job-1", "done"));
  CHECK(retrain["type"] == "retrain");
  CHECK(retrain["state"] == "done");
  CHECK(ReadingMessage(f, Verdict{0.5, true}, "m1").find('\n') == std::string::npos);
}

TEST_CASE("broadcaster fans out and drops slow subscribers") {
  Broadcaster b(3);
  auto fast = b.Subscribe();
  auto slow = b.Subscribe();
  for (int i = 0; i < 3; ++i) {
    b.Publish("m" + std::to_string(i));
    CHECK(fast->Next(std::chrono::milliseconds(0)) == "m" + std::to_string(i));
  }
  CHECK(b.subscriber_count() == 2);
  b.Publish("m3");  // slow already holds three messages
  CHECK(slow->closed());
  CHECK(b.subscriber_count() == 1);
  CHECK(b.dropped_count() == 1);
  CHECK(fast->Next(std::chrono::milliseconds(0)) == "m3");
  CHECK_FALSE(fast->Next(std::chrono::milliseconds(1)).has_value());
  b.Close();
  CHECK(fast->closed());
  CHECK(b.Subscribe()->closed());
}

}  // namespace
}  // namespace ocae
