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
#include <memory>
#include <optional>
#include <string>

#include "ocae/detector.h"
#include "ocae/model_store.h"
#include "ocae/preprocess.h"

namespace ocae {

inline constexpr int kDefaultAlarmN = 2;
inline constexpr double kDefaultIntervalSeconds = 2.0;

// Fires once when a run of anomalous verdicts reaches alarm_n, stays quiet
// while the run continues and re-arms after a normal verdict.
class Debouncer {
 public:
  explicit Debouncer(int alarm_n = kDefaultAlarmN);

  // Returns true when this verdict triggers an alarm.
  bool Update(bool anomaly);

  int streak() const { return streak_; }
  int alarm_n() const { return alarm_n_; }

 private:
  int alarm_n_;
  int streak_ = 0;
};

// Reference count: disjoint anomaly runs of length >= alarm_n.
std::size_t CountAlarmRuns(const std::vector<bool>& verdicts, int alarm_n);

struct MonitorState {
  std::uint64_t last_row = 0;
  int streak = 0;
  int alarm_n = kDefaultAlarmN;
  double interval_s = kDefaultIntervalSeconds;
  std::shared_ptr<const DetectorBundle> bundle;
};

struct AlarmEvent {
  std::uint64_t id = 0;  // assigned by the service
  std::string timestamp;
  std::uint64_t seq = 0;
  double score = 0.0;
  double threshold = 0.0;
  int streak = 0;
  std::string model_id;
};

struct StepResult {
  std::optional<Verdict> verdict;  // empty when the frame was skipped
  std::optional<AlarmEvent> alarm;
  std::string model_id;
};

// One loop-body step on state.bundle. A frame that cannot be scored is
// skipped and leaves the streak unchanged. Requires state.bundle.
StepResult Step(MonitorState& state, const SensorFrame& frame);

// Newline-free JSON messages for the /stream feed.
std::string ReadingMessage(const SensorFrame& frame, const Verdict& verdict,
                           const std::string& model_id);
std::string AlarmMessage(const AlarmEvent& alarm);
std::string RetrainMessage(const std::string& job_id, const std::string& state);

}  // namespace ocae
