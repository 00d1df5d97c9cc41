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

#include "ocae/monitor.h"

#include <cmath>
#include "json.hpp"

#include "ocae/error.h"

namespace ocae {

using json = nlohmann::ordered_json;

Debouncer::Debouncer(int alarm_n) : alarm_n_(alarm_n) {
  if (alarm_n < 1) {
    throw Error(ErrorKind::kInvalidArgument, "alarm_n must be >= 1");
  }
}

bool Debouncer::Update(bool anomaly) {
  if (!anomaly) {
    streak_ = 0;
    return false;
  }
  ++streak_;
  return streak_ == alarm_n_;
}

std::size_t CountAlarmRuns(const std::vector<bool>& verdicts, int alarm_n) {
  std::size_t runs = 0;
  std::size_t length = 0;
  for (std::size_t i = 0; i <= verdicts.size(); ++i) {
    if (i < verdicts.size() && verdicts[i]) {
      ++length;
      continue;
    }
    if (length >= static_cast<std::size_t>(alarm_n)) ++runs;
    length = 0;
  }
  return runs;
}

StepResult Step(MonitorState& state, const SensorFrame& frame) {
  if (!state.bundle) {
    throw Error(ErrorKind::kInvalidArgument, "step requires a loaded bundle");
  }
  const DetectorBundle& bundle = *state.bundle;
  StepResult result;
  result.model_id = bundle.model_id;
  double score = 0.0;
  try {
    score = Score(bundle.model, bundle.scaler, frame);
  } catch (const Error&) {
    return result;
  }
  if (!std::isfinite(score)) return result;

  const Verdict verdict = Classify(score, bundle.threshold);
  result.verdict = verdict;
  if (!verdict.is_anomaly) {
    state.streak = 0;
    return result;
  }
  ++state.streak;
  if (state.streak == state.alarm_n) {
    result.alarm = AlarmEvent{0,
                              frame.timestamp,
                              frame.seq,
                              score,
                              bundle.threshold.value,
                              state.streak,
                              bundle.model_id};
  }
  return result;
}

std::string ReadingMessage(const SensorFrame& frame, const Verdict& verdict,
                           const std::string& model_id) {
  json j = {{"type", "reading"},
            {"ts", frame.timestamp},
            {"seq", frame.seq},
            {"channels", frame.channels},
            {"score", verdict.score},
            {"anomaly", verdict.is_anomaly},
            {"model_id", model_id}};
  return j.dump();
}

std::string AlarmMessage(const AlarmEvent& alarm) {
  json j = {{"type", "alarm"},         {"id", alarm.id},
            {"ts", alarm.timestamp},   {"seq", alarm.seq},
            {"score", alarm.score},    {"threshold", alarm.threshold},
            {"streak", alarm.streak},  {"model_id", alarm.model_id}};
  return j.dump();
}

std::string RetrainMessage(const std::string& job_id,
                           const std::string& state) {
  return json{{"type", "retrain"}, {"job_id", job_id}, {"state", state}}.dump();
}

}  // namespace ocae
