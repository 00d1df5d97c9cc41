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

#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "ocae/broadcaster.h"
#include "ocae/model_store.h"
#include "ocae/monitor.h"
#include "ocae/tailer.h"

namespace ocae {

inline constexpr std::size_t kMinRetrainRows = 500;

struct ServiceConfig {
  std::filesystem::path model_dir;
  std::filesystem::path csv_path;
  double interval_s = kDefaultIntervalSeconds;
  int alarm_n = kDefaultAlarmN;
  std::string host = "127.0.0.1";
  int port = 8080;  // 0 binds an ephemeral port
  // Empty: GET / returns an endpoint index instead of static files.
  std::filesystem::path static_dir;
  // Parent of fresh retrain bundle directories. Empty: "<model_dir>-retrain".
  std::filesystem::path retrain_root;
  std::uint64_t start_row = 0;
  std::size_t stream_queue = 4096;
  std::size_t alarm_history = 1024;
  std::size_t min_retrain_rows = kMinRetrainRows;
  int retrain_threads = 0;
  std::uint64_t max_cycles = 0;  // 0: until RequestStop()
};

enum class JobState { kCollecting, kTuning, kTraining, kDeploying, kDone, kFailed };
std::string_view JobStateName(JobState state);

struct RetrainRequest {
  std::filesystem::path csv_path;
  int trials = 10;
  std::uint64_t seed = 42;
};

struct RetrainJob {
  std::string job_id;
  JobState state = JobState::kCollecting;
  std::string started_at;
  std::string finished_at;
  std::filesystem::path bundle_dir;
  std::string model_id;
  double threshold = 0.0;
  std::string error;

  bool terminal() const {
    return state == JobState::kDone || state == JobState::kFailed;
  }
  std::string ToJson() const;
};

struct AlarmRecord {
  AlarmEvent event;
  bool acknowledged = false;
  std::string acknowledged_at;
};

struct CycleStats {
  std::uint64_t rows_consumed = 0;
  std::size_t frames = 0;
  std::size_t skipped = 0;  // dropped by cleaning or unscorable
  std::size_t alarms = 0;
  bool rotated = false;
  bool io_error = false;
};

struct StateSnapshot {
  std::string model_id;
  double threshold = 0.0;
  std::uint64_t last_row = 0;
  int streak = 0;
  int alarm_n = kDefaultAlarmN;
  double interval_s = kDefaultIntervalSeconds;
  std::string ToJson() const;
};

// The long-running monitor: poll/score loop, REST + /stream server and at
// most one retrain job. The bundle is an immutable snapshot swapped whole.
class MonitorService {
 public:
  // Loads the bundle; failures throw Error and are fatal for the caller.
  explicit MonitorService(ServiceConfig config);
  ~MonitorService();
  MonitorService(const MonitorService&) = delete;
  MonitorService& operator=(const MonitorService&) = delete;

  // Binds and starts serving on a background thread. Returns the bound port.
  int StartServer();
  void StopServer();

  // One tail -> step -> broadcast pass.
  CycleStats PollOnce();
  // Cycles until RequestStop() or max_cycles. Returns the cycles run.
  std::uint64_t Run();
  void RequestStop();

  StateSnapshot Snapshot() const;
  std::shared_ptr<const DetectorBundle> bundle() const;
  void SwapBundle(std::shared_ptr<const DetectorBundle> bundle);

  // Empty when a job is already running.
  std::optional<std::string> SubmitRetrain(const RetrainRequest& request);
  std::optional<RetrainJob> Job(const std::string& job_id) const;
  void WaitForRetrain();

  // False for unknown ids. Acknowledging twice is a no-op.
  bool Acknowledge(std::uint64_t alarm_id);
  std::optional<AlarmRecord> Alarm(std::uint64_t alarm_id) const;
  std::size_t alarm_count() const;

  Broadcaster& broadcaster() { return broadcaster_; }
  const ServiceConfig& config() const { return config_; }

 private:
  class Http;

  void RunRetrain(std::string job_id, RetrainRequest request,
                  std::filesystem::path bundle_dir);
  void SetJobState(const std::string& job_id, JobState state);
  std::filesystem::path FreshBundleDir(const std::string& job_id) const;

  ServiceConfig config_;
  Broadcaster broadcaster_;
  CsvTailer tailer_;

  mutable std::mutex state_mutex_;
  MonitorState state_;

  mutable std::mutex alarm_mutex_;
  std::deque<AlarmRecord> alarms_;
  std::uint64_t next_alarm_id_ = 1;

  mutable std::mutex job_mutex_;
  std::map<std::string, RetrainJob> jobs_;
  std::uint64_t next_job_ = 1;
  bool job_running_ = false;
  std::jthread job_thread_;

  std::mutex stop_mutex_;
  std::condition_variable stop_cv_;
  bool stop_requested_ = false;

  std::unique_ptr<Http> http_;
};

}  // namespace ocae
