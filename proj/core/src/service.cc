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

#include "ocae/service.h"

#include <spdlog/spdlog.h>

#include <chrono>
#include <regex>

#include "httplib.h"
#include "json.hpp"
#include "ocae/error.h"
#include "ocae/pipeline.h"
#include "ocae/simgen.h"

namespace ocae {

using json = nlohmann::ordered_json;

namespace {

std::string NowTimestamp() {
  const auto now = std::chrono::system_clock::now().time_since_epoch();
  return FormatTimestamp(
      std::chrono::duration<double>(
          std::chrono::duration_cast<std::chrono::milliseconds>(now))
          .count());
}

std::string CompactStamp() {
  std::string stamp = NowTimestamp().substr(0, 19);  // YYYY-MM-DDTHH:MM:SS
  std::erase(stamp, '-');
  std::erase(stamp, ':');
  return stamp;
}

void SendJson(httplib::Response& res, int status, const std::string& body) {
  res.status = status;
  res.set_content(body, "application/json");
}

void SendError(httplib::Response& res, int status, const std::string& what) {
  SendJson(res, status, json{{"error", what}}.dump());
}

json AlarmRecordJson(const AlarmRecord& record) {
  json j = json::parse(AlarmMessage(record.event));
  j.erase("type");
  j["acknowledged"] = record.acknowledged;
  j["acknowledged_at"] = record.acknowledged
                             ? json(record.acknowledged_at)
                             : json(nullptr);
  return j;
}

}  // namespace

std::string_view JobStateName(JobState state) {
  switch (state) {
    case JobState::kCollecting: return "collecting";
    case JobState::kTuning: return "tuning";
    case JobState::kTraining: return "training";
    case JobState::kDeploying: return "deploying";
    case JobState::kDone: return "done";
    case JobState::kFailed: return "failed";
  }
  return "unknown";
}

std::string RetrainJob::ToJson() const {
  json j = {{"job_id", job_id},
            {"state", JobStateName(state)},
            {"started_at", started_at}};
  j["finished_at"] = finished_at.empty() ? json(nullptr) : json(finished_at);
  if (state == JobState::kDone) {
    j["bundle_dir"] = bundle_dir.string();
    j["model_id"] = model_id;
    j["threshold"] = threshold;
  } else {
    j["bundle_dir"] = nullptr;
  }
  if (state == JobState::kFailed) j["error"] = error;
  return j.dump();
}

std::string StateSnapshot::ToJson() const {
  return json{{"model_id", model_id},     {"threshold", threshold},
              {"last_row", last_row},     {"streak", streak},
              {"alarm_n", alarm_n},       {"interval_s", interval_s}}
      .dump();
}

class MonitorService::Http {
 public:
  explicit Http(MonitorService& service) : service_(service) {
    // Without SO_REUSEPORT a second monitor on the same port fails to bind.
    server_.set_socket_options([](auto sock) {
      int yes = 1;
      ::setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof(yes));
    });
    Routes();
  }

  int Start(const std::string& host, int port) {
    const int bound = port == 0 ? server_.bind_to_any_port(host)
                                : (server_.bind_to_port(host, port) ? port
                                                                    : -1);
    if (bound < 0) {
      throw Error(ErrorKind::kIo, "cannot bind " + host + ":" +
                                      std::to_string(port));
    }
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
    return bound;
  }

  void Stop() {
    server_.stop();
    if (thread_.joinable()) thread_.join();
  }

  ~Http() { Stop(); }

 private:
  void Routes() {
    auto& svc = service_;
    server_.Get("/health", [](const httplib::Request&, httplib::Response& res) {
      SendJson(res, 200, R"({"status":"ok"})");
    });
    server_.Get("/state", [&svc](const httplib::Request&,
                                 httplib::Response& res) {
      SendJson(res, 200, svc.Snapshot().ToJson());
    });
    server_.Post("/retrain", [&svc](const httplib::Request& req,
                                    httplib::Response& res) {
      RetrainRequest request;
      try {
        const json body = json::parse(req.body);
        if (!body.is_object() || !body.contains("csv_path") ||
            !body["csv_path"].is_string()) {
          return SendError(res, 400, "csv_path (string) is required");
        }
        request.csv_path = body["csv_path"].get<std::string>();
        if (body.contains("trials")) request.trials = body["trials"].get<int>();
        if (body.contains("seed")) {
          request.seed = body["seed"].get<std::uint64_t>();
        }
      } catch (const json::exception& e) {
        return SendError(res, 400, std::string("bad request: ") + e.what());
      }
      if (request.trials < 1) return SendError(res, 400, "trials must be >= 1");
      const auto job_id = svc.SubmitRetrain(request);
      if (!job_id) return SendError(res, 409, "a retrain job is running");
      SendJson(res, 202, json{{"job_id", *job_id}}.dump());
    });
    server_.Get(R"(/retrain/([^/]+))", [&svc](const httplib::Request& req,
                                              httplib::Response& res) {
      const auto job = svc.Job(req.matches[1]);
      if (!job) return SendError(res, 404, "unknown job");
      SendJson(res, 200, job->ToJson());
    });
    server_.Post(R"(/alarms/(\d+)/ack)", [&svc](const httplib::Request& req,
                                                httplib::Response& res) {
      std::uint64_t id = 0;
      try {
        id = std::stoull(req.matches[1]);
      } catch (const std::exception&) {
        return SendError(res, 404, "unknown alarm");
      }
      if (!svc.Acknowledge(id)) return SendError(res, 404, "unknown alarm");
      SendJson(res, 200, AlarmRecordJson(*svc.Alarm(id)).dump());
    });
    server_.Get("/stream", [&svc](const httplib::Request&,
                                  httplib::Response& res) {
      auto subscription = svc.broadcaster().Subscribe();
      res.set_chunked_content_provider(
          "application/x-ndjson",
          [subscription](std::size_t, httplib::DataSink& sink) {
            auto message = subscription->Next(std::chrono::milliseconds(200));
            if (message) {
              message->push_back('\n');
              return sink.write(message->data(), message->size());
            }
            if (subscription->closed()) sink.done();
            return true;
          },
          [&svc, subscription](bool) {
            svc.broadcaster().Unsubscribe(subscription);
          });
    });
    if (!service_.config().static_dir.empty()) {
      if (!server_.set_mount_point("/", service_.config().static_dir.string())) {
        throw Error(ErrorKind::kIo, "static directory not found: " +
                                        service_.config().static_dir.string());
      }
    } else {
      server_.Get("/", [](const httplib::Request&, httplib::Response& res) {
        SendJson(res, 200,
                 json{{"service", "ocae-monitor"},
                      {"endpoints",
                       {"GET /health", "GET /state", "GET /stream",
                        "POST /retrain", "GET /retrain/{job_id}",
                        "POST /alarms/{id}/ack"}}}
                     .dump());
      });
    }
  }

  MonitorService& service_;
  httplib::Server server_;
  std::thread thread_;
};

MonitorService::MonitorService(ServiceConfig config)
    : config_(std::move(config)),
      broadcaster_(config_.stream_queue),
      tailer_(config_.csv_path, config_.start_row) {
  if (config_.alarm_n < 1) {
    throw Error(ErrorKind::kInvalidArgument, "alarm_n must be >= 1");
  }
  if (!(config_.interval_s >= 0.0)) {
    throw Error(ErrorKind::kInvalidArgument, "interval must be >= 0");
  }
  state_.alarm_n = config_.alarm_n;
  state_.interval_s = config_.interval_s;
  state_.last_row = config_.start_row;
  state_.bundle =
      std::make_shared<const DetectorBundle>(LoadBundle(config_.model_dir));
  if (config_.retrain_root.empty()) {
    auto dir = config_.model_dir.lexically_normal();
    if (!dir.has_filename()) dir = dir.parent_path();
    config_.retrain_root = dir.parent_path() / (dir.filename().string() +
                                                "-retrain");
  }
  spdlog::info("loaded bundle {} (threshold {}{})", state_.bundle->model_id,
               state_.bundle->threshold.value,
               state_.bundle->threshold.is_default ? ", default" : "");
}

MonitorService::~MonitorService() {
  RequestStop();
  StopServer();
  WaitForRetrain();
  broadcaster_.Close();
}

int MonitorService::StartServer() {
  if (!http_) http_ = std::make_unique<Http>(*this);
  const int port = http_->Start(config_.host, config_.port);
  spdlog::info("serving on http://{}:{}", config_.host, port);
  return port;
}

void MonitorService::StopServer() {
  if (!http_) return;
  broadcaster_.Close();
  http_->Stop();
  http_.reset();
}

CycleStats MonitorService::PollOnce() {
  CycleStats stats;
  TailBatch batch;
  try {
    batch = tailer_.Poll();
  } catch (const Error& e) {
    spdlog::warn("tail failed, retrying next cycle: {}", e.what());
    stats.io_error = true;
    return stats;
  }
  if (batch.rotated) {
    spdlog::info("{} shrank; treating as rotated and re-reading from row 0",
                 config_.csv_path.string());
    std::lock_guard lock(state_mutex_);
    state_.streak = 0;
  }
  stats.rotated = batch.rotated;
  stats.rows_consumed = batch.rows_consumed;
  stats.skipped = batch.rows_consumed - batch.frames.size();

  for (const SensorFrame& frame : batch.frames) {
    StepResult result;
    {
      std::lock_guard lock(state_mutex_);
      result = Step(state_, frame);
    }
    if (!result.verdict) {
      ++stats.skipped;
      continue;
    }
    ++stats.frames;
    broadcaster_.Publish(ReadingMessage(frame, *result.verdict,
                                        result.model_id));
    if (!result.alarm) continue;
    {
      std::lock_guard lock(alarm_mutex_);
      result.alarm->id = next_alarm_id_++;
      alarms_.push_back(AlarmRecord{*result.alarm, false, {}});
      while (alarms_.size() > config_.alarm_history) alarms_.pop_front();
    }
    ++stats.alarms;
    const AlarmEvent& a = *result.alarm;
    spdlog::warn("ALARM #{} seq={} ts={} score={:.6g} threshold={:.6g} "
                 "streak={}",
                 a.id, a.seq, a.timestamp, a.score, a.threshold, a.streak);
    broadcaster_.Publish(AlarmMessage(a));
  }
  {
    std::lock_guard lock(state_mutex_);
    state_.last_row = tailer_.last_row();
  }
  return stats;
}

std::uint64_t MonitorService::Run() {
  const auto interval = std::chrono::duration<double>(config_.interval_s);
  std::uint64_t cycles = 0;
  while (true) {
    {
      std::lock_guard lock(stop_mutex_);
      if (stop_requested_) break;
    }
    PollOnce();
    ++cycles;
    if (config_.max_cycles != 0 && cycles >= config_.max_cycles) break;
    std::unique_lock lock(stop_mutex_);
    stop_cv_.wait_for(lock, interval, [this] { return stop_requested_; });
  }
  spdlog::info("monitor stopped after {} cycles; final state {}", cycles,
               Snapshot().ToJson());
  return cycles;
}

void MonitorService::RequestStop() {
  {
    std::lock_guard lock(stop_mutex_);
    stop_requested_ = true;
  }
  stop_cv_.notify_all();
}

StateSnapshot MonitorService::Snapshot() const {
  std::lock_guard lock(state_mutex_);
  return StateSnapshot{state_.bundle->model_id, state_.bundle->threshold.value,
                       state_.last_row,         state_.streak,
                       state_.alarm_n,          state_.interval_s};
}

std::shared_ptr<const DetectorBundle> MonitorService::bundle() const {
  std::lock_guard lock(state_mutex_);
  return state_.bundle;
}

void MonitorService::SwapBundle(std::shared_ptr<const DetectorBundle> bundle) {
  if (!bundle) {
    throw Error(ErrorKind::kInvalidArgument, "cannot swap in a null bundle");
  }
  std::lock_guard lock(state_mutex_);
  state_.bundle = std::move(bundle);
}

std::filesystem::path MonitorService::FreshBundleDir(
    const std::string& job_id) const {
  const std::string base = CompactStamp() + "-" + job_id;
  auto dir = config_.retrain_root / base;
  for (int i = 1; std::filesystem::exists(dir); ++i) {
    dir = config_.retrain_root / (base + "-" + std::to_string(i));
  }
  return dir;
}

std::optional<std::string> MonitorService::SubmitRetrain(
    const RetrainRequest& request) {
  std::lock_guard lock(job_mutex_);
  if (job_running_) return std::nullopt;
  if (job_thread_.joinable()) job_thread_.join();
  const std::string job_id = "job-" + std::to_string(next_job_++);
  RetrainJob job;
  job.job_id = job_id;
  job.started_at = NowTimestamp();
  jobs_[job_id] = job;
  job_running_ = true;
  broadcaster_.Publish(RetrainMessage(job_id, "collecting"));
  job_thread_ = std::jthread([this, job_id, request,
                              dir = FreshBundleDir(job_id)] {
    RunRetrain(job_id, request, dir);
  });
  return job_id;
}

void MonitorService::SetJobState(const std::string& job_id, JobState state) {
  {
    std::lock_guard lock(job_mutex_);
    RetrainJob& job = jobs_.at(job_id);
    if (job.state == state) return;
    job.state = state;
  }
  broadcaster_.Publish(RetrainMessage(job_id, std::string(JobStateName(state))));
}

void MonitorService::RunRetrain(std::string job_id, RetrainRequest request,
                                std::filesystem::path bundle_dir) {
  PipelineOptions options;
  options.tune = true;
  options.trials = request.trials;
  options.seed = request.seed;
  options.threads = config_.retrain_threads;
  options.min_rows = config_.min_retrain_rows;
  spdlog::info("{}: retraining from {} into {}", job_id,
               request.csv_path.string(), bundle_dir.string());
  try {
    TrainFromCsv(request.csv_path, options, bundle_dir,
                 [&](PipelineStage stage) {
                   switch (stage) {
                     case PipelineStage::kCollecting:
                       return SetJobState(job_id, JobState::kCollecting);
                     case PipelineStage::kTuning:
                       return SetJobState(job_id, JobState::kTuning);
                     case PipelineStage::kTraining:
                       return SetJobState(job_id, JobState::kTraining);
                     case PipelineStage::kDeploying:
                       return SetJobState(job_id, JobState::kDeploying);
                   }
                 });
    SetJobState(job_id, JobState::kDeploying);
    auto bundle = std::make_shared<const DetectorBundle>(LoadBundle(bundle_dir));
    const std::string model_id = bundle->model_id;
    const double threshold = bundle->threshold.value;
    SwapBundle(std::move(bundle));
    {
      std::lock_guard lock(job_mutex_);
      RetrainJob& job = jobs_.at(job_id);
      job.bundle_dir = bundle_dir;
      job.model_id = model_id;
      job.threshold = threshold;
      job.finished_at = NowTimestamp();
    }
    spdlog::info("{}: deployed {} (threshold {})", job_id, model_id, threshold);
    SetJobState(job_id, JobState::kDone);
  } catch (const std::exception& e) {
    {
      std::lock_guard lock(job_mutex_);
      RetrainJob& job = jobs_.at(job_id);
      job.error = e.what();
      job.finished_at = NowTimestamp();
    }
    spdlog::error("{}: retrain failed, keeping current bundle: {}", job_id,
                  e.what());
    SetJobState(job_id, JobState::kFailed);
  }
  std::lock_guard lock(job_mutex_);
  job_running_ = false;
}

std::optional<RetrainJob> MonitorService::Job(const std::string& job_id) const {
  std::lock_guard lock(job_mutex_);
  const auto it = jobs_.find(job_id);
  if (it == jobs_.end()) return std::nullopt;
  return it->second;
}

void MonitorService::WaitForRetrain() {
  std::jthread thread;
  {
    std::lock_guard lock(job_mutex_);
    thread = std::move(job_thread_);
  }
  if (thread.joinable()) thread.join();
}

bool MonitorService::Acknowledge(std::uint64_t alarm_id) {
  std::lock_guard lock(alarm_mutex_);
  for (AlarmRecord& record : alarms_) {
    if (record.event.id != alarm_id) continue;
    if (!record.acknowledged) {
      record.acknowledged = true;
      record.acknowledged_at = NowTimestamp();
    }
    return true;
  }
  return false;
}

std::optional<AlarmRecord> MonitorService::Alarm(std::uint64_t alarm_id) const {
  std::lock_guard lock(alarm_mutex_);
  for (const AlarmRecord& record : alarms_) {
    if (record.event.id == alarm_id) return record;
  }
  return std::nullopt;
}

std::size_t MonitorService::alarm_count() const {
  std::lock_guard lock(alarm_mutex_);
  return alarms_.size();
}

}  // namespace ocae
