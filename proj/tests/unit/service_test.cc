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

#include <atomic>
#include <filesystem>
#include <set>
#include <thread>

#include "doctest.h"
#include "json.hpp"
#include "ocae/error.h"
#include "ocae/service.h"
#include "test_support.h"

// After Eigen: resolv.h defines _res as a macro.
#include "httplib.h"

namespace ocae {
namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace std::chrono_literals;
using testing::AppendText;
using testing::TempDir;
using testing::WriteText;

// Zero model with a 0..2 scaler: pH 1 scores 0, pH 2 scores 0.25 / 7.
void WriteControlledBundle(const fs::path& dir) {
  SaveBundle(dir, AttentionAutoencoder::Zeros(8),
             ChannelScaler(ChannelVector{0, 0, 0, 0, 0, 0, 0},
                           ChannelVector{2, 2, 2, 2, 2, 2, 2}),
             0.01);
}

std::string Row(std::uint64_t seq, bool anomaly) {
  return "2025-01-01T00:00:00Z," + std::to_string(seq) +
         (anomaly ? ",2" : ",1") + ",1,1,1,1,1,1\n";
}

struct Fixture {
  TempDir dir;
  ServiceConfig config;

  Fixture() {
    WriteControlledBundle(dir / "bundle");
    config.model_dir = dir / "bundle";
    config.csv_path = dir / "data.csv";
    config.interval_s = 0.01;
    config.port = 0;
  }
};

std::vector<std::string> Drain(Subscription& s) {
  std::vector<std::string> out;
  while (auto m = s.Next(0ms)) out.push_back(*m);
  return out;
}

TEST_CASE("service: missing bundle is fatal") {
  TempDir dir;
  ServiceConfig config;
  config.model_dir = dir / "nope";
  config.csv_path = dir / "data.csv";
  try {
    MonitorService service(config);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kIo);
  }
}

TEST_CASE("service: empty stream for k cycles sends nothing") {
  Fixture f;
  f.config.max_cycles = 3;
  MonitorService service(f.config);
  auto sub = service.broadcaster().Subscribe();
  CHECK(service.Run() == 3);
  CHECK(Drain(*sub).empty());
  CHECK(service.Snapshot().last_row == 0);
}

TEST_CASE("service: readings and debounced alarms are broadcast in order") {
  Fixture f;
  MonitorService service(f.config);
  auto sub = service.broadcaster().Subscribe();
  std::string text = CsvHeaderLine() + "\n";
  for (std::uint64_t i = 0; i < 10; ++i) text += Row(i, i == 3 || i == 5 || i == 6);
  WriteText(f.config.csv_path, text);
  const CycleStats stats = service.PollOnce();
  CHECK(stats.frames == 10);
  CHECK(stats.alarms == 1);
  const auto messages = Drain(*sub);
  REQUIRE(messages.size() == 11);
  const json alarm = json::parse(messages[7]);
  CHECK(alarm["type"] == "alarm");
  CHECK(alarm["seq"] == 6);
  CHECK(alarm["id"] == 1);
  CHECK(alarm["streak"] == 2);
  CHECK(json::parse(messages[6])["seq"] == 6);
  CHECK(service.Snapshot().last_row == 10);
  CHECK(service.Snapshot().streak == 0);
}

TEST_CASE("service: REST endpoints") {
  Fixture f;
  MonitorService service(f.config);
  const int port = service.StartServer();
  httplib::Client client("127.0.0.1", port);

  auto health = client.Get("/health");
  REQUIRE(health);
  CHECK(health->status == 200);
  CHECK(json::parse(health->body) == json{{"status", "ok"}});

  WriteText(f.config.csv_path, Row(0, true) + Row(1, true) + Row(2, false));
  service.PollOnce();
  auto state = client.Get("/state");
  REQUIRE(state);
  const json s = json::parse(state->body);
  CHECK(s["model_id"] == service.bundle()->model_id);
  CHECK(s["threshold"] == 0.01);
  CHECK(s["last_row"] == 3);
  CHECK(s["streak"] == 0);
  CHECK(s["alarm_n"] == 2);
  CHECK(s["interval_s"] == 0.01);

  auto ack = client.Post("/alarms/1/ack", "", "application/json");
  REQUIRE(ack);
  CHECK(ack->status == 200);
  const json first = json::parse(ack->body);
  CHECK(first["acknowledged"] == true);
  auto again = client.Post("/alarms/1/ack", "", "application/json");
  CHECK(json::parse(again->body)["acknowledged_at"] == first["acknowledged_at"]);
  CHECK(client.Post("/alarms/42/ack", "", "application/json")->status == 404);

  CHECK(client.Post("/retrain", "{}", "application/json")->status == 400);
  CHECK(client.Post("/retrain", "nope", "application/json")->status == 400);
  CHECK(client.Get("/retrain/job-99")->status == 404);
  CHECK(client.Get("/")->status == 200);
  service.StopServer();
}

TEST_CASE("service: /stream delivers newline-delimited JSON") {
  Fixture f;
  MonitorService service(f.config);
  const int port = service.StartServer();
  std::vector<std::string> lines;
  std::string buffer;
  std::atomic<bool> connected{false};
  std::thread reader([&] {
    httplib::Client client("127.0.0.1", port);
    client.Get("/stream", [&](const char* data, std::size_t n) {
      connected = true;
      buffer.append(data, n);
      for (auto pos = buffer.find('\n'); pos != std::string::npos;
           pos = buffer.find('\n')) {
        lines.push_back(buffer.substr(0, pos));
        buffer.erase(0, pos + 1);
      }
      return lines.size() < 4;
    });
  });
  for (int i = 0; i < 200 && service.broadcaster().subscriber_count() == 0; ++i) {
    std::this_thread::sleep_for(5ms);
  }
  REQUIRE(service.broadcaster().subscriber_count() == 1);
  WriteText(f.config.csv_path, Row(0, false) + Row(1, true) + Row(2, true));
  service.PollOnce();
  reader.join();
  REQUIRE(lines.size() == 4);
  CHECK(json::parse(lines[0])["type"] == "reading");
  CHECK(json::parse(lines[3])["type"] == "alarm");
  service.StopServer();
}

TEST_CASE("service: retrain job lifecycle") {
  Fixture f;
  f.config.min_retrain_rows = 500;
  f.config.retrain_threads = 1;
  MonitorService service(f.config);
  auto sub = service.broadcaster().Subscribe();
  const std::string old_id = service.bundle()->model_id;

  SUBCASE("too few rows fail and keep the bundle") {
    WriteText(f.dir / "small.csv",
              testing::CsvText(testing::NormalFrames(10, 1)));
    const auto id = service.SubmitRetrain(RetrainRequest{f.dir / "small.csv", 1, 1});
    REQUIRE(id.has_value());
    service.WaitForRetrain();
    const auto job = service.Job(*id);
    REQUIRE(job.has_value());
    CHECK(job->state == JobState::kFailed);
    CHECK(job->error.find("insufficient data") != std::string::npos);
    CHECK(service.bundle()->model_id == old_id);
    const json j = json::parse(job->ToJson());
    CHECK(j["state"] == "failed");
  }

  SUBCASE("valid data deploys a new bundle; a concurrent request conflicts") {
    WriteText(f.dir / "train.csv",
              testing::CsvText(testing::NormalFrames(600, 2)));
    const auto id = service.SubmitRetrain(RetrainRequest{f.dir / "train.csv", 1, 3});
    REQUIRE(id.has_value());
    CHECK_FALSE(service.SubmitRetrain(RetrainRequest{f.dir / "train.csv", 1, 3}));
    service.WaitForRetrain();
    const auto job = service.Job(*id);
    REQUIRE(job.has_value());
    CHECK(job->state == JobState::kDone);
    CHECK(job->model_id == service.bundle()->model_id);
    CHECK(job->model_id != old_id);
    CHECK(fs::exists(job->bundle_dir / "model.ocae"));
    CHECK(job->bundle_dir.parent_path() == f.dir / "bundle-retrain");

    std::vector<std::string> states;
    for (const auto& m : Drain(*sub)) {
      const json j = json::parse(m);
      if (j["type"] == "retrain") states.push_back(j["state"]);
    }
    REQUIRE(states.size() >= 3);
    CHECK(states.front() == "collecting");
    CHECK(std::find(states.begin(), states.end(), "tuning") != states.end());
    CHECK(std::find(states.begin(), states.end(), "training") != states.end());
    CHECK(states.back() == "done");

    WriteText(f.config.csv_path, Row(0, false));
    service.PollOnce();
    const auto reading = Drain(*sub);
    REQUIRE(reading.size() == 1);
    CHECK(json::parse(reading[0])["model_id"] == job->model_id);
    // A second job may start once the first has finished.
    CHECK(service.SubmitRetrain(RetrainRequest{f.dir / "train.csv", 1, 4}));
    service.WaitForRetrain();
  }
}

TEST_CASE("service: POST /retrain answers 202 then 409") {
  Fixture f;
  f.config.min_retrain_rows = 500;
  f.config.retrain_threads = 1;
  MonitorService service(f.config);
  const int port = service.StartServer();
  WriteText(f.dir / "train.csv", testing::CsvText(testing::NormalFrames(600, 2)));
  httplib::Client client("127.0.0.1", port);
  const std::string body =
      json{{"csv_path", (f.dir / "train.csv").string()}, {"trials", 1}}.dump();
  auto first = client.Post("/retrain", body, "application/json");
  REQUIRE(first);
  CHECK(first->status == 202);
  const std::string job_id = json::parse(first->body)["job_id"];
  auto second = client.Post("/retrain", body, "application/json");
  CHECK(second->status == 409);
  service.WaitForRetrain();
  auto status = client.Get("/retrain/" + job_id);
  REQUIRE(status);
  const json j = json::parse(status->body);
  CHECK(j["job_id"] == job_id);
  CHECK(j["state"] == "done");
  CHECK(j["bundle_dir"].is_string());
  service.StopServer();
}

TEST_CASE("service: every reading names a fully loaded bundle during swaps") {
  Fixture f;
  // A second complete bundle with a different width and threshold.
  SaveBundle(f.dir / "other", AttentionAutoencoder::Zeros(10),
             ChannelScaler(ChannelVector{0, 0, 0, 0, 0, 0, 0},
                           ChannelVector{2, 2, 2, 2, 2, 2, 2}),
             0.02);
  MonitorService service(f.config);
  auto a = service.bundle();
  auto b = std::make_shared<const DetectorBundle>(LoadBundle(f.dir / "other"));
  const std::set<std::string> ids{a->model_id, b->model_id};
  auto sub = service.broadcaster().Subscribe();
  std::atomic<bool> done{false};
  std::thread swapper([&] {
    for (int i = 0; !done; ++i) service.SwapBundle(i % 2 ? a : b);
  });
  std::string text;
  for (std::uint64_t i = 0; i < 2000; ++i) text += Row(i, i % 3 == 0);
  WriteText(f.config.csv_path, text);
  service.PollOnce();
  done = true;
  swapper.join();
  std::size_t readings = 0;
  for (const auto& m : Drain(*sub)) {
    const json j = json::parse(m);
    CHECK(ids.count(j["model_id"].get<std::string>()) == 1);
    readings += j["type"] == "reading";
  }
  CHECK(readings == 2000);
}

TEST_CASE("service: a taken port is reported as an I/O error") {
  Fixture f;
  MonitorService first(f.config);
  const int port = first.StartServer();
  ServiceConfig config = f.config;
  config.port = port;
  MonitorService second(config);
  try {
    second.StartServer();
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kIo);
  }
}

}  // namespace
}  // namespace ocae
