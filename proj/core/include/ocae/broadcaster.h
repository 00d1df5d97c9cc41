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

#include <chrono>
#include <condition_variable>
#include <cstddef>
#include <deque>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace ocae {

// One consumer's bounded message queue.
class Subscription {
 public:
  explicit Subscription(std::size_t capacity);

  // Waits up to `timeout` for a message. Empty when timed out or closed.
  std::optional<std::string> Next(std::chrono::milliseconds timeout);

  // True once the broadcaster dropped this subscriber or shut down.
  bool closed() const;
  std::size_t pending() const;

 private:
  friend class Broadcaster;
  bool Offer(const std::string& message);  // false on overflow
  void Close();

  const std::size_t capacity_;
  mutable std::mutex mutex_;
  std::condition_variable ready_;
  std::deque<std::string> queue_;
  bool closed_ = false;
};

// Fan-out of stream messages. Publish never blocks on a consumer: a
// subscriber whose queue is full is closed and dropped.
class Broadcaster {
 public:
  explicit Broadcaster(std::size_t queue_capacity = 4096);
  ~Broadcaster();

  std::shared_ptr<Subscription> Subscribe();
  void Unsubscribe(const std::shared_ptr<Subscription>& subscription);
  void Publish(const std::string& message);
  void Close();

  std::size_t subscriber_count() const;
  std::size_t dropped_count() const;

 private:
  const std::size_t capacity_;
  mutable std::mutex mutex_;
  std::vector<std::shared_ptr<Subscription>> subscribers_;
  std::size_t dropped_ = 0;
  bool closed_ = false;
};

}  // namespace ocae
