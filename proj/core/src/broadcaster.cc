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

#include "ocae/broadcaster.h"

#include <algorithm>

namespace ocae {

Subscription::Subscription(std::size_t capacity) : capacity_(capacity) {}

std::optional<std::string> Subscription::Next(
    std::chrono::milliseconds timeout) {
  std::unique_lock lock(mutex_);
  ready_.wait_for(lock, timeout, [&] { return closed_ || !queue_.empty(); });
  if (queue_.empty()) return std::nullopt;
  std::string message = std::move(queue_.front());
  queue_.pop_front();
  return message;
}

bool Subscription::closed() const {
  std::lock_guard lock(mutex_);
  return closed_;
}

std::size_t Subscription::pending() const {
  std::lock_guard lock(mutex_);
  return queue_.size();
}

bool Subscription::Offer(const std::string& message) {
  bool accepted = false;
  {
    std::lock_guard lock(mutex_);
    if (closed_) return false;
    if (queue_.size() >= capacity_) {
      closed_ = true;
      queue_.clear();
    } else {
      queue_.push_back(message);
      accepted = true;
    }
  }
  ready_.notify_all();
  return accepted;
}

void Subscription::Close() {
  {
    std::lock_guard lock(mutex_);
    closed_ = true;
  }
  ready_.notify_all();
}

Broadcaster::Broadcaster(std::size_t queue_capacity)
    : capacity_(std::max<std::size_t>(queue_capacity, 1)) {}

Broadcaster::~Broadcaster() { Close(); }

std::shared_ptr<Subscription> Broadcaster::Subscribe() {
  auto subscription = std::make_shared<Subscription>(capacity_);
  std::lock_guard lock(mutex_);
  if (closed_) {
    subscription->Close();
  } else {
    subscribers_.push_back(subscription);
  }
  return subscription;
}

void Broadcaster::Unsubscribe(
    const std::shared_ptr<Subscription>& subscription) {
  std::lock_guard lock(mutex_);
  std::erase(subscribers_, subscription);
}

void Broadcaster::Publish(const std::string& message) {
  std::lock_guard lock(mutex_);
  const auto before = subscribers_.size();
  std::erase_if(subscribers_,
                [&](const auto& s) { return !s->Offer(message); });
  dropped_ += before - subscribers_.size();
}

void Broadcaster::Close() {
  std::lock_guard lock(mutex_);
  closed_ = true;
  for (const auto& s : subscribers_) s->Close();
  subscribers_.clear();
}

std::size_t Broadcaster::subscriber_count() const {
  std::lock_guard lock(mutex_);
  return subscribers_.size();
}

std::size_t Broadcaster::dropped_count() const {
  std::lock_guard lock(mutex_);
  return dropped_;
}

}  // namespace ocae
