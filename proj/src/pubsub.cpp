// Copyright 2026 The LCQ Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "lcq/pubsub.hpp"

#include "lcq/error.hpp"

namespace lcq::bridge {

bool topic_matches(std::string_view filter, std::string_view topic) {
  while (true) {
    const auto fcut = filter.find('/');
    const auto tcut = topic.find('/');
    const auto flevel = filter.substr(0, fcut);
    const auto tlevel = topic.substr(0, tcut);
    if (flevel == "#") return true;
    if (flevel != "+" && flevel != tlevel) return false;
    if (fcut == std::string_view::npos || tcut == std::string_view::npos) {
      // "a/#" also matches "a"
      if (fcut != std::string_view::npos) return filter.substr(fcut + 1) == "#";
      return tcut == std::string_view::npos;
    }
    filter.remove_prefix(fcut + 1);
    topic.remove_prefix(tcut + 1);
  }
}

InProcessBus::InProcessBus(BusOptions options) : options_(options), thread_([this] { run(); }) {}

InProcessBus::~InProcessBus() {
  {
    std::lock_guard lock(mutex_);
    stopping_ = true;
  }
  wake_.notify_all();
  thread_.join();
}

void InProcessBus::publish(const std::string& topic, const std::string& payload) {
  {
    std::lock_guard lock(mutex_);
    if (!available_) throw TransportError("in-process bus unavailable");
    queue_.emplace_back(topic, payload);
    if (options_.duplicate_delivery) queue_.emplace_back(topic, payload);
    ++published_;
  }
  wake_.notify_one();
}

void InProcessBus::subscribe(const std::string& filter, MessageHandler handler) {
  std::lock_guard lock(mutex_);
  subscriptions_.push_back({filter, std::move(handler)});
}

void InProcessBus::set_available(bool available) {
  std::lock_guard lock(mutex_);
  available_ = available;
}

void InProcessBus::wait_idle() {
  std::unique_lock lock(mutex_);
  idle_.wait(lock, [&] { return queue_.empty() && !busy_; });
}

std::uint64_t InProcessBus::published() const {
  std::lock_guard lock(mutex_);
  return published_;
}

std::uint64_t InProcessBus::delivered() const {
  std::lock_guard lock(mutex_);
  return delivered_;
}

void InProcessBus::run() {
  std::unique_lock lock(mutex_);
  while (true) {
    wake_.wait(lock, [&] { return stopping_ || !queue_.empty(); });
    if (stopping_) return;
    auto [topic, payload] = std::move(queue_.front());
    queue_.pop_front();
    busy_ = true;
    std::vector<MessageHandler> targets;
    for (const auto& s : subscriptions_) {
      if (topic_matches(s.filter, topic)) targets.push_back(s.handler);
    }
    lock.unlock();
    for (const auto& handler : targets) handler(topic, payload);
    lock.lock();
    ++delivered_;
    busy_ = false;
    if (queue_.empty()) idle_.notify_all();
  }
}

}  // namespace lcq::bridge
