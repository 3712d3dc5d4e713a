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

#pragma once

#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <map>
#include <mutex>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "lcq/metrics.hpp"
#include "lcq/pubsub.hpp"
#include "lcq/trs.hpp"
#include "lcq/trs_client.hpp"

// Push path: TRS servers publish their change events, the warehouse applies
// them as they arrive and falls back to the change log when it sees a gap.
namespace lcq::bridge {

struct ChangeEventMessage {
  std::string server_id;
  std::vector<trs::ChangeEvent> events;  // ascending order, non-empty

  bool operator==(const ChangeEventMessage&) const = default;
};

// {"serverId":...,"events":[...]}. Throws ContractViolation for an empty or
// non-ascending batch.
std::string encode_message(const ChangeEventMessage& message);
// Throws DecodeError for malformed payloads and broken invariants.
ChangeEventMessage decode_message(std::string_view payload);

// "trs/{serverId}/events"
std::string events_topic(std::string_view server_id);
inline constexpr std::string_view kEventsFilter = "trs/+/events";

struct PublisherOptions {
  // Events recorded within this window go out as one message; 0 sends each
  // event on its own.
  trs::Millis batch_window_ms = 0;
  std::size_t max_batch = 10;
  // Events held while the transport is down; beyond this the oldest are
  // dropped and left to the subscriber's pull fallback.
  std::size_t buffer_max = 1000;
  trs::Millis retry_ms = 100;
};

// Server side. Feed it from the change-log listener; a background thread
// batches and publishes in record order.
class ChangePublisher {
 public:
  ChangePublisher(std::string server_id, PubSubTransport& transport, PublisherOptions options = {},
                  Metrics* metrics = nullptr);
  ~ChangePublisher();

  ChangePublisher(const ChangePublisher&) = delete;
  ChangePublisher& operator=(const ChangePublisher&) = delete;

  void on_change(const trs::ChangeEvent& event);

  // Blocks until the buffer is empty or `timeout_ms` passes; false on timeout.
  bool wait_drained(trs::Millis timeout_ms = 10000);

  std::uint64_t messages_published() const { return messages_; }
  std::uint64_t events_dropped() const { return dropped_; }

 private:
  void run();
  void drop_overflow();  // requires mutex_

  std::string server_id_;
  std::string topic_;
  PubSubTransport& transport_;
  PublisherOptions options_;
  Metrics* metrics_;

  std::mutex mutex_;
  std::condition_variable wake_;
  std::condition_variable drained_;
  std::deque<trs::ChangeEvent> buffer_;
  trs::Millis first_buffered_at_ = 0;
  bool in_flight_ = false;
  bool stopping_ = false;
  std::atomic<std::uint64_t> messages_{0};
  std::atomic<std::uint64_t> dropped_{0};
  std::thread thread_;
};

// Warehouse side. Routes each message to its server's client, serialized by
// that client's pipeline lock.
class PushSubscriber {
 public:
  explicit PushSubscriber(Metrics* metrics = nullptr) : metrics_(metrics) {}

  void add_client(sync::TrsClient& client);
  // Subscribes to kEventsFilter.
  void attach(PubSubTransport& transport);

  // In-sequence events are compacted and applied; a gap triggers a pull
  // catch-up first; events at or below the applied order are ignored.
  void on_message(const std::string& topic, const std::string& payload);

  std::uint64_t gaps_detected() const { return gaps_; }
  std::uint64_t duplicates_ignored() const { return duplicates_; }
  std::uint64_t failures() const { return failures_; }

 private:
  Metrics* metrics_;
  std::map<std::string, sync::TrsClient*> clients_;
  std::atomic<std::uint64_t> gaps_{0};
  std::atomic<std::uint64_t> duplicates_{0};
  std::atomic<std::uint64_t> failures_{0};
};

}  // namespace lcq::bridge
