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

#include <condition_variable>
#include <cstdint>
#include <deque>
#include <functional>
#include <mutex>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

namespace lcq::bridge {

using MessageHandler = std::function<void(const std::string& topic, const std::string& payload)>;

// Publish/subscribe port. Delivery is at-least-once and ordered per publisher.
class PubSubTransport {
 public:
  virtual ~PubSubTransport() = default;
  // Throws TransportError when the broker cannot take the message.
  virtual void publish(const std::string& topic, const std::string& payload) = 0;
  virtual void subscribe(const std::string& filter, MessageHandler handler) = 0;
};

// MQTT topic filter matching with '+' (one level) and '#' (rest).
bool topic_matches(std::string_view filter, std::string_view topic);

struct BusOptions {
  // Deliver every message twice, like a QoS 1 redelivery.
  bool duplicate_delivery = false;
};

// In-process broker: one dispatcher thread delivers messages in publish
// order.
class InProcessBus : public PubSubTransport {
 public:
  explicit InProcessBus(BusOptions options = {});
  ~InProcessBus() override;

  InProcessBus(const InProcessBus&) = delete;
  InProcessBus& operator=(const InProcessBus&) = delete;

  void publish(const std::string& topic, const std::string& payload) override;
  void subscribe(const std::string& filter, MessageHandler handler) override;

  // While unavailable, publish throws TransportError.
  void set_available(bool available);
  // Blocks until every published message has been handled.
  void wait_idle();

  std::uint64_t published() const;
  std::uint64_t delivered() const;

 private:
  struct Subscription {
    std::string filter;
    MessageHandler handler;
  };
  void run();

  BusOptions options_;
  mutable std::mutex mutex_;
  std::condition_variable wake_;
  std::condition_variable idle_;
  std::deque<std::pair<std::string, std::string>> queue_;
  std::vector<Subscription> subscriptions_;
  bool available_ = true;
  bool busy_ = false;
  bool stopping_ = false;
  std::uint64_t published_ = 0;
  std::uint64_t delivered_ = 0;
  std::thread thread_;
};

}  // namespace lcq::bridge
