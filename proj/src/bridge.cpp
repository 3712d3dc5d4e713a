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

#include "lcq/bridge.hpp"

#include <chrono>

#include "json_wire.hpp"
#include "lcq/error.hpp"

namespace lcq::bridge {

namespace {

void check_ascending(const std::vector<trs::ChangeEvent>& events, bool decoding) {
  auto fail = [decoding](const std::string& msg) {
    if (decoding) throw DecodeError(msg);
    throw ContractViolation(msg);
  };
  if (events.empty()) fail("change event message carries no events");
  for (std::size_t i = 1; i < events.size(); ++i) {
    if (events[i].order <= events[i - 1].order) fail("change event message orders are not ascending");
  }
}

}  // namespace

std::string encode_message(const ChangeEventMessage& message) {
  check_ascending(message.events, false);
  nlohmann::ordered_json j;
  j["serverId"] = message.server_id;
  auto events = nlohmann::ordered_json::array();
  for (const auto& e : message.events) events.push_back(detail::event_json(e));
  j["events"] = std::move(events);
  return j.dump();
}

ChangeEventMessage decode_message(std::string_view payload) {
  const auto j = detail::parse_json(payload);
  if (!j.is_object()) throw DecodeError("message must be a JSON object");
  auto id = j.find("serverId");
  auto events = j.find("events");
  if (id == j.end() || !id->is_string()) throw DecodeError("message lacks a string 'serverId'");
  if (events == j.end() || !events->is_array()) throw DecodeError("message lacks an 'events' array");
  ChangeEventMessage m;
  m.server_id = id->get<std::string>();
  for (const auto& e : *events) m.events.push_back(detail::event_from(e));
  check_ascending(m.events, true);
  return m;
}

std::string events_topic(std::string_view server_id) { return "trs/" + std::string(server_id) + "/events"; }

// --- publisher --------------------------------------------------------------

ChangePublisher::ChangePublisher(std::string server_id, PubSubTransport& transport, PublisherOptions options,
                                 Metrics* metrics)
    : server_id_(std::move(server_id)),
      topic_(events_topic(server_id_)),
      transport_(transport),
      options_(options),
      metrics_(metrics) {
  if (options_.max_batch == 0) throw ConfigError("max_batch must be positive");
  if (options_.batch_window_ms < 0) throw ConfigError("batch_window_ms must be >= 0");
  thread_ = std::thread([this] { run(); });
}

ChangePublisher::~ChangePublisher() {
  {
    std::lock_guard lock(mutex_);
    stopping_ = true;
  }
  wake_.notify_all();
  thread_.join();
}

void ChangePublisher::on_change(const trs::ChangeEvent& event) {
  {
    std::lock_guard lock(mutex_);
    if (buffer_.empty()) first_buffered_at_ = trs::now_ms();
    buffer_.push_back(event);
  }
  wake_.notify_one();
}

bool ChangePublisher::wait_drained(trs::Millis timeout_ms) {
  std::unique_lock lock(mutex_);
  return drained_.wait_for(lock, std::chrono::milliseconds(timeout_ms),
                           [&] { return buffer_.empty() && !in_flight_; });
}

void ChangePublisher::drop_overflow() {
  std::uint64_t dropped = 0;
  while (buffer_.size() > options_.buffer_max) {
    buffer_.pop_front();
    ++dropped;
  }
  if (dropped == 0) return;
  dropped_ += dropped;
  if (metrics_) metrics_->add_mqtt_dropped(dropped);
}

void ChangePublisher::run() {
  using std::chrono::milliseconds;
  const bool batching = options_.batch_window_ms > 0;
  const std::size_t chunk = batching ? options_.max_batch : 1;
  std::unique_lock lock(mutex_);
  while (true) {
    wake_.wait(lock, [&] { return stopping_ || !buffer_.empty(); });
    if (stopping_) return;
    if (batching && buffer_.size() < chunk) {
      const auto wait = first_buffered_at_ + options_.batch_window_ms - trs::now_ms();
      if (wait > 0) {
        wake_.wait_for(lock, milliseconds(wait), [&] { return stopping_ || buffer_.size() >= chunk; });
        if (stopping_) return;
      }
    }

    ChangeEventMessage message{server_id_, {}};
    while (!buffer_.empty() && message.events.size() < chunk) {
      message.events.push_back(buffer_.front());
      buffer_.pop_front();
    }
    in_flight_ = true;
    lock.unlock();
    bool sent = true;
    try {
      transport_.publish(topic_, encode_message(message));
    } catch (const TransportError&) {
      sent = false;
    }
    lock.lock();
    in_flight_ = false;
    if (sent) {
      ++messages_;
      if (!buffer_.empty()) first_buffered_at_ = trs::now_ms();
    } else {
      buffer_.insert(buffer_.begin(), message.events.begin(), message.events.end());
      drop_overflow();
    }
    if (buffer_.empty()) drained_.notify_all();
    if (!sent) {
      wake_.wait_for(lock, milliseconds(options_.retry_ms), [&] { return stopping_; });
      if (stopping_) return;
    }
  }
}

// --- subscriber -------------------------------------------------------------

void PushSubscriber::add_client(sync::TrsClient& client) { clients_[client.server_id()] = &client; }

void PushSubscriber::attach(PubSubTransport& transport) {
  transport.subscribe(std::string(kEventsFilter),
                      [this](const std::string& topic, const std::string& payload) { on_message(topic, payload); });
}

void PushSubscriber::on_message(const std::string& topic, const std::string& payload) {
  ChangeEventMessage message;
  try {
    message = decode_message(payload);
    if (topic != events_topic(message.server_id)) throw DecodeError("topic does not match serverId");
  } catch (const DecodeError&) {
    if (metrics_) metrics_->add_decode_failure();
    return;
  }
  if (metrics_) metrics_->add_mqtt_messages();
  auto it = clients_.find(message.server_id);
  if (it == clients_.end()) return;
  auto& client = *it->second;

  std::lock_guard lock(client.pipeline());
  if (client.state().phase != sync::Phase::Incremental) return;  // initial sync covers these
  const std::uint64_t last = client.state().last_applied_order;
  if (message.events.back().order <= last) {
    ++duplicates_;
    return;
  }
  bool gap = false;
  std::uint64_t expected = last + 1;
  for (const auto& e : message.events) {
    if (e.order < expected) continue;
    if (e.order != expected) gap = true;
    expected = e.order + 1;
  }
  try {
    if (gap) {
      ++gaps_;
      try {
        client.apply_events(client.poll_once());
      } catch (const LogTruncated&) {
        client.initial_sync();
      }
    }
    client.apply_events(message.events);
    client.retry_dirty();
  } catch (const Error&) {
    // Left for the next message or poll to recover through the change log.
    ++failures_;
  }
}

}  // namespace lcq::bridge
