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
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "lcq/pubsub.hpp"

// Minimal MQTT 3.1.1 client: CONNECT, SUBSCRIBE, PUBLISH at QoS 0/1, PUBACK,
// PINGREQ and DISCONNECT over plain TCP.
namespace lcq::mqtt {

enum class PacketType : std::uint8_t {
  Connect = 1,
  Connack = 2,
  Publish = 3,
  Puback = 4,
  Subscribe = 8,
  Suback = 9,
  Pingreq = 12,
  Pingresp = 13,
  Disconnect = 14,
};

struct Packet {
  PacketType type;
  std::uint8_t flags = 0;  // low nibble of the fixed header
  std::string body;        // variable header + payload
};

struct ConnectPacket {
  std::string client_id;
  std::uint16_t keep_alive_s = 30;
  bool clean_session = true;
};

struct PublishPacket {
  std::string topic;
  std::string payload;
  std::uint8_t qos = 0;
  std::uint16_t packet_id = 0;  // QoS > 0 only
  bool dup = false;
  bool retain = false;
};

struct SubscribePacket {
  std::uint16_t packet_id = 0;
  std::vector<std::pair<std::string, std::uint8_t>> filters;  // filter, requested QoS
};

// Variable-length "remaining length" field, 1-4 bytes.
std::string encode_remaining_length(std::size_t length);

std::string encode(const ConnectPacket& p);
std::string encode(const PublishPacket& p);
std::string encode(const SubscribePacket& p);
std::string encode_connack(bool session_present, std::uint8_t return_code);
std::string encode_puback(std::uint16_t packet_id);
std::string encode_suback(std::uint16_t packet_id, const std::vector<std::uint8_t>& codes);
std::string encode_pingreq();
std::string encode_pingresp();
std::string encode_disconnect();

// Inverses of the encoders; throw DecodeError on malformed bodies.
ConnectPacket parse_connect(const Packet& p);
PublishPacket parse_publish(const Packet& p);
SubscribePacket parse_subscribe(const Packet& p);
std::uint16_t parse_packet_id(const Packet& p);  // PUBACK, SUBACK
std::uint8_t parse_connack_code(const Packet& p);

// Splits a byte stream into packets.
class Decoder {
 public:
  void feed(std::string_view bytes) { buffer_.append(bytes); }
  // Next complete packet; throws DecodeError on a malformed fixed header.
  std::optional<Packet> next();

 private:
  std::string buffer_;
};

struct BrokerAddress {
  std::string host;
  int port = 1883;
};

// "mqtt://host[:port]" or "tcp://host[:port]". Throws ConfigError.
BrokerAddress parse_broker_url(std::string_view url);

struct MqttOptions {
  std::string url = "mqtt://127.0.0.1:1883";
  std::string client_id = "lcq";
  std::uint16_t keep_alive_s = 30;
  std::chrono::milliseconds connect_timeout{3000};
  std::chrono::milliseconds reconnect_delay{200};
  // Unacknowledged QoS 1 publishes are resent (DUP set) after this long.
  std::chrono::milliseconds ack_timeout{2000};
};

// PubSubTransport over a broker connection. Publishes at QoS 1 and keeps
// them until PUBACK; a lost connection is re-established in the background,
// subscriptions renewed and unacknowledged publishes resent. Handlers run on
// the reader thread, one message at a time.
class MqttTransport : public bridge::PubSubTransport {
 public:
  explicit MqttTransport(MqttOptions options);
  ~MqttTransport() override;

  MqttTransport(const MqttTransport&) = delete;
  MqttTransport& operator=(const MqttTransport&) = delete;

  // Blocking first connection. Throws TransportError.
  void connect();
  void close();

  // Throws TransportError while disconnected.
  void publish(const std::string& topic, const std::string& payload) override;
  void subscribe(const std::string& filter, bridge::MessageHandler handler) override;

  bool connected() const { return connected_; }
  std::size_t unacknowledged() const;
  // Blocks until every publish is acknowledged; false on timeout.
  bool wait_acknowledged(std::chrono::milliseconds timeout);

 private:
  struct Subscription {
    std::string filter;
    bridge::MessageHandler handler;
  };
  struct InFlight {
    PublishPacket packet;
    std::chrono::steady_clock::time_point sent_at;
  };

  void open_socket();  // TCP connect + CONNECT/CONNACK; throws TransportError
  void send_raw(const std::string& bytes);
  void close_socket();
  void io_loop();
  void handle(const Packet& packet);
  void housekeeping();
  void on_connected();
  std::uint16_t next_packet_id();  // requires mutex_

  MqttOptions options_;
  BrokerAddress address_;

  mutable std::mutex mutex_;  // guards everything below except the atomics
  std::condition_variable changed_;
  int fd_ = -1;
  std::map<std::uint16_t, InFlight> in_flight_;
  std::vector<Subscription> subscriptions_;
  std::uint16_t last_packet_id_ = 0;
  std::chrono::steady_clock::time_point last_sent_;
  std::mutex write_mutex_;  // taken before mutex_ when both are needed

  std::atomic<bool> connected_{false};
  std::atomic<bool> stopping_{false};
  std::thread io_;
};

}  // namespace lcq::mqtt
