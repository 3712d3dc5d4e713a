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

// Test-only MQTT 3.1.1 broker on 127.0.0.1: CONNECT, SUBSCRIBE, PUBLISH at
// QoS 0/1, PINGREQ, DISCONNECT. Enough to run the transport over real TCP.

#include <arpa/inet.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <atomic>
#include <list>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "lcq/mqtt.hpp"
#include "lcq/pubsub.hpp"

namespace lcq::testing {

class MiniBroker {
 public:
  explicit MiniBroker(bool duplicate_delivery = false) : duplicate_(duplicate_delivery) {
    listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    int one = 1;
    ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    addr.sin_port = 0;
    ::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr);
    ::listen(listen_fd_, 16);
    socklen_t len = sizeof addr;
    ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
    port_ = ntohs(addr.sin_port);
    acceptor_ = std::thread([this] { accept_loop(); });
  }

  ~MiniBroker() {
    stopping_ = true;
    acceptor_.join();
    kill_connections();
    std::vector<std::thread> threads;
    {
      std::lock_guard lock(mutex_);
      for (auto& s : sessions_) threads.push_back(std::move(s->thread));
    }
    for (auto& t : threads) {
      if (t.joinable()) t.join();
    }
    for (auto& s : sessions_) ::close(s->fd);
    ::close(listen_fd_);
  }

  int port() const { return port_; }
  std::string url() const { return "mqtt://127.0.0.1:" + std::to_string(port_); }

  // Drops every client connection (clients are expected to reconnect).
  void kill_connections() {
    std::lock_guard lock(mutex_);
    for (auto& s : sessions_) ::shutdown(s->fd, SHUT_RDWR);
  }
  // While refusing, new CONNECTs get return code 3 (server unavailable).
  void set_refusing(bool refusing) { refusing_ = refusing; }
  // Stop acknowledging publishes (clients must resend).
  void set_withhold_acks(bool withhold) { withhold_acks_ = withhold; }

  std::uint64_t publishes_received() const { return publishes_; }
  std::uint64_t connects() const { return connects_; }

 private:
  struct Session {
    int fd;
    std::mutex write_mutex;
    std::vector<std::string> filters;
    std::uint16_t next_id = 0;
    std::thread thread;
  };

  static void send_all(Session& s, const std::string& bytes) {
    std::lock_guard lock(s.write_mutex);
    std::size_t off = 0;
    while (off < bytes.size()) {
      const ssize_t n = ::send(s.fd, bytes.data() + off, bytes.size() - off, MSG_NOSIGNAL);
      if (n <= 0) return;
      off += static_cast<std::size_t>(n);
    }
  }

  void accept_loop() {
    while (!stopping_) {
      pollfd pfd{listen_fd_, POLLIN, 0};
      if (::poll(&pfd, 1, 50) <= 0) continue;
      const int fd = ::accept(listen_fd_, nullptr, nullptr);
      if (fd < 0) continue;
      auto session = std::make_shared<Session>();
      session->fd = fd;
      std::lock_guard lock(mutex_);
      sessions_.push_back(session);
      session->thread = std::thread([this, session] { serve(*session); });
    }
  }

  void serve(Session& s) {
    mqtt::Decoder decoder;
    char buf[4096];
    bool open = true;
    while (open && !stopping_) {
      pollfd pfd{s.fd, POLLIN, 0};
      if (::poll(&pfd, 1, 50) <= 0) continue;
      const ssize_t n = ::recv(s.fd, buf, sizeof buf, 0);
      if (n <= 0) break;
      decoder.feed(std::string_view(buf, static_cast<std::size_t>(n)));
      try {
        while (auto p = decoder.next()) open = open && handle(s, *p);
      } catch (const std::exception&) {
        break;
      }
    }
    {
      std::lock_guard lock(mutex_);
      s.filters.clear();
    }
    ::shutdown(s.fd, SHUT_RDWR);
  }

  bool handle(Session& s, const mqtt::Packet& p) {
    using mqtt::PacketType;
    switch (p.type) {
      case PacketType::Connect:
        mqtt::parse_connect(p);
        ++connects_;
        send_all(s, mqtt::encode_connack(false, refusing_ ? 3 : 0));
        return !refusing_;
      case PacketType::Subscribe: {
        const auto sub = mqtt::parse_subscribe(p);
        std::vector<std::uint8_t> codes;
        {
          std::lock_guard lock(mutex_);
          for (const auto& [filter, qos] : sub.filters) {
            s.filters.push_back(filter);
            codes.push_back(qos > 1 ? 1 : qos);
          }
        }
        send_all(s, mqtt::encode_suback(sub.packet_id, codes));
        return true;
      }
      case PacketType::Publish: {
        const auto pub = mqtt::parse_publish(p);
        ++publishes_;
        if (pub.qos == 1 && !withhold_acks_) send_all(s, mqtt::encode_puback(pub.packet_id));
        forward(pub);
        return true;
      }
      case PacketType::Pingreq:
        send_all(s, mqtt::encode_pingresp());
        return true;
      case PacketType::Disconnect:
        return false;
      default:
        return true;  // PUBACK from subscribers
    }
  }

  void forward(const mqtt::PublishPacket& pub) {
    std::vector<std::shared_ptr<Session>> targets;
    {
      std::lock_guard lock(mutex_);
      for (auto& s : sessions_) {
        for (const auto& f : s->filters) {
          if (bridge::topic_matches(f, pub.topic)) {
            targets.push_back(s);
            break;
          }
        }
      }
    }
    for (auto& t : targets) {
      mqtt::PublishPacket out{pub.topic, pub.payload, 1, 0, false, false};
      {
        std::lock_guard lock(mutex_);
        if (++t->next_id == 0) ++t->next_id;
        out.packet_id = t->next_id;
      }
      send_all(*t, mqtt::encode(out));
      if (duplicate_) {
        out.dup = true;
        send_all(*t, mqtt::encode(out));
      }
    }
  }

  bool duplicate_;
  int listen_fd_ = -1;
  int port_ = 0;
  std::atomic<bool> stopping_{false};
  std::atomic<bool> refusing_{false};
  std::atomic<bool> withhold_acks_{false};
  std::atomic<std::uint64_t> publishes_{0};
  std::atomic<std::uint64_t> connects_{0};
  std::mutex mutex_;
  std::list<std::shared_ptr<Session>> sessions_;
  std::thread acceptor_;
};

}  // namespace lcq::testing
