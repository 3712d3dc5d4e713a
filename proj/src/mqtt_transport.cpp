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

#include <fcntl.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>

#include "lcq/error.hpp"
#include "lcq/mqtt.hpp"

namespace lcq::mqtt {

namespace {

using Clock = std::chrono::steady_clock;

int connect_tcp(const BrokerAddress& address, std::chrono::milliseconds timeout) {
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* found = nullptr;
  const std::string port = std::to_string(address.port);
  if (int rc = ::getaddrinfo(address.host.c_str(), port.c_str(), &hints, &found); rc != 0) {
    throw TransportError("cannot resolve MQTT broker " + address.host + ": " + ::gai_strerror(rc));
  }
  std::string last_error = "no address";
  for (addrinfo* ai = found; ai; ai = ai->ai_next) {
    const int fd = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
    if (fd < 0) continue;
    const int flags = ::fcntl(fd, F_GETFL, 0);
    ::fcntl(fd, F_SETFL, flags | O_NONBLOCK);
    int rc = ::connect(fd, ai->ai_addr, ai->ai_addrlen);
    if (rc < 0 && errno == EINPROGRESS) {
      pollfd pfd{fd, POLLOUT, 0};
      rc = ::poll(&pfd, 1, static_cast<int>(timeout.count()));
      if (rc > 0) {
        int err = 0;
        socklen_t len = sizeof err;
        ::getsockopt(fd, SOL_SOCKET, SO_ERROR, &err, &len);
        rc = err == 0 ? 0 : -1;
        errno = err;
      } else {
        if (rc == 0) errno = ETIMEDOUT;
        rc = -1;
      }
    }
    if (rc == 0) {
      ::fcntl(fd, F_SETFL, flags);
      int one = 1;
      ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
      timeval tv{5, 0};
      ::setsockopt(fd, SOL_SOCKET, SO_SNDTIMEO, &tv, sizeof tv);
      ::freeaddrinfo(found);
      return fd;
    }
    last_error = std::strerror(errno);
    ::close(fd);
  }
  ::freeaddrinfo(found);
  throw TransportError("cannot connect to MQTT broker " + address.host + ":" + port + ": " + last_error);
}

void send_all(int fd, std::string_view bytes) {
  std::size_t off = 0;
  while (off < bytes.size()) {
    const ssize_t n = ::send(fd, bytes.data() + off, bytes.size() - off, MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw TransportError(std::string("MQTT send failed: ") + std::strerror(errno));
    }
    off += static_cast<std::size_t>(n);
  }
}

void recv_exact(int fd, char* out, std::size_t n, Clock::time_point deadline) {
  std::size_t got = 0;
  while (got < n) {
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now()).count();
    if (left <= 0) throw TransportError("timed out waiting for CONNACK");
    pollfd pfd{fd, POLLIN, 0};
    if (::poll(&pfd, 1, static_cast<int>(left)) <= 0) continue;
    const ssize_t r = ::recv(fd, out + got, n - got, 0);
    if (r == 0) throw TransportError("broker closed the connection during CONNECT");
    if (r < 0) {
      if (errno == EINTR) continue;
      throw TransportError(std::string("MQTT receive failed: ") + std::strerror(errno));
    }
    got += static_cast<std::size_t>(r);
  }
}

}  // namespace

MqttTransport::MqttTransport(MqttOptions options)
    : options_(std::move(options)), address_(parse_broker_url(options_.url)) {}

MqttTransport::~MqttTransport() { close(); }

void MqttTransport::open_socket() {
  const int fd = connect_tcp(address_, options_.connect_timeout);
  try {
    send_all(fd, encode(ConnectPacket{options_.client_id, options_.keep_alive_s, true}));
    char connack[4];
    recv_exact(fd, connack, sizeof connack, Clock::now() + options_.connect_timeout);
    if (static_cast<std::uint8_t>(connack[0]) != 0x20 || connack[1] != 0x02)
      throw TransportError("broker answered CONNECT with something other than CONNACK");
    if (connack[3] != 0)
      throw TransportError("broker refused connection (return code " + std::to_string(connack[3]) + ")");
  } catch (...) {
    ::close(fd);
    throw;
  }
  std::scoped_lock lock(write_mutex_, mutex_);
  fd_ = fd;
  last_sent_ = Clock::now();
  connected_ = true;
}

void MqttTransport::close_socket() {
  std::scoped_lock lock(write_mutex_, mutex_);
  connected_ = false;
  if (fd_ >= 0) ::close(fd_);
  fd_ = -1;
}

void MqttTransport::send_raw(const std::string& bytes) {
  std::lock_guard write(write_mutex_);
  int fd;
  {
    std::lock_guard lock(mutex_);
    fd = fd_;
  }
  if (fd < 0 || !connected_) throw TransportError("not connected to MQTT broker");
  try {
    send_all(fd, bytes);
  } catch (const TransportError&) {
    connected_ = false;
    ::shutdown(fd, SHUT_RDWR);  // the I/O thread closes and reconnects
    throw;
  }
  std::lock_guard lock(mutex_);
  last_sent_ = Clock::now();
}

void MqttTransport::on_connected() {
  SubscribePacket sub;
  std::vector<PublishPacket> resend;
  {
    std::lock_guard lock(mutex_);
    for (const auto& s : subscriptions_) sub.filters.emplace_back(s.filter, 1);
    if (!sub.filters.empty()) sub.packet_id = next_packet_id();
    for (auto& [id, f] : in_flight_) {
      f.packet.dup = true;
      f.sent_at = Clock::now();
      resend.push_back(f.packet);
    }
  }
  try {
    if (!sub.filters.empty()) send_raw(encode(sub));
    for (const auto& p : resend) send_raw(encode(p));
  } catch (const TransportError&) {
  }
}

void MqttTransport::connect() {
  if (io_.joinable()) return;
  open_socket();
  on_connected();
  io_ = std::thread([this] { io_loop(); });
}

void MqttTransport::close() {
  if (io_.joinable()) {
    if (connected_) {
      try {
        send_raw(encode_disconnect());
      } catch (const TransportError&) {
      }
    }
    {
      std::lock_guard lock(mutex_);
      stopping_ = true;
    }
    changed_.notify_all();
    io_.join();
  }
  close_socket();
}

std::uint16_t MqttTransport::next_packet_id() {
  do {
    ++last_packet_id_;
  } while (last_packet_id_ == 0 || in_flight_.contains(last_packet_id_));
  return last_packet_id_;
}

void MqttTransport::publish(const std::string& topic, const std::string& payload) {
  PublishPacket p{topic, payload, 1, 0, false, false};
  {
    std::lock_guard lock(mutex_);
    if (!connected_)
      throw TransportError("not connected to MQTT broker " + address_.host + ":" + std::to_string(address_.port));
    p.packet_id = next_packet_id();
    in_flight_[p.packet_id] = InFlight{p, Clock::now()};
  }
  try {
    send_raw(encode(p));
  } catch (const TransportError&) {
    // kept in flight; resent after the reconnect
  }
}

void MqttTransport::subscribe(const std::string& filter, bridge::MessageHandler handler) {
  SubscribePacket sub;
  {
    std::lock_guard lock(mutex_);
    subscriptions_.push_back({filter, std::move(handler)});
    if (!connected_) return;
    sub.packet_id = next_packet_id();
    sub.filters.emplace_back(filter, 1);
  }
  try {
    send_raw(encode(sub));
  } catch (const TransportError&) {
  }
}

std::size_t MqttTransport::unacknowledged() const {
  std::lock_guard lock(mutex_);
  return in_flight_.size();
}

bool MqttTransport::wait_acknowledged(std::chrono::milliseconds timeout) {
  std::unique_lock lock(mutex_);
  return changed_.wait_for(lock, timeout, [&] { return in_flight_.empty(); });
}

void MqttTransport::handle(const Packet& packet) {
  switch (packet.type) {
    case PacketType::Publish: {
      const auto p = parse_publish(packet);
      std::vector<bridge::MessageHandler> targets;
      {
        std::lock_guard lock(mutex_);
        for (const auto& s : subscriptions_) {
          if (bridge::topic_matches(s.filter, p.topic)) targets.push_back(s.handler);
        }
      }
      for (const auto& h : targets) h(p.topic, p.payload);
      if (p.qos == 1) send_raw(encode_puback(p.packet_id));
      break;
    }
    case PacketType::Puback: {
      const auto id = parse_packet_id(packet);
      std::lock_guard lock(mutex_);
      in_flight_.erase(id);
      changed_.notify_all();
      break;
    }
    default:
      break;  // SUBACK, PINGRESP
  }
}

void MqttTransport::housekeeping() {
  const auto now = Clock::now();
  bool ping = false;
  std::vector<PublishPacket> resend;
  {
    std::lock_guard lock(mutex_);
    ping = options_.keep_alive_s > 0 && now - last_sent_ >= std::chrono::seconds(options_.keep_alive_s) / 2;
    for (auto& [id, f] : in_flight_) {
      if (now - f.sent_at < options_.ack_timeout) continue;
      f.packet.dup = true;
      f.sent_at = now;
      resend.push_back(f.packet);
    }
  }
  if (ping) send_raw(encode_pingreq());
  for (const auto& p : resend) send_raw(encode(p));
}

void MqttTransport::io_loop() {
  Decoder decoder;
  while (!stopping_) {
    if (!connected_) {
      close_socket();
      {
        std::unique_lock lock(mutex_);
        changed_.wait_for(lock, options_.reconnect_delay, [&] { return stopping_.load(); });
      }
      if (stopping_) break;
      try {
        open_socket();
        decoder = Decoder{};
        on_connected();
      } catch (const TransportError&) {
      }
      continue;
    }
    int fd;
    {
      std::lock_guard lock(mutex_);
      fd = fd_;
    }
    pollfd pfd{fd, POLLIN, 0};
    if (::poll(&pfd, 1, 100) > 0) {
      char buf[4096];
      const ssize_t n = ::recv(fd, buf, sizeof buf, 0);
      if (n < 0 && errno == EINTR) continue;
      if (n <= 0) {
        connected_ = false;
        continue;
      }
      decoder.feed(std::string_view(buf, static_cast<std::size_t>(n)));
      try {
        while (auto p = decoder.next()) handle(*p);
      } catch (const std::exception&) {
        connected_ = false;  // malformed stream or failed ack: start over
        continue;
      }
    }
    try {
      housekeeping();
    } catch (const TransportError&) {
    }
  }
}

}  // namespace lcq::mqtt
