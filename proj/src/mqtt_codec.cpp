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

#include "lcq/error.hpp"
#include "lcq/mqtt.hpp"

namespace lcq::mqtt {

namespace {

void put_u16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v >> 8));
  out.push_back(static_cast<char>(v & 0xFF));
}

void put_string(std::string& out, std::string_view s) {
  if (s.size() > 0xFFFF) throw ContractViolation("MQTT string longer than 65535 bytes");
  put_u16(out, static_cast<std::uint16_t>(s.size()));
  out.append(s);
}

std::string frame(std::uint8_t first, const std::string& body) {
  std::string out(1, static_cast<char>(first));
  out += encode_remaining_length(body.size());
  out += body;
  return out;
}

class Reader {
 public:
  explicit Reader(std::string_view data) : data_(data) {}

  std::uint8_t u8() {
    need(1);
    return static_cast<std::uint8_t>(data_[pos_++]);
  }
  std::uint16_t u16() {
    need(2);
    const auto hi = static_cast<std::uint8_t>(data_[pos_]);
    const auto lo = static_cast<std::uint8_t>(data_[pos_ + 1]);
    pos_ += 2;
    return static_cast<std::uint16_t>(hi << 8 | lo);
  }
  std::string string() {
    const auto n = u16();
    need(n);
    std::string s(data_.substr(pos_, n));
    pos_ += n;
    return s;
  }
  std::string rest() {
    std::string s(data_.substr(pos_));
    pos_ = data_.size();
    return s;
  }
  bool done() const { return pos_ == data_.size(); }

 private:
  void need(std::size_t n) const {
    if (data_.size() - pos_ < n) throw DecodeError("MQTT packet body truncated");
  }
  std::string_view data_;
  std::size_t pos_ = 0;
};

void expect_type(const Packet& p, PacketType type, const char* name) {
  if (p.type != type) throw DecodeError(std::string("expected MQTT ") + name + " packet");
}

}  // namespace

std::string encode_remaining_length(std::size_t length) {
  if (length > 268'435'455) throw ContractViolation("MQTT packet too large");
  std::string out;
  do {
    auto byte = static_cast<std::uint8_t>(length % 128);
    length /= 128;
    if (length > 0) byte |= 0x80;
    out.push_back(static_cast<char>(byte));
  } while (length > 0);
  return out;
}

std::string encode(const ConnectPacket& p) {
  std::string body;
  put_string(body, "MQTT");
  body.push_back(4);  // protocol level 3.1.1
  body.push_back(p.clean_session ? 0x02 : 0x00);
  put_u16(body, p.keep_alive_s);
  put_string(body, p.client_id);
  return frame(0x10, body);
}

std::string encode(const PublishPacket& p) {
  if (p.qos > 1) throw ContractViolation("QoS 2 is not supported");
  std::string body;
  put_string(body, p.topic);
  if (p.qos > 0) put_u16(body, p.packet_id);
  body += p.payload;
  const std::uint8_t first = 0x30 | (p.dup ? 0x08 : 0) | static_cast<std::uint8_t>(p.qos << 1) | (p.retain ? 0x01 : 0);
  return frame(first, body);
}

std::string encode(const SubscribePacket& p) {
  std::string body;
  put_u16(body, p.packet_id);
  for (const auto& [filter, qos] : p.filters) {
    put_string(body, filter);
    body.push_back(static_cast<char>(qos));
  }
  return frame(0x82, body);
}

std::string encode_connack(bool session_present, std::uint8_t return_code) {
  return frame(0x20, std::string{static_cast<char>(session_present ? 1 : 0), static_cast<char>(return_code)});
}

std::string encode_puback(std::uint16_t packet_id) {
  std::string body;
  put_u16(body, packet_id);
  return frame(0x40, body);
}

std::string encode_suback(std::uint16_t packet_id, const std::vector<std::uint8_t>& codes) {
  std::string body;
  put_u16(body, packet_id);
  for (auto c : codes) body.push_back(static_cast<char>(c));
  return frame(0x90, body);
}

std::string encode_pingreq() { return frame(0xC0, {}); }
std::string encode_pingresp() { return frame(0xD0, {}); }
std::string encode_disconnect() { return frame(0xE0, {}); }

ConnectPacket parse_connect(const Packet& p) {
  expect_type(p, PacketType::Connect, "CONNECT");
  Reader r(p.body);
  if (r.string() != "MQTT") throw DecodeError("unknown MQTT protocol name");
  if (r.u8() != 4) throw DecodeError("unsupported MQTT protocol level");
  const auto flags = r.u8();
  ConnectPacket c;
  c.clean_session = flags & 0x02;
  c.keep_alive_s = r.u16();
  c.client_id = r.string();
  return c;
}

PublishPacket parse_publish(const Packet& p) {
  expect_type(p, PacketType::Publish, "PUBLISH");
  PublishPacket out;
  out.dup = p.flags & 0x08;
  out.qos = (p.flags >> 1) & 0x03;
  out.retain = p.flags & 0x01;
  if (out.qos > 1) throw DecodeError("QoS 2 is not supported");
  Reader r(p.body);
  out.topic = r.string();
  if (out.qos > 0) out.packet_id = r.u16();
  out.payload = r.rest();
  return out;
}

SubscribePacket parse_subscribe(const Packet& p) {
  expect_type(p, PacketType::Subscribe, "SUBSCRIBE");
  Reader r(p.body);
  SubscribePacket s;
  s.packet_id = r.u16();
  while (!r.done()) {
    auto filter = r.string();
    s.filters.emplace_back(std::move(filter), r.u8());
  }
  if (s.filters.empty()) throw DecodeError("SUBSCRIBE without filters");
  return s;
}

std::uint16_t parse_packet_id(const Packet& p) {
  if (p.type != PacketType::Puback && p.type != PacketType::Suback)
    throw DecodeError("packet carries no acknowledged packet id");
  return Reader(p.body).u16();
}

std::uint8_t parse_connack_code(const Packet& p) {
  expect_type(p, PacketType::Connack, "CONNACK");
  Reader r(p.body);
  r.u8();
  return r.u8();
}

std::optional<Packet> Decoder::next() {
  if (buffer_.size() < 2) return std::nullopt;
  std::size_t length = 0;
  std::size_t multiplier = 1;
  std::size_t i = 1;
  while (true) {
    if (i >= buffer_.size()) return std::nullopt;
    if (i > 4) throw DecodeError("MQTT remaining length exceeds four bytes");
    const auto byte = static_cast<std::uint8_t>(buffer_[i]);
    length += (byte & 0x7F) * multiplier;
    multiplier *= 128;
    ++i;
    if (!(byte & 0x80)) break;
  }
  if (buffer_.size() - i < length) return std::nullopt;
  const auto first = static_cast<std::uint8_t>(buffer_[0]);
  const auto type = first >> 4;
  if (type == 0 || type == 15) throw DecodeError("reserved MQTT packet type");
  Packet p{static_cast<PacketType>(type), static_cast<std::uint8_t>(first & 0x0F), buffer_.substr(i, length)};
  buffer_.erase(0, i + length);
  return p;
}

BrokerAddress parse_broker_url(std::string_view url) {
  std::string_view rest;
  for (std::string_view scheme : {"mqtt://", "tcp://"}) {
    if (url.substr(0, scheme.size()) == scheme) rest = url.substr(scheme.size());
  }
  if (rest.empty()) throw ConfigError("broker URL must look like mqtt://host[:port], got '" + std::string(url) + "'");
  if (!rest.empty() && rest.back() == '/') rest.remove_suffix(1);
  BrokerAddress a;
  const auto colon = rest.rfind(':');
  if (colon == std::string_view::npos) {
    a.host = std::string(rest);
  } else {
    a.host = std::string(rest.substr(0, colon));
    try {
      std::size_t used = 0;
      const std::string port(rest.substr(colon + 1));
      a.port = std::stoi(port, &used);
      if (used != port.size() || a.port <= 0 || a.port > 65535) throw std::out_of_range("port");
    } catch (const std::exception&) {
      throw ConfigError("bad port in broker URL '" + std::string(url) + "'");
    }
  }
  if (a.host.empty()) throw ConfigError("broker URL '" + std::string(url) + "' has no host");
  return a;
}

}  // namespace lcq::mqtt
