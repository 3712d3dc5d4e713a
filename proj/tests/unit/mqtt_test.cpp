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

#include <chrono>
#include <random>
#include <thread>

#include <gtest/gtest.h>

#include "lcq/bridge.hpp"
#include "lcq/error.hpp"
#include "lcq/mqtt.hpp"
#include "lcq/toolchain.hpp"
#include "support/mini_broker.hpp"

namespace lcq::mqtt {
namespace {

using namespace std::chrono_literals;

std::string bytes(std::initializer_list<int> values) {
  std::string out;
  for (int v : values) out.push_back(static_cast<char>(v));
  return out;
}

template <typename Pred>
bool eventually(Pred pred, int timeout_ms = 5000) {
  const auto deadline = std::chrono::steady_clock::now() + std::chrono::milliseconds(timeout_ms);
  while (std::chrono::steady_clock::now() < deadline) {
    if (pred()) return true;
    std::this_thread::sleep_for(5ms);
  }
  return pred();
}

Packet single(const std::string& wire) {
  Decoder d;
  d.feed(wire);
  auto p = d.next();
  if (!p) throw std::runtime_error("incomplete packet");
  EXPECT_FALSE(d.next());
  return *p;
}

TEST(MqttCodecTest, RemainingLengthBoundaries) {
  EXPECT_EQ(encode_remaining_length(0), bytes({0x00}));
  EXPECT_EQ(encode_remaining_length(127), bytes({0x7F}));
  EXPECT_EQ(encode_remaining_length(128), bytes({0x80, 0x01}));
  EXPECT_EQ(encode_remaining_length(16383), bytes({0xFF, 0x7F}));
  EXPECT_EQ(encode_remaining_length(16384), bytes({0x80, 0x80, 0x01}));
  EXPECT_EQ(encode_remaining_length(2097151), bytes({0xFF, 0xFF, 0x7F}));
  EXPECT_EQ(encode_remaining_length(2097152), bytes({0x80, 0x80, 0x80, 0x01}));
  EXPECT_EQ(encode_remaining_length(268435455), bytes({0xFF, 0xFF, 0xFF, 0x7F}));
  EXPECT_THROW(encode_remaining_length(268435456), ContractViolation);
}

TEST(MqttCodecTest, ConnectBytes) {
  const auto wire = encode(ConnectPacket{"lcq", 30, true});
  EXPECT_EQ(wire, bytes({0x10, 0x0F, 0x00, 0x04, 'M', 'Q', 'T', 'T', 0x04, 0x02, 0x00, 0x1E, 0x00, 0x03, 'l', 'c', 'q'}));
  const auto back = parse_connect(single(wire));
  EXPECT_EQ(back.client_id, "lcq");
  EXPECT_EQ(back.keep_alive_s, 30);
  EXPECT_TRUE(back.clean_session);
}

TEST(MqttCodecTest, PublishBytes) {
  EXPECT_EQ(encode(PublishPacket{"a/b", "hi", 1, 10, false, false}),
            bytes({0x32, 0x09, 0x00, 0x03, 'a', '/', 'b', 0x00, 0x0A, 'h', 'i'}));
  EXPECT_EQ(encode(PublishPacket{"a/b", "hi", 1, 10, true, false}),
            bytes({0x3A, 0x09, 0x00, 0x03, 'a', '/', 'b', 0x00, 0x0A, 'h', 'i'}));
  EXPECT_EQ(encode(PublishPacket{"t", "", 0, 0, false, true}), bytes({0x31, 0x03, 0x00, 0x01, 't'}));
  EXPECT_THROW(encode(PublishPacket{"t", "", 2, 1, false, false}), ContractViolation);
}

TEST(MqttCodecTest, SubscribeAndAckBytes) {
  SubscribePacket sub{1, {{"trs/+/events", 1}}};
  const auto wire = encode(sub);
  EXPECT_EQ(wire, bytes({0x82, 0x11, 0x00, 0x01, 0x00, 0x0C}) + "trs/+/events" + bytes({0x01}));
  const auto back = parse_subscribe(single(wire));
  EXPECT_EQ(back.packet_id, 1);
  EXPECT_EQ(back.filters, sub.filters);

  EXPECT_EQ(encode_puback(10), bytes({0x40, 0x02, 0x00, 0x0A}));
  EXPECT_EQ(encode_suback(1, {1}), bytes({0x90, 0x03, 0x00, 0x01, 0x01}));
  EXPECT_EQ(encode_connack(false, 0), bytes({0x20, 0x02, 0x00, 0x00}));
  EXPECT_EQ(encode_pingreq(), bytes({0xC0, 0x00}));
  EXPECT_EQ(encode_pingresp(), bytes({0xD0, 0x00}));
  EXPECT_EQ(encode_disconnect(), bytes({0xE0, 0x00}));
  EXPECT_EQ(parse_packet_id(single(encode_puback(0xBEEF))), 0xBEEF);
  EXPECT_EQ(parse_connack_code(single(encode_connack(false, 5))), 5);
  EXPECT_THROW(parse_packet_id(single(encode_pingreq())), DecodeError);
}

TEST(MqttCodecTest, PublishRoundTripProperty) {
  std::mt19937_64 rng(99);
  for (int i = 0; i < 300; ++i) {
    PublishPacket p;
    p.topic = "trs/" + std::to_string(rng() % 100) + "/events";
    p.payload = std::string(rng() % 20000, static_cast<char>('a' + rng() % 26));
    p.qos = static_cast<std::uint8_t>(rng() % 2);
    p.packet_id = p.qos ? static_cast<std::uint16_t>(1 + rng() % 65535) : 0;
    p.dup = p.qos && rng() % 2;
    p.retain = rng() % 2;
    const auto back = parse_publish(single(encode(p)));
    ASSERT_EQ(back.topic, p.topic);
    ASSERT_EQ(back.payload, p.payload);
    ASSERT_EQ(back.qos, p.qos);
    ASSERT_EQ(back.packet_id, p.packet_id);
    ASSERT_EQ(back.dup, p.dup);
    ASSERT_EQ(back.retain, p.retain);
  }
}

TEST(MqttCodecTest, DecoderSplitsArbitraryChunks) {
  std::string stream;
  std::vector<std::string> payloads;
  for (int i = 0; i < 50; ++i) {
    payloads.push_back(std::string(static_cast<std::size_t>(i * 97), 'x') + std::to_string(i));
    stream += encode(PublishPacket{"t/" + std::to_string(i), payloads.back(), 1, static_cast<std::uint16_t>(i + 1)});
    stream += encode_pingresp();
  }
  std::mt19937_64 rng(5);
  Decoder d;
  std::vector<Packet> out;
  for (std::size_t pos = 0; pos < stream.size();) {
    const std::size_t n = std::min<std::size_t>(1 + rng() % 300, stream.size() - pos);
    d.feed(std::string_view(stream).substr(pos, n));
    pos += n;
    while (auto p = d.next()) out.push_back(*p);
  }
  ASSERT_EQ(out.size(), 100u);
  for (int i = 0; i < 50; ++i) {
    EXPECT_EQ(parse_publish(out[2 * i]).payload, payloads[i]);
    EXPECT_EQ(out[2 * i + 1].type, PacketType::Pingresp);
  }
}

TEST(MqttCodecTest, MalformedStreams) {
  Decoder five;
  five.feed(bytes({0x30, 0xFF, 0xFF, 0xFF, 0xFF, 0x01}));
  EXPECT_THROW(five.next(), DecodeError);
  Decoder reserved;
  reserved.feed(bytes({0xF0, 0x00}));
  EXPECT_THROW(reserved.next(), DecodeError);
  EXPECT_THROW(parse_publish(single(bytes({0x32, 0x02, 0x00, 0x05}))), DecodeError);
  EXPECT_THROW(parse_connect(single(bytes({0x10, 0x06, 0x00, 0x04, 'M', 'Q', 'T', 'X'}))), DecodeError);
}

TEST(MqttCodecTest, BrokerUrls) {
  const auto a = parse_broker_url("mqtt://broker.local:1884");
  EXPECT_EQ(a.host, "broker.local");
  EXPECT_EQ(a.port, 1884);
  EXPECT_EQ(parse_broker_url("tcp://10.0.0.1").port, 1883);
  EXPECT_EQ(parse_broker_url("mqtt://h/").host, "h");
  for (const char* bad : {"http://h:1", "mqtt://", "mqtt://:80", "mqtt://h:0", "mqtt://h:70000", "mqtt://h:x"}) {
    EXPECT_THROW(parse_broker_url(bad), ConfigError) << bad;
  }
}

// --- transport over a loopback broker ----------------------------------------

struct Inbox {
  std::mutex mutex;
  std::vector<std::string> payloads;
  bridge::MessageHandler handler() {
    return [this](const std::string&, const std::string& payload) {
      std::lock_guard lock(mutex);
      payloads.push_back(payload);
    };
  }
  std::size_t size() {
    std::lock_guard lock(mutex);
    return payloads.size();
  }
  std::vector<std::string> get() {
    std::lock_guard lock(mutex);
    return payloads;
  }
};

MqttOptions options_for(const testing::MiniBroker& broker, const std::string& id) {
  MqttOptions o;
  o.url = broker.url();
  o.client_id = id;
  o.connect_timeout = 1000ms;
  o.reconnect_delay = 50ms;
  o.ack_timeout = 200ms;
  return o;
}

TEST(MqttTransportTest, PublishReachesSubscriber) {
  testing::MiniBroker broker;
  MqttTransport sub(options_for(broker, "sub"));
  MqttTransport pub(options_for(broker, "pub"));
  Inbox inbox;
  sub.subscribe(std::string(bridge::kEventsFilter), inbox.handler());
  sub.connect();
  pub.connect();
  ASSERT_TRUE(eventually([&] { return broker.connects() == 2; }));
  std::this_thread::sleep_for(50ms);  // let the SUBSCRIBE land
  for (int i = 0; i < 20; ++i) pub.publish("trs/reqs/events", "m" + std::to_string(i));
  pub.publish("trs/reqs/other", "ignored");
  ASSERT_TRUE(pub.wait_acknowledged(5000ms));
  ASSERT_TRUE(eventually([&] { return inbox.size() == 20; }));
  const auto got = inbox.get();
  for (int i = 0; i < 20; ++i) EXPECT_EQ(got[i], "m" + std::to_string(i));
  EXPECT_EQ(pub.unacknowledged(), 0u);
}

TEST(MqttTransportTest, ConnectFailuresAreTransportErrors) {
  int port;
  {
    testing::MiniBroker gone;
    port = gone.port();
  }
  MqttOptions o;
  o.url = "mqtt://127.0.0.1:" + std::to_string(port);
  o.connect_timeout = 500ms;
  MqttTransport closed(o);
  EXPECT_THROW(closed.connect(), TransportError);
  EXPECT_THROW(closed.publish("t", "x"), TransportError);

  testing::MiniBroker refusing;
  refusing.set_refusing(true);
  MqttTransport refused(options_for(refusing, "r"));
  try {
    refused.connect();
    FAIL() << "connect should have been refused";
  } catch (const TransportError& e) {
    EXPECT_NE(std::string(e.what()).find("return code 3"), std::string::npos);
  }
}

TEST(MqttTransportTest, ReconnectsAndResubscribes) {
  testing::MiniBroker broker;
  MqttTransport sub(options_for(broker, "sub"));
  MqttTransport pub(options_for(broker, "pub"));
  Inbox inbox;
  sub.subscribe("trs/#", inbox.handler());
  sub.connect();
  pub.connect();
  broker.kill_connections();
  ASSERT_TRUE(eventually([&] { return broker.connects() >= 4 && sub.connected() && pub.connected(); }));
  std::this_thread::sleep_for(100ms);
  pub.publish("trs/a/events", "after");
  ASSERT_TRUE(pub.wait_acknowledged(5000ms));
  ASSERT_TRUE(eventually([&] { return inbox.size() == 1; }));
  EXPECT_EQ(inbox.get()[0], "after");
}

TEST(MqttTransportTest, UnacknowledgedPublishIsResent) {
  testing::MiniBroker broker;
  MqttTransport sub(options_for(broker, "sub"));
  MqttTransport pub(options_for(broker, "pub"));
  Inbox inbox;
  sub.subscribe("trs/#", inbox.handler());
  sub.connect();
  pub.connect();
  std::this_thread::sleep_for(50ms);
  broker.set_withhold_acks(true);
  pub.publish("trs/a/events", "once");
  ASSERT_TRUE(eventually([&] { return broker.publishes_received() >= 2; }));
  EXPECT_EQ(pub.unacknowledged(), 1u);
  broker.set_withhold_acks(false);
  ASSERT_TRUE(pub.wait_acknowledged(5000ms));
  // at-least-once: the subscriber sees the payload more than once
  EXPECT_GE(inbox.size(), 2u);
  for (const auto& p : inbox.get()) EXPECT_EQ(p, "once");
}

// Whole push path over TCP: service -> publisher -> broker -> subscriber ->
// client -> dataset, with the broker delivering every message twice.
TEST(MqttTransportTest, PushPathConvergesOverBroker) {
  testing::MiniBroker broker(true);
  auto chain = sim::Toolchain::local();
  auto& reqs = chain->requirements();
  sim::LocalEndpoint endpoint(reqs);
  sync::DatasetWriter store;
  Metrics metrics;
  sync::TrsClient client(endpoint, store, &metrics);
  client.initial_sync();

  MqttTransport in(options_for(broker, "warehouse"));
  MqttTransport out(options_for(broker, "reqs"));
  bridge::PushSubscriber subscriber(&metrics);
  subscriber.add_client(client);
  subscriber.attach(in);
  in.connect();
  out.connect();
  std::this_thread::sleep_for(50ms);
  bridge::ChangePublisher publisher("reqs", out, {}, &metrics);
  reqs.add_listener([&](const trs::ChangeEvent& e) { publisher.on_change(e); });

  for (int i = 0; i < 30; ++i) {
    const auto id = "R" + std::to_string(i);
    reqs.create({reqs.resource_uri(id), sim::ResourceType::Requirement, id, "DRAFT", {}}, trs::now_ms());
    if (i % 3 == 2) reqs.remove(reqs.resource_uri("R" + std::to_string(i - 1)), trs::now_ms());
  }
  ASSERT_TRUE(publisher.wait_drained());
  ASSERT_TRUE(out.wait_acknowledged(5000ms));
  const auto last = reqs.trs().events().back().order;
  ASSERT_TRUE(eventually([&] {
    std::lock_guard lock(client.pipeline());
    return client.state().last_applied_order == last;
  }));
  std::this_thread::sleep_for(100ms);  // trailing duplicates
  std::lock_guard lock(client.pipeline());
  EXPECT_EQ(store.dataset(), reqs.live_dataset());
  EXPECT_GE(subscriber.duplicates_ignored(), 30u);
  EXPECT_EQ(subscriber.gaps_detected(), 0u);
  EXPECT_EQ(subscriber.failures(), 0u);
}

}  // namespace
}  // namespace lcq::mqtt
