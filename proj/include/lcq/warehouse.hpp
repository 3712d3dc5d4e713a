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
#include <memory>
#include <mutex>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "lcq/bridge.hpp"
#include "lcq/endpoint.hpp"
#include "lcq/metrics.hpp"
#include "lcq/rdf.hpp"
#include "lcq/sparql.hpp"
#include "lcq/trs_client.hpp"

namespace httplib {
class Server;
}

namespace lcq::mqtt {
class MqttTransport;
}

// The linked data warehouse: one dataset fed by a sync pipeline per TRS
// server (polling, MQTT push or both) and queried through one SPARQL endpoint.
namespace lcq::warehouse {

enum class Mode { Poll, Push, PushWithSafetyPoll };

std::string_view to_string(Mode mode);
// "poll" | "push" | "push-with-safety-poll"; throws ConfigError.
Mode parse_mode(std::string_view text);

struct ServerConfig {
  std::string server_id;
  std::string base_url;
  std::string trs_url;  // defaults to base_url + "/trs"
  trs::Millis poll_period_ms = 5000;
};

struct MqttConfig {
  std::string url = "mqtt://127.0.0.1:1883";
  std::string client_id = "lcq-warehouse";
};

struct StoreConfig {
  std::string load_path;  // N-Triples dump read before the initial sync
  std::string dump_path;  // written on stop
};

struct WarehouseConfig {
  std::vector<ServerConfig> servers;
  Mode mode = Mode::Poll;
  // Slow pull in PushWithSafetyPoll mode.
  trs::Millis safety_poll_ms = 60000;
  MqttConfig mqtt;
  StoreConfig store;

  // Throws ConfigError naming the offending field.
  void validate() const;
};

// JSON:
//   {"mode": "push", "safetyPollMs": 60000,
//    "servers": [{"id": "reqs", "baseUrl": "http://127.0.0.1:8081", "pollPeriodMs": 5000}],
//    "mqtt": {"url": "mqtt://127.0.0.1:1883", "clientId": "lcq-warehouse"},
//    "store": {"load": "in.nt", "dump": "out.nt"}}
// Unknown keys are rejected. Throws ConfigError; the result is validated.
WarehouseConfig parse_config(std::string_view json);
WarehouseConfig load_config(const std::string& path);

// Dumps are plain N-Triples of the union graph. Every resource graph only
// holds triples about its own resource, so loading regroups them by subject.
std::string dump_ntriples(const rdf::Dataset& dataset);
rdf::Dataset load_ntriples(std::string_view text);

struct WarehouseOptions {
  Mode mode = Mode::Poll;
  trs::Millis safety_poll_ms = 60000;
  sync::ClientOptions client;
};

struct ServerStatus {
  std::string server_id;
  sync::Phase phase;
  std::uint64_t last_applied_order;
  std::size_t graphs;
  std::size_t dirty;
};

class Warehouse : public sync::StoreWriter {
 public:
  explicit Warehouse(WarehouseOptions options = {});
  ~Warehouse() override;

  Warehouse(const Warehouse&) = delete;
  Warehouse& operator=(const Warehouse&) = delete;

  // HTTP endpoints and, in push modes, an MQTT connection from the config.
  static std::unique_ptr<Warehouse> from_config(const WarehouseConfig& config);

  // Before start(). Server ids must be unique (ContractViolation).
  // `resource_prefix` (the server's base URL) is only used by load().
  void add_server(std::unique_ptr<sync::TrsEndpoint> endpoint, trs::Millis poll_period_ms,
                  std::string resource_prefix = {});
  // Push modes need a transport; the warehouse does not own it.
  void set_transport(bridge::PubSubTransport* transport) { transport_ = transport; }

  // Subscribes (push modes), runs every initial sync, then starts the poll
  // loops. A failing initial sync throws TransportError naming the server,
  // and nothing keeps running.
  void start();
  void stop();
  bool running() const { return running_; }

  // One sync cycle per server, in the caller's thread.
  void sync_now();

  // Results JSON. Throws ParseError / UnsupportedConstruct. Latency is
  // recorded in the metrics and also returned through `latency_ms`.
  std::string sparql_query(std::string_view text, double* latency_ms = nullptr);
  sparql::BindingTable query(std::string_view text, double* latency_ms = nullptr);

  MetricsSnapshot metrics_snapshot() const { return metrics_.snapshot(); }
  Metrics& metrics() { return metrics_; }
  std::vector<ServerStatus> status() const;
  std::uint64_t sync_failures() const { return sync_failures_; }
  const bridge::PushSubscriber& subscriber() const { return subscriber_; }

  rdf::Dataset dataset() const;
  std::size_t graph_count() const;

  void dump(const std::string& path) const;
  // After add_server, before start(). Loaded graphs under a server's prefix
  // are adopted by its pipeline, so its initial sync drops the ones that
  // vanished meanwhile.
  void load(const std::string& path);

  void commit(const std::string& server_id, std::vector<sync::GraphWrite> writes) override;

 private:
  struct Server {
    std::unique_ptr<sync::TrsEndpoint> endpoint;
    std::unique_ptr<sync::TrsClient> client;
    trs::Millis poll_period_ms;
    std::string resource_prefix;
    std::thread loop;
  };

  // Lets stop() cut off message delivery from a transport that outlives us.
  struct Gate {
    std::mutex mutex;
    bridge::PushSubscriber* target = nullptr;
  };

  void poll_loop(Server& server, trs::Millis period);

  WarehouseOptions options_;
  Metrics metrics_;
  bridge::PushSubscriber subscriber_{&metrics_};
  bridge::PubSubTransport* transport_ = nullptr;
  std::unique_ptr<mqtt::MqttTransport> mqtt_;
  std::shared_ptr<Gate> gate_ = std::make_shared<Gate>();
  std::vector<std::unique_ptr<Server>> servers_;
  std::string dump_path_;

  mutable std::shared_mutex store_mutex_;
  rdf::Dataset dataset_;

  std::mutex stop_mutex_;
  std::condition_variable stop_cv_;
  bool stopping_ = false;
  std::atomic<bool> running_{false};
  std::atomic<std::uint64_t> sync_failures_{0};
};

// POST /sparql (query text in the body), GET /metrics, GET /health.
class WarehouseHttpServer {
 public:
  explicit WarehouseHttpServer(Warehouse& warehouse);
  ~WarehouseHttpServer();

  WarehouseHttpServer(const WarehouseHttpServer&) = delete;
  WarehouseHttpServer& operator=(const WarehouseHttpServer&) = delete;

  // Ephemeral port when `port` is 0. Returns the bound port.
  int bind(const std::string& host = "127.0.0.1", int port = 0);
  void serve();
  void stop();

 private:
  Warehouse& warehouse_;
  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;
};

std::string health_json(const Warehouse& warehouse);

}  // namespace lcq::warehouse
