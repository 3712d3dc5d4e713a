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
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "lcq/bench.hpp"
#include "lcq/bridge.hpp"
#include "lcq/toolchain.hpp"
#include "lcq/warehouse.hpp"

// Everything `lcq up` runs in one process: the three tool services over
// HTTP, their change publishers, and (unless in direct mode) the warehouse
// with its HTTP endpoint.
namespace lcq::system {

struct SystemConfig {
  sim::FixtureSpec fixture = sim::canonical_fixture();
  sim::WorkloadScript workload;
  // "poll" | "push" | "push-with-safety-poll" | "direct"
  std::string mode = "poll";
  trs::Millis poll_period_ms = 5000;
  trs::Millis safety_poll_ms = 60000;
  // Empty: push over an in-process bus.
  std::string broker_url;
  int warehouse_port = 0;
  std::vector<int> service_ports;  // empty or three entries; 0 = ephemeral
  std::size_t page_size = trs::kDefaultPageSize;
  warehouse::StoreConfig store;
  std::string host = "127.0.0.1";
};

// JSON:
//   {"fixture": "canonical" | {"requirements": 5, "blocks": 4, "changeRequests": 3,
//                              "links": [["B1", "satisfies", "R1"]], "randomLinkProbability": 0.0, "seed": 1},
//    "workload": {"seed": 1, "steps": 300, "rateOpsPerS": 5, "linkProbability": 0.5,
//                 "weights": {"requirement": {"create": 1, "modify": 2, "delete": 1}, "block": {...},
//                             "changeRequest": {...}}},
//    "warehouse": {"mode": "poll", "pollPeriodMs": 5000, "safetyPollMs": 60000, "port": 8080,
//                  "broker": "mqtt://127.0.0.1:1883", "store": {"load": "in.nt", "dump": "out.nt"}},
//    "services": {"ports": [8081, 8082, 8083], "pageSize": 50}}
// Every section is optional. Unknown keys are rejected. Throws ConfigError.
SystemConfig parse_system_config(std::string_view json);
SystemConfig load_system_config(const std::string& path);

// Bench options for the config's fixture and workload.
bench::BenchOptions bench_options(const SystemConfig& config);

class System {
 public:
  explicit System(SystemConfig config);
  ~System();

  System(const System&) = delete;
  System& operator=(const System&) = delete;

  // Brings every component up. Failures throw TransportError or ConfigError
  // whose message starts with the component's name.
  void start();
  void stop();

  // GET /health on the warehouse (or the TRS descriptors in direct mode).
  bool healthy() const;

  // Runs the configured workload; `stop` ends it early.
  std::vector<sim::Mutation> run_workload(const std::atomic<bool>* stop = nullptr);

  // {"mode":..., "warehouse": url|null, "services": {id: url}}
  std::string describe() const;

  const SystemConfig& config() const { return config_; }
  sim::Toolchain& toolchain() { return *chain_; }
  warehouse::Warehouse* warehouse() { return warehouse_.get(); }
  std::string warehouse_url() const;

 private:
  SystemConfig config_;
  std::unique_ptr<sim::Toolchain> chain_;
  sim::GroundTruth truth_;
  std::unique_ptr<bridge::InProcessBus> bus_;
  std::unique_ptr<bridge::PubSubTransport> mqtt_out_;
  std::unique_ptr<bridge::PubSubTransport> mqtt_in_;
  std::vector<std::unique_ptr<bridge::ChangePublisher>> publishers_;
  std::unique_ptr<warehouse::Warehouse> warehouse_;
  std::unique_ptr<warehouse::WarehouseHttpServer> http_;
  int warehouse_port_ = 0;
};

}  // namespace lcq::system
