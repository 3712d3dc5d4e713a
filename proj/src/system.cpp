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

#include "lcq/system.hpp"

#include <fstream>
#include <sstream>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "lcq/error.hpp"
#include "lcq/mqtt.hpp"

namespace lcq::system {

namespace {

using nlohmann::json;

void reject_unknown(const json& j, std::initializer_list<std::string_view> known, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be an object");
  for (const auto& [key, _] : j.items()) {
    bool ok = false;
    for (auto k : known) ok = ok || key == k;
    if (!ok) throw ConfigError("unknown key '" + key + "' in " + where);
  }
}

template <typename T>
T get(const json& j, const char* key, T fallback, const std::string& where) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(where + "." + key + " has the wrong type");
  }
}

sim::OpWeights parse_weights(const json& j, const std::string& where) {
  reject_unknown(j, {"create", "modify", "delete"}, where);
  sim::OpWeights w;
  w.create = get(j, "create", w.create, where);
  w.modify = get(j, "modify", w.modify, where);
  w.remove = get(j, "delete", w.remove, where);
  if (w.create < 0 || w.modify < 0 || w.remove < 0) throw ConfigError(where + " weights must be >= 0");
  return w;
}

sim::FixtureSpec parse_fixture(const json& j) {
  if (j.is_string()) {
    if (j.get<std::string>() == "canonical") return sim::canonical_fixture();
    if (j.get<std::string>() == "empty") return {};
    throw ConfigError("fixture must be \"canonical\", \"empty\" or an object");
  }
  reject_unknown(j, {"requirements", "blocks", "changeRequests", "links", "randomLinkProbability", "seed"}, "fixture");
  sim::FixtureSpec f;
  f.requirements = get<std::size_t>(j, "requirements", 0, "fixture");
  f.blocks = get<std::size_t>(j, "blocks", 0, "fixture");
  f.change_requests = get<std::size_t>(j, "changeRequests", 0, "fixture");
  f.random_link_probability = get(j, "randomLinkProbability", 0.0, "fixture");
  f.seed = get<std::uint64_t>(j, "seed", 1, "fixture");
  if (f.random_link_probability < 0 || f.random_link_probability > 1)
    throw ConfigError("fixture.randomLinkProbability must be in [0, 1]");
  for (const auto& l : j.value("links", json::array())) {
    if (!l.is_array() || l.size() != 3 || !l[0].is_string() || !l[1].is_string() || !l[2].is_string())
      throw ConfigError("fixture.links entries must be [from, kind, to]");
    try {
      f.links.push_back({l[0].get<std::string>(), sim::parse_link_kind(l[1].get<std::string>()), l[2].get<std::string>()});
    } catch (const Error& e) {
      throw ConfigError(std::string("fixture.links: ") + e.what());
    }
  }
  return f;
}

sim::WorkloadScript parse_workload(const json& j) {
  reject_unknown(j, {"seed", "steps", "rateOpsPerS", "linkProbability", "weights"}, "workload");
  sim::WorkloadScript w;
  w.seed = get<std::uint64_t>(j, "seed", w.seed, "workload");
  w.steps = get<std::size_t>(j, "steps", w.steps, "workload");
  w.rate_ops_per_s = get(j, "rateOpsPerS", w.rate_ops_per_s, "workload");
  w.link_probability = get(j, "linkProbability", w.link_probability, "workload");
  if (w.rate_ops_per_s < 0) throw ConfigError("workload.rateOpsPerS must be >= 0");
  if (j.contains("weights")) {
    const auto& ws = j.at("weights");
    reject_unknown(ws, {"requirement", "block", "changeRequest"}, "workload.weights");
    if (ws.contains("requirement")) w.requirement = parse_weights(ws.at("requirement"), "workload.weights.requirement");
    if (ws.contains("block")) w.block = parse_weights(ws.at("block"), "workload.weights.block");
    if (ws.contains("changeRequest"))
      w.change_request = parse_weights(ws.at("changeRequest"), "workload.weights.changeRequest");
  }
  return w;
}

bool http_ok(const std::string& host, int port, const std::string& path) {
  httplib::Client client(host, port);
  client.set_connection_timeout(2);
  auto res = client.Get(path.c_str());
  return res && res->status == 200;
}

}  // namespace

SystemConfig parse_system_config(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  reject_unknown(j, {"fixture", "workload", "warehouse", "services"}, "config");
  SystemConfig c;
  if (j.contains("fixture")) c.fixture = parse_fixture(j.at("fixture"));
  if (j.contains("workload")) c.workload = parse_workload(j.at("workload"));
  if (j.contains("warehouse")) {
    const auto& w = j.at("warehouse");
    reject_unknown(w, {"mode", "pollPeriodMs", "safetyPollMs", "port", "broker", "store"}, "warehouse");
    c.mode = get<std::string>(w, "mode", c.mode, "warehouse");
    c.poll_period_ms = get(w, "pollPeriodMs", c.poll_period_ms, "warehouse");
    c.safety_poll_ms = get(w, "safetyPollMs", c.safety_poll_ms, "warehouse");
    c.warehouse_port = get(w, "port", c.warehouse_port, "warehouse");
    c.broker_url = get<std::string>(w, "broker", c.broker_url, "warehouse");
    if (w.contains("store")) {
      const auto& s = w.at("store");
      reject_unknown(s, {"load", "dump"}, "warehouse.store");
      c.store.load_path = get<std::string>(s, "load", "", "warehouse.store");
      c.store.dump_path = get<std::string>(s, "dump", "", "warehouse.store");
    }
  }
  if (j.contains("services")) {
    const auto& s = j.at("services");
    reject_unknown(s, {"ports", "pageSize"}, "services");
    c.service_ports = get(s, "ports", c.service_ports, "services");
    c.page_size = get(s, "pageSize", c.page_size, "services");
  }
  if (c.mode != "direct") warehouse::parse_mode(c.mode);
  if (c.poll_period_ms <= 0) throw ConfigError("warehouse.pollPeriodMs must be > 0");
  if (c.safety_poll_ms <= 0) throw ConfigError("warehouse.safetyPollMs must be > 0");
  if (c.warehouse_port < 0 || c.warehouse_port > 65535) throw ConfigError("warehouse.port out of range");
  if (!c.service_ports.empty() && c.service_ports.size() != 3)
    throw ConfigError("services.ports must list three ports (reqs, design, changes)");
  for (int p : c.service_ports) {
    if (p < 0 || p > 65535) throw ConfigError("services.ports entry out of range");
  }
  if (c.page_size == 0) throw ConfigError("services.pageSize must be > 0");
  if (!c.broker_url.empty()) mqtt::parse_broker_url(c.broker_url);
  return c;
}

SystemConfig load_system_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_system_config(buf.str());
}

bench::BenchOptions bench_options(const SystemConfig& config) {
  bench::BenchOptions o;
  o.fixture = config.fixture;
  o.workload = config.workload;
  o.poll_period_ms = config.poll_period_ms;
  o.broker_url = config.broker_url;
  return o;
}

System::System(SystemConfig config) : config_(std::move(config)) {}

System::~System() { stop(); }

void System::start() {
  if (config_.mode != "direct") warehouse::parse_mode(config_.mode);
  sim::ServiceOptions so;
  so.page_size = config_.page_size;
  try {
    chain_ = sim::Toolchain::http(so, config_.service_ports);
  } catch (const Error& e) {
    throw TransportError(std::string("tool services: ") + e.what());
  }
  truth_ = sim::seed_fixture(config_.fixture, *chain_, trs::now_ms());
  if (config_.mode == "direct") return;

  const auto mode = warehouse::parse_mode(config_.mode);
  const bool push = mode != warehouse::Mode::Poll;
  bridge::PubSubTransport* inbound = nullptr;
  bridge::PubSubTransport* outbound = nullptr;
  if (push) {
    if (config_.broker_url.empty()) {
      bus_ = std::make_unique<bridge::InProcessBus>();
      inbound = outbound = bus_.get();
    } else {
      mqtt::MqttOptions mo;
      mo.url = config_.broker_url;
      mo.client_id = "lcq-services";
      auto out = std::make_unique<mqtt::MqttTransport>(mo);
      mo.client_id = "lcq-warehouse";
      auto in = std::make_unique<mqtt::MqttTransport>(mo);
      try {
        out->connect();
        in->connect();
      } catch (const Error& e) {
        throw TransportError("MQTT broker " + config_.broker_url + ": " + e.what());
      }
      outbound = out.get();
      inbound = in.get();
      mqtt_out_ = std::move(out);
      mqtt_in_ = std::move(in);
    }
  }

  warehouse::WarehouseOptions wo;
  wo.mode = mode;
  wo.safety_poll_ms = config_.safety_poll_ms;
  warehouse_ = std::make_unique<warehouse::Warehouse>(wo);
  auto endpoints = chain_->make_endpoints();
  auto services = chain_->services();
  for (std::size_t i = 0; i < endpoints.size(); ++i) {
    warehouse_->add_server(std::move(endpoints[i]), config_.poll_period_ms, services[i]->base_url());
  }
  if (push) {
    warehouse_->set_transport(inbound);
    for (auto* s : services) {
      publishers_.push_back(std::make_unique<bridge::ChangePublisher>(s->id(), *outbound, bridge::PublisherOptions{},
                                                                      &warehouse_->metrics()));
      auto* p = publishers_.back().get();
      s->add_listener([p](const trs::ChangeEvent& e) { p->on_change(e); });
    }
  }
  try {
    if (!config_.store.load_path.empty()) warehouse_->load(config_.store.load_path);
  } catch (const Error& e) {
    throw ConfigError(std::string("warehouse store: ") + e.what());
  }
  try {
    warehouse_->start();
  } catch (const Error& e) {
    throw TransportError(std::string("warehouse: ") + e.what());
  }
  http_ = std::make_unique<warehouse::WarehouseHttpServer>(*warehouse_);
  try {
    warehouse_port_ = http_->bind(config_.host, config_.warehouse_port);
  } catch (const Error& e) {
    throw TransportError(std::string("warehouse endpoint: ") + e.what());
  }
  http_->serve();
}

void System::stop() {
  if (http_) http_->stop();
  for (auto& p : publishers_) p->wait_drained(2000);
  if (warehouse_ && warehouse_->running()) {
    warehouse_->stop();
    if (!config_.store.dump_path.empty()) warehouse_->dump(config_.store.dump_path);
  }
  http_.reset();
}

bool System::healthy() const {
  if (!chain_) return false;
  for (auto* s : chain_->services()) {
    const auto url = s->base_url();
    const auto port = std::stoi(url.substr(url.rfind(':') + 1));
    if (!http_ok(config_.host, port, "/trs")) return false;
  }
  if (config_.mode == "direct") return true;
  return warehouse_ && warehouse_->running() && http_ok(config_.host, warehouse_port_, "/health");
}

std::vector<sim::Mutation> System::run_workload(const std::atomic<bool>* stop) {
  if (!chain_) throw ContractViolation("run_workload before start");
  return sim::run_workload(config_.workload, *chain_, truth_, stop);
}

std::string System::warehouse_url() const {
  if (!warehouse_port_) return {};
  return "http://" + config_.host + ":" + std::to_string(warehouse_port_);
}

std::string System::describe() const {
  json services = json::object();
  if (chain_) {
    for (auto* s : chain_->services()) services[s->id()] = s->base_url();
  }
  json j = {{"mode", config_.mode}, {"services", services}};
  j["warehouse"] = warehouse_port_ ? json(warehouse_url()) : json(nullptr);
  return j.dump();
}

}  // namespace lcq::system
