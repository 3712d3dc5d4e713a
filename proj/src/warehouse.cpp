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

#include "lcq/warehouse.hpp"

#include <chrono>
#include <fstream>
#include <set>
#include <sstream>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "lcq/error.hpp"
#include "lcq/mqtt.hpp"
#include "lcq/ntriples.hpp"

namespace lcq::warehouse {

using nlohmann::json;

std::string_view to_string(Mode mode) {
  switch (mode) {
    case Mode::Poll: return "poll";
    case Mode::Push: return "push";
    case Mode::PushWithSafetyPoll: return "push-with-safety-poll";
  }
  return "?";
}

Mode parse_mode(std::string_view text) {
  for (Mode m : {Mode::Poll, Mode::Push, Mode::PushWithSafetyPoll}) {
    if (text == to_string(m)) return m;
  }
  throw ConfigError("mode must be poll, push or push-with-safety-poll, got '" + std::string(text) + "'");
}

void WarehouseConfig::validate() const {
  std::set<std::string> ids;
  for (const auto& s : servers) {
    if (s.server_id.empty()) throw ConfigError("servers[].id must not be empty");
    if (!ids.insert(s.server_id).second) throw ConfigError("duplicate server id '" + s.server_id + "'");
    if (s.base_url.rfind("http://", 0) != 0 && s.base_url.rfind("https://", 0) != 0)
      throw ConfigError("server '" + s.server_id + "': baseUrl must be an http(s) URL");
    if (!s.trs_url.empty() && s.trs_url != s.base_url + "/trs")
      throw ConfigError("server '" + s.server_id + "': trsUrl must be baseUrl + \"/trs\"");
    if (mode == Mode::Poll && s.poll_period_ms <= 0)
      throw ConfigError("server '" + s.server_id + "': pollPeriodMs must be > 0");
  }
  if (mode == Mode::PushWithSafetyPoll && safety_poll_ms <= 0) throw ConfigError("safetyPollMs must be > 0");
  if (mode != Mode::Poll) mqtt::parse_broker_url(mqtt.url);
}

namespace {

void check_keys(const json& object, const std::string& where, std::initializer_list<std::string_view> allowed) {
  if (!object.is_object()) throw ConfigError(where + " must be an object");
  for (const auto& [key, value] : object.items()) {
    bool ok = false;
    for (auto a : allowed) ok = ok || key == a;
    if (!ok) throw ConfigError("unknown key '" + key + "' in " + where);
  }
}

template <typename T>
T get_or(const json& object, const char* key, const std::string& where, T fallback) {
  auto it = object.find(key);
  if (it == object.end()) return fallback;
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    throw ConfigError(where + "." + key + " has the wrong type");
  }
}

}  // namespace

WarehouseConfig parse_config(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  check_keys(doc, "config", {"mode", "safetyPollMs", "servers", "mqtt", "store"});
  WarehouseConfig c;
  c.mode = parse_mode(get_or<std::string>(doc, "mode", "config", "poll"));
  c.safety_poll_ms = get_or<trs::Millis>(doc, "safetyPollMs", "config", c.safety_poll_ms);
  if (auto it = doc.find("servers"); it != doc.end()) {
    if (!it->is_array()) throw ConfigError("config.servers must be an array");
    for (std::size_t i = 0; i < it->size(); ++i) {
      const auto& s = (*it)[i];
      const std::string where = "servers[" + std::to_string(i) + "]";
      check_keys(s, where, {"id", "baseUrl", "trsUrl", "pollPeriodMs"});
      ServerConfig sc;
      sc.server_id = get_or<std::string>(s, "id", where, "");
      sc.base_url = get_or<std::string>(s, "baseUrl", where, "");
      while (!sc.base_url.empty() && sc.base_url.back() == '/') sc.base_url.pop_back();
      sc.trs_url = get_or<std::string>(s, "trsUrl", where, "");
      sc.poll_period_ms = get_or<trs::Millis>(s, "pollPeriodMs", where, sc.poll_period_ms);
      c.servers.push_back(std::move(sc));
    }
  }
  if (auto it = doc.find("mqtt"); it != doc.end()) {
    check_keys(*it, "mqtt", {"url", "clientId"});
    c.mqtt.url = get_or<std::string>(*it, "url", "mqtt", c.mqtt.url);
    c.mqtt.client_id = get_or<std::string>(*it, "clientId", "mqtt", c.mqtt.client_id);
  }
  if (auto it = doc.find("store"); it != doc.end()) {
    check_keys(*it, "store", {"load", "dump"});
    c.store.load_path = get_or<std::string>(*it, "load", "store", "");
    c.store.dump_path = get_or<std::string>(*it, "dump", "store", "");
  }
  c.validate();
  return c;
}

WarehouseConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string dump_ntriples(const rdf::Dataset& dataset) { return rdf::serialize_ntriples(dataset.union_graph()); }

rdf::Dataset load_ntriples(std::string_view text) {
  std::map<rdf::Iri, rdf::Graph> grouped;
  for (const auto& t : rdf::parse_ntriples(text)) grouped[t.subject].insert(t);
  rdf::Dataset d;
  for (auto& [name, g] : grouped) d.upsert_graph(name, std::move(g));
  return d;
}

Warehouse::Warehouse(WarehouseOptions options) : options_(std::move(options)) {
  if (!options_.client.clock) options_.client.clock = trs::now_ms;
}

Warehouse::~Warehouse() { stop(); }

std::unique_ptr<Warehouse> Warehouse::from_config(const WarehouseConfig& config) {
  config.validate();
  WarehouseOptions options;
  options.mode = config.mode;
  options.safety_poll_ms = config.safety_poll_ms;
  auto w = std::make_unique<Warehouse>(options);
  for (const auto& s : config.servers) {
    w->add_server(std::make_unique<sync::HttpEndpoint>(s.server_id, s.base_url), s.poll_period_ms, s.base_url);
  }
  if (config.mode != Mode::Poll) {
    mqtt::MqttOptions mo;
    mo.url = config.mqtt.url;
    mo.client_id = config.mqtt.client_id;
    w->mqtt_ = std::make_unique<mqtt::MqttTransport>(mo);
    w->transport_ = w->mqtt_.get();
  }
  if (!config.store.load_path.empty()) w->load(config.store.load_path);
  w->dump_path_ = config.store.dump_path;
  return w;
}

void Warehouse::add_server(std::unique_ptr<sync::TrsEndpoint> endpoint, trs::Millis poll_period_ms,
                           std::string resource_prefix) {
  if (running_) throw ContractViolation("add_server after start");
  for (const auto& s : servers_) {
    if (s->endpoint->server_id() == endpoint->server_id())
      throw ContractViolation("duplicate server id '" + endpoint->server_id() + "'");
  }
  auto server = std::make_unique<Server>();
  server->endpoint = std::move(endpoint);
  server->client = std::make_unique<sync::TrsClient>(*server->endpoint, *this, &metrics_, options_.client);
  server->poll_period_ms = poll_period_ms;
  server->resource_prefix = std::move(resource_prefix);
  subscriber_.add_client(*server->client);
  servers_.push_back(std::move(server));
}

void Warehouse::start() {
  if (running_) return;
  const bool push = options_.mode != Mode::Poll;
  if (push) {
    if (!transport_) throw ConfigError("push mode needs an MQTT transport");
    if (mqtt_) {
      try {
        mqtt_->connect();
      } catch (const TransportError& e) {
        throw TransportError(std::string("MQTT broker: ") + e.what());
      }
    }
    {
      std::lock_guard lock(gate_->mutex);
      gate_->target = &subscriber_;
    }
    transport_->subscribe(std::string(bridge::kEventsFilter),
                          [gate = gate_](const std::string& topic, const std::string& payload) {
                            std::lock_guard lock(gate->mutex);
                            if (gate->target) gate->target->on_message(topic, payload);
                          });
  }
  for (auto& s : servers_) {
    try {
      std::lock_guard lock(s->client->pipeline());
      s->client->initial_sync();
    } catch (const Error& e) {
      {
        std::lock_guard lock(gate_->mutex);
        gate_->target = nullptr;
      }
      if (mqtt_) mqtt_->close();
      throw TransportError("initial sync of server '" + s->endpoint->server_id() + "' failed: " + e.what());
    }
  }
  {
    std::lock_guard lock(stop_mutex_);
    stopping_ = false;
  }
  running_ = true;
  // Events recorded while the initial syncs ran may have been announced
  // before this pipeline listened; one pull closes that window.
  if (push) sync_now();
  for (auto& s : servers_) {
    trs::Millis period = 0;
    if (options_.mode == Mode::Poll) period = s->poll_period_ms;
    if (options_.mode == Mode::PushWithSafetyPoll) period = options_.safety_poll_ms;
    if (period > 0) s->loop = std::thread([this, server = s.get(), period] { poll_loop(*server, period); });
  }
}

void Warehouse::poll_loop(Server& server, trs::Millis period) {
  std::unique_lock lock(stop_mutex_);
  while (!stopping_) {
    if (stop_cv_.wait_for(lock, std::chrono::milliseconds(period), [this] { return stopping_; })) break;
    lock.unlock();
    try {
      server.client->sync_cycle();
    } catch (const Error&) {
      ++sync_failures_;
    }
    lock.lock();
  }
}

void Warehouse::stop() {
  {
    std::lock_guard lock(gate_->mutex);
    gate_->target = nullptr;
  }
  {
    std::lock_guard lock(stop_mutex_);
    stopping_ = true;
  }
  stop_cv_.notify_all();
  for (auto& s : servers_) {
    if (s->loop.joinable()) s->loop.join();
  }
  if (mqtt_) mqtt_->close();
  if (running_.exchange(false) && !dump_path_.empty()) dump(dump_path_);
}

void Warehouse::sync_now() {
  for (auto& s : servers_) {
    try {
      s->client->sync_cycle();
    } catch (const Error&) {
      ++sync_failures_;
    }
  }
}

void Warehouse::commit(const std::string&, std::vector<sync::GraphWrite> writes) {
  std::vector<trs::Millis> event_times;
  {
    std::unique_lock lock(store_mutex_);
    for (auto& w : writes) {
      if (w.event_ts) event_times.push_back(*w.event_ts);
      if (w.content) {
        dataset_.upsert_graph(w.graph, std::move(*w.content));
      } else {
        dataset_.delete_graph(w.graph);
      }
    }
  }
  const trs::Millis applied = options_.client.clock();
  for (auto ts : event_times) metrics_.record_staleness(ts, std::max(ts, applied));
}

sparql::BindingTable Warehouse::query(std::string_view text, double* latency_ms) {
  const auto started = std::chrono::steady_clock::now();
  const auto parsed = sparql::parse_query(text);
  sparql::BindingTable table;
  {
    std::shared_lock lock(store_mutex_);
    table = sparql::evaluate(parsed, dataset_);
  }
  const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started).count();
  metrics_.record_query_latency(ms);
  if (latency_ms) *latency_ms = ms;
  return table;
}

std::string Warehouse::sparql_query(std::string_view text, double* latency_ms) {
  return sparql::to_results_json(query(text, latency_ms));
}

std::vector<ServerStatus> Warehouse::status() const {
  std::vector<ServerStatus> out;
  for (const auto& s : servers_) {
    std::lock_guard lock(s->client->pipeline());
    const auto st = s->client->state();
    out.push_back({s->endpoint->server_id(), st.phase, st.last_applied_order, s->client->owned().size(),
                   s->client->dirty().size()});
  }
  return out;
}

rdf::Dataset Warehouse::dataset() const {
  std::shared_lock lock(store_mutex_);
  return dataset_;
}

std::size_t Warehouse::graph_count() const {
  std::shared_lock lock(store_mutex_);
  return dataset_.graph_count();
}

void Warehouse::dump(const std::string& path) const {
  std::string text;
  {
    std::shared_lock lock(store_mutex_);
    text = dump_ntriples(dataset_);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
  if (!out) throw ConfigError("cannot write dump file " + path);
}

void Warehouse::load(const std::string& path) {
  if (running_) throw ContractViolation("load after start");
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read dump file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  rdf::Dataset loaded;
  try {
    loaded = load_ntriples(ss.str());
  } catch (const ParseError& e) {
    throw ConfigError("dump file " + path + ": " + e.what());
  }
  for (auto& s : servers_) {
    if (s->resource_prefix.empty()) continue;
    std::set<rdf::Iri> mine;
    for (const auto& [name, g] : loaded.graphs()) {
      if (name.str().rfind(s->resource_prefix, 0) == 0) mine.insert(name);
    }
    std::lock_guard lock(s->client->pipeline());
    s->client->adopt(mine);
  }
  std::unique_lock lock(store_mutex_);
  dataset_ = std::move(loaded);
}

std::string health_json(const Warehouse& warehouse) {
  json servers = json::object();
  for (const auto& s : warehouse.status()) {
    servers[s.server_id] = {{"phase", s.phase == sync::Phase::Initial ? "initial" : "incremental"},
                            {"lastAppliedOrder", s.last_applied_order},
                            {"graphs", s.graphs},
                            {"dirty", s.dirty}};
  }
  return json{{"status", warehouse.running() ? "ok" : "stopped"}, {"servers", servers}}.dump();
}

WarehouseHttpServer::WarehouseHttpServer(Warehouse& warehouse)
    : warehouse_(warehouse), server_(std::make_unique<httplib::Server>()) {
  server_->set_tcp_nodelay(true);
  server_->set_socket_options([](int sock) {
    int yes = 1;
    setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof yes);
  });
}

WarehouseHttpServer::~WarehouseHttpServer() { stop(); }

int WarehouseHttpServer::bind(const std::string& host, int port) {
  if (port == 0) {
    port = server_->bind_to_any_port(host);
    if (port < 0) throw TransportError("cannot bind " + host);
  } else if (!server_->bind_to_port(host, port)) {
    throw TransportError("cannot bind " + host + ":" + std::to_string(port));
  }
  return port;
}

void WarehouseHttpServer::serve() {
  Warehouse* w = &warehouse_;
  server_->Post("/sparql", [w](const httplib::Request& req, httplib::Response& res) {
    std::string text = req.body;
    if (req.has_param("query")) text = req.get_param_value("query");
    try {
      res.set_content(w->sparql_query(text), "application/sparql-results+json");
    } catch (const Error& e) {
      res.status = 400;
      res.set_content(json{{"error", e.what()}}.dump(), "application/json");
    }
  });
  server_->Get("/metrics", [w](const httplib::Request&, httplib::Response& res) {
    res.set_content(w->metrics_snapshot().to_json(), "application/json");
  });
  server_->Get("/health", [w](const httplib::Request&, httplib::Response& res) {
    res.set_content(health_json(*w), "application/json");
  });
  thread_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
}

void WarehouseHttpServer::stop() {
  if (server_) server_->stop();
  if (thread_.joinable()) thread_.join();
}

}  // namespace lcq::warehouse
