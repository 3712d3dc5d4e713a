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

#include "lcq/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <thread>

#include <nlohmann/json.hpp>

#include "lcq/bridge.hpp"
#include "lcq/direct.hpp"
#include "lcq/error.hpp"
#include "lcq/mqtt.hpp"
#include "lcq/queries.hpp"
#include "lcq/warehouse.hpp"

namespace lcq::bench {

namespace {

using Clock = std::chrono::steady_clock;

constexpr const char* kQueries[] = {"lcq1", "lcq2", "lcq3"};

// Publishing side of the push path with an off switch for gap runs.
class SwitchableTransport : public bridge::PubSubTransport {
 public:
  explicit SwitchableTransport(bridge::PubSubTransport& inner) : inner_(inner) {}

  void set_up(bool up) { up_ = up; }

  void publish(const std::string& topic, const std::string& payload) override {
    if (!up_) throw TransportError("transport switched off");
    inner_.publish(topic, payload);
  }
  void subscribe(const std::string& filter, bridge::MessageHandler handler) override {
    inner_.subscribe(filter, std::move(handler));
  }

 private:
  bridge::PubSubTransport& inner_;
  std::atomic<bool> up_{true};
};

double elapsed_ms(Clock::time_point since) {
  return std::chrono::duration<double, std::milli>(Clock::now() - since).count();
}

// Results as "service/localId" so runs on different ports compare equal.
std::vector<std::string> first_column(const sparql::BindingTable& t, sim::Toolchain& chain) {
  std::vector<std::string> out;
  for (const auto& row : t.rows) {
    const auto& term = row.at(t.columns.front());
    std::string text = std::holds_alternative<rdf::Iri>(term) ? std::get<rdf::Iri>(term).str() : rdf::to_ntriples(term);
    for (auto* s : chain.services()) {
      const auto prefix = s->base_url() + "/resources/";
      if (text.rfind(prefix, 0) == 0) {
        text = s->id() + "/" + text.substr(prefix.size());
        break;
      }
    }
    out.push_back(std::move(text));
  }
  std::sort(out.begin(), out.end());
  return out;
}

queries::Lcq2Params lcq2_params(sim::Toolchain& chain) {
  return {chain.changes().resource_uri("CR1"), chain.requirements().resource_uri("R1")};
}

std::map<std::string, std::vector<std::string>> oracle_results(sim::Toolchain& chain) {
  const auto live = chain.live_dataset();
  std::map<std::string, std::vector<std::string>> out;
  for (const char* q : kQueries) {
    out[q] = first_column(sparql::evaluate(sparql::parse_query(queries::by_name(q, lcq2_params(chain))), live), chain);
  }
  return out;
}

template <typename Pred>
bool wait_for(Pred pred, trs::Millis timeout_ms) {
  const auto deadline = Clock::now() + std::chrono::milliseconds(timeout_ms);
  while (!pred()) {
    if (Clock::now() >= deadline) return false;
    std::this_thread::sleep_for(std::chrono::milliseconds(10));
  }
  return true;
}

void run_direct(const BenchOptions& o, sim::Toolchain& chain, sim::GroundTruth& truth, ModeReport& r) {
  sim::run_workload(o.workload, chain, truth);
  auto endpoints = chain.make_endpoints();
  const direct::Services services{*endpoints[0], *endpoints[1], *endpoints[2]};
  for (const char* q : kQueries) {
    std::vector<double> latencies;
    for (std::size_t i = 0; i < std::max<std::size_t>(1, o.query_repetitions); ++i) {
      const auto started = Clock::now();
      auto result = direct::direct_query(q, lcq2_params(chain), services);
      latencies.push_back(elapsed_ms(started));
      r.results[q] = first_column(result.table, chain);
    }
    r.query_latency_p50_ms[q] = percentile(latencies, 50);
  }
  const auto expected = oracle_results(chain);
  r.converged = r.results == expected;
  if (!r.converged) r.convergence_detail = "direct answers differ from the services' live state";
}

void run_warehouse(BenchMode mode, const BenchOptions& o, sim::Toolchain& chain, sim::GroundTruth& truth,
                   ModeReport& r) {
  warehouse::WarehouseOptions wo;
  wo.mode = mode == BenchMode::Poll ? warehouse::Mode::Poll : warehouse::Mode::Push;
  warehouse::Warehouse wh(wo);
  auto endpoints = chain.make_endpoints();
  auto services = chain.services();
  for (std::size_t i = 0; i < endpoints.size(); ++i) {
    wh.add_server(std::move(endpoints[i]), o.poll_period_ms, services[i]->base_url());
  }

  const bool push = mode == BenchMode::Push;
  bridge::InProcessBus bus(bridge::BusOptions{o.duplicate_delivery});
  std::unique_ptr<mqtt::MqttTransport> mqtt_in;
  std::unique_ptr<mqtt::MqttTransport> mqtt_out;
  bridge::PubSubTransport* inbound = &bus;
  bridge::PubSubTransport* outbound = &bus;
  if (push && !o.broker_url.empty()) {
    mqtt::MqttOptions mo;
    mo.url = o.broker_url;
    mo.client_id = "lcq-bench-warehouse";
    mqtt_in = std::make_unique<mqtt::MqttTransport>(mo);
    mo.client_id = "lcq-bench-services";
    mqtt_out = std::make_unique<mqtt::MqttTransport>(mo);
    mqtt_out->connect();
    inbound = mqtt_in.get();
    outbound = mqtt_out.get();
  }
  SwitchableTransport gate(*outbound);
  std::vector<std::unique_ptr<bridge::ChangePublisher>> publishers;
  if (push) {
    if (mqtt_in) mqtt_in->connect();
    wh.set_transport(inbound);
    bridge::PublisherOptions po;
    po.retry_ms = 20;
    if (o.push_gaps) po.buffer_max = 0;
    for (auto* s : services) {
      publishers.push_back(std::make_unique<bridge::ChangePublisher>(s->id(), gate, po, &wh.metrics()));
      auto* p = publishers.back().get();
      s->add_listener([p](const trs::ChangeEvent& e) { p->on_change(e); });
    }
  }

  wh.start();
  r.initial_base_size = wh.graph_count();
  std::vector<std::uint64_t> start_orders;
  for (auto* s : services) start_orders.push_back(s->trs().max_order());

  std::function<void(std::size_t)> before_step;
  if (push && o.push_gaps) {
    const auto steps = static_cast<double>(o.workload.steps);
    const auto from = static_cast<std::size_t>(o.push_gaps->from * steps);
    const auto to = static_cast<std::size_t>(o.push_gaps->to * steps);
    // Drain first so exactly the events recorded inside the window are lost.
    before_step = [&gate, &publishers, from, to, timeout = o.settle_timeout_ms](std::size_t i) {
      if (i != from && i != to) return;
      for (auto& p : publishers) p->wait_drained(timeout);
      gate.set_up(i != from);
    };
  }
  sim::run_workload(o.workload, chain, truth, nullptr, before_step);
  gate.set_up(true);

  for (std::size_t i = 0; i < services.size(); ++i) {
    for (const auto& e : services[i]->trs().events()) {
      if (e.order > start_orders[i] && e.kind != trs::ChangeKind::Deletion) ++r.upsert_events;
    }
  }
  for (auto& p : publishers) p->wait_drained(o.settle_timeout_ms);
  if (push) {
    if (mqtt_out) {
      mqtt_out->wait_acknowledged(std::chrono::milliseconds(o.settle_timeout_ms));
    } else {
      bus.wait_idle();
    }
  }
  const bool caught_up = wait_for(
      [&] {
        const auto status = wh.status();
        for (std::size_t i = 0; i < services.size(); ++i) {
          if (status[i].last_applied_order != services[i]->trs().max_order()) return false;
        }
        return true;
      },
      o.settle_timeout_ms);
  // the final poll/apply cycle that defines quiescence
  wh.sync_now();

  const auto live = chain.live_dataset();
  r.converged = wh.dataset() == live;
  if (!caught_up) r.convergence_detail = "pipelines did not catch up within the settle timeout; ";
  if (!r.converged) r.convergence_detail += "warehouse dataset differs from the services' live graphs";

  for (const char* q : kQueries) {
    const auto text = queries::by_name(q, lcq2_params(chain));
    std::vector<double> latencies;
    for (std::size_t i = 0; i < std::max<std::size_t>(1, o.query_repetitions); ++i) {
      double ms = 0;
      r.results[q] = first_column(wh.query(text, &ms), chain);
      latencies.push_back(ms);
    }
    r.query_latency_p50_ms[q] = percentile(latencies, 50);
  }

  const auto m = wh.metrics_snapshot();
  r.staleness_samples = m.staleness_samples.size();
  r.staleness_p50_ms = m.staleness_p50();
  r.staleness_p95_ms = m.staleness_p95();
  r.mqtt_messages = m.mqtt_message_count;
  r.mqtt_dropped = m.mqtt_dropped_count;
  r.gaps_detected = wh.subscriber().gaps_detected();
  r.duplicates_ignored = wh.subscriber().duplicates_ignored();
  wh.stop();
  publishers.clear();
}

}  // namespace

std::string_view to_string(BenchMode mode) {
  switch (mode) {
    case BenchMode::Direct: return "direct";
    case BenchMode::Poll: return "poll";
    case BenchMode::Push: return "push";
  }
  return "?";
}

BenchMode parse_bench_mode(std::string_view text) {
  for (BenchMode m : {BenchMode::Direct, BenchMode::Poll, BenchMode::Push}) {
    if (text == to_string(m)) return m;
  }
  throw ConfigError("mode must be direct, poll or push, got '" + std::string(text) + "'");
}

BenchReport run_bench(const BenchOptions& options) {
  BenchReport report;
  report.seed = options.workload.seed;
  report.steps = options.workload.steps;
  report.rate_ops_per_s = options.workload.rate_ops_per_s;
  report.poll_period_ms = options.poll_period_ms;
  for (BenchMode mode : options.modes) {
    if (options.log) options.log(std::string("running ") + std::string(to_string(mode)) + " mode");
    auto chain = options.http ? sim::Toolchain::http() : sim::Toolchain::local();
    auto truth = sim::seed_fixture(options.fixture, *chain, trs::now_ms());
    ModeReport r;
    r.mode = mode;
    const auto started = Clock::now();
    if (mode == BenchMode::Direct) {
      run_direct(options, *chain, truth, r);
    } else {
      run_warehouse(mode, options, *chain, truth, r);
    }
    r.run_seconds = elapsed_ms(started) / 1000.0;
    for (auto* s : chain->services()) {
      r.http_gets[s->id()] = s->resource_gets_served();
      r.total_gets += s->resource_gets_served();
    }
    report.modes.push_back(std::move(r));
  }
  for (const auto& m : report.modes) {
    report.results_agree = report.results_agree && m.results == report.modes.front().results;
  }
  return report;
}

bool BenchReport::ok() const {
  for (const auto& m : modes) {
    if (!m.converged) return false;
  }
  return results_agree;
}

std::string BenchReport::to_json() const {
  nlohmann::json modes_json = nlohmann::json::array();
  for (const auto& m : modes) {
    nlohmann::json j = {
        {"mode", to_string(m.mode)},
        {"httpGets", m.http_gets},
        {"totalGets", m.total_gets},
        {"queryLatencyP50Ms", m.query_latency_p50_ms},
        {"results", m.results},
        {"converged", m.converged},
        {"runSeconds", m.run_seconds},
    };
    if (m.mode != BenchMode::Direct) {
      j["stalenessSamples"] = m.staleness_samples;
      j["stalenessP50Ms"] = m.staleness_p50_ms;
      j["stalenessP95Ms"] = m.staleness_p95_ms;
      j["initialBaseSize"] = m.initial_base_size;
      j["upsertEvents"] = m.upsert_events;
      j["mqttMessages"] = m.mqtt_messages;
      j["mqttDropped"] = m.mqtt_dropped;
      j["gapsDetected"] = m.gaps_detected;
      j["duplicatesIgnored"] = m.duplicates_ignored;
    }
    if (!m.convergence_detail.empty()) j["convergenceDetail"] = m.convergence_detail;
    modes_json.push_back(std::move(j));
  }
  return nlohmann::json{{"seed", seed},
                        {"steps", steps},
                        {"rateOpsPerS", rate_ops_per_s},
                        {"pollPeriodMs", poll_period_ms},
                        {"modes", modes_json},
                        {"resultsAgree", results_agree},
                        {"ok", ok()}}
      .dump(2);
}

std::string BenchReport::to_table() const {
  std::string out;
  char line[256];
  std::snprintf(line, sizeof line, "%-7s %12s %12s %10s %10s %9s %9s %9s %9s  %s\n", "mode", "stale p50", "stale p95",
                "GETs", "MQTT msgs", "lcq1 p50", "lcq2 p50", "lcq3 p50", "dropped", "converged");
  out += line;
  for (const auto& m : modes) {
    const bool direct = m.mode == BenchMode::Direct;
    auto ms = [](double v) {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.1f ms", v);
      return std::string(buf);
    };
    const auto latency = [&](const char* q) {
      auto it = m.query_latency_p50_ms.find(q);
      return it == m.query_latency_p50_ms.end() ? std::string("-") : ms(it->second);
    };
    std::snprintf(line, sizeof line, "%-7s %12s %12s %10llu %10s %9s %9s %9s %9s  %s\n",
                  std::string(to_string(m.mode)).c_str(), direct ? "-" : ms(m.staleness_p50_ms).c_str(),
                  direct ? "-" : ms(m.staleness_p95_ms).c_str(), static_cast<unsigned long long>(m.total_gets),
                  direct ? "-" : std::to_string(m.mqtt_messages).c_str(), latency("lcq1").c_str(),
                  latency("lcq2").c_str(), latency("lcq3").c_str(),
                  direct ? "-" : std::to_string(m.mqtt_dropped).c_str(), m.converged ? "PASS" : "FAIL");
    out += line;
  }
  out += std::string("results agree across modes: ") + (results_agree ? "yes" : "NO") + "\n";
  return out;
}

}  // namespace lcq::bench
