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

#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <httplib.h>

#include "lcq/bench.hpp"
#include "lcq/direct.hpp"
#include "lcq/endpoint.hpp"
#include "lcq/error.hpp"
#include "lcq/queries.hpp"
#include "lcq/sparql.hpp"
#include "lcq/system.hpp"

namespace {

using namespace lcq;

constexpr int kOk = 0;
constexpr int kFailed = 1;
constexpr int kUsage = 2;

std::atomic<bool> g_stop{false};

void on_signal(int) { g_stop = true; }

// Usage or configuration mistakes exit 2, everything else at runtime exits 1.
struct UsageError : lcq::Error {
  using lcq::Error::Error;
};

int fail(const std::string& message, int code) {
  std::cerr << "lcq: error: " << message << "\n";
  return code;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot read '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw UsageError("cannot write '" + path + "'");
  out << text;
}

system::SystemConfig config_from(const std::string& path) {
  return path.empty() ? system::SystemConfig{} : system::load_system_config(path);
}

// "CR1" -> <base>/resources/CR1 when the service is known; IRIs pass through.
rdf::Iri resolve(const std::string& value, const std::string& base_url, const char* flag) {
  if (value.find(':') != std::string::npos) return rdf::Iri(value);
  if (base_url.empty()) throw UsageError(std::string(flag) + " needs a full IRI here, got '" + value + "'");
  return rdf::Iri(base_url + "/resources/" + value);
}

std::string http_error(const httplib::Result& res, const std::string& url) {
  if (!res) return "cannot reach " + url + ": " + httplib::to_string(res.error());
  return url + " answered " + std::to_string(res->status) + ": " + res->body;
}

// --- up ----------------------------------------------------------------------

struct UpArgs {
  std::string config;
  std::string mode;
  long poll_period = 0;
  int port = -1;
  std::string broker;
  double seconds = 0;
  bool workload = false;
};

int cmd_up(const UpArgs& a) {
  auto config = config_from(a.config);
  if (!a.mode.empty()) config.mode = a.mode;
  if (a.poll_period > 0) config.poll_period_ms = a.poll_period;
  if (a.port >= 0) config.warehouse_port = a.port;
  if (!a.broker.empty()) config.broker_url = a.broker;
  if (config.mode != "direct") warehouse::parse_mode(config.mode);

  system::System sys(config);
  sys.start();
  if (!sys.healthy()) return fail("health check failed after startup", kFailed);
  std::cout << sys.describe() << std::endl;
  std::cerr << "lcq: " << config.mode << " system healthy";
  if (!sys.warehouse_url().empty()) std::cerr << ", SPARQL endpoint " << sys.warehouse_url() << "/sparql";
  std::cerr << std::endl;

  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  std::thread driver;
  if (a.workload) driver = std::thread([&] { sys.run_workload(&g_stop); });
  const auto deadline = std::chrono::steady_clock::now() + std::chrono::duration<double>(a.seconds);
  while (!g_stop && (a.seconds <= 0 || std::chrono::steady_clock::now() < deadline)) {
    std::this_thread::sleep_for(std::chrono::milliseconds(50));
  }
  g_stop = true;
  if (driver.joinable()) driver.join();
  sys.stop();
  return kOk;
}

// --- query -------------------------------------------------------------------

struct QueryArgs {
  std::string name;
  std::string file;
  std::string cr;
  std::string req;
  std::string mode = "warehouse";
  std::string endpoint = "http://127.0.0.1:8080";
  std::string reqs_url;
  std::string design_url;
  std::string changes_url;
  bool local = false;
  std::string config;
};

std::optional<queries::Lcq2Params> lcq2_params(const QueryArgs& a, const std::string& changes_base,
                                               const std::string& reqs_base) {
  if (a.cr.empty() && a.req.empty()) return std::nullopt;
  if (a.cr.empty() || a.req.empty()) throw UsageError("lcq2 needs both --cr and --req");
  return queries::Lcq2Params{resolve(a.cr, changes_base, "--cr"), resolve(a.req, reqs_base, "--req")};
}

std::string direct_json(const QueryArgs& a, sync::TrsEndpoint& r, sync::TrsEndpoint& d, sync::TrsEndpoint& c,
                        const std::string& reqs_base, const std::string& changes_base) {
  const auto result =
      direct::direct_query(a.name, lcq2_params(a, changes_base, reqs_base), direct::Services{r, d, c});
  std::cerr << "lcq: direct crawl issued " << result.requests << " requests (" << result.resource_gets
            << " resource GETs)\n";
  return sparql::to_results_json(result.table);
}

int cmd_query(QueryArgs a) {
  if (a.name.empty() == a.file.empty()) throw UsageError("give exactly one of a query name or --file");
  if (a.mode != "warehouse" && a.mode != "direct") throw UsageError("--mode must be warehouse or direct");
  if (a.mode == "direct" && !a.file.empty()) throw UsageError("--mode direct runs only the canned queries");
  if (!a.name.empty() && a.name != "lcq1" && a.name != "lcq2" && a.name != "lcq3")
    throw UsageError("unknown query '" + a.name + "' (expected lcq1, lcq2 or lcq3)");

  std::string json;
  if (a.local) {
    auto config = config_from(a.config);
    config.mode = a.mode == "direct" ? "direct" : "poll";
    system::System sys(config);
    sys.start();
    auto& chain = sys.toolchain();
    const auto reqs_base = chain.requirements().base_url();
    const auto changes_base = chain.changes().base_url();
    if (a.mode == "direct") {
      auto endpoints = chain.make_endpoints();
      json = direct_json(a, *endpoints[0], *endpoints[1], *endpoints[2], reqs_base, changes_base);
    } else {
      const auto text = a.file.empty() ? queries::by_name(a.name, lcq2_params(a, changes_base, reqs_base))
                                       : read_file(a.file);
      json = sys.warehouse()->sparql_query(text);
    }
  } else if (a.mode == "direct") {
    if (a.reqs_url.empty() || a.design_url.empty() || a.changes_url.empty())
      throw UsageError("--mode direct needs --reqs, --design and --changes service URLs");
    for (auto* url : {&a.reqs_url, &a.design_url, &a.changes_url}) {
      while (!url->empty() && url->back() == '/') url->pop_back();
    }
    sync::HttpEndpoint r(std::string(sim::kRequirementsId), a.reqs_url);
    sync::HttpEndpoint d(std::string(sim::kDesignId), a.design_url);
    sync::HttpEndpoint c(std::string(sim::kChangesId), a.changes_url);
    json = direct_json(a, r, d, c, a.reqs_url, a.changes_url);
  } else {
    const auto text = a.file.empty() ? queries::by_name(a.name, lcq2_params(a, {}, {})) : read_file(a.file);
    httplib::Client client(a.endpoint);
    client.set_tcp_nodelay(true);
    auto res = client.Post("/sparql", text, "application/sparql-query");
    if (!res) throw TransportError(http_error(res, a.endpoint));
    if (res->status == 400) throw UsageError(http_error(res, a.endpoint));
    if (res->status != 200) throw TransportError(http_error(res, a.endpoint));
    json = res->body;
  }
  std::cout << json << std::endl;
  return kOk;
}

// --- bench -------------------------------------------------------------------

struct BenchArgs {
  std::string config;
  std::vector<std::string> modes;
  long steps = -1;
  double rate = -1;
  long long seed = -1;
  long poll_period = 0;
  long repetitions = -1;
  bool gaps = false;
  double gap_from = 0.3;
  double gap_to = 0.5;
  bool duplicates = false;
  bool http = false;
  std::string broker;
  std::string out = "bench-report.json";
  bool quiet = false;
};

int cmd_bench(const BenchArgs& a) {
  auto o = system::bench_options(config_from(a.config));
  if (!a.modes.empty()) {
    o.modes.clear();
    for (const auto& m : a.modes) o.modes.push_back(bench::parse_bench_mode(m));
  }
  if (a.steps >= 0) o.workload.steps = static_cast<std::size_t>(a.steps);
  if (a.rate >= 0) o.workload.rate_ops_per_s = a.rate;
  if (a.seed >= 0) o.workload.seed = static_cast<std::uint64_t>(a.seed);
  if (a.poll_period > 0) o.poll_period_ms = a.poll_period;
  if (a.repetitions >= 0) o.query_repetitions = static_cast<std::size_t>(a.repetitions);
  if (a.gaps) {
    if (!(0 <= a.gap_from && a.gap_from < a.gap_to && a.gap_to <= 1))
      throw UsageError("gap window must satisfy 0 <= from < to <= 1");
    o.push_gaps = bench::GapWindow{a.gap_from, a.gap_to};
  }
  o.duplicate_delivery = a.duplicates;
  o.http = a.http || !a.broker.empty() || o.http;
  if (!a.broker.empty()) o.broker_url = a.broker;
  if (!a.quiet) o.log = [](const std::string& line) { std::cerr << "lcq: " << line << std::endl; };

  const auto report = bench::run_bench(o);
  if (!a.out.empty()) write_file(a.out, report.to_json() + "\n");
  std::cout << report.to_table();
  if (!a.out.empty()) std::cout << "report written to " << a.out << "\n";
  return report.ok() ? kOk : kFailed;
}

// --- dump-metrics ------------------------------------------------------------

int cmd_dump_metrics(const std::string& endpoint, const std::string& out) {
  httplib::Client client(endpoint);
  auto res = client.Get("/metrics");
  if (!res || res->status != 200) throw TransportError(http_error(res, endpoint));
  if (out.empty()) {
    std::cout << res->body << std::endl;
  } else {
    write_file(out, res->body + "\n");
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Lifecycle queries over a linked data warehouse kept current through TRS and MQTT"};
  app.require_subcommand(1);

  UpArgs up;
  auto* up_cmd = app.add_subcommand("up", "Start the tool services and the warehouse");
  up_cmd->add_option("--config", up.config, "System config (JSON)")->check(CLI::ExistingFile);
  up_cmd->add_option("--mode", up.mode, "poll | push | push-with-safety-poll | direct");
  up_cmd->add_option("--poll-period", up.poll_period, "Poll period in ms");
  up_cmd->add_option("--port", up.port, "Warehouse HTTP port (0 picks one)");
  up_cmd->add_option("--broker", up.broker, "MQTT broker URL; push runs in-process without one");
  up_cmd->add_option("--for", up.seconds, "Stop after this many seconds (default: until interrupted)");
  up_cmd->add_flag("--workload", up.workload, "Run the configured workload against the services");

  QueryArgs query;
  auto* query_cmd = app.add_subcommand("query", "Run a lifecycle query and print SPARQL results JSON");
  query_cmd->add_option("name", query.name, "lcq1 | lcq2 | lcq3");
  query_cmd->add_option("--file", query.file, "SPARQL query file")->check(CLI::ExistingFile);
  query_cmd->add_option("--cr", query.cr, "lcq2 change request (IRI, or local id when services are known)");
  query_cmd->add_option("--req", query.req, "lcq2 requirement (IRI, or local id when services are known)");
  query_cmd->add_option("--mode", query.mode, "warehouse | direct");
  query_cmd->add_option("--endpoint", query.endpoint, "Warehouse base URL");
  query_cmd->add_option("--reqs", query.reqs_url, "Requirements service base URL (direct mode)");
  query_cmd->add_option("--design", query.design_url, "Design service base URL (direct mode)");
  query_cmd->add_option("--changes", query.changes_url, "Change request service base URL (direct mode)");
  query_cmd->add_flag("--local", query.local, "Answer from a system started in this process");
  query_cmd->add_option("--config", query.config, "System config for --local")->check(CLI::ExistingFile);

  BenchArgs b;
  auto* bench_cmd = app.add_subcommand("bench", "Compare direct, poll and push on one seeded workload");
  bench_cmd->add_option("--config", b.config, "System config (JSON)")->check(CLI::ExistingFile);
  bench_cmd->add_option("--modes", b.modes, "Modes to run (default: direct poll push)")->delimiter(',');
  bench_cmd->add_option("--steps", b.steps, "Workload operations");
  bench_cmd->add_option("--rate", b.rate, "Workload operations per second (0: unpaced)");
  bench_cmd->add_option("--seed", b.seed, "Workload seed");
  bench_cmd->add_option("--poll-period", b.poll_period, "Poll period in ms");
  bench_cmd->add_option("--repetitions", b.repetitions, "Runs of each LCQ at quiescence");
  bench_cmd->add_flag("--gaps", b.gaps, "Push publishers drop events inside the gap window");
  bench_cmd->add_option("--gap-from", b.gap_from, "Gap window start, fraction of the run");
  bench_cmd->add_option("--gap-to", b.gap_to, "Gap window end, fraction of the run");
  bench_cmd->add_flag("--duplicates", b.duplicates, "Deliver every push message twice");
  bench_cmd->add_flag("--http", b.http, "Serve the tools over HTTP on 127.0.0.1");
  bench_cmd->add_option("--broker", b.broker, "Push over this MQTT broker");
  bench_cmd->add_option("--out", b.out, "JSON report path (empty: none)");
  bench_cmd->add_flag("--quiet", b.quiet, "No progress lines on stderr");

  std::string metrics_endpoint = "http://127.0.0.1:8080";
  std::string metrics_out;
  auto* metrics_cmd = app.add_subcommand("dump-metrics", "Print the warehouse metrics snapshot");
  metrics_cmd->add_option("--endpoint", metrics_endpoint, "Warehouse base URL");
  metrics_cmd->add_option("--out", metrics_out, "Write to this file instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kUsage;
  }

  try {
    if (*up_cmd) return cmd_up(up);
    if (*query_cmd) return cmd_query(query);
    if (*bench_cmd) return cmd_bench(b);
    return cmd_dump_metrics(metrics_endpoint, metrics_out);
  } catch (const UsageError& e) {
    return fail(e.what(), kUsage);
  } catch (const ConfigError& e) {
    return fail(e.what(), kUsage);
  } catch (const ParseError& e) {
    return fail(e.what(), kUsage);
  } catch (const UnsupportedConstruct& e) {
    return fail(e.what(), kUsage);
  } catch (const std::exception& e) {
    return fail(e.what(), kFailed);
  }
}
