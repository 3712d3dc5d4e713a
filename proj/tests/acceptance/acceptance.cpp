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

// One line per acceptance criterion; exits non-zero when any fails.
// Usage: lcq_acceptance [criterion numbers...]

#include <chrono>
#include <cstdio>
#include <functional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "lcq/bench.hpp"
#include "lcq/bridge.hpp"
#include "lcq/error.hpp"
#include "lcq/ntriples.hpp"
#include "lcq/queries.hpp"
#include "lcq/rdf.hpp"
#include "lcq/sparql.hpp"
#include "lcq/toolchain.hpp"
#include "lcq/trs.hpp"
#include "lcq/trs_client.hpp"
#include "lcq/warehouse.hpp"
#include "support/fakes.hpp"
#include "support/golden.hpp"
#include "support/histories.hpp"
#include "support/mini_broker.hpp"
#include "support/oracles.hpp"
#include "support/query_gen.hpp"

namespace {

using namespace lcq;
using lcq::testing::ex;
using trs::ChangeEvent;
using trs::ChangeKind;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

sync::ClientOptions no_sleep() {
  sync::ClientOptions o;
  o.sleep = [](trs::Millis) {};
  return o;
}

// --- 1 ---------------------------------------------------------------------

std::map<rdf::Iri, rdf::Graph> bodies_after(const std::vector<ChangeEvent>& events, std::size_t count) {
  std::map<rdf::Iri, rdf::Graph> bodies;
  for (std::size_t i = 0; i < count; ++i) {
    const auto& e = events[i];
    if (e.kind == ChangeKind::Deletion) bodies.erase(e.uri);
    else bodies[e.uri] = testing::versioned_body(e.uri, e.order);
  }
  return bodies;
}

// Every event applied on its own, each upsert reading the server's current body.
rdf::Dataset raw_replay(rdf::Dataset data, const std::vector<ChangeEvent>& events,
                        const std::map<rdf::Iri, rdf::Graph>& bodies) {
  for (const auto& e : events) {
    auto it = bodies.find(e.uri);
    if (e.kind == ChangeKind::Deletion || it == bodies.end()) data.delete_graph(e.uri);
    else data.upsert_graph(e.uri, it->second);
  }
  return data;
}

Outcome compaction_equivalence() {
  constexpr int kSequences = 1000;
  std::mt19937_64 rng(1001);
  int matched = 0;
  for (int round = 0; round < kSequences; ++round) {
    const auto history = testing::random_history(rng, 1 + rng() % 200, 1 + static_cast<int>(rng() % 20));
    const std::size_t split = rng() % history.size();
    const std::vector<ChangeEvent> window(history.begin() + static_cast<std::ptrdiff_t>(split), history.end());

    rdf::Dataset start;
    for (auto& [uri, g] : bodies_after(history, split)) start.upsert_graph(uri, g);
    testing::MapEndpoint endpoint;
    endpoint.bodies() = bodies_after(history, history.size());
    sync::DatasetWriter store;
    std::vector<sync::GraphWrite> seed;
    for (const auto& [uri, g] : start.graphs()) seed.push_back({uri, g, std::nullopt});
    store.commit("fake", std::move(seed));

    sync::TrsClient client(endpoint, store, nullptr, no_sleep());
    client.apply_actions(sync::compact(window));
    matched += store.dataset() == raw_replay(start, window, endpoint.bodies());
  }

  testing::MapEndpoint endpoint;
  sync::DatasetWriter store;
  sync::TrsClient client(endpoint, store, nullptr, no_sleep());
  const std::vector<ChangeEvent> cmd{{1, ex("r1"), ChangeKind::Creation, 10},
                                     {2, ex("r1"), ChangeKind::Modification, 11},
                                     {3, ex("r1"), ChangeKind::Deletion, 12}};
  client.apply_actions(sync::compact(cmd));
  const auto fetches = endpoint.resource_requests();
  const bool cmd_ok = fetches == 0 && store.dataset().graph_count() == 0;
  return {matched == kSequences && cmd_ok,
          fmt("%d/%d sequences equal raw replay; create-modify-delete fetches %llu (want 0)", matched, kSequences,
              static_cast<unsigned long long>(fetches))};
}

// --- 2 ---------------------------------------------------------------------

Outcome trs_replay() {
  constexpr int kHistories = 200;
  std::mt19937_64 rng(2002);
  int replay_ok = 0;
  int rebases = 0;
  for (int round = 0; round < kHistories; ++round) {
    trs::TrackedResourceSet set(1 + rng() % 20);
    const auto history = testing::random_history(rng, 1 + rng() % 150, 1 + static_cast<int>(rng() % 20));
    std::set<rdf::Iri> live;
    std::bernoulli_distribution rebase_now(0.05), truncate(0.7);
    for (const auto& e : history) {
      set.record_change(e.uri, e.kind, e.ts);
      testing::fold(live, e);
      if (rebase_now(rng)) {
        set.rebase(live, e.ts, truncate(rng));
        ++rebases;
      }
    }
    std::set<rdf::Iri> replay;
    for (std::optional<std::size_t> p = 0; p;) {
      auto page = set.base_page(*p);
      replay.insert(page.members.begin(), page.members.end());
      p = page.next;
    }
    std::vector<ChangeEvent> newest_first;
    for (std::optional<std::size_t> p = 0; p;) {
      auto page = set.changelog_page(*p);
      newest_first.insert(newest_first.end(), page.events.begin(), page.events.end());
      p = page.next;
    }
    for (auto it = newest_first.rbegin(); it != newest_first.rend(); ++it) {
      if (it->order > set.document().cutoff_order) testing::fold(replay, *it);
    }
    replay_ok += replay == live;
  }

  // fresh client's initial sync vs a from-genesis replay of the mutation log
  int sync_ok = 0;
  for (int round = 0; round < kHistories; ++round) {
    const auto seed = static_cast<std::uint64_t>(round + 1);
    sim::ServiceOptions options;
    options.page_size = 1 + seed % 9;
    options.rebase_every = 3 + rng() % 40;
    auto chain = sim::Toolchain::local(options);
    auto truth = sim::seed_fixture(sim::canonical_fixture(), *chain, 1);
    const auto genesis = truth;
    sim::WorkloadScript script;
    script.seed = seed;
    script.steps = 20 + rng() % 100;
    const auto log = sim::run_workload(script, *chain, truth);

    auto replayed = genesis;
    for (const auto& m : log) sim::apply_mutation(replayed, m);
    rdf::Dataset expected;
    for (const auto& [uri, r] : replayed) expected.upsert_graph(uri, r.to_graph());

    sync::DatasetWriter store;
    for (auto& e : chain->make_endpoints()) sync::TrsClient(*e, store, nullptr, no_sleep()).initial_sync();
    sync_ok += store.dataset() == expected;
  }
  return {replay_ok == kHistories && sync_ok == kHistories,
          fmt("base+replay equals live fold in %d/%d histories (%d rebases); initial sync equals genesis replay "
              "in %d/%d",
              replay_ok, kHistories, rebases, sync_ok, kHistories)};
}

// --- 3 ---------------------------------------------------------------------

std::set<std::string> local_ids(const sparql::BindingTable& t) {
  std::set<std::string> out;
  for (const auto& row : t.rows) {
    const auto v = std::get<rdf::Iri>(row.at(t.columns.front())).str();
    out.insert(v.substr(v.rfind('/') + 1));
  }
  return out;
}

Outcome query_oracle() {
  constexpr int kQueries = 500;
  std::mt19937_64 rng(3003);
  int matched = 0;
  int non_empty = 0;
  for (int round = 0; round < kQueries; ++round) {
    testing::QueryGen gen{rng, 4};
    const rdf::Graph g = testing::random_data(gen, 50);
    const auto q = gen.query();
    const auto parsed = sparql::parse_query(testing::render(q));
    const auto got = sparql::evaluate(parsed, rdf::TripleIndex(g));
    const auto cols = q.select_all ? sparql::variables_of(q.where, true) : q.select;
    const auto want = testing::project(testing::SparqlOracle(g).group(q.where, {}), cols, q.distinct);
    const bool same = got.columns == cols && testing::project(got.rows, cols, q.distinct) == want &&
                      (q.distinct || got.rows.size() == want.size());
    matched += same;
    non_empty += !want.empty();
  }

  auto chain = sim::Toolchain::local();
  const auto truth = sim::seed_fixture(sim::canonical_fixture(), *chain, 1);
  const auto live = chain->live_dataset();
  const auto cr1 = chain->changes().resource_uri("CR1");
  const auto r1 = chain->requirements().resource_uri("R1");
  auto ids = [](const std::set<rdf::Iri>& iris) {
    std::set<std::string> out;
    for (const auto& i : iris) out.insert(i.str().substr(i.str().rfind('/') + 1));
    return out;
  };
  const std::set<std::string> want1{"B3", "B4"}, want2{"CR2", "CR3"}, want3{"B3", "B4", "R3", "R5"};
  const auto got1 = local_ids(sparql::evaluate(sparql::parse_query(queries::lcq1()), live));
  const auto got2 = local_ids(sparql::evaluate(sparql::parse_query(queries::lcq2(cr1, r1)), live));
  const auto got3 = local_ids(sparql::evaluate(sparql::parse_query(queries::lcq3()), live));
  const bool oracles_agree = ids(testing::oracle_lcq1(truth)) == want1 &&
                             ids(testing::oracle_lcq2(truth, cr1, r1)) == want2 &&
                             ids(testing::oracle_lcq3(truth)) == want3;
  const bool lcqs = got1 == want1 && got2 == want2 && got3 == want3 && oracles_agree;
  return {matched == kQueries && lcqs,
          fmt("%d/%d random queries equal the exhaustive oracle (%d non-empty); canonical LCQ1/2/3 %s", matched,
              kQueries, non_empty, lcqs ? "= {B3,B4} / {CR2,CR3} / {B3,B4,R3,R5}" : "WRONG")};
}

// --- 4-7: end-to-end runs --------------------------------------------------

bench::BenchOptions e2e(std::size_t steps, double rate, trs::Millis poll_ms) {
  bench::BenchOptions o;
  o.fixture = sim::canonical_fixture();
  o.workload.seed = 4242;
  o.workload.steps = steps;
  o.workload.rate_ops_per_s = rate;
  o.poll_period_ms = poll_ms;
  o.query_repetitions = 1;
  o.http = true;
  o.settle_timeout_ms = 60000;
  return o;
}

Outcome convergence() {
  testing::MiniBroker broker;
  std::string detail;
  bool pass = true;
  auto run = [&](const char* label, bench::BenchOptions o) {
    const auto report = bench::run_bench(o);
    const auto& m = report.modes.at(0);
    pass = pass && m.converged;
    detail += fmt("%s %s", label, m.converged ? "equal" : "DIFFERENT");
    if (o.push_gaps) {
      const bool gaps_ok = m.mqtt_dropped == 100 && m.gaps_detected >= 1;
      pass = pass && gaps_ok;
      detail += fmt(" (dropped %llu of 500, want 100; gaps detected %llu)",
                    static_cast<unsigned long long>(m.mqtt_dropped), static_cast<unsigned long long>(m.gaps_detected));
    }
    detail += "; ";
  };
  auto o = e2e(500, 250, 100);
  o.modes = {bench::BenchMode::Poll};
  run("poll", o);
  o.modes = {bench::BenchMode::Push};
  o.broker_url = broker.url();
  run("push", o);
  o.push_gaps = bench::GapWindow{0.3, 0.5};
  run("push-with-gaps", o);
  detail.resize(detail.size() - 2);
  return {pass, "canonical fixture + 500 ops over HTTP/MQTT, dataset vs live union: " + detail};
}

Outcome staleness() {
  testing::MiniBroker broker;
  auto o = e2e(300, 5, 5000);  // 60 s at 5 ops/s
  o.modes = {bench::BenchMode::Poll, bench::BenchMode::Push};
  o.broker_url = broker.url();
  const auto report = bench::run_bench(o);
  const auto& poll = report.modes.at(0);
  const auto& push = report.modes.at(1);
  const bool pass = report.ok() && push.staleness_p50_ms < 500 && poll.staleness_p50_ms >= 1000 &&
                    poll.staleness_p50_ms <= 5000 && push.staleness_p50_ms < poll.staleness_p50_ms;
  return {pass, fmt("push p50 %.1f ms (want < 500), poll p50 %.1f ms (want in [1000, 5000]), p95 %.1f / %.1f ms, "
                    "%zu / %zu samples, %.0f s runs",
                    push.staleness_p50_ms, poll.staleness_p50_ms, push.staleness_p95_ms, poll.staleness_p95_ms,
                    push.staleness_samples, poll.staleness_samples, push.run_seconds) +
                    (report.ok() ? "" : "; NOT CONVERGED: " + poll.convergence_detail + " / " +
                                            push.convergence_detail +
                                            (report.results_agree ? "" : " / results differ"))};
}

Outcome load_bound() {
  testing::MiniBroker broker;
  auto o = e2e(500, 0, 5000);
  o.modes = {bench::BenchMode::Push};
  o.broker_url = broker.url();
  const auto changed = bench::run_bench(o);
  const auto& push = changed.modes.at(0);
  const auto bound = push.initial_base_size + push.upsert_events;

  // repeated queries over unchanged data
  o.workload.steps = 0;
  o.modes = {bench::BenchMode::Direct, bench::BenchMode::Push};
  o.query_repetitions = 10;
  const auto idle = bench::run_bench(o);
  const auto& direct = idle.modes.at(0);
  const auto& idle_push = idle.modes.at(1);

  const bool pass = changed.ok() && idle.ok() && push.total_gets <= bound && direct.total_gets > idle_push.total_gets;
  return {pass, fmt("500 ops: push GETs %llu <= base %llu + upsert events %llu = %llu; unchanged data: direct 10x "
                    "LCQs GETs %llu > push %llu",
                    static_cast<unsigned long long>(push.total_gets),
                    static_cast<unsigned long long>(push.initial_base_size),
                    static_cast<unsigned long long>(push.upsert_events), static_cast<unsigned long long>(bound),
                    static_cast<unsigned long long>(direct.total_gets),
                    static_cast<unsigned long long>(idle_push.total_gets))};
}

// Push run over an in-process bus without the final sync, so only message
// delivery can bring the warehouse up to date.
struct PushRun {
  rdf::Dataset dataset;
  rdf::Dataset live;
  std::map<std::string, std::string> results;
  std::uint64_t duplicates = 0;
  bool caught_up = false;
};

PushRun push_run(bool duplicate) {
  auto chain = sim::Toolchain::local();
  auto truth = sim::seed_fixture(sim::canonical_fixture(), *chain, 1);
  bridge::InProcessBus bus(bridge::BusOptions{duplicate});
  warehouse::WarehouseOptions wo;
  wo.mode = warehouse::Mode::Push;
  warehouse::Warehouse wh(wo);
  auto endpoints = chain->make_endpoints();
  auto services = chain->services();
  for (std::size_t i = 0; i < endpoints.size(); ++i) wh.add_server(std::move(endpoints[i]), 60000);
  wh.set_transport(&bus);
  std::vector<std::unique_ptr<bridge::ChangePublisher>> publishers;
  for (auto* s : services) {
    publishers.push_back(std::make_unique<bridge::ChangePublisher>(s->id(), bus));
    auto* p = publishers.back().get();
    s->add_listener([p](const ChangeEvent& e) { p->on_change(e); });
  }
  wh.start();
  sim::WorkloadScript script;
  script.seed = 7007;
  script.steps = 500;
  sim::run_workload(script, *chain, truth);
  for (auto& p : publishers) p->wait_drained();
  bus.wait_idle();

  PushRun r;
  const auto deadline = std::chrono::steady_clock::now() + std::chrono::seconds(30);
  while (!r.caught_up && std::chrono::steady_clock::now() < deadline) {
    r.caught_up = true;
    const auto status = wh.status();
    for (std::size_t i = 0; i < services.size(); ++i) {
      r.caught_up = r.caught_up && status[i].last_applied_order == services[i]->trs().max_order();
    }
    if (!r.caught_up) std::this_thread::sleep_for(std::chrono::milliseconds(10));
  }
  r.dataset = wh.dataset();
  r.live = chain->live_dataset();
  const queries::Lcq2Params params{chain->changes().resource_uri("CR1"), chain->requirements().resource_uri("R1")};
  for (const char* q : {"lcq1", "lcq2", "lcq3"}) r.results[q] = wh.sparql_query(queries::by_name(q, params));
  r.duplicates = wh.subscriber().duplicates_ignored();
  wh.stop();
  return r;
}

Outcome redelivery() {
  const auto once = push_run(false);
  const auto twice = push_run(true);
  const bool local_ok = once.caught_up && twice.caught_up && twice.dataset == once.dataset &&
                        twice.dataset == twice.live && twice.results == once.results && twice.duplicates == 500;

  // same over MQTT, with the broker delivering every PUBLISH twice
  testing::MiniBroker plain;
  testing::MiniBroker doubling(true);
  auto o = e2e(300, 0, 60000);
  o.modes = {bench::BenchMode::Push};
  o.broker_url = plain.url();
  const auto a = bench::run_bench(o);
  o.broker_url = doubling.url();
  const auto b = bench::run_bench(o);
  const auto& ma = a.modes.at(0);
  const auto& mb = b.modes.at(0);
  const bool mqtt_ok = ma.converged && mb.converged && ma.results == mb.results && mb.duplicates_ignored >= 300;
  return {local_ok && mqtt_ok,
          fmt("in-process: dataset %s, LCQ results %s, %llu duplicates ignored (want 500); MQTT: results %s, %llu "
              "duplicates ignored (want >= 300)",
              twice.dataset == once.dataset && twice.dataset == twice.live ? "unchanged" : "CHANGED",
              twice.results == once.results ? "unchanged" : "CHANGED",
              static_cast<unsigned long long>(twice.duplicates), ma.results == mb.results ? "unchanged" : "CHANGED",
              static_cast<unsigned long long>(mb.duplicates_ignored))};
}

// --- 8 ---------------------------------------------------------------------

Outcome wire_goldens() {
  using rdf::Iri;
  using rdf::Literal;
  std::vector<std::string> failed;
  auto check = [&](const char* name, const std::string& produced) {
    if (produced != testing::read_golden(name)) failed.push_back(name);
  };

  const rdf::Graph g{
      {Iri("http://reqs.example.org/resources/R1"), Iri(std::string(rdf::vocab::kRdfType)),
       Iri("http://example.org/toolchain#Requirement")},
      {Iri("http://reqs.example.org/resources/R1"), Iri("http://purl.org/dc/terms/title"),
       Literal("Brake \"pedal\"\\travel\nlimit\t\x01")},
      {Iri("http://reqs.example.org/resources/R1"), Iri("http://example.org/toolchain#refines"),
       Iri("http://reqs.example.org/resources/R4")},
      {Iri("http://reqs.example.org/resources/R1"), Iri("http://example.org/toolchain#priority"),
       Literal("2", Iri(std::string(rdf::vocab::kXsdInteger)))},
      {Iri("http://reqs.example.org/resources/R1"), Iri("http://example.org/toolchain#status"), Literal("APPROVED")},
  };
  check("canonical.nt", rdf::serialize_ntriples(g));

  const std::string host = "http://127.0.0.1:8081";
  check("change_event.json", trs::event_to_json({7, Iri("http://reqs.example.org/resources/R1"),
                                                 ChangeKind::Modification, 1760000000123}));
  check("trs_descriptor.json", trs::descriptor_to_json(trs::TrsDescriptor{3}, host));
  check("trs_base_page.json",
        trs::base_page_to_json({{Iri("http://reqs.example.org/resources/R1"), Iri("http://reqs.example.org/resources/R2")},
                                3,
                                std::nullopt},
                               host));
  check("trs_changelog_page.json",
        trs::changelog_page_to_json(
            {{{5, Iri("http://reqs.example.org/resources/R2"), ChangeKind::Deletion, 1760000000200},
              {4, Iri("http://reqs.example.org/resources/R3"), ChangeKind::Creation, 1760000000150}},
             1},
            host));

  auto chain = sim::Toolchain::local();
  sim::seed_fixture(sim::canonical_fixture(), *chain, 1);
  // the golden uses the example.org hosts of the default local services
  check("lcq1_results.json",
        sparql::to_results_json(sparql::evaluate(sparql::parse_query(queries::lcq1()), chain->live_dataset())));

  std::string names;
  for (const auto& f : failed) names += " " + f;
  return {failed.empty(), failed.empty() ? "6/6 byte-exact: N-Triples, ChangeEvent, TRS descriptor/base/changelog, "
                                           "SPARQL results"
                                         : "mismatch:" + names};
}

}  // namespace

int main(int argc, char** argv) {
  struct Criterion {
    int id;
    const char* name;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria{
      {1, "compaction equivalence", compaction_equivalence},
      {2, "TRS replay/rebase correctness", trs_replay},
      {3, "query engine oracle equivalence", query_oracle},
      {4, "end-to-end convergence", convergence},
      {5, "staleness ordering", staleness},
      {6, "load bound", load_bound},
      {7, "idempotence under redelivery", redelivery},
      {8, "wire conformance", wire_goldens},
  };
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));

  int failed = 0;
  int ran = 0;
  for (const auto& c : criteria) {
    if (!only.empty() && !only.contains(c.id)) continue;
    const auto started = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = c.run();
    } catch (const std::exception& e) {
      out = {false, std::string("threw: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    std::printf("[%s] %d %s: %s (%.1f s)\n", out.pass ? "PASS" : "FAIL", c.id, c.name, out.detail.c_str(), secs);
    std::fflush(stdout);
    ++ran;
    failed += !out.pass;
  }
  std::printf("acceptance: %d/%d criteria passed\n", ran - failed, ran);
  return failed == 0 ? 0 : 1;
}
