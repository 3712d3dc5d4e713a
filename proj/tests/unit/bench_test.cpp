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

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "lcq/bench.hpp"
#include "lcq/direct.hpp"
#include "lcq/error.hpp"
#include "lcq/queries.hpp"
#include "lcq/toolchain.hpp"
#include "lcq/warehouse.hpp"
#include "support/mini_broker.hpp"
#include "support/oracles.hpp"

namespace lcq {
namespace {

using direct::direct_query;

std::vector<std::string> sorted_strs(const std::set<rdf::Iri>& iris) {
  std::vector<std::string> out;
  for (const auto& i : iris) out.push_back(i.str());
  return out;
}

std::vector<std::string> column(const sparql::BindingTable& t) {
  std::vector<std::string> out;
  for (const auto& row : t.rows) out.push_back(std::get<rdf::Iri>(row.at(t.columns.front())).str());
  return out;
}

struct Crawl {
  explicit Crawl(sim::Toolchain& chain) : endpoints(chain.make_endpoints()) {}
  direct::Services services() { return {*endpoints[0], *endpoints[1], *endpoints[2]}; }
  std::vector<std::unique_ptr<sync::TrsEndpoint>> endpoints;
};

queries::Lcq2Params params(sim::Toolchain& chain, const std::string& cr = "CR1", const std::string& r = "R1") {
  return {chain.changes().resource_uri(cr), chain.requirements().resource_uri(r)};
}

TEST(DirectQueryTest, EnumerationMatchesLiveSetAcrossRebases) {
  sim::ServiceOptions options;
  options.page_size = 7;
  options.rebase_every = 13;
  auto chain = sim::Toolchain::local(options);
  auto truth = sim::seed_fixture(sim::canonical_fixture(), *chain, 1);
  sim::WorkloadScript script;
  script.seed = 17;
  script.steps = 300;
  sim::run_workload(script, *chain, truth);
  Crawl crawl(*chain);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(direct::enumerate_members(*crawl.endpoints[i]), chain->services()[i]->live_uris());
  }
}

TEST(DirectQueryTest, CanonicalFixtureAnswers) {
  auto chain = sim::Toolchain::local();
  sim::seed_fixture(sim::canonical_fixture(), *chain, 1);
  Crawl crawl(*chain);
  const auto& d = chain->design();
  const auto& c = chain->changes();
  const auto& r = chain->requirements();
  EXPECT_EQ(column(direct_query("lcq1", std::nullopt, crawl.services()).table),
            (std::vector<std::string>{d.resource_uri("B3").str(), d.resource_uri("B4").str()}));
  EXPECT_EQ(column(direct_query("lcq2", params(*chain), crawl.services()).table),
            (std::vector<std::string>{c.resource_uri("CR2").str(), c.resource_uri("CR3").str()}));
  EXPECT_EQ(column(direct_query("lcq3", std::nullopt, crawl.services()).table),
            (std::vector<std::string>{d.resource_uri("B3").str(), d.resource_uri("B4").str(),
                                      r.resource_uri("R3").str(), r.resource_uri("R5").str()}));
}

TEST(DirectQueryTest, SameJsonAsWarehouse) {
  auto chain = sim::Toolchain::local();
  sim::seed_fixture(sim::canonical_fixture(), *chain, 1);
  warehouse::Warehouse wh;
  for (auto& e : chain->make_endpoints()) wh.add_server(std::move(e), 1000);
  wh.start();
  Crawl crawl(*chain);
  for (const char* q : {"lcq1", "lcq2", "lcq3"}) {
    EXPECT_EQ(sparql::to_results_json(direct_query(q, params(*chain), crawl.services()).table),
              wh.sparql_query(queries::by_name(q, params(*chain))))
        << q;
  }
}

// Random fixtures and workloads: the crawl plans agree with the ground-truth
// oracles, including dangling links left behind by deletions.
TEST(DirectQueryTest, MatchesOraclesOnRandomToolchains) {
  for (std::uint64_t seed = 1; seed <= 30; ++seed) {
    auto chain = sim::Toolchain::local();
    sim::FixtureSpec spec;
    spec.requirements = 6;
    spec.blocks = 5;
    spec.change_requests = 4;
    spec.random_link_probability = 0.3;
    spec.seed = seed;
    auto truth = sim::seed_fixture(spec, *chain, 1);
    sim::WorkloadScript script;
    script.seed = seed;
    script.steps = 40;
    sim::run_workload(script, *chain, truth);
    Crawl crawl(*chain);
    EXPECT_EQ(column(direct_query("lcq1", std::nullopt, crawl.services()).table),
              sorted_strs(testing::oracle_lcq1(truth)));
    EXPECT_EQ(column(direct_query("lcq3", std::nullopt, crawl.services()).table),
              sorted_strs(testing::oracle_lcq3(truth)));
    for (const auto& cr : {"CR1", "CR2"}) {
      for (const auto& r : {"R1", "R2", "R3"}) {
        const auto p = params(*chain, cr, r);
        EXPECT_EQ(column(direct_query("lcq2", p, crawl.services()).table),
                  sorted_strs(testing::oracle_lcq2(truth, p.change_request, p.requirement)))
            << "seed " << seed << " " << cr << " " << r;
      }
    }
  }
}

TEST(DirectQueryTest, CountsEveryRequest) {
  auto chain = sim::Toolchain::local();
  sim::seed_fixture(sim::canonical_fixture(), *chain, 1);
  Crawl crawl(*chain);
  const auto r3 = direct_query("lcq3", std::nullopt, crawl.services());
  // every live block and requirement is fetched, plus the change requests
  EXPECT_GE(r3.resource_gets, 4u + 5u);
  EXPECT_EQ(r3.resource_gets, 12u);
  // per service: descriptor, one base page, one change log page
  EXPECT_EQ(r3.requests, r3.resource_gets + 9);
}

TEST(DirectQueryTest, EmptyServicesOnlyReadTrsDocuments) {
  auto chain = sim::Toolchain::local();
  Crawl crawl(*chain);
  for (const char* q : {"lcq1", "lcq2", "lcq3"}) {
    const auto r = direct_query(q, params(*chain), crawl.services());
    EXPECT_TRUE(r.table.rows.empty()) << q;
    EXPECT_EQ(r.resource_gets, 0u);
    EXPECT_GT(r.requests, 0u);
    EXPECT_EQ(r.requests % 3, 0u);  // descriptor + base page + change log page per crawled service
  }
}

TEST(DirectQueryTest, Errors) {
  auto chain = sim::Toolchain::local();
  sim::LocalEndpoint reqs(chain->requirements());
  sim::LocalEndpoint design(chain->design());
  sim::LocalEndpoint changes(chain->changes());
  const direct::Services services{reqs, design, changes};
  EXPECT_THROW(direct_query("lcq4", std::nullopt, services), ConfigError);
  EXPECT_THROW(direct_query("lcq2", std::nullopt, services), ConfigError);
  design.set_offline(true);
  try {
    direct_query("lcq1", std::nullopt, services);
    FAIL() << "expected TransportError";
  } catch (const TransportError& e) {
    EXPECT_NE(std::string(e.what()).find("service 'design'"), std::string::npos) << e.what();
  }
}

// --- bench -------------------------------------------------------------------

bench::BenchOptions quick(std::size_t steps = 80) {
  bench::BenchOptions o;
  o.workload.seed = 7;
  o.workload.steps = steps;
  o.poll_period_ms = 30;
  o.settle_timeout_ms = 10000;
  return o;
}

TEST(BenchTest, AllModesConvergeAndAgree) {
  const auto report = bench::run_bench(quick());
  ASSERT_EQ(report.modes.size(), 3u);
  EXPECT_TRUE(report.ok()) << report.to_json();
  EXPECT_TRUE(report.results_agree);
  const auto& direct = report.modes[0];
  const auto& poll = report.modes[1];
  const auto& push = report.modes[2];
  EXPECT_EQ(direct.mode, bench::BenchMode::Direct);
  EXPECT_EQ(direct.results.size(), 3u);
  // push fetches each resource state at most once
  EXPECT_LE(push.total_gets, push.initial_base_size + push.upsert_events);
  // repeated direct queries re-crawl everything
  EXPECT_GT(direct.total_gets, push.total_gets);
  EXPECT_GT(push.mqtt_messages, 0u);
  EXPECT_EQ(poll.mqtt_messages, 0u);
  EXPECT_EQ(push.staleness_samples, 80u);
  EXPECT_GT(poll.staleness_samples, 0u);

  const auto j = nlohmann::json::parse(report.to_json());
  EXPECT_EQ(j.at("ok"), true);
  EXPECT_EQ(j.at("modes").size(), 3u);
  EXPECT_EQ(j.at("modes")[2].at("mode"), "push");
  EXPECT_FALSE(j.at("modes")[0].contains("stalenessP50Ms"));
  EXPECT_EQ(j.at("modes")[1].at("httpGets").size(), 3u);
  const auto table = report.to_table();
  EXPECT_NE(table.find("PASS"), std::string::npos);
  EXPECT_EQ(table.find("FAIL"), std::string::npos);
}

TEST(BenchTest, PushWithGapsStillConverges) {
  auto o = quick(200);
  o.modes = {bench::BenchMode::Push};
  o.push_gaps = bench::GapWindow{0.3, 0.5};
  const auto report = bench::run_bench(o);
  const auto& push = report.modes.at(0);
  EXPECT_TRUE(push.converged) << push.convergence_detail;
  EXPECT_EQ(push.mqtt_dropped, 40u);
  EXPECT_GE(push.gaps_detected, 1u);
  EXPECT_EQ(push.mqtt_messages, 160u);
}

TEST(BenchTest, DuplicateDeliveryIsHarmless) {
  auto o = quick();
  o.modes = {bench::BenchMode::Push};
  const auto once = bench::run_bench(o);
  o.duplicate_delivery = true;
  const auto twice = bench::run_bench(o);
  EXPECT_TRUE(twice.ok());
  EXPECT_EQ(twice.modes[0].results, once.modes[0].results);
  EXPECT_EQ(twice.modes[0].total_gets, once.modes[0].total_gets);
  EXPECT_EQ(twice.modes[0].duplicates_ignored, 80u);
}

TEST(BenchTest, OverHttpAndMqtt) {
  testing::MiniBroker broker;
  auto o = quick(40);
  o.http = true;
  o.broker_url = broker.url();
  const auto report = bench::run_bench(o);
  EXPECT_TRUE(report.ok()) << report.to_json();
}

TEST(BenchTest, ModeNames) {
  EXPECT_EQ(bench::parse_bench_mode("push"), bench::BenchMode::Push);
  EXPECT_EQ(bench::to_string(bench::BenchMode::Direct), "direct");
  EXPECT_THROW(bench::parse_bench_mode("federated"), ConfigError);
}

}  // namespace
}  // namespace lcq
