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

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "lcq/toolchain.hpp"

// Runs one seeded workload under each query architecture and reports
// staleness, load, query latency and convergence side by side.
namespace lcq::bench {

enum class BenchMode { Direct, Poll, Push };

std::string_view to_string(BenchMode mode);
BenchMode parse_bench_mode(std::string_view text);  // throws ConfigError

// Fraction of the workload steps during which the push transport is down.
struct GapWindow {
  double from = 0.3;
  double to = 0.5;
};

struct BenchOptions {
  std::vector<BenchMode> modes = {BenchMode::Direct, BenchMode::Poll, BenchMode::Push};
  sim::FixtureSpec fixture = sim::canonical_fixture();
  sim::WorkloadScript workload;
  trs::Millis poll_period_ms = 5000;
  // Times each canned query runs once the system is quiescent.
  std::size_t query_repetitions = 10;
  // Push mode: publishes fail inside this window and are not buffered.
  std::optional<GapWindow> push_gaps;
  // Push mode: every message is delivered twice.
  bool duplicate_delivery = false;
  // Services behind HTTP servers on 127.0.0.1 instead of in-process calls.
  bool http = false;
  // Push over this MQTT broker instead of the in-process bus.
  std::string broker_url;
  trs::Millis settle_timeout_ms = 60000;
  std::function<void(const std::string&)> log;
};

struct ModeReport {
  BenchMode mode;
  std::size_t staleness_samples = 0;
  double staleness_p50_ms = 0;
  double staleness_p95_ms = 0;
  // Resource GETs served per service over the whole run (sync + queries).
  std::map<std::string, std::uint64_t> http_gets;
  std::uint64_t total_gets = 0;
  // Warehouse modes: graphs after the initial sync, and Creation or
  // Modification events recorded after it (the at-most-once fetch bound).
  std::uint64_t initial_base_size = 0;
  std::uint64_t upsert_events = 0;
  std::uint64_t mqtt_messages = 0;
  std::uint64_t mqtt_dropped = 0;
  std::uint64_t gaps_detected = 0;
  std::uint64_t duplicates_ignored = 0;
  std::map<std::string, double> query_latency_p50_ms;        // per LCQ
  std::map<std::string, std::vector<std::string>> results;  // per LCQ, sorted "service/localId"
  bool converged = false;
  std::string convergence_detail;
  double run_seconds = 0;
};

struct BenchReport {
  std::uint64_t seed = 0;
  std::size_t steps = 0;
  double rate_ops_per_s = 0;
  trs::Millis poll_period_ms = 0;
  std::vector<ModeReport> modes;
  // Every mode answered every LCQ identically.
  bool results_agree = true;

  bool ok() const;
  std::string to_json() const;
  std::string to_table() const;
};

BenchReport run_bench(const BenchOptions& options);

}  // namespace lcq::bench
