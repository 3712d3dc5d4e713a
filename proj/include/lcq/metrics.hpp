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
#include <cstdint>
#include <map>
#include <mutex>
#include <set>
#include <string>
#include <vector>

#include "lcq/trs.hpp"

namespace lcq {

struct StalenessSample {
  trs::Millis event_ts;
  trs::Millis apply_ts;
};

// Nearest-rank percentile, q in [0, 100]. 0 for an empty sample.
double percentile(std::vector<double> values, double q);

struct MetricsSnapshot {
  std::vector<StalenessSample> staleness_samples;
  std::map<std::string, std::uint64_t> http_get_count;  // resource GETs per server
  std::uint64_t mqtt_message_count = 0;
  std::uint64_t mqtt_dropped_count = 0;
  std::uint64_t decode_failures = 0;
  std::set<std::string> dirty_uris;
  std::vector<double> query_latency_ms;

  std::uint64_t total_http_gets() const;
  double staleness_p50() const;
  double staleness_p95() const;
  double query_latency_p50() const;

  // Record plus derived stats as a JSON object.
  std::string to_json() const;
};

// Counters shared by the sync pipelines, the push bridge and the query
// endpoint. All members are safe to call from any thread.
class Metrics {
 public:
  void record_get(const std::string& server_id);
  void record_staleness(trs::Millis event_ts, trs::Millis apply_ts);
  void record_query_latency(double ms);
  void add_mqtt_messages(std::uint64_t n = 1) { mqtt_messages_ += n; }
  void add_mqtt_dropped(std::uint64_t n = 1) { mqtt_dropped_ += n; }
  void add_decode_failure() { ++decode_failures_; }
  void set_dirty(const std::string& server_id, std::set<std::string> uris);

  MetricsSnapshot snapshot() const;

 private:
  mutable std::mutex mutex_;
  std::vector<StalenessSample> staleness_;
  std::map<std::string, std::uint64_t> gets_;
  std::map<std::string, std::set<std::string>> dirty_;
  std::vector<double> query_latency_;
  std::atomic<std::uint64_t> mqtt_messages_{0};
  std::atomic<std::uint64_t> mqtt_dropped_{0};
  std::atomic<std::uint64_t> decode_failures_{0};
};

}  // namespace lcq
