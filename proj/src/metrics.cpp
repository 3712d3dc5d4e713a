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

#include "lcq/metrics.hpp"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

namespace lcq {

double percentile(std::vector<double> values, double q) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  const auto n = static_cast<double>(values.size());
  auto rank = static_cast<std::size_t>(std::ceil(q / 100.0 * n));
  rank = std::clamp<std::size_t>(rank, 1, values.size());
  return values[rank - 1];
}

namespace {

std::vector<double> staleness_ms(const std::vector<StalenessSample>& samples) {
  std::vector<double> out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.push_back(static_cast<double>(s.apply_ts - s.event_ts));
  return out;
}

}  // namespace

std::uint64_t MetricsSnapshot::total_http_gets() const {
  std::uint64_t total = 0;
  for (const auto& [server, n] : http_get_count) total += n;
  return total;
}

double MetricsSnapshot::staleness_p50() const { return percentile(staleness_ms(staleness_samples), 50); }
double MetricsSnapshot::staleness_p95() const { return percentile(staleness_ms(staleness_samples), 95); }
double MetricsSnapshot::query_latency_p50() const { return percentile(query_latency_ms, 50); }

std::string MetricsSnapshot::to_json() const {
  nlohmann::ordered_json j;
  auto samples = nlohmann::ordered_json::array();
  for (const auto& s : staleness_samples) samples.push_back({s.event_ts, s.apply_ts});
  j["staleness_samples"] = std::move(samples);
  j["http_get_count"] = nlohmann::ordered_json(http_get_count);
  j["mqtt_message_count"] = mqtt_message_count;
  j["mqtt_dropped_count"] = mqtt_dropped_count;
  j["decode_failures"] = decode_failures;
  j["dirty_uris"] = dirty_uris;
  j["query_latency_ms"] = query_latency_ms;
  j["derived"] = {{"staleness_p50_ms", staleness_p50()},
                  {"staleness_p95_ms", staleness_p95()},
                  {"query_latency_p50_ms", query_latency_p50()},
                  {"total_http_gets", total_http_gets()}};
  return j.dump();
}

void Metrics::record_get(const std::string& server_id) {
  std::lock_guard lock(mutex_);
  ++gets_[server_id];
}

void Metrics::record_staleness(trs::Millis event_ts, trs::Millis apply_ts) {
  std::lock_guard lock(mutex_);
  staleness_.push_back({event_ts, apply_ts});
}

void Metrics::record_query_latency(double ms) {
  std::lock_guard lock(mutex_);
  query_latency_.push_back(ms);
}

void Metrics::set_dirty(const std::string& server_id, std::set<std::string> uris) {
  std::lock_guard lock(mutex_);
  if (uris.empty()) {
    dirty_.erase(server_id);
  } else {
    dirty_[server_id] = std::move(uris);
  }
}

MetricsSnapshot Metrics::snapshot() const {
  std::lock_guard lock(mutex_);
  MetricsSnapshot s;
  s.staleness_samples = staleness_;
  s.http_get_count = gets_;
  s.mqtt_message_count = mqtt_messages_;
  s.mqtt_dropped_count = mqtt_dropped_;
  s.decode_failures = decode_failures_;
  for (const auto& [server, uris] : dirty_) s.dirty_uris.insert(uris.begin(), uris.end());
  s.query_latency_ms = query_latency_;
  return s;
}

}  // namespace lcq
