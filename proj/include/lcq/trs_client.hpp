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
#include <mutex>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "lcq/endpoint.hpp"
#include "lcq/metrics.hpp"
#include "lcq/rdf.hpp"
#include "lcq/trs.hpp"

// The warehouse side of TRS: initial sync, incremental polling and change
// event compaction.
namespace lcq::sync {

enum class Phase { Initial, Incremental };

struct SyncState {
  std::string server_id;
  std::uint64_t last_applied_order = 0;
  Phase phase = Phase::Initial;
};

enum class ActionKind { FetchAndUpsert, DeleteGraph, Skip };

std::string_view to_string(ActionKind kind);

struct EffectiveAction {
  rdf::Iri uri;
  ActionKind action;
  std::uint64_t max_order;  // largest event order folded into this action
  trs::Millis ts;           // timestamp of that event

  bool operator==(const EffectiveAction&) const = default;
};

// Folds a window of events (ascending order, one server) into one action per
// URI, emitted in ascending max_order:
//   created ... deleted inside the window -> Skip
//   last event Deletion otherwise         -> DeleteGraph
//   last event Creation/Modification      -> FetchAndUpsert
// Throws ContractViolation when orders are not strictly ascending.
std::vector<EffectiveAction> compact(std::span<const trs::ChangeEvent> events);

// One graph replacement (content set) or removal (content empty).
struct GraphWrite {
  rdf::Iri graph;
  std::optional<rdf::Graph> content;
  // Timestamp of the change event behind the write; nullopt for initial sync.
  std::optional<trs::Millis> event_ts;
};

// Receives the pipeline's writes. A commit is applied atomically with respect
// to readers.
class StoreWriter {
 public:
  virtual ~StoreWriter() = default;
  virtual void commit(const std::string& server_id, std::vector<GraphWrite> writes) = 0;
};

// Plain dataset sink for tests and tools.
class DatasetWriter : public StoreWriter {
 public:
  void commit(const std::string& server_id, std::vector<GraphWrite> writes) override;
  const rdf::Dataset& dataset() const { return dataset_; }

 private:
  rdf::Dataset dataset_;
};

struct RetryPolicy {
  int attempts = 3;
  trs::Millis initial_backoff_ms = 50;
  trs::Millis max_backoff_ms = 1000;
};

// Backoff for URIs whose fetch kept failing; retried on later cycles.
struct DirtyPolicy {
  trs::Millis initial_backoff_ms = 1000;
  trs::Millis max_backoff_ms = 60000;
};

struct ClientOptions {
  RetryPolicy retry;
  DirtyPolicy dirty;
  std::function<trs::Millis()> clock = trs::now_ms;
  std::function<void(trs::Millis)> sleep;  // defaults to std::this_thread::sleep_for
};

struct DirtyEntry {
  std::uint64_t max_order;
  trs::Millis ts;
  trs::Millis next_retry;
  trs::Millis backoff;
};

// Sync pipeline for one server. The operations themselves do not lock;
// callers serialize them with `pipeline()` (one ordered pipeline per server).
class TrsClient {
 public:
  TrsClient(TrsEndpoint& endpoint, StoreWriter& store, Metrics* metrics = nullptr,
            ClientOptions options = {});

  const std::string& server_id() const { return endpoint_.server_id(); }
  std::mutex& pipeline() const { return pipeline_; }

  // Fetches the Base and every post-cutoff event, then commits everything in
  // one batch. On failure the store is left unchanged for this server and the
  // error propagates. Re-running it drops graphs that vanished meanwhile.
  SyncState initial_sync();

  // Events with order > last_applied_order, oldest first. Throws LogTruncated
  // when the server no longer has some of them.
  std::vector<trs::ChangeEvent> poll_once();

  // Applies compacted actions; persistent fetch failures mark the URI dirty
  // instead of stalling. Advances last_applied_order to the largest max_order.
  void apply_actions(std::span<const EffectiveAction> actions);

  // Compacts and applies the events newer than last_applied_order.
  void apply_events(std::span<const trs::ChangeEvent> events);

  // Refetches dirty URIs whose backoff expired.
  void retry_dirty();

  // poll_once + apply_events + retry_dirty; falls back to initial_sync after
  // LogTruncated. Locks the pipeline.
  void sync_cycle();

  // Marks graphs loaded from a dump as owned by this server.
  void adopt(const std::set<rdf::Iri>& graphs);

  SyncState state() const { return state_; }
  std::map<rdf::Iri, DirtyEntry> dirty() const { return dirty_; }
  const std::set<rdf::Iri>& owned() const { return owned_; }

 private:
  template <typename F>
  auto with_retry(F&& fetch) -> decltype(fetch());
  std::optional<std::optional<rdf::Graph>> try_fetch(const rdf::Iri& uri);
  std::vector<trs::ChangeEvent> events_after(std::uint64_t after, std::uint64_t cutoff);
  void commit(std::vector<GraphWrite> writes);
  void publish_dirty();

  TrsEndpoint& endpoint_;
  StoreWriter& store_;
  Metrics* metrics_;
  ClientOptions options_;
  SyncState state_;
  std::map<rdf::Iri, DirtyEntry> dirty_;
  std::set<rdf::Iri> owned_;
  mutable std::mutex pipeline_;
};

}  // namespace lcq::sync
