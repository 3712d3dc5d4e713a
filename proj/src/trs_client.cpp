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

#include "lcq/trs_client.hpp"

#include <algorithm>
#include <thread>

#include "lcq/error.hpp"

namespace lcq::sync {

std::string_view to_string(ActionKind kind) {
  switch (kind) {
    case ActionKind::FetchAndUpsert: return "FetchAndUpsert";
    case ActionKind::DeleteGraph: return "DeleteGraph";
    case ActionKind::Skip: return "Skip";
  }
  return "";
}

std::vector<EffectiveAction> compact(std::span<const trs::ChangeEvent> events) {
  struct Fold {
    trs::ChangeKind first;
    trs::ChangeKind last;
    std::uint64_t max_order;
    trs::Millis ts;
  };
  std::map<rdf::Iri, Fold> folds;
  std::uint64_t previous = 0;
  for (const auto& e : events) {
    if (e.order <= previous)
      throw ContractViolation("compact: event orders must be strictly ascending (" +
                              std::to_string(previous) + " then " + std::to_string(e.order) + ")");
    previous = e.order;
    auto [it, inserted] = folds.try_emplace(e.uri, Fold{e.kind, e.kind, e.order, e.ts});
    if (!inserted) {
      it->second.last = e.kind;
      it->second.max_order = e.order;
      it->second.ts = e.ts;
    }
  }

  std::vector<EffectiveAction> actions;
  actions.reserve(folds.size());
  for (const auto& [uri, f] : folds) {
    ActionKind kind = ActionKind::FetchAndUpsert;
    if (f.last == trs::ChangeKind::Deletion) {
      kind = f.first == trs::ChangeKind::Creation ? ActionKind::Skip : ActionKind::DeleteGraph;
    }
    actions.push_back({uri, kind, f.max_order, f.ts});
  }
  std::sort(actions.begin(), actions.end(),
            [](const EffectiveAction& a, const EffectiveAction& b) { return a.max_order < b.max_order; });
  return actions;
}

void DatasetWriter::commit(const std::string&, std::vector<GraphWrite> writes) {
  for (auto& w : writes) {
    if (w.content) {
      dataset_.upsert_graph(w.graph, std::move(*w.content));
    } else {
      dataset_.delete_graph(w.graph);
    }
  }
}

TrsClient::TrsClient(TrsEndpoint& endpoint, StoreWriter& store, Metrics* metrics, ClientOptions options)
    : endpoint_(endpoint), store_(store), metrics_(metrics), options_(std::move(options)) {
  state_.server_id = endpoint_.server_id();
  if (!options_.clock) options_.clock = trs::now_ms;
  if (!options_.sleep) {
    options_.sleep = [](trs::Millis ms) { std::this_thread::sleep_for(std::chrono::milliseconds(ms)); };
  }
}

template <typename F>
auto TrsClient::with_retry(F&& fetch) -> decltype(fetch()) {
  trs::Millis backoff = options_.retry.initial_backoff_ms;
  const int attempts = std::max(1, options_.retry.attempts);
  for (int attempt = 1;; ++attempt) {
    try {
      return fetch();
    } catch (const TransportError&) {
      if (attempt >= attempts) throw;
    }
    options_.sleep(backoff);
    backoff = std::min(backoff * 2, options_.retry.max_backoff_ms);
  }
}

std::optional<std::optional<rdf::Graph>> TrsClient::try_fetch(const rdf::Iri& uri) {
  try {
    return with_retry([&] {
      if (metrics_) metrics_->record_get(server_id());
      return endpoint_.fetch_resource(uri);
    });
  } catch (const TransportError&) {
    return std::nullopt;
  }
}

std::vector<trs::ChangeEvent> TrsClient::events_after(std::uint64_t after, std::uint64_t cutoff) {
  std::map<std::uint64_t, trs::ChangeEvent> found;
  std::size_t page = 0;
  while (true) {
    auto p = with_retry([&] { return endpoint_.fetch_changelog_page(page); });
    bool reached = false;
    for (auto& e : p.events) {
      if (e.order > after) {
        found.emplace(e.order, std::move(e));
      } else {
        reached = true;
      }
    }
    if (reached || !p.next) break;
    page = *p.next;
  }
  if (found.empty() && cutoff > after) {
    throw LogTruncated(server_id() + ": events " + std::to_string(after + 1) + ".." +
                       std::to_string(cutoff) + " are no longer in the change log");
  }
  std::vector<trs::ChangeEvent> out;
  out.reserve(found.size());
  std::uint64_t expected = after + 1;
  for (auto& [order, e] : found) {
    if (order != expected) {
      throw LogTruncated(server_id() + ": change log is missing order " + std::to_string(expected));
    }
    ++expected;
    out.push_back(std::move(e));
  }
  return out;
}

SyncState TrsClient::initial_sync() {
  constexpr int kSnapshotAttempts = 5;
  for (int attempt = 0; attempt < kSnapshotAttempts; ++attempt) {
    const auto doc = with_retry([&] { return endpoint_.fetch_descriptor(); });
    const std::uint64_t cutoff = doc.cutoff_order;

    std::vector<rdf::Iri> members;
    bool consistent = true;
    for (std::size_t page = 0;;) {
      auto p = with_retry([&] { return endpoint_.fetch_base_page(page); });
      if (p.cutoff_order != cutoff) {
        consistent = false;  // rebased while paging
        break;
      }
      members.insert(members.end(), p.members.begin(), p.members.end());
      if (!p.next) break;
      page = *p.next;
    }
    if (!consistent) continue;

    std::vector<trs::ChangeEvent> events;
    try {
      events = events_after(cutoff, cutoff);
    } catch (const LogTruncated&) {
      continue;
    }
    const auto actions = compact(events);
    std::set<rdf::Iri> touched;
    for (const auto& a : actions) touched.insert(a.uri);

    auto fetch = [&](const rdf::Iri& uri) {
      return with_retry([&] {
        if (metrics_) metrics_->record_get(server_id());
        return endpoint_.fetch_resource(uri);
      });
    };

    std::vector<GraphWrite> writes;
    std::set<rdf::Iri> live;
    for (const auto& m : members) {
      if (touched.count(m)) continue;  // a post-cutoff event supersedes the base entry
      if (auto body = fetch(m)) {
        writes.push_back({m, std::move(*body), std::nullopt});
        live.insert(m);
      }
    }
    for (const auto& a : actions) {
      if (a.action != ActionKind::FetchAndUpsert) continue;
      if (auto body = fetch(a.uri)) {
        writes.push_back({a.uri, std::move(*body), std::nullopt});
        live.insert(a.uri);
      }
    }
    for (const auto& stale : owned_) {
      if (!live.count(stale)) writes.push_back({stale, std::nullopt, std::nullopt});
    }
    dirty_.clear();
    commit(std::move(writes));
    publish_dirty();

    state_.last_applied_order = std::max(state_.last_applied_order,
                                         events.empty() ? cutoff : events.back().order);
    state_.last_applied_order = std::max(state_.last_applied_order, cutoff);
    state_.phase = Phase::Incremental;
    return state_;
  }
  throw TransportError(server_id() + ": could not read a consistent TRS snapshot");
}

std::vector<trs::ChangeEvent> TrsClient::poll_once() {
  if (state_.phase != Phase::Incremental) throw ContractViolation("poll_once before initial_sync");
  const auto doc = with_retry([&] { return endpoint_.fetch_descriptor(); });
  return events_after(state_.last_applied_order, doc.cutoff_order);
}

void TrsClient::apply_actions(std::span<const EffectiveAction> actions) {
  const trs::Millis now = options_.clock();
  std::vector<GraphWrite> writes;
  std::uint64_t max_order = state_.last_applied_order;
  for (const auto& a : actions) {
    max_order = std::max(max_order, a.max_order);
    switch (a.action) {
      case ActionKind::Skip:
        break;
      case ActionKind::DeleteGraph:
        writes.push_back({a.uri, std::nullopt, a.ts});
        dirty_.erase(a.uri);
        break;
      case ActionKind::FetchAndUpsert: {
        auto body = try_fetch(a.uri);
        if (!body) {
          const auto backoff = options_.dirty.initial_backoff_ms;
          dirty_[a.uri] = DirtyEntry{a.max_order, a.ts, now + backoff, backoff};
          break;
        }
        // 404: deleted between the event and the fetch
        writes.push_back({a.uri, std::move(*body), a.ts});
        dirty_.erase(a.uri);
        break;
      }
    }
  }
  commit(std::move(writes));
  state_.last_applied_order = max_order;
  publish_dirty();
}

void TrsClient::apply_events(std::span<const trs::ChangeEvent> events) {
  std::vector<trs::ChangeEvent> fresh;
  for (const auto& e : events) {
    if (e.order > state_.last_applied_order) fresh.push_back(e);
  }
  if (fresh.empty()) return;
  if (fresh.front().order != state_.last_applied_order + 1) {
    throw ContractViolation(server_id() + ": apply_events would skip orders " +
                            std::to_string(state_.last_applied_order + 1) + ".." +
                            std::to_string(fresh.front().order - 1));
  }
  const auto actions = compact(fresh);
  apply_actions(actions);
}

void TrsClient::retry_dirty() {
  if (dirty_.empty()) return;
  const trs::Millis now = options_.clock();
  std::vector<GraphWrite> writes;
  for (auto it = dirty_.begin(); it != dirty_.end();) {
    auto& [uri, entry] = *it;
    if (entry.next_retry > now) {
      ++it;
      continue;
    }
    if (auto body = try_fetch(uri)) {
      writes.push_back({uri, std::move(*body), entry.ts});
      it = dirty_.erase(it);
    } else {
      entry.backoff = std::min(entry.backoff * 2, options_.dirty.max_backoff_ms);
      entry.next_retry = now + entry.backoff;
      ++it;
    }
  }
  commit(std::move(writes));
  publish_dirty();
}

void TrsClient::sync_cycle() {
  std::lock_guard lock(pipeline_);
  if (state_.phase == Phase::Initial) {
    initial_sync();
    return;
  }
  try {
    const auto events = poll_once();
    apply_events(events);
  } catch (const LogTruncated&) {
    initial_sync();
  }
  retry_dirty();
}

void TrsClient::adopt(const std::set<rdf::Iri>& graphs) { owned_.insert(graphs.begin(), graphs.end()); }

void TrsClient::commit(std::vector<GraphWrite> writes) {
  if (writes.empty()) return;
  for (const auto& w : writes) {
    if (w.content) {
      owned_.insert(w.graph);
    } else {
      owned_.erase(w.graph);
    }
  }
  store_.commit(server_id(), std::move(writes));
}

void TrsClient::publish_dirty() {
  if (!metrics_) return;
  std::set<std::string> uris;
  for (const auto& [uri, entry] : dirty_) uris.insert(uri.str());
  metrics_->set_dirty(server_id(), std::move(uris));
}

}  // namespace lcq::sync
