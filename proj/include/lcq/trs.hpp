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
#include <deque>
#include <optional>
#include <set>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <vector>

#include "lcq/rdf.hpp"

// Tracked Resource Set server side: paged Base, ordered Change Log, cutoff
// and rebase. Wire documents are JSON.
namespace lcq::trs {

// Milliseconds since the Unix epoch.
using Millis = std::int64_t;

Millis now_ms();

enum class ChangeKind { Creation, Modification, Deletion };

std::string_view to_string(ChangeKind kind);
// Throws DecodeError for anything but the three kind names.
ChangeKind parse_change_kind(std::string_view text);

struct ChangeEvent {
  std::uint64_t order;
  rdf::Iri uri;
  ChangeKind kind;
  Millis ts;

  bool operator==(const ChangeEvent&) const = default;
};

struct TrsDescriptor {
  std::uint64_t cutoff_order = 0;
};

struct BasePage {
  std::vector<rdf::Iri> members;
  std::uint64_t cutoff_order = 0;
  std::optional<std::size_t> next;
};

// Events newest-first.
struct ChangeLogPage {
  std::vector<ChangeEvent> events;
  std::optional<std::size_t> next;
};

inline constexpr std::size_t kDefaultPageSize = 50;

// Single writer, many readers. A reader never observes order k+1 without k.
class TrackedResourceSet {
 public:
  explicit TrackedResourceSet(std::size_t page_size = kDefaultPageSize);

  TrackedResourceSet(const TrackedResourceSet&) = delete;
  TrackedResourceSet& operator=(const TrackedResourceSet&) = delete;

  // Appends the next event (order = previous max + 1) and returns it.
  ChangeEvent record_change(const rdf::Iri& uri, ChangeKind kind, Millis now);

  // Snapshots `live` as the new Base at the current max order. With
  // `truncate`, events at or below the cutoff are dropped from the log.
  void rebase(const std::set<rdf::Iri>& live, Millis now, bool truncate = true);

  TrsDescriptor document() const;
  // Out-of-range pages are empty with no `next`.
  BasePage base_page(std::size_t n) const;
  ChangeLogPage changelog_page(std::size_t n) const;

  std::size_t page_size() const { return page_size_; }
  std::uint64_t cutoff_order() const;
  std::uint64_t max_order() const;
  std::vector<rdf::Iri> base() const;
  // Retained log, oldest first.
  std::vector<ChangeEvent> events() const;

 private:
  mutable std::shared_mutex mutex_;
  std::size_t page_size_;
  std::vector<rdf::Iri> base_;
  std::uint64_t cutoff_order_ = 0;
  Millis rebased_at_ = 0;
  std::deque<ChangeEvent> log_;
  std::uint64_t last_order_ = 0;
};

// Wire format. `base_url` is the serving host, e.g. "http://127.0.0.1:8081";
// page links are `{base_url}/trs/base?page=n` and `{base_url}/trs/changelog?page=n`.
std::string event_to_json(const ChangeEvent& event);
std::string descriptor_to_json(const TrsDescriptor& doc, std::string_view base_url);
std::string base_page_to_json(const BasePage& page, std::string_view base_url);
std::string changelog_page_to_json(const ChangeLogPage& page, std::string_view base_url);

// Inverses; throw DecodeError on malformed documents.
ChangeEvent event_from_json(std::string_view text);
TrsDescriptor descriptor_from_json(std::string_view text);
BasePage base_page_from_json(std::string_view text);
ChangeLogPage changelog_page_from_json(std::string_view text);

}  // namespace lcq::trs
