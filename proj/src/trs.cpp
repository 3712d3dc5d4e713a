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

#include "lcq/trs.hpp"

#include <algorithm>
#include <chrono>
#include <mutex>

#include "json_wire.hpp"

namespace lcq::trs {

Millis now_ms() {
  using namespace std::chrono;
  return duration_cast<milliseconds>(system_clock::now().time_since_epoch()).count();
}

std::string_view to_string(ChangeKind kind) {
  switch (kind) {
    case ChangeKind::Creation: return "Creation";
    case ChangeKind::Modification: return "Modification";
    case ChangeKind::Deletion: return "Deletion";
  }
  return "";
}

ChangeKind parse_change_kind(std::string_view text) {
  if (text == "Creation") return ChangeKind::Creation;
  if (text == "Modification") return ChangeKind::Modification;
  if (text == "Deletion") return ChangeKind::Deletion;
  throw DecodeError("unknown change kind '" + std::string(text) + "'");
}

TrackedResourceSet::TrackedResourceSet(std::size_t page_size) : page_size_(page_size) {
  if (page_size_ == 0) throw ContractViolation("TRS page size must be positive");
}

ChangeEvent TrackedResourceSet::record_change(const rdf::Iri& uri, ChangeKind kind, Millis now) {
  std::unique_lock lock(mutex_);
  ChangeEvent event{++last_order_, uri, kind, now};
  log_.push_back(event);
  return event;
}

void TrackedResourceSet::rebase(const std::set<rdf::Iri>& live, Millis now, bool truncate) {
  std::unique_lock lock(mutex_);
  base_.assign(live.begin(), live.end());
  cutoff_order_ = last_order_;
  rebased_at_ = now;
  if (truncate) {
    while (!log_.empty() && log_.front().order <= cutoff_order_) log_.pop_front();
  }
}

TrsDescriptor TrackedResourceSet::document() const {
  std::shared_lock lock(mutex_);
  return TrsDescriptor{cutoff_order_};
}

BasePage TrackedResourceSet::base_page(std::size_t n) const {
  std::shared_lock lock(mutex_);
  BasePage page;
  page.cutoff_order = cutoff_order_;
  const std::size_t begin = n * page_size_;
  if (begin >= base_.size()) return page;
  const std::size_t end = std::min(begin + page_size_, base_.size());
  page.members.assign(base_.begin() + static_cast<std::ptrdiff_t>(begin),
                      base_.begin() + static_cast<std::ptrdiff_t>(end));
  if (end < base_.size()) page.next = n + 1;
  return page;
}

ChangeLogPage TrackedResourceSet::changelog_page(std::size_t n) const {
  std::shared_lock lock(mutex_);
  ChangeLogPage page;
  const std::size_t skip = n * page_size_;
  if (skip >= log_.size()) return page;
  const std::size_t count = std::min(page_size_, log_.size() - skip);
  auto newest = log_.rbegin() + static_cast<std::ptrdiff_t>(skip);
  page.events.assign(newest, newest + static_cast<std::ptrdiff_t>(count));
  if (skip + count < log_.size()) page.next = n + 1;
  return page;
}

std::uint64_t TrackedResourceSet::cutoff_order() const {
  std::shared_lock lock(mutex_);
  return cutoff_order_;
}

std::uint64_t TrackedResourceSet::max_order() const {
  std::shared_lock lock(mutex_);
  return last_order_;
}

std::vector<rdf::Iri> TrackedResourceSet::base() const {
  std::shared_lock lock(mutex_);
  return base_;
}

std::vector<ChangeEvent> TrackedResourceSet::events() const {
  std::shared_lock lock(mutex_);
  return {log_.begin(), log_.end()};
}

namespace {

nlohmann::ordered_json page_link(std::string_view base_url, const char* path,
                                 std::optional<std::size_t> page) {
  if (!page) return nullptr;
  return std::string(base_url) + path + "?page=" + std::to_string(*page);
}

std::optional<std::size_t> page_from_link(const nlohmann::json& link) {
  if (link.is_null()) return std::nullopt;
  if (!link.is_string()) throw DecodeError("'next' must be a string or null");
  const auto text = link.get<std::string>();
  const auto at = text.rfind("page=");
  if (at == std::string::npos) throw DecodeError("'next' link lacks a page parameter");
  try {
    return static_cast<std::size_t>(std::stoull(text.substr(at + 5)));
  } catch (const std::exception&) {
    throw DecodeError("'next' link has a malformed page number");
  }
}

const nlohmann::json& require(const nlohmann::json& j, const char* name) {
  if (!j.is_object()) throw DecodeError("TRS document must be a JSON object");
  auto it = j.find(name);
  if (it == j.end()) throw DecodeError(std::string("TRS document lacks '") + name + "'");
  return *it;
}

std::uint64_t require_order(const nlohmann::json& j, const char* name) {
  const auto& v = require(j, name);
  if (!v.is_number_unsigned()) throw DecodeError(std::string("'") + name + "' must be a non-negative integer");
  return v.get<std::uint64_t>();
}

}  // namespace

std::string event_to_json(const ChangeEvent& event) { return detail::event_json(event).dump(); }

std::string descriptor_to_json(const TrsDescriptor& doc, std::string_view base_url) {
  nlohmann::ordered_json j;
  j["base"] = page_link(base_url, "/trs/base", 0);
  j["changeLog"] = page_link(base_url, "/trs/changelog", 0);
  j["cutoffOrder"] = doc.cutoff_order;
  return j.dump();
}

std::string base_page_to_json(const BasePage& page, std::string_view base_url) {
  nlohmann::ordered_json j;
  auto members = nlohmann::ordered_json::array();
  for (const auto& m : page.members) members.push_back(m.str());
  j["base"] = std::move(members);
  j["cutoffOrder"] = page.cutoff_order;
  j["next"] = page_link(base_url, "/trs/base", page.next);
  return j.dump();
}

std::string changelog_page_to_json(const ChangeLogPage& page, std::string_view base_url) {
  nlohmann::ordered_json j;
  auto events = nlohmann::ordered_json::array();
  for (const auto& e : page.events) events.push_back(detail::event_json(e));
  j["changeLog"] = std::move(events);
  j["next"] = page_link(base_url, "/trs/changelog", page.next);
  return j.dump();
}

ChangeEvent event_from_json(std::string_view text) { return detail::event_from(detail::parse_json(text)); }

TrsDescriptor descriptor_from_json(std::string_view text) {
  const auto j = detail::parse_json(text);
  require(j, "base");
  require(j, "changeLog");
  return TrsDescriptor{require_order(j, "cutoffOrder")};
}

BasePage base_page_from_json(std::string_view text) {
  const auto j = detail::parse_json(text);
  BasePage page;
  const auto& members = require(j, "base");
  if (!members.is_array()) throw DecodeError("'base' must be an array");
  for (const auto& m : members) {
    if (!m.is_string()) throw DecodeError("base members must be strings");
    try {
      page.members.emplace_back(m.get<std::string>());
    } catch (const InvalidIri& e) {
      throw DecodeError(e.what());
    }
  }
  page.cutoff_order = require_order(j, "cutoffOrder");
  page.next = page_from_link(require(j, "next"));
  return page;
}

ChangeLogPage changelog_page_from_json(std::string_view text) {
  const auto j = detail::parse_json(text);
  ChangeLogPage page;
  const auto& events = require(j, "changeLog");
  if (!events.is_array()) throw DecodeError("'changeLog' must be an array");
  for (const auto& e : events) page.events.push_back(detail::event_from(e));
  page.next = page_from_link(require(j, "next"));
  return page;
}

}  // namespace lcq::trs
