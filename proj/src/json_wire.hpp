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

#include <nlohmann/json.hpp>

#include "lcq/error.hpp"
#include "lcq/trs.hpp"

namespace lcq::detail {

inline nlohmann::ordered_json event_json(const trs::ChangeEvent& e) {
  nlohmann::ordered_json j;
  j["order"] = e.order;
  j["uri"] = e.uri.str();
  j["kind"] = std::string(trs::to_string(e.kind));
  j["ts"] = e.ts;
  return j;
}

inline trs::ChangeEvent event_from(const nlohmann::json& j) {
  if (!j.is_object()) throw DecodeError("change event must be a JSON object");
  auto field = [&j](const char* name) -> const nlohmann::json& {
    auto it = j.find(name);
    if (it == j.end()) throw DecodeError(std::string("change event lacks '") + name + "'");
    return *it;
  };
  const auto& order = field("order");
  const auto& uri = field("uri");
  const auto& kind = field("kind");
  const auto& ts = field("ts");
  if (!order.is_number_unsigned() || order.get<std::uint64_t>() == 0)
    throw DecodeError("change event 'order' must be a positive integer");
  if (!uri.is_string()) throw DecodeError("change event 'uri' must be a string");
  if (!kind.is_string()) throw DecodeError("change event 'kind' must be a string");
  if (!ts.is_number_integer()) throw DecodeError("change event 'ts' must be an integer");
  try {
    return trs::ChangeEvent{order.get<std::uint64_t>(), rdf::Iri(uri.get<std::string>()),
                            trs::parse_change_kind(kind.get<std::string>()), ts.get<trs::Millis>()};
  } catch (const InvalidIri& e) {
    throw DecodeError(e.what());
  }
}

inline nlohmann::json parse_json(std::string_view text) {
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw DecodeError(std::string("malformed JSON: ") + e.what());
  }
}

}  // namespace lcq::detail
