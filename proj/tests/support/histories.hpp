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

// Random resource lifecycles for TRS and compaction tests, plus the
// live-set fold used as their oracle.

#include <random>
#include <set>
#include <vector>

#include "lcq/trs.hpp"
#include "support/generators.hpp"

namespace lcq::testing {

// Valid lifecycle per URI: created when absent, modified or deleted when live.
inline std::vector<trs::ChangeEvent> random_history(std::mt19937_64& rng, std::size_t length, int uris,
                                                    std::uint64_t first_order = 1) {
  std::set<rdf::Iri> live;
  std::vector<trs::ChangeEvent> out;
  std::uniform_int_distribution<int> pick(0, uris - 1);
  std::bernoulli_distribution remove(0.3);
  for (std::size_t i = 0; i < length; ++i) {
    const rdf::Iri uri = ex("res" + std::to_string(pick(rng)));
    trs::ChangeKind kind = trs::ChangeKind::Creation;
    if (live.contains(uri)) kind = remove(rng) ? trs::ChangeKind::Deletion : trs::ChangeKind::Modification;
    if (kind == trs::ChangeKind::Deletion) live.erase(uri);
    else live.insert(uri);
    out.push_back({first_order + i, uri, kind, static_cast<trs::Millis>(1000 + i)});
  }
  return out;
}

inline void fold(std::set<rdf::Iri>& live, const trs::ChangeEvent& e) {
  if (e.kind == trs::ChangeKind::Deletion) live.erase(e.uri);
  else live.insert(e.uri);
}

inline std::set<rdf::Iri> fold_all(const std::vector<trs::ChangeEvent>& events, std::set<rdf::Iri> live = {}) {
  for (const auto& e : events) fold(live, e);
  return live;
}

}  // namespace lcq::testing
