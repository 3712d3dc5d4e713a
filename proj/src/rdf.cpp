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

#include "lcq/rdf.hpp"

#include <cctype>

#include "lcq/error.hpp"

namespace lcq::rdf {

bool is_absolute_iri(std::string_view text) {
  if (text.empty() || !std::isalpha(static_cast<unsigned char>(text[0]))) return false;
  for (std::size_t i = 1; i < text.size(); ++i) {
    const auto c = static_cast<unsigned char>(text[i]);
    if (c == ':') return true;
    if (!std::isalnum(c) && c != '+' && c != '-' && c != '.') return false;
  }
  return false;
}

Iri::Iri(std::string value) : value_(std::move(value)) {
  if (!is_absolute_iri(value_)) throw InvalidIri("IRI is not absolute: <" + value_ + ">");
}

Literal::Literal(std::string lexical, std::optional<Iri> datatype)
    : lexical_(std::move(lexical)), datatype_(std::move(datatype)) {
  if (datatype_ && datatype_->str() == vocab::kXsdString) datatype_.reset();
}

TripleIndex::TripleIndex(const Graph& graph) {
  for (const auto& t : graph) add(t);
}

void TripleIndex::add(const Triple& triple) {
  auto [it, inserted] = counts_.try_emplace(triple, 0);
  ++it->second;
  if (!inserted) return;
  by_subject_[triple.subject].insert(triple);
  by_predicate_[triple.predicate].insert(triple);
  by_object_[triple.object].insert(triple);
}

void TripleIndex::remove(const Triple& triple) {
  auto it = counts_.find(triple);
  if (it == counts_.end()) return;
  if (--it->second > 0) return;
  counts_.erase(it);
  auto drop = [&triple](auto& index, const auto& key) {
    auto pos = index.find(key);
    pos->second.erase(triple);
    if (pos->second.empty()) index.erase(pos);
  };
  drop(by_subject_, triple.subject);
  drop(by_predicate_, triple.predicate);
  drop(by_object_, triple.object);
}

Graph TripleIndex::to_graph() const {
  Graph g;
  for (const auto& [t, count] : counts_) g.insert(t);
  return g;
}

void Dataset::upsert_graph(const Iri& name, Graph content) {
  auto it = graphs_.find(name);
  if (it != graphs_.end()) {
    for (const auto& t : it->second) union_.remove(t);
    it->second = std::move(content);
  } else {
    it = graphs_.emplace(name, std::move(content)).first;
  }
  for (const auto& t : it->second) union_.add(t);
}

void Dataset::delete_graph(const Iri& name) {
  auto it = graphs_.find(name);
  if (it == graphs_.end()) return;
  for (const auto& t : it->second) union_.remove(t);
  graphs_.erase(it);
}

const Graph* Dataset::find(const Iri& name) const {
  auto it = graphs_.find(name);
  return it == graphs_.end() ? nullptr : &it->second;
}

}  // namespace lcq::rdf
