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

#include <compare>
#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <variant>

namespace lcq::rdf {

// Checks for an RFC 3987 scheme (ALPHA *( ALPHA / DIGIT / "+" / "-" / "." ))
// followed by ':'.
bool is_absolute_iri(std::string_view text);

// An absolute IRI. Construction throws InvalidIri for relative references.
class Iri {
 public:
  explicit Iri(std::string value);

  const std::string& str() const { return value_; }

  auto operator<=>(const Iri&) const = default;

 private:
  std::string value_;
};

// Plain or datatyped literal. Language tags are not representable.
// A datatype of xsd:string is normalized to a plain literal, since the two
// denote the same RDF term.
class Literal {
 public:
  explicit Literal(std::string lexical, std::optional<Iri> datatype = std::nullopt);

  const std::string& lexical() const { return lexical_; }
  const std::optional<Iri>& datatype() const { return datatype_; }

  auto operator<=>(const Literal&) const = default;

 private:
  std::string lexical_;
  std::optional<Iri> datatype_;
};

// Data-side RDF term. Query variables live in sparql::PatternTerm, so a
// stored graph cannot contain one.
using Term = std::variant<Iri, Literal>;

struct Triple {
  Iri subject;
  Iri predicate;
  Term object;

  auto operator<=>(const Triple&) const = default;
};

// N-Triples rendering of a single term: `<iri>` or `"lexical"[^^<dt>]`.
std::string to_ntriples(const Term& term);
std::string to_ntriples(const Triple& triple);

namespace vocab {
inline constexpr std::string_view kRdfType = "http://www.w3.org/1999/02/22-rdf-syntax-ns#type";
inline constexpr std::string_view kXsdString = "http://www.w3.org/2001/XMLSchema#string";
inline constexpr std::string_view kXsdInteger = "http://www.w3.org/2001/XMLSchema#integer";
}  // namespace vocab

class Graph {
 public:
  using const_iterator = std::set<Triple>::const_iterator;

  Graph() = default;
  Graph(std::initializer_list<Triple> triples) : triples_(triples) {}

  // Returns false when the triple was already present.
  bool insert(Triple triple) { return triples_.insert(std::move(triple)).second; }
  bool erase(const Triple& triple) { return triples_.erase(triple) > 0; }
  bool contains(const Triple& triple) const { return triples_.count(triple) > 0; }

  std::size_t size() const { return triples_.size(); }
  bool empty() const { return triples_.empty(); }
  const_iterator begin() const { return triples_.begin(); }
  const_iterator end() const { return triples_.end(); }

  bool operator==(const Graph&) const = default;

 private:
  std::set<Triple> triples_;
};

// Reference-counted triple multiset with subject/predicate/object lookup.
// Backs the union-default view of a Dataset and the query evaluator.
class TripleIndex {
 public:
  TripleIndex() = default;
  explicit TripleIndex(const Graph& graph);

  void add(const Triple& triple);
  // Decrements the count; the triple disappears when the count hits zero.
  void remove(const Triple& triple);

  bool contains(const Triple& triple) const { return counts_.count(triple) > 0; }
  std::size_t size() const { return counts_.size(); }

  // Calls `visit(const Triple&)` for every distinct triple matching the bound
  // positions; a null pointer is a wildcard.
  template <typename Visitor>
  void match(const Iri* subject, const Iri* predicate, const Term* object, Visitor&& visit) const;

  Graph to_graph() const;

 private:
  std::map<Triple, std::size_t> counts_;
  std::map<Iri, std::set<Triple>> by_subject_;
  std::map<Iri, std::set<Triple>> by_predicate_;
  std::map<Term, std::set<Triple>> by_object_;
};

// Named graphs keyed by IRI. Each tool resource lives in the graph named by
// its own URI.
class Dataset {
 public:
  // Full replacement of the graph `name`; other graphs are untouched.
  void upsert_graph(const Iri& name, Graph content);
  // No-op when `name` is absent.
  void delete_graph(const Iri& name);

  const Graph* find(const Iri& name) const;
  const std::map<Iri, Graph>& graphs() const { return graphs_; }
  std::size_t graph_count() const { return graphs_.size(); }

  // Union-default view: every triple present in at least one named graph.
  const TripleIndex& union_index() const { return union_; }
  Graph union_graph() const { return union_.to_graph(); }

  bool operator==(const Dataset& other) const { return graphs_ == other.graphs_; }

 private:
  std::map<Iri, Graph> graphs_;
  TripleIndex union_;
};

template <typename Visitor>
void TripleIndex::match(const Iri* subject, const Iri* predicate, const Term* object,
                        Visitor&& visit) const {
  if (subject && predicate && object) {
    Triple probe{*subject, *predicate, *object};
    if (auto it = counts_.find(probe); it != counts_.end()) visit(it->first);
    return;
  }
  const std::set<Triple>* candidates = nullptr;
  auto narrow = [&candidates](const auto& index, const auto* key) {
    if (!key) return true;
    auto it = index.find(*key);
    if (it == index.end()) return false;
    if (!candidates || it->second.size() < candidates->size()) candidates = &it->second;
    return true;
  };
  if (!narrow(by_subject_, subject) || !narrow(by_predicate_, predicate) ||
      !narrow(by_object_, object)) {
    return;
  }
  auto accept = [&](const Triple& t) {
    return (!subject || t.subject == *subject) && (!predicate || t.predicate == *predicate) &&
           (!object || t.object == *object);
  };
  if (candidates) {
    for (const auto& t : *candidates) {
      if (accept(t)) visit(t);
    }
  } else {
    for (const auto& [t, count] : counts_) visit(t);
  }
}

}  // namespace lcq::rdf
