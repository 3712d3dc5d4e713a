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

#include <map>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "lcq/rdf.hpp"

// SPARQL subset: PREFIX, SELECT [DISTINCT] vars|*, basic graph patterns,
// UNION, FILTER NOT EXISTS and (in)equality filters, evaluated over the
// union-default view of a dataset.
namespace lcq::sparql {

struct Variable {
  std::string name;
  auto operator<=>(const Variable&) const = default;
};

using PatternTerm = std::variant<Variable, rdf::Iri, rdf::Literal>;

struct TriplePattern {
  PatternTerm subject;
  PatternTerm predicate;
  PatternTerm object;
  bool operator==(const TriplePattern&) const = default;
};

struct GroupPattern;
using GroupPtr = std::shared_ptr<const GroupPattern>;

// `{ A } UNION { B } UNION ...`; a lone nested group is a single branch.
struct Union {
  std::vector<GroupPtr> branches;
};

struct FilterNotExists {
  GroupPtr inner;
};

enum class CompareOp { Equal, NotEqual };

struct FilterCompare {
  PatternTerm lhs;
  CompareOp op;
  PatternTerm rhs;
  bool operator==(const FilterCompare&) const = default;
};

using Element = std::variant<TriplePattern, Union, FilterNotExists, FilterCompare>;

struct GroupPattern {
  std::vector<Element> elements;
};

bool operator==(const GroupPattern& a, const GroupPattern& b);
bool operator==(const Union& a, const Union& b);
bool operator==(const FilterNotExists& a, const FilterNotExists& b);

struct Query {
  std::map<std::string, std::string> prefixes;
  bool select_all = false;
  std::vector<std::string> select;
  bool distinct = false;
  GroupPattern where;
};

// Throws ParseError (with line/column) or UnsupportedConstruct.
Query parse_query(std::string_view text);

// Variables in order of first appearance. `in_scope` skips variables that
// only occur under FILTER NOT EXISTS or in filter expressions.
std::vector<std::string> variables_of(const GroupPattern& group, bool in_scope);

using Solution = std::map<std::string, rdf::Term>;

struct BindingTable {
  std::vector<std::string> columns;
  // Sorted by column values (unbound sorts first) so output is deterministic.
  std::vector<Solution> rows;
};

// All extensions of `seed` satisfying every pattern. The result set does not
// depend on pattern order; the join picks the most-bound pattern first.
std::vector<Solution> match_bgp(std::span<const TriplePattern> patterns, const rdf::TripleIndex& data,
                                const Solution& seed);
std::vector<Solution> match_bgp(std::span<const TriplePattern> patterns, const rdf::Graph& data,
                                const Solution& seed);

// Solutions of a group under SPARQL semantics with `seed` substituted into
// every pattern (the NOT EXISTS substitution rule).
std::vector<Solution> evaluate_group(const GroupPattern& group, const rdf::TripleIndex& data,
                                     const Solution& seed);

BindingTable evaluate(const Query& query, const rdf::TripleIndex& data);
BindingTable evaluate(const Query& query, const rdf::Dataset& data);

// SPARQL 1.1 JSON results format.
std::string to_results_json(const BindingTable& table);

}  // namespace lcq::sparql
