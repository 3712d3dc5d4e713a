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

#include <algorithm>

#include <nlohmann/json.hpp>

#include "lcq/sparql.hpp"

namespace lcq::sparql {

namespace {

const rdf::Term* lookup(const Solution& row, const std::string& name) {
  auto it = row.find(name);
  return it == row.end() ? nullptr : &it->second;
}

// Pattern position resolved against a partial solution: either a concrete
// term or a still-free variable.
struct Slot {
  std::optional<rdf::Term> value;
  const std::string* free_var = nullptr;
};

Slot resolve(const PatternTerm& term, const Solution& row) {
  if (const auto* v = std::get_if<Variable>(&term)) {
    if (const auto* bound = lookup(row, v->name)) return {*bound, nullptr};
    return {std::nullopt, &v->name};
  }
  if (const auto* iri = std::get_if<rdf::Iri>(&term)) return {rdf::Term{*iri}, nullptr};
  return {rdf::Term{std::get<rdf::Literal>(term)}, nullptr};
}

int bound_positions(const TriplePattern& p, const Solution& row) {
  int n = 0;
  for (const auto* t : {&p.subject, &p.predicate, &p.object}) {
    if (resolve(*t, row).value) ++n;
  }
  return n;
}

void extend(std::vector<const TriplePattern*>& remaining, const rdf::TripleIndex& data,
            Solution& row, std::vector<Solution>& out) {
  if (remaining.empty()) {
    out.push_back(row);
    return;
  }
  auto best = std::max_element(remaining.begin(), remaining.end(),
                               [&row](const TriplePattern* a, const TriplePattern* b) {
                                 return bound_positions(*a, row) < bound_positions(*b, row);
                               });
  const TriplePattern* pattern = *best;
  std::swap(*best, remaining.back());
  remaining.pop_back();

  const Slot s = resolve(pattern->subject, row);
  const Slot p = resolve(pattern->predicate, row);
  const Slot o = resolve(pattern->object, row);

  // Subjects and predicates are IRIs; a literal binding there cannot match.
  const rdf::Iri* s_iri = s.value ? std::get_if<rdf::Iri>(&*s.value) : nullptr;
  const rdf::Iri* p_iri = p.value ? std::get_if<rdf::Iri>(&*p.value) : nullptr;
  if ((s.value && !s_iri) || (p.value && !p_iri)) {
    remaining.push_back(pattern);
    std::swap(*best, remaining.back());
    return;
  }

  data.match(s_iri, p_iri, o.value ? &*o.value : nullptr, [&](const rdf::Triple& t) {
    std::vector<std::string> added;
    auto bind = [&](const Slot& slot, const rdf::Term& value) {
      if (!slot.free_var) return true;
      auto [it, inserted] = row.try_emplace(*slot.free_var, value);
      if (inserted) {
        added.push_back(*slot.free_var);
        return true;
      }
      // same variable used twice in one pattern
      return it->second == value;
    };
    if (bind(s, rdf::Term{t.subject}) && bind(p, rdf::Term{t.predicate}) && bind(o, t.object)) {
      extend(remaining, data, row, out);
    }
    for (const auto& name : added) row.erase(name);
  });

  remaining.push_back(pattern);
  std::swap(*best, remaining.back());
}

bool compatible(const Solution& a, const Solution& b) {
  for (const auto& [name, value] : a) {
    if (const auto* other = lookup(b, name); other && !(*other == value)) return false;
  }
  return true;
}

std::vector<Solution> join(const std::vector<Solution>& left, const std::vector<Solution>& right) {
  std::vector<Solution> out;
  for (const auto& l : left) {
    for (const auto& r : right) {
      if (!compatible(l, r)) continue;
      Solution merged = l;
      merged.insert(r.begin(), r.end());
      out.push_back(std::move(merged));
    }
  }
  return out;
}

std::optional<rdf::Term> operand_value(const PatternTerm& term, const Solution& row) {
  return resolve(term, row).value;
}

// Ordering used for deterministic output; unbound sorts before bound.
bool row_less(const Solution& a, const Solution& b, const std::vector<std::string>& columns) {
  for (const auto& c : columns) {
    const auto* x = lookup(a, c);
    const auto* y = lookup(b, c);
    if (!x && !y) continue;
    if (!x) return true;
    if (!y) return false;
    if (*x < *y) return true;
    if (*y < *x) return false;
  }
  return false;
}

nlohmann::ordered_json term_json(const rdf::Term& term) {
  nlohmann::ordered_json j;
  if (const auto* iri = std::get_if<rdf::Iri>(&term)) {
    j["type"] = "uri";
    j["value"] = iri->str();
  } else {
    const auto& lit = std::get<rdf::Literal>(term);
    j["type"] = "literal";
    j["value"] = lit.lexical();
    if (lit.datatype()) j["datatype"] = lit.datatype()->str();
  }
  return j;
}

}  // namespace

std::vector<Solution> match_bgp(std::span<const TriplePattern> patterns, const rdf::TripleIndex& data,
                                const Solution& seed) {
  std::vector<const TriplePattern*> remaining;
  for (const auto& p : patterns) remaining.push_back(&p);
  std::vector<Solution> out;
  Solution row = seed;
  extend(remaining, data, row, out);
  return out;
}

std::vector<Solution> match_bgp(std::span<const TriplePattern> patterns, const rdf::Graph& data,
                                const Solution& seed) {
  return match_bgp(patterns, rdf::TripleIndex(data), seed);
}

std::vector<Solution> evaluate_group(const GroupPattern& group, const rdf::TripleIndex& data,
                                     const Solution& seed) {
  std::vector<TriplePattern> bgp;
  for (const auto& e : group.elements) {
    if (const auto* tp = std::get_if<TriplePattern>(&e)) bgp.push_back(*tp);
  }
  std::vector<Solution> rows = match_bgp(bgp, data, seed);

  for (const auto& e : group.elements) {
    const auto* u = std::get_if<Union>(&e);
    if (!u || rows.empty()) continue;
    std::vector<Solution> alternatives;
    for (const auto& branch : u->branches) {
      auto part = evaluate_group(*branch, data, seed);
      alternatives.insert(alternatives.end(), std::make_move_iterator(part.begin()),
                          std::make_move_iterator(part.end()));
    }
    rows = join(rows, alternatives);
  }

  // Filters scope over the whole group regardless of their position.
  for (const auto& e : group.elements) {
    if (const auto* cmp = std::get_if<FilterCompare>(&e)) {
      std::erase_if(rows, [cmp](const Solution& row) {
        auto lhs = operand_value(cmp->lhs, row);
        auto rhs = operand_value(cmp->rhs, row);
        if (!lhs || !rhs) return true;
        const bool equal = *lhs == *rhs;
        return cmp->op == CompareOp::Equal ? !equal : equal;
      });
    } else if (const auto* fne = std::get_if<FilterNotExists>(&e)) {
      std::erase_if(rows, [&](const Solution& row) {
        return !evaluate_group(*fne->inner, data, row).empty();
      });
    }
  }
  return rows;
}

BindingTable evaluate(const Query& query, const rdf::TripleIndex& data) {
  BindingTable table;
  table.columns = query.select_all ? variables_of(query.where, true) : query.select;
  for (auto& row : evaluate_group(query.where, data, {})) {
    Solution projected;
    for (const auto& c : table.columns) {
      if (const auto* v = lookup(row, c)) projected.emplace(c, *v);
    }
    table.rows.push_back(std::move(projected));
  }
  auto less = [&](const Solution& a, const Solution& b) { return row_less(a, b, table.columns); };
  std::stable_sort(table.rows.begin(), table.rows.end(), less);
  if (query.distinct) {
    table.rows.erase(std::unique(table.rows.begin(), table.rows.end()), table.rows.end());
  }
  return table;
}

BindingTable evaluate(const Query& query, const rdf::Dataset& data) {
  return evaluate(query, data.union_index());
}

std::string to_results_json(const BindingTable& table) {
  nlohmann::ordered_json doc;
  doc["head"]["vars"] = table.columns;
  auto bindings = nlohmann::ordered_json::array();
  for (const auto& row : table.rows) {
    nlohmann::ordered_json b = nlohmann::ordered_json::object();
    for (const auto& c : table.columns) {
      if (const auto* v = lookup(row, c)) b[c] = term_json(*v);
    }
    bindings.push_back(std::move(b));
  }
  doc["results"]["bindings"] = std::move(bindings);
  return doc.dump();
}

}  // namespace lcq::sparql
