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

// Reference implementations used to check the production code. Deliberately
// naive: SPARQL patterns are matched by enumerating every assignment of
// variables to terms of the data, and lifecycle queries are answered straight
// from the ground-truth resource map.

#include <algorithm>
#include <set>
#include <string>
#include <vector>

#include "lcq/rdf.hpp"
#include "lcq/sparql.hpp"
#include "lcq/toolchain.hpp"

namespace lcq::testing {

class SparqlOracle {
 public:
  explicit SparqlOracle(const rdf::Graph& data) : data_(data) {
    for (const auto& t : data) {
      universe_.insert(t.subject);
      universe_.insert(t.predicate);
      universe_.insert(t.object);
    }
  }

  std::vector<sparql::Solution> group(const sparql::GroupPattern& g, const sparql::Solution& seed) const {
    std::vector<sparql::TriplePattern> bgp;
    std::vector<const sparql::Union*> unions;
    std::vector<const sparql::FilterNotExists*> not_exists;
    std::vector<const sparql::FilterCompare*> compares;
    for (const auto& e : g.elements) {
      if (auto* tp = std::get_if<sparql::TriplePattern>(&e)) bgp.push_back(*tp);
      else if (auto* u = std::get_if<sparql::Union>(&e)) unions.push_back(u);
      else if (auto* n = std::get_if<sparql::FilterNotExists>(&e)) not_exists.push_back(n);
      else compares.push_back(&std::get<sparql::FilterCompare>(e));
    }

    std::vector<sparql::Solution> rows = enumerate_bgp(bgp, seed);
    for (const auto* u : unions) {
      std::vector<sparql::Solution> alt;
      for (const auto& branch : u->branches) {
        auto part = group(*branch, seed);
        alt.insert(alt.end(), part.begin(), part.end());
      }
      std::vector<sparql::Solution> joined;
      for (const auto& a : rows) {
        for (const auto& b : alt) {
          if (!compatible(a, b)) continue;
          sparql::Solution m = a;
          m.insert(b.begin(), b.end());
          joined.push_back(std::move(m));
        }
      }
      rows = std::move(joined);
    }
    std::vector<sparql::Solution> out;
    for (const auto& row : rows) {
      bool keep = true;
      for (const auto* c : compares) {
        auto l = value(c->lhs, row);
        auto r = value(c->rhs, row);
        if (!l || !r) keep = false;
        else keep = keep && ((*l == *r) == (c->op == sparql::CompareOp::Equal));
      }
      for (const auto* n : not_exists) keep = keep && group(*n->inner, row).empty();
      if (keep) out.push_back(row);
    }
    return out;
  }

 private:
  static bool compatible(const sparql::Solution& a, const sparql::Solution& b) {
    for (const auto& [k, v] : b) {
      auto it = a.find(k);
      if (it != a.end() && !(it->second == v)) return false;
    }
    return true;
  }

  static std::optional<rdf::Term> value(const sparql::PatternTerm& t, const sparql::Solution& s) {
    if (auto* v = std::get_if<sparql::Variable>(&t)) {
      auto it = s.find(v->name);
      if (it == s.end()) return std::nullopt;
      return it->second;
    }
    if (auto* i = std::get_if<rdf::Iri>(&t)) return rdf::Term{*i};
    return rdf::Term{std::get<rdf::Literal>(t)};
  }

  std::vector<sparql::Solution> enumerate_bgp(const std::vector<sparql::TriplePattern>& bgp,
                                              const sparql::Solution& seed) const {
    std::vector<std::string> free;
    for (const auto& tp : bgp) {
      for (const auto* pt : {&tp.subject, &tp.predicate, &tp.object}) {
        if (auto* v = std::get_if<sparql::Variable>(pt)) {
          if (!seed.contains(v->name) && std::find(free.begin(), free.end(), v->name) == free.end())
            free.push_back(v->name);
        }
      }
    }
    const std::vector<rdf::Term> terms(universe_.begin(), universe_.end());
    std::vector<sparql::Solution> out;
    if (!free.empty() && terms.empty()) return out;
    std::vector<std::size_t> idx(free.size(), 0);
    while (true) {
      sparql::Solution s = seed;
      for (std::size_t i = 0; i < free.size(); ++i) s.insert_or_assign(free[i], terms[idx[i]]);
      if (satisfies(bgp, s)) out.push_back(std::move(s));
      std::size_t i = 0;
      for (; i < idx.size(); ++i) {
        if (++idx[i] < terms.size()) break;
        idx[i] = 0;
      }
      if (i == idx.size()) break;
    }
    return out;
  }

  bool satisfies(const std::vector<sparql::TriplePattern>& bgp, const sparql::Solution& s) const {
    for (const auto& tp : bgp) {
      auto sv = value(tp.subject, s);
      auto pv = value(tp.predicate, s);
      auto ov = value(tp.object, s);
      auto* si = std::get_if<rdf::Iri>(&*sv);
      auto* pi = std::get_if<rdf::Iri>(&*pv);
      if (!si || !pi) return false;
      if (!data_.contains(rdf::Triple{*si, *pi, *ov})) return false;
    }
    return true;
  }

  const rdf::Graph& data_;
  std::set<rdf::Term> universe_;
};

// Lifecycle queries answered directly from the resource map.

inline bool has_link(const sim::ToolResource& r, sim::LinkKind kind, const rdf::Iri& target) {
  for (const auto& l : r.links) {
    if (l.kind == kind && l.target == target) return true;
  }
  return false;
}

inline std::set<rdf::Iri> oracle_lcq1(const sim::GroundTruth& truth) {
  std::set<rdf::Iri> out;
  for (const auto& [uri, r] : truth) {
    if (r.type != sim::ResourceType::SimulinkBlock) continue;
    bool satisfies_any = false;
    for (const auto& l : r.links) satisfies_any |= l.kind == sim::LinkKind::Satisfies;
    if (!satisfies_any) out.insert(uri);
  }
  return out;
}

inline std::set<rdf::Iri> oracle_lcq2(const sim::GroundTruth& truth, const rdf::Iri& cr, const rdf::Iri& req) {
  // requirements one refinement step away from req, in either direction
  std::set<rdf::Iri> neighbours;
  for (const auto& [uri, r] : truth) {
    if (has_link(r, sim::LinkKind::Refines, req)) neighbours.insert(uri);
  }
  if (auto it = truth.find(req); it != truth.end()) {
    for (const auto& l : it->second.links) {
      if (l.kind == sim::LinkKind::Refines) neighbours.insert(l.target);
    }
  }
  std::set<rdf::Iri> out;
  for (const auto& [uri, r] : truth) {
    if (uri == cr) continue;
    for (const auto& n : neighbours) {
      if (has_link(r, sim::LinkKind::Tracks, n)) out.insert(uri);
    }
  }
  return out;
}

inline std::set<rdf::Iri> oracle_lcq3(const sim::GroundTruth& truth) {
  std::set<rdf::Iri> tracked;
  for (const auto& [uri, r] : truth) {
    for (const auto& l : r.links) {
      if (l.kind == sim::LinkKind::Tracks) tracked.insert(l.target);
    }
  }
  std::set<rdf::Iri> out;
  for (const auto& [uri, r] : truth) {
    if (r.type == sim::ResourceType::ChangeRequest || tracked.contains(uri)) continue;
    bool via_requirement = false;
    for (const auto& l : r.links) via_requirement |= l.kind == sim::LinkKind::Satisfies && tracked.contains(l.target);
    if (!via_requirement) out.insert(uri);
  }
  return out;
}

}  // namespace lcq::testing
