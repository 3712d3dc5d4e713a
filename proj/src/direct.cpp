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

#include "lcq/direct.hpp"

#include <functional>
#include <map>

#include "lcq/error.hpp"
#include "lcq/toolchain.hpp"

namespace lcq::direct {

namespace {

namespace tc = sim::tc;

const rdf::Iri& iri(std::string_view text) {
  static thread_local std::map<std::string_view, rdf::Iri> cache;
  auto it = cache.find(text);
  if (it == cache.end()) it = cache.emplace(text, rdf::Iri(std::string(text))).first;
  return it->second;
}

// Objects of `predicate` on `graph`, IRIs only.
std::set<rdf::Iri> objects(const rdf::Graph& graph, std::string_view predicate) {
  std::set<rdf::Iri> out;
  for (const auto& t : graph) {
    if (t.predicate == iri(predicate)) {
      if (const auto* o = std::get_if<rdf::Iri>(&t.object)) out.insert(*o);
    }
  }
  return out;
}

bool has_type(const rdf::Graph& graph, const rdf::Iri& subject, std::string_view type) {
  return graph.contains({subject, iri(rdf::vocab::kRdfType), iri(type)});
}

// Counts requests and names the service in transport failures.
class Crawler {
 public:
  explicit Crawler(const Services& s) : services_(s) {}

  // uri -> body for every live member of the service.
  std::map<rdf::Iri, rdf::Graph> fetch_all(sync::TrsEndpoint& endpoint) {
    std::map<rdf::Iri, rdf::Graph> out;
    guarded(endpoint, [&] {
      for (const auto& uri : enumerate_members(endpoint)) {
        ++gets_;
        if (auto g = endpoint.fetch_resource(uri)) out.emplace(uri, std::move(*g));
      }
    });
    return out;
  }

  std::uint64_t requests() const {
    return services_.requirements.total_requests() + services_.design.total_requests() +
           services_.changes.total_requests() - start_;
  }
  std::uint64_t gets() const { return gets_; }

 private:
  void guarded(sync::TrsEndpoint& endpoint, const std::function<void()>& body) {
    try {
      body();
    } catch (const TransportError& e) {
      throw TransportError("service '" + endpoint.server_id() + "': " + e.what());
    } catch (const DecodeError& e) {
      throw TransportError("service '" + endpoint.server_id() + "': " + e.what());
    }
  }

  const Services& services_;
  std::uint64_t start_ = services_.requirements.total_requests() + services_.design.total_requests() +
                         services_.changes.total_requests();
  std::uint64_t gets_ = 0;
};

sparql::BindingTable table_of(const std::string& var, const std::set<rdf::Iri>& values) {
  sparql::BindingTable t;
  t.columns = {var};
  for (const auto& v : values) t.rows.push_back({{var, v}});
  return t;
}

}  // namespace

std::set<rdf::Iri> enumerate_members(sync::TrsEndpoint& endpoint) {
  const auto doc = endpoint.fetch_descriptor();
  std::set<rdf::Iri> members;
  std::uint64_t cutoff = doc.cutoff_order;
  for (std::optional<std::size_t> page = 0; page;) {
    auto p = endpoint.fetch_base_page(*page);
    cutoff = p.cutoff_order;
    members.insert(p.members.begin(), p.members.end());
    page = p.next;
  }
  std::map<std::uint64_t, trs::ChangeEvent> newer;
  for (std::optional<std::size_t> page = 0; page;) {
    auto p = endpoint.fetch_changelog_page(*page);
    bool reached = false;
    for (auto& e : p.events) {
      if (e.order > cutoff) {
        newer.emplace(e.order, std::move(e));
      } else {
        reached = true;
      }
    }
    page = reached ? std::nullopt : p.next;
  }
  for (const auto& [order, e] : newer) {
    if (e.kind == trs::ChangeKind::Deletion) {
      members.erase(e.uri);
    } else {
      members.insert(e.uri);
    }
  }
  return members;
}

DirectResult direct_query(std::string_view name, const std::optional<queries::Lcq2Params>& params,
                          const Services& services) {
  queries::by_name(name, params);  // validates name and parameters
  Crawler crawl(services);
  DirectResult result;

  if (name == "lcq1") {
    std::set<rdf::Iri> blocks;
    for (const auto& [uri, g] : crawl.fetch_all(services.design)) {
      if (has_type(g, uri, tc::kSimulinkBlock) && objects(g, tc::kSatisfies).empty()) blocks.insert(uri);
    }
    result.table = table_of("b", blocks);
  } else if (name == "lcq2") {
    const auto& r = params->requirement;
    std::set<rdf::Iri> related;
    for (const auto& [uri, g] : crawl.fetch_all(services.requirements)) {
      if (objects(g, tc::kRefines).contains(r)) related.insert(uri);
      if (uri == r) {
        for (const auto& target : objects(g, tc::kRefines)) related.insert(target);
      }
    }
    std::set<rdf::Iri> out;
    if (!related.empty()) {
      for (const auto& [uri, g] : crawl.fetch_all(services.changes)) {
        if (uri == params->change_request) continue;
        for (const auto& target : objects(g, tc::kTracks)) {
          if (related.contains(target)) out.insert(uri);
        }
      }
    }
    result.table = table_of("cr", out);
  } else {
    std::set<rdf::Iri> tracked;
    for (const auto& [uri, g] : crawl.fetch_all(services.changes)) {
      for (const auto& target : objects(g, tc::kTracks)) tracked.insert(target);
    }
    std::set<rdf::Iri> out;
    for (const auto& [uri, g] : crawl.fetch_all(services.requirements)) {
      if (has_type(g, uri, tc::kRequirement) && !tracked.contains(uri)) out.insert(uri);
    }
    for (const auto& [uri, g] : crawl.fetch_all(services.design)) {
      if (!has_type(g, uri, tc::kSimulinkBlock) || tracked.contains(uri)) continue;
      bool about_tracked = false;
      for (const auto& req : objects(g, tc::kSatisfies)) about_tracked = about_tracked || tracked.contains(req);
      if (!about_tracked) out.insert(uri);
    }
    result.table = table_of("m", out);
  }
  result.requests = crawl.requests();
  result.resource_gets = crawl.gets();
  return result;
}

}  // namespace lcq::direct
