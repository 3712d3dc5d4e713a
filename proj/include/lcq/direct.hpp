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
#include <optional>
#include <set>
#include <string_view>

#include "lcq/endpoint.hpp"
#include "lcq/queries.hpp"
#include "lcq/sparql.hpp"

// Direct query over REST: no warehouse, every query crawls the services with
// a crawl plan written for that query and filters the bodies in memory.
namespace lcq::direct {

struct Services {
  sync::TrsEndpoint& requirements;
  sync::TrsEndpoint& design;
  sync::TrsEndpoint& changes;
};

// Live resources of one service: the TRS base folded with the post-cutoff
// change log.
std::set<rdf::Iri> enumerate_members(sync::TrsEndpoint& endpoint);

struct DirectResult {
  // Same shape as the warehouse's answer to the canned query.
  sparql::BindingTable table;
  // HTTP requests issued: TRS documents plus resource GETs.
  std::uint64_t requests = 0;
  std::uint64_t resource_gets = 0;
};

// "lcq1" | "lcq2" | "lcq3". Unknown names and lcq2 without parameters throw
// ConfigError; an unreachable service throws TransportError naming it.
DirectResult direct_query(std::string_view name, const std::optional<queries::Lcq2Params>& params,
                          const Services& services);

}  // namespace lcq::direct
