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

#include "lcq/queries.hpp"

#include "lcq/error.hpp"

namespace lcq::queries {

namespace {

constexpr std::string_view kPrologue =
    "PREFIX rdf: <http://www.w3.org/1999/02/22-rdf-syntax-ns#>\n"
    "PREFIX tc: <http://example.org/toolchain#>\n";

}  // namespace

std::string lcq1() {
  return std::string(kPrologue) +
         "SELECT ?b WHERE {\n"
         "  ?b rdf:type tc:SimulinkBlock .\n"
         "  FILTER NOT EXISTS { ?b tc:satisfies ?r }\n"
         "}\n";
}

std::string lcq2(const rdf::Iri& change_request, const rdf::Iri& requirement) {
  const std::string r = "<" + requirement.str() + ">";
  const std::string cr = "<" + change_request.str() + ">";
  return std::string(kPrologue) +
         "SELECT DISTINCT ?cr WHERE {\n"
         "  { ?rx tc:refines " + r + " . ?cr tc:tracks ?rx }\n"
         "  UNION\n"
         "  { " + r + " tc:refines ?ry . ?cr tc:tracks ?ry }\n"
         "  FILTER(?cr != " + cr + ")\n"
         "}\n";
}

std::string lcq3() {
  return std::string(kPrologue) +
         "SELECT ?m WHERE {\n"
         "  { ?m rdf:type tc:SimulinkBlock } UNION { ?m rdf:type tc:Requirement }\n"
         "  FILTER NOT EXISTS { ?cr tc:tracks ?m }\n"
         "  FILTER NOT EXISTS { ?m tc:satisfies ?r . ?cr2 tc:tracks ?r }\n"
         "}\n";
}

std::string by_name(std::string_view name, const std::optional<Lcq2Params>& params) {
  if (name == "lcq1") return lcq1();
  if (name == "lcq3") return lcq3();
  if (name == "lcq2") {
    if (!params) throw ConfigError("lcq2 needs a change request IRI and a requirement IRI");
    return lcq2(params->change_request, params->requirement);
  }
  throw ConfigError("unknown query '" + std::string(name) + "' (expected lcq1, lcq2 or lcq3)");
}

}  // namespace lcq::queries
