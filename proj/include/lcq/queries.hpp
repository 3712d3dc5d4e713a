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

#include <optional>
#include <string>
#include <string_view>

#include "lcq/rdf.hpp"

// Canned lifecycle queries over the toolchain vocabulary.
namespace lcq::queries {

// Simulink blocks that satisfy no requirement.
std::string lcq1();

// Change requests tracking a requirement that refines `requirement` or is
// refined by it, other than `change_request` itself.
std::string lcq2(const rdf::Iri& change_request, const rdf::Iri& requirement);

// Blocks and requirements no change request is about: not tracked directly,
// and (for blocks) not satisfying a tracked requirement.
std::string lcq3();

struct Lcq2Params {
  rdf::Iri change_request;
  rdf::Iri requirement;
};

// "lcq1" | "lcq2" | "lcq3". Throws ConfigError for unknown names and for
// lcq2 without parameters.
std::string by_name(std::string_view name, const std::optional<Lcq2Params>& params = std::nullopt);

}  // namespace lcq::queries
