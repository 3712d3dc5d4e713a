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

#include <string>
#include <string_view>

#include "lcq/rdf.hpp"

namespace lcq::rdf {

// Parses the IRI/literal subset of N-Triples. Duplicate lines collapse.
// Throws ParseError (with a 1-based line number) on malformed input, on blank
// nodes and on language-tagged literals.
Graph parse_ntriples(std::string_view text);

// Canonical form: one triple per line, lines sorted bytewise, each line
// terminated by '\n'.
std::string serialize_ntriples(const Graph& graph);

inline constexpr std::string_view kNTriplesMediaType = "application/n-triples";

}  // namespace lcq::rdf
