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

#include "lcq/ntriples.hpp"

#include <algorithm>
#include <vector>

#include "lcq/error.hpp"
#include "text.hpp"

namespace lcq::rdf {

std::string to_ntriples(const Term& term) {
  if (const auto* iri = std::get_if<Iri>(&term)) return "<" + detail::escape_iri(iri->str()) + ">";
  const auto& lit = std::get<Literal>(term);
  std::string out = "\"" + detail::escape_string(lit.lexical()) + "\"";
  if (lit.datatype()) out += "^^<" + detail::escape_iri(lit.datatype()->str()) + ">";
  return out;
}

std::string to_ntriples(const Triple& triple) {
  return to_ntriples(Term{triple.subject}) + " " + to_ntriples(Term{triple.predicate}) + " " +
         to_ntriples(triple.object) + " .";
}

namespace {

class LineParser {
 public:
  LineParser(std::string_view line, std::size_t line_no) : line_(line), line_no_(line_no) {}

  // nullopt for blank and comment-only lines.
  std::optional<Triple> parse() {
    skip_ws();
    if (at_end() || peek() == '#') return std::nullopt;
    Iri subject = parse_iri_position("subject");
    skip_ws();
    Iri predicate = parse_iri_position("predicate");
    skip_ws();
    Term object = parse_object();
    skip_ws();
    expect('.');
    skip_ws();
    if (!at_end() && peek() != '#') fail("unexpected content after '.'");
    return Triple{std::move(subject), std::move(predicate), std::move(object)};
  }

 private:
  bool at_end() const { return pos_ >= line_.size(); }
  char peek() const { return line_[pos_]; }

  [[noreturn]] void fail(const std::string& message) const {
    throw ParseError(message, line_no_, pos_ + 1);
  }

  void skip_ws() {
    while (!at_end() && (peek() == ' ' || peek() == '\t')) ++pos_;
  }

  void expect(char c) {
    if (at_end() || peek() != c) fail(std::string("expected '") + c + "'");
    ++pos_;
  }

  void reject_blank_node() {
    if (line_.substr(pos_, 2) == "_:") fail("blank nodes unsupported");
  }

  Iri parse_iri_position(const char* role) {
    reject_blank_node();
    if (at_end() || peek() != '<') fail(std::string("expected IRI as ") + role);
    return parse_iriref();
  }

  Term parse_object() {
    reject_blank_node();
    if (at_end()) fail("expected object");
    if (peek() == '<') return parse_iriref();
    if (peek() == '"') return parse_literal();
    fail("expected IRI or literal as object");
  }

  std::uint32_t parse_uchar() {
    // positioned after the backslash
    if (at_end()) fail("dangling escape");
    const char kind = peek();
    std::size_t width = kind == 'u' ? 4 : kind == 'U' ? 8 : 0;
    if (width == 0) fail("invalid escape sequence");
    ++pos_;
    if (pos_ + width > line_.size()) fail("truncated unicode escape");
    auto cp = detail::parse_hex(line_.substr(pos_, width));
    if (!cp) fail("invalid unicode escape");
    pos_ += width;
    return *cp;
  }

  Iri parse_iriref() {
    expect('<');
    std::string value;
    while (true) {
      if (at_end()) fail("unterminated IRI");
      const char c = peek();
      if (c == '>') break;
      if (c == '\\') {
        ++pos_;
        detail::append_utf8(value, parse_uchar());
        continue;
      }
      if (detail::iri_forbidden(static_cast<unsigned char>(c))) fail("invalid character in IRI");
      value += c;
      ++pos_;
    }
    ++pos_;
    if (!is_absolute_iri(value)) fail("relative IRI <" + value + ">");
    return Iri(std::move(value));
  }

  Literal parse_literal() {
    expect('"');
    std::string lexical;
    while (true) {
      if (at_end()) fail("unterminated string literal");
      const char c = peek();
      if (c == '"') break;
      if (c == '\\') {
        ++pos_;
        if (at_end()) fail("dangling escape");
        switch (peek()) {
          case 't': lexical += '\t'; ++pos_; break;
          case 'b': lexical += '\b'; ++pos_; break;
          case 'n': lexical += '\n'; ++pos_; break;
          case 'r': lexical += '\r'; ++pos_; break;
          case 'f': lexical += '\f'; ++pos_; break;
          case '"': lexical += '"'; ++pos_; break;
          case '\'': lexical += '\''; ++pos_; break;
          case '\\': lexical += '\\'; ++pos_; break;
          default: detail::append_utf8(lexical, parse_uchar());
        }
        continue;
      }
      if (c == '\n' || c == '\r') fail("raw line break in string literal");
      lexical += c;
      ++pos_;
    }
    ++pos_;
    if (!at_end() && peek() == '@') fail("language tags unsupported");
    if (line_.substr(pos_, 2) == "^^") {
      pos_ += 2;
      if (at_end() || peek() != '<') fail("expected datatype IRI after '^^'");
      return Literal(std::move(lexical), parse_iriref());
    }
    return Literal(std::move(lexical));
  }

  std::string_view line_;
  std::size_t line_no_;
  std::size_t pos_ = 0;
};

}  // namespace

Graph parse_ntriples(std::string_view text) {
  Graph graph;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start < text.size()) {
    ++line_no;
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (auto triple = LineParser(line, line_no).parse()) graph.insert(std::move(*triple));
    start = end + 1;
  }
  return graph;
}

std::string serialize_ntriples(const Graph& graph) {
  std::vector<std::string> lines;
  lines.reserve(graph.size());
  for (const auto& t : graph) lines.push_back(to_ntriples(t));
  std::sort(lines.begin(), lines.end());
  std::string out;
  for (const auto& line : lines) {
    out += line;
    out += '\n';
  }
  return out;
}

}  // namespace lcq::rdf
