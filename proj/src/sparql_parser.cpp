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
#include <cctype>
#include <optional>
#include <set>

#include "lcq/error.hpp"
#include "lcq/sparql.hpp"
#include "text.hpp"

namespace lcq::sparql {

namespace {

enum class Tok { IriRef, PName, Var, String, Integer, Name, LangTag, Punct, End };

struct Token {
  Tok kind;
  std::string text;    // IRI value, variable name, decoded string, keyword, punctuation
  std::string prefix;  // PName only
  std::size_t line;
  std::size_t column;
};

bool is_name_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool is_name_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-';
}

std::string upper(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  return out;
}

class Lexer {
 public:
  explicit Lexer(std::string_view text) : text_(text) {}

  std::vector<Token> run() {
    std::vector<Token> tokens;
    while (true) {
      skip_ws_and_comments();
      if (pos_ >= text_.size()) {
        tokens.push_back({Tok::End, "", "", line_, col_});
        return tokens;
      }
      tokens.push_back(next());
    }
  }

 private:
  [[noreturn]] void fail(const std::string& message, std::size_t line, std::size_t col) const {
    throw ParseError(message, line, col);
  }

  char peek(std::size_t ahead = 0) const {
    return pos_ + ahead < text_.size() ? text_[pos_ + ahead] : '\0';
  }

  void advance(std::size_t n = 1) {
    for (std::size_t i = 0; i < n && pos_ < text_.size(); ++i, ++pos_) {
      if (text_[pos_] == '\n') {
        ++line_;
        col_ = 1;
      } else {
        ++col_;
      }
    }
  }

  void skip_ws_and_comments() {
    while (pos_ < text_.size()) {
      const char c = peek();
      if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
        advance();
      } else if (c == '#') {
        while (pos_ < text_.size() && peek() != '\n') advance();
      } else {
        break;
      }
    }
  }

  Token next() {
    const std::size_t line = line_, col = col_;
    auto make = [&](Tok kind, std::string text, std::string prefix = {}) {
      return Token{kind, std::move(text), std::move(prefix), line, col};
    };
    const char c = peek();

    if (c == '<') {
      if (auto iri = try_iriref()) return make(Tok::IriRef, std::move(*iri));
      if (peek(1) == '=') {
        advance(2);
        return make(Tok::Punct, "<=");
      }
      advance();
      return make(Tok::Punct, "<");
    }
    if ((c == '?' || c == '$') && is_name_char(peek(1))) {
      advance();
      std::string name;
      while (is_name_char(peek())) {
        name += peek();
        advance();
      }
      return make(Tok::Var, std::move(name));
    }
    if (c == '"' || c == '\'') return make(Tok::String, read_string(line, col));
    if (std::isdigit(static_cast<unsigned char>(c))) {
      std::string digits;
      while (std::isdigit(static_cast<unsigned char>(peek()))) {
        digits += peek();
        advance();
      }
      return make(Tok::Integer, std::move(digits));
    }
    if (c == '@' && std::isalpha(static_cast<unsigned char>(peek(1)))) {
      advance();
      std::string tag;
      while (is_name_char(peek())) {
        tag += peek();
        advance();
      }
      return make(Tok::LangTag, std::move(tag));
    }
    if (is_name_start(c) || c == ':') {
      std::string word;
      while (is_name_char(peek())) {
        word += peek();
        advance();
      }
      if (peek() != ':') return make(Tok::Name, std::move(word));
      advance();
      std::string local;
      while (is_name_char(peek()) || (peek() == '.' && is_name_char(peek(1)))) {
        local += peek();
        advance();
      }
      return make(Tok::PName, std::move(local), std::move(word));
    }
    for (std::string_view two : {"^^", "!=", "&&", "||", ">="}) {
      if (text_.substr(pos_, 2) == two) {
        advance(2);
        return make(Tok::Punct, std::string(two));
      }
    }
    if (std::string_view("{}().;,=*!^|/+?>").find(c) != std::string_view::npos) {
      advance();
      return make(Tok::Punct, std::string(1, c));
    }
    fail(std::string("unexpected character '") + c + "'", line, col);
  }

  std::optional<std::string> try_iriref() {
    std::size_t end = pos_ + 1;
    while (end < text_.size() && text_[end] != '>') {
      const auto ch = static_cast<unsigned char>(text_[end]);
      if (ch != '\\' && detail::iri_forbidden(ch)) return std::nullopt;
      ++end;
    }
    if (end >= text_.size()) return std::nullopt;
    std::string value;
    std::string_view raw = text_.substr(pos_ + 1, end - pos_ - 1);
    for (std::size_t i = 0; i < raw.size(); ++i) {
      if (raw[i] != '\\') {
        value += raw[i];
        continue;
      }
      std::size_t width = (i + 1 < raw.size() && raw[i + 1] == 'U') ? 8 : 4;
      std::optional<std::uint32_t> cp;
      if (i + 1 < raw.size() && (raw[i + 1] == 'u' || raw[i + 1] == 'U') && i + 2 + width <= raw.size())
        cp = detail::parse_hex(raw.substr(i + 2, width));
      if (!cp) fail("invalid escape in IRI", line_, col_);
      detail::append_utf8(value, *cp);
      i += 1 + width;
    }
    advance(end - pos_ + 1);
    return value;
  }

  std::string read_string(std::size_t line, std::size_t col) {
    const char quote = peek();
    advance();
    std::string out;
    while (true) {
      if (pos_ >= text_.size() || peek() == '\n') fail("unterminated string literal", line, col);
      const char c = peek();
      if (c == quote) {
        advance();
        return out;
      }
      if (c != '\\') {
        out += c;
        advance();
        continue;
      }
      advance();
      const char e = peek();
      switch (e) {
        case 't': out += '\t'; break;
        case 'b': out += '\b'; break;
        case 'n': out += '\n'; break;
        case 'r': out += '\r'; break;
        case 'f': out += '\f'; break;
        case '"': out += '"'; break;
        case '\'': out += '\''; break;
        case '\\': out += '\\'; break;
        case 'u':
        case 'U': {
          const std::size_t width = e == 'u' ? 4 : 8;
          auto cp = detail::parse_hex(text_.substr(pos_ + 1, width));
          if (!cp || pos_ + 1 + width > text_.size()) fail("invalid unicode escape", line_, col_);
          detail::append_utf8(out, *cp);
          advance(width);
          break;
        }
        default:
          fail("invalid escape sequence", line_, col_);
      }
      advance();
    }
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  std::size_t line_ = 1;
  std::size_t col_ = 1;
};

// Keywords outside the subset, rejected before parsing so the message names
// the construct rather than the first token the grammar trips on.
void reject_unsupported_keywords(const std::vector<Token>& tokens) {
  static const std::set<std::string> kSingle = {
      "OPTIONAL", "SERVICE", "HAVING", "LIMIT",    "OFFSET", "MINUS",  "BIND",
      "VALUES",   "GRAPH",   "BASE",   "CONSTRUCT", "ASK",   "DESCRIBE", "REDUCED",
      "FROM",     "INSERT",  "DELETE", "LOAD",     "CLEAR",  "IN"};
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (tokens[i].kind != Tok::Name) continue;
    const std::string word = upper(tokens[i].text);
    if (word == "ORDER" || word == "GROUP") {
      const bool by = i + 1 < tokens.size() && tokens[i + 1].kind == Tok::Name &&
                      upper(tokens[i + 1].text) == "BY";
      throw UnsupportedConstruct(by ? word + " BY" : word);
    }
    if (kSingle.count(word)) throw UnsupportedConstruct(word);
  }
}

class Parser {
 public:
  explicit Parser(std::vector<Token> tokens) : tokens_(std::move(tokens)) {}

  Query parse() {
    Query q;
    while (is_keyword("PREFIX")) {
      ++pos_;
      const Token& ns = cur();
      if (ns.kind != Tok::PName || !ns.text.empty()) fail("expected prefix name ending in ':'");
      ++pos_;
      if (cur().kind != Tok::IriRef) fail("expected IRI for PREFIX");
      q.prefixes[ns.prefix] = cur().text;
      ++pos_;
    }
    prefixes_ = &q.prefixes;
    if (!is_keyword("SELECT")) fail("expected SELECT");
    ++pos_;
    if (is_keyword("DISTINCT")) {
      q.distinct = true;
      ++pos_;
    }
    if (is_punct("*")) {
      q.select_all = true;
      ++pos_;
    } else {
      while (cur().kind == Tok::Var) {
        q.select.push_back(cur().text);
        ++pos_;
      }
      if (is_punct("(")) throw UnsupportedConstruct("SELECT expressions");
      if (q.select.empty()) fail("expected '*' or variables after SELECT");
    }
    if (is_keyword("WHERE")) ++pos_;
    q.where = parse_group();
    if (cur().kind != Tok::End) fail("unexpected trailing content");

    if (!q.select_all) {
      const auto vars = variables_of(q.where, false);
      for (const auto& v : q.select) {
        if (std::find(vars.begin(), vars.end(), v) == vars.end())
          throw ParseError("selected variable ?" + v + " does not occur in WHERE", 0);
      }
    }
    return q;
  }

 private:
  const Token& cur() const { return tokens_[pos_]; }

  [[noreturn]] void fail(const std::string& message) const {
    throw ParseError(message, cur().line, cur().column);
  }

  bool is_keyword(std::string_view kw) const {
    return cur().kind == Tok::Name && upper(cur().text) == kw;
  }
  bool is_punct(std::string_view p) const { return cur().kind == Tok::Punct && cur().text == p; }

  void expect_punct(std::string_view p) {
    if (!is_punct(p)) fail("expected '" + std::string(p) + "'");
    ++pos_;
  }

  GroupPattern parse_group() {
    expect_punct("{");
    GroupPattern group;
    while (!is_punct("}")) {
      if (cur().kind == Tok::End) fail("unterminated group, expected '}'");
      if (is_punct(".")) {
        ++pos_;
      } else if (is_punct("{")) {
        Union u;
        u.branches.push_back(std::make_shared<const GroupPattern>(parse_group()));
        while (is_keyword("UNION")) {
          ++pos_;
          u.branches.push_back(std::make_shared<const GroupPattern>(parse_group()));
        }
        group.elements.emplace_back(std::move(u));
      } else if (is_keyword("FILTER")) {
        ++pos_;
        group.elements.push_back(parse_filter());
      } else if (is_keyword("UNION")) {
        fail("UNION must follow a braced group");
      } else {
        parse_triples_block(group);
      }
    }
    ++pos_;
    return group;
  }

  Element parse_filter() {
    if (is_keyword("NOT")) return parse_not_exists();
    if (!is_punct("(")) throw UnsupportedConstruct("FILTER expression");
    ++pos_;
    if (is_keyword("NOT")) {
      Element e = parse_not_exists();
      expect_punct(")");
      return e;
    }
    FilterCompare cmp{parse_operand(), CompareOp::Equal, Variable{}};
    if (is_punct("=")) {
      cmp.op = CompareOp::Equal;
    } else if (is_punct("!=")) {
      cmp.op = CompareOp::NotEqual;
    } else {
      throw UnsupportedConstruct("FILTER expression");
    }
    ++pos_;
    cmp.rhs = parse_operand();
    if (!is_punct(")")) throw UnsupportedConstruct("FILTER expression");
    ++pos_;
    return cmp;
  }

  Element parse_not_exists() {
    ++pos_;
    if (!is_keyword("EXISTS")) fail("expected EXISTS after NOT");
    ++pos_;
    return FilterNotExists{std::make_shared<const GroupPattern>(parse_group())};
  }

  PatternTerm parse_operand() {
    if (cur().kind == Tok::Var || cur().kind == Tok::IriRef || cur().kind == Tok::PName ||
        cur().kind == Tok::String || cur().kind == Tok::Integer) {
      return parse_term(/*allow_literal=*/true);
    }
    throw UnsupportedConstruct("FILTER expression");
  }

  void parse_triples_block(GroupPattern& group) {
    PatternTerm subject = parse_term(false);
    while (true) {
      PatternTerm predicate = parse_verb();
      while (true) {
        group.elements.emplace_back(TriplePattern{subject, predicate, parse_term(true)});
        if (!is_punct(",")) break;
        ++pos_;
      }
      if (!is_punct(";")) break;
      ++pos_;
      // trailing ';' before '.' or '}'
      if (is_punct(".") || is_punct("}")) break;
    }
    if (is_punct(".")) {
      ++pos_;
    } else if (!is_punct("}") && !is_punct("{") && !is_keyword("FILTER")) {
      fail("expected '.' after triple pattern");
    }
  }

  PatternTerm parse_verb() {
    if (cur().kind == Tok::Name && cur().text == "a") {
      ++pos_;
      return rdf::Iri(std::string(rdf::vocab::kRdfType));
    }
    if (is_punct("^") || is_punct("(") || is_punct("!")) throw UnsupportedConstruct("property paths");
    PatternTerm verb = parse_term(false);
    if (is_punct("/") || is_punct("|") || is_punct("*") || is_punct("+") || is_punct("?"))
      throw UnsupportedConstruct("property paths");
    return verb;
  }

  rdf::Iri make_iri(const std::string& value) {
    if (!rdf::is_absolute_iri(value)) fail("relative IRI <" + value + "> (BASE is not supported)");
    return rdf::Iri(value);
  }

  rdf::Iri expand(const Token& t) {
    auto it = prefixes_->find(t.prefix);
    if (it == prefixes_->end()) fail("undeclared prefix '" + t.prefix + ":'");
    return make_iri(it->second + t.text);
  }

  PatternTerm parse_term(bool allow_literal) {
    const Token t = cur();
    switch (t.kind) {
      case Tok::Var:
        ++pos_;
        return Variable{t.text};
      case Tok::IriRef:
        ++pos_;
        return make_iri(t.text);
      case Tok::PName:
        ++pos_;
        return expand(t);
      case Tok::String: {
        if (!allow_literal) fail("literal not allowed here");
        ++pos_;
        if (cur().kind == Tok::LangTag) throw UnsupportedConstruct("language tags");
        if (is_punct("^^")) {
          ++pos_;
          const Token dt = cur();
          if (dt.kind == Tok::IriRef) {
            ++pos_;
            return rdf::Literal(t.text, make_iri(dt.text));
          }
          if (dt.kind == Tok::PName) {
            ++pos_;
            return rdf::Literal(t.text, expand(dt));
          }
          fail("expected datatype IRI after '^^'");
        }
        return rdf::Literal(t.text);
      }
      case Tok::Integer:
        if (!allow_literal) fail("literal not allowed here");
        ++pos_;
        return rdf::Literal(t.text, rdf::Iri(std::string(rdf::vocab::kXsdInteger)));
      case Tok::Name:
        if (upper(t.text) == "TRUE" || upper(t.text) == "FALSE")
          throw UnsupportedConstruct("boolean literals");
        fail("unexpected keyword '" + t.text + "'");
      case Tok::End:
        fail("unexpected end of query");
      default:
        fail("unexpected token '" + t.text + "'");
    }
  }

  std::vector<Token> tokens_;
  std::size_t pos_ = 0;
  const std::map<std::string, std::string>* prefixes_ = nullptr;
};

void collect_vars(const PatternTerm& term, std::vector<std::string>& out) {
  if (const auto* v = std::get_if<Variable>(&term)) {
    if (std::find(out.begin(), out.end(), v->name) == out.end()) out.push_back(v->name);
  }
}

void collect_vars(const GroupPattern& group, bool in_scope, std::vector<std::string>& out) {
  for (const auto& element : group.elements) {
    std::visit(
        [&](const auto& e) {
          using T = std::decay_t<decltype(e)>;
          if constexpr (std::is_same_v<T, TriplePattern>) {
            collect_vars(e.subject, out);
            collect_vars(e.predicate, out);
            collect_vars(e.object, out);
          } else if constexpr (std::is_same_v<T, Union>) {
            for (const auto& b : e.branches) collect_vars(*b, in_scope, out);
          } else if constexpr (std::is_same_v<T, FilterNotExists>) {
            if (!in_scope) collect_vars(*e.inner, in_scope, out);
          } else {
            if (!in_scope) {
              collect_vars(e.lhs, out);
              collect_vars(e.rhs, out);
            }
          }
        },
        element);
  }
}

}  // namespace

std::vector<std::string> variables_of(const GroupPattern& group, bool in_scope) {
  std::vector<std::string> out;
  collect_vars(group, in_scope, out);
  return out;
}

bool operator==(const GroupPattern& a, const GroupPattern& b) { return a.elements == b.elements; }

bool operator==(const Union& a, const Union& b) {
  return std::equal(a.branches.begin(), a.branches.end(), b.branches.begin(), b.branches.end(),
                    [](const GroupPtr& x, const GroupPtr& y) { return *x == *y; });
}

bool operator==(const FilterNotExists& a, const FilterNotExists& b) { return *a.inner == *b.inner; }

Query parse_query(std::string_view text) {
  auto tokens = Lexer(text).run();
  reject_unsupported_keywords(tokens);
  return Parser(std::move(tokens)).parse();
}

}  // namespace lcq::sparql
