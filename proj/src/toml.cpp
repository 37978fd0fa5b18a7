#include "olap/toml.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <limits>

namespace olap::toml {

namespace {

class Parser {
 public:
  explicit Parser(const std::string& text) : s_(text) {}

  Document run() {
    Document doc;
    doc[""];  // root table; a "[]" header is rejected by key()
    std::string table;
    while (true) {
      skip_blank_lines();
      if (eof()) break;
      if (peek() == '[') {
        ++pos_;
        skip_inline_space();
        table = key();
        skip_inline_space();
        expect(']');
        if (!doc.emplace(table, Table{}).second) fail("table [" + table + "] defined twice");
      } else {
        const int at = line_;
        const std::string k = key();
        skip_inline_space();
        expect('=');
        skip_inline_space();
        Value v = value();
        v.line = at;
        if (!doc[table].emplace(k, std::move(v)).second) fail("duplicate key '" + k + "'");
      }
      end_of_line();
    }
    return doc;
  }

 private:
  const std::string& s_;
  std::size_t pos_ = 0;
  int line_ = 1;

  bool eof() const { return pos_ >= s_.size(); }
  char peek() const { return eof() ? '\0' : s_[pos_]; }
  [[noreturn]] void fail(const std::string& what) const { throw ParseError(what, line_); }

  void expect(char c) {
    if (peek() != c) fail(std::string("expected '") + c + "'");
    ++pos_;
  }

  void skip_inline_space() {
    while (peek() == ' ' || peek() == '\t') ++pos_;
  }

  void skip_comment() {
    if (peek() == '#')
      while (!eof() && peek() != '\n') ++pos_;
  }

  void newline() {
    if (peek() == '\r') ++pos_;
    expect('\n');
    ++line_;
  }

  void skip_blank_lines() {
    while (!eof()) {
      skip_inline_space();
      skip_comment();
      if (eof()) return;
      if (peek() == '\n' || peek() == '\r') newline();
      else return;
    }
  }

  // Whitespace, comments and newlines inside arrays.
  void skip_array_space() {
    while (!eof()) {
      skip_inline_space();
      skip_comment();
      if (peek() == '\n' || peek() == '\r') newline();
      else return;
    }
  }

  void end_of_line() {
    skip_inline_space();
    skip_comment();
    if (!eof()) newline();
  }

  std::string key() {
    if (peek() == '"') return basic_string();
    if (peek() == '\'') return literal_string();
    const std::size_t start = pos_;
    while (!eof() && (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_' || peek() == '-')) ++pos_;
    if (pos_ == start) fail("expected a key");
    return s_.substr(start, pos_ - start);
  }

  std::string basic_string() {
    expect('"');
    std::string out;
    while (true) {
      if (eof() || peek() == '\n') fail("unterminated string");
      const char c = s_[pos_++];
      if (c == '"') return out;
      if (c != '\\') {
        out += c;
        continue;
      }
      const char e = s_[pos_++];
      switch (e) {
        case '"': out += '"'; break;
        case '\\': out += '\\'; break;
        case 'n': out += '\n'; break;
        case 't': out += '\t'; break;
        case 'r': out += '\r'; break;
        default: fail(std::string("unsupported escape \\") + e);
      }
    }
  }

  std::string literal_string() {
    expect('\'');
    const std::size_t start = pos_;
    while (!eof() && peek() != '\'' && peek() != '\n') ++pos_;
    if (peek() != '\'') fail("unterminated string");
    return s_.substr(start, pos_++ - start);
  }

  Value value() {
    const char c = peek();
    if (c == '"') return {basic_string()};
    if (c == '\'') return {literal_string()};
    if (c == '[') return {array()};
    const std::size_t start = pos_;
    while (!eof() && !std::isspace(static_cast<unsigned char>(peek())) && peek() != ',' && peek() != ']' &&
           peek() != '#')
      ++pos_;
    std::string tok = s_.substr(start, pos_ - start);
    if (tok.empty()) fail("expected a value");
    if (tok == "true") return {true};
    if (tok == "false") return {false};
    if (tok == "inf" || tok == "+inf") return {std::numeric_limits<double>::infinity()};
    if (tok == "-inf") return {-std::numeric_limits<double>::infinity()};
    if (tok == "nan" || tok == "+nan" || tok == "-nan") return {std::numeric_limits<double>::quiet_NaN()};
    std::string digits;
    for (std::size_t i = 0; i < tok.size(); ++i) {
      if (tok[i] != '_') {
        digits += tok[i];
        continue;
      }
      if (i == 0 || i + 1 == tok.size() || !std::isdigit(static_cast<unsigned char>(tok[i - 1])) ||
          !std::isdigit(static_cast<unsigned char>(tok[i + 1])))
        fail("misplaced underscore in '" + tok + "'");
    }
    const char* b = digits.data() + (digits[0] == '+' ? 1 : 0);
    const char* e = digits.data() + digits.size();
    const bool is_float = digits.find_first_of(".eE") != std::string::npos;
    if (!is_float) {
      std::int64_t i = 0;
      const auto r = std::from_chars(b, e, i);
      if (r.ec == std::errc() && r.ptr == e) return {i};
    } else {
      double d = 0.0;
      const auto r = std::from_chars(b, e, d);
      if (r.ec == std::errc() && r.ptr == e && std::isdigit(static_cast<unsigned char>(e[-1]))) return {d};
    }
    fail("invalid value '" + tok + "'");
  }

  Array array() {
    expect('[');
    Array out;
    skip_array_space();
    while (peek() != ']') {
      const int at = line_;
      Value v = value();
      v.line = at;
      out.push_back(std::move(v));
      skip_array_space();
      if (peek() == ',') {
        ++pos_;
        skip_array_space();
      } else if (peek() != ']') {
        fail("expected ',' or ']' in array");
      }
    }
    ++pos_;
    return out;
  }
};

}  // namespace

Document parse(const std::string& text) { return Parser(text).run(); }

}  // namespace olap::toml
