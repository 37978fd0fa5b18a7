#pragma once

// Parser for the subset of TOML used by run configurations: [table] headers,
// key = value pairs, strings (basic and literal), integers, floats, booleans,
// and arrays of those (may span lines). No inline tables, dotted keys or dates.

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace olap::toml {

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, int line)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

struct Value;
using Array = std::vector<Value>;

struct Value {
  std::variant<bool, std::int64_t, double, std::string, Array> data;
  int line = 0;

  bool is_string() const { return std::holds_alternative<std::string>(data); }
  bool is_number() const {
    return std::holds_alternative<std::int64_t>(data) || std::holds_alternative<double>(data);
  }
  bool is_array() const { return std::holds_alternative<Array>(data); }
};

using Table = std::map<std::string, Value>;
/// Root keys live under the empty table name.
using Document = std::map<std::string, Table>;

Document parse(const std::string& text);

}  // namespace olap::toml
