#pragma once

// Declarative key-value documents used for scenario and fixture files.
//
//   # comment
//   name = free_gaussian
//   [model]
//   kind = particle_schrodinger
//   masses = [1.0]
//   potential = harmonic(omega = [1.0])
//
// Values are numbers, bare identifiers, "quoted strings", lists [a, b],
// tuples (a, b) and calls name(arg, key = arg). A value may continue over
// several lines while a bracket is open. Keys are addressed as
// "section.key"; keys before the first section header live at the root.

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pilotwave/types.hpp"

namespace pilotwave {

struct SourcePos {
  int line = 0;
  int column = 0;
};

class ParseError : public Error {
 public:
  ParseError(std::string key, SourcePos pos, const std::string& message);

  const std::string& key() const { return key_; }
  SourcePos position() const { return pos_; }

 private:
  std::string key_;
  SourcePos pos_;
};

struct Value {
  enum class Kind { number, string, identifier, list, tuple, call };

  Kind kind = Kind::number;
  double number = 0.0;
  std::string text;                // string contents, identifier, or call name
  std::vector<Value> items;        // list/tuple elements or call arguments
  std::vector<std::string> names;  // call argument names ("" when positional)
  SourcePos pos;

  bool is_number() const { return kind == Kind::number; }
  bool is_list() const { return kind == Kind::list; }
  bool is_call() const { return kind == Kind::call; }

  /// Named call argument, or the positional one at `index` when not named.
  const Value* argument(std::string_view name, std::size_t index) const;

  std::string to_string() const;
};

/// Parses a single value expression (used for command-line overrides).
Value parse_value(std::string_view text, const std::string& key = "");

class ConfigTree {
 public:
  struct Entry {
    std::string key;  // "section.key"
    Value value;
  };

  static ConfigTree parse(std::string_view text);
  static ConfigTree load(const std::string& path);

  bool has(std::string_view key) const;
  const Value& get(std::string_view key) const;
  const Value* find(std::string_view key) const;

  double number(std::string_view key) const;
  double number_or(std::string_view key, double fallback) const;
  std::string word(std::string_view key) const;  // identifier or string
  std::string word_or(std::string_view key, std::string fallback) const;

  void set(const std::string& key, Value value);
  const std::vector<Entry>& entries() const { return entries_; }
  std::vector<std::string> sections() const;

  /// Canonical text rendering; parsing it back yields the same tree.
  std::string dump() const;

 private:
  std::vector<Entry> entries_;
};

// Conversions that report the offending key on failure.
double as_number(const Value& v, const std::string& key);
long as_integer(const Value& v, const std::string& key);
std::string as_word(const Value& v, const std::string& key);
cplx as_complex(const Value& v, const std::string& key);
std::vector<double> as_numbers(const Value& v, const std::string& key);
std::vector<cplx> as_complexes(const Value& v, const std::string& key);
[[noreturn]] void fail_at(const Value& v, const std::string& key, const std::string& message);

}  // namespace pilotwave
