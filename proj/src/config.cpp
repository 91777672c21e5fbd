#include "pilotwave/config.hpp"

#include <cctype>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>

namespace pilotwave {

ParseError::ParseError(std::string key, SourcePos pos, const std::string& message)
    : Error(fmt::format("{}{}:{}: {}", key.empty() ? std::string() : "'" + key + "' at ", pos.line,
                        pos.column, message)),
      key_(std::move(key)),
      pos_(pos) {}

namespace {

struct Token {
  enum class Kind { number, string, identifier, punct, newline, end };
  Kind kind;
  std::string text;
  double number = 0.0;
  SourcePos pos;
};

class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) {}

  std::vector<Token> run() {
    std::vector<Token> out;
    while (i_ < src_.size()) {
      char c = src_[i_];
      SourcePos pos{line_, col_};
      if (c == '#') {
        while (i_ < src_.size() && src_[i_] != '\n') advance();
      } else if (c == '\n') {
        out.push_back({Token::Kind::newline, "\n", 0.0, pos});
        advance();
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        advance();
      } else if (c == '"') {
        advance();
        std::string s;
        while (i_ < src_.size() && src_[i_] != '"') {
          if (src_[i_] == '\n') throw ParseError("", pos, "unterminated string");
          s.push_back(src_[i_]);
          advance();
        }
        if (i_ >= src_.size()) throw ParseError("", pos, "unterminated string");
        advance();
        out.push_back({Token::Kind::string, s, 0.0, pos});
      } else if (std::isdigit(static_cast<unsigned char>(c)) || c == '.' ||
                 ((c == '-' || c == '+') && i_ + 1 < src_.size() &&
                  (std::isdigit(static_cast<unsigned char>(src_[i_ + 1])) || src_[i_ + 1] == '.'))) {
        const char* begin = src_.data() + i_;
        char* end = nullptr;
        std::string buf(src_.substr(i_, std::min<std::size_t>(64, src_.size() - i_)));
        double v = std::strtod(buf.c_str(), &end);
        std::size_t len = static_cast<std::size_t>(end - buf.c_str());
        if (len == 0) throw ParseError("", pos, "malformed number");
        (void)begin;
        for (std::size_t k = 0; k < len; ++k) advance();
        out.push_back({Token::Kind::number, buf.substr(0, len), v, pos});
      } else if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
        std::string s;
        while (i_ < src_.size() &&
               (std::isalnum(static_cast<unsigned char>(src_[i_])) || src_[i_] == '_' || src_[i_] == '.')) {
          s.push_back(src_[i_]);
          advance();
        }
        out.push_back({Token::Kind::identifier, s, 0.0, pos});
      } else if (std::string_view("[](),=").find(c) != std::string_view::npos) {
        out.push_back({Token::Kind::punct, std::string(1, c), 0.0, pos});
        advance();
      } else {
        throw ParseError("", pos, fmt::format("unexpected character '{}'", c));
      }
    }
    out.push_back({Token::Kind::end, "", 0.0, {line_, col_}});
    return out;
  }

 private:
  void advance() {
    if (src_[i_] == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    ++i_;
  }

  std::string_view src_;
  std::size_t i_ = 0;
  int line_ = 1;
  int col_ = 1;
};

class Parser {
 public:
  Parser(std::vector<Token> tokens, std::string key) : t_(std::move(tokens)), key_(std::move(key)) {}

  const Token& peek() const { return t_[k_]; }
  const Token& next() { return t_[k_++]; }

  bool at_punct(char c) const { return peek().kind == Token::Kind::punct && peek().text[0] == c; }

  void skip_newlines() {
    while (peek().kind == Token::Kind::newline) ++k_;
  }

  void expect(char c) {
    if (!at_punct(c)) throw ParseError(key_, peek().pos, fmt::format("expected '{}'", c));
    ++k_;
  }

  void set_key(std::string key) { key_ = std::move(key); }

  Value value() {
    skip_newlines_in_brackets();
    const Token& tok = next();
    Value v;
    v.pos = tok.pos;
    switch (tok.kind) {
      case Token::Kind::number:
        v.kind = Value::Kind::number;
        v.number = tok.number;
        return v;
      case Token::Kind::string:
        v.kind = Value::Kind::string;
        v.text = tok.text;
        return v;
      case Token::Kind::identifier:
        v.text = tok.text;
        if (at_punct('(')) {
          ++k_;
          v.kind = Value::Kind::call;
          ++depth_;
          arguments(v, ')', true);
          --depth_;
        } else {
          v.kind = Value::Kind::identifier;
        }
        return v;
      case Token::Kind::punct:
        if (tok.text[0] == '[' || tok.text[0] == '(') {
          v.kind = tok.text[0] == '[' ? Value::Kind::list : Value::Kind::tuple;
          ++depth_;
          arguments(v, tok.text[0] == '[' ? ']' : ')', false);
          --depth_;
          return v;
        }
        break;
      default:
        break;
    }
    throw ParseError(key_, tok.pos, tok.kind == Token::Kind::newline || tok.kind == Token::Kind::end
                                        ? "missing value"
                                        : fmt::format("unexpected '{}'", tok.text));
  }

 private:
  void skip_newlines_in_brackets() {
    if (depth_ > 0) skip_newlines();
  }

  void arguments(Value& v, char close, bool named) {
    skip_newlines();
    if (at_punct(close)) {
      ++k_;
      return;
    }
    while (true) {
      skip_newlines();
      std::string name;
      if (named && peek().kind == Token::Kind::identifier && t_[k_ + 1].kind == Token::Kind::punct &&
          t_[k_ + 1].text[0] == '=') {
        name = peek().text;
        k_ += 2;
      }
      v.items.push_back(value());
      v.names.push_back(name);
      skip_newlines();
      if (at_punct(',')) {
        ++k_;
        skip_newlines();
        if (at_punct(close)) {
          ++k_;
          return;
        }
        continue;
      }
      if (at_punct(close)) {
        ++k_;
        return;
      }
      throw ParseError(key_, peek().pos, fmt::format("expected ',' or '{}'", close));
    }
  }

  std::vector<Token> t_;
  std::size_t k_ = 0;
  int depth_ = 0;
  std::string key_;
};

std::string format_number(double x) {
  std::string s = fmt::format("{:.17g}", x);
  // Shortest representation that round-trips.
  for (int prec = 1; prec <= 17; ++prec) {
    std::string c = fmt::format("{:.{}g}", x, prec);
    if (std::strtod(c.c_str(), nullptr) == x) return c;
  }
  return s;
}

}  // namespace

const Value* Value::argument(std::string_view name, std::size_t index) const {
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (names[i] == name) return &items[i];
  }
  // Positional arguments only count until the first named one.
  std::size_t positional = 0;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (!names[i].empty()) break;
    if (positional == index) return &items[i];
    ++positional;
  }
  return nullptr;
}

std::string Value::to_string() const {
  switch (kind) {
    case Kind::number:
      return format_number(number);
    case Kind::string:
      return "\"" + text + "\"";
    case Kind::identifier:
      return text;
    case Kind::list:
    case Kind::tuple:
    case Kind::call: {
      std::string s = kind == Kind::call ? text + "(" : (kind == Kind::list ? "[" : "(");
      for (std::size_t i = 0; i < items.size(); ++i) {
        if (i) s += ", ";
        if (kind == Kind::call && !names[i].empty()) s += names[i] + " = ";
        s += items[i].to_string();
      }
      s += kind == Kind::list ? "]" : ")";
      return s;
    }
  }
  return {};
}

Value parse_value(std::string_view text, const std::string& key) {
  Parser p(Lexer(text).run(), key);
  Value v = p.value();
  p.skip_newlines();
  if (p.peek().kind != Token::Kind::end) throw ParseError(key, p.peek().pos, "trailing characters after value");
  return v;
}

ConfigTree ConfigTree::parse(std::string_view text) {
  ConfigTree tree;
  Parser p(Lexer(text).run(), "");
  std::string section;
  std::set<std::string> seen;
  while (true) {
    p.skip_newlines();
    const Token& tok = p.peek();
    if (tok.kind == Token::Kind::end) break;
    if (tok.kind == Token::Kind::punct && tok.text[0] == '[') {
      p.next();
      const Token& name = p.next();
      if (name.kind != Token::Kind::identifier) throw ParseError("", name.pos, "expected section name");
      section = name.text;
      p.expect(']');
    } else if (tok.kind == Token::Kind::identifier) {
      const Token& key_tok = p.next();
      std::string key = section.empty() ? key_tok.text : section + "." + key_tok.text;
      p.set_key(key);
      p.expect('=');
      Value v = p.value();
      if (!seen.insert(key).second) throw ParseError(key, key_tok.pos, "duplicate key");
      tree.entries_.push_back({key, std::move(v)});
    } else {
      throw ParseError("", tok.pos, fmt::format("expected key or [section], found '{}'", tok.text));
    }
    const Token& end = p.peek();
    if (end.kind != Token::Kind::newline && end.kind != Token::Kind::end) {
      throw ParseError(tree.entries_.empty() ? "" : tree.entries_.back().key, end.pos,
                       fmt::format("unexpected '{}' after value", end.text));
    }
    p.set_key("");
  }
  return tree;
}

ConfigTree ConfigTree::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

bool ConfigTree::has(std::string_view key) const { return find(key) != nullptr; }

const Value* ConfigTree::find(std::string_view key) const {
  for (const auto& e : entries_) {
    if (e.key == key) return &e.value;
  }
  return nullptr;
}

const Value& ConfigTree::get(std::string_view key) const {
  if (const Value* v = find(key)) return *v;
  throw ParseError(std::string(key), {}, "missing required key");
}

double ConfigTree::number(std::string_view key) const { return as_number(get(key), std::string(key)); }

double ConfigTree::number_or(std::string_view key, double fallback) const {
  const Value* v = find(key);
  return v ? as_number(*v, std::string(key)) : fallback;
}

std::string ConfigTree::word(std::string_view key) const { return as_word(get(key), std::string(key)); }

std::string ConfigTree::word_or(std::string_view key, std::string fallback) const {
  const Value* v = find(key);
  return v ? as_word(*v, std::string(key)) : fallback;
}

void ConfigTree::set(const std::string& key, Value value) {
  for (auto& e : entries_) {
    if (e.key == key) {
      e.value = std::move(value);
      return;
    }
  }
  entries_.push_back({key, std::move(value)});
}

std::vector<std::string> ConfigTree::sections() const {
  std::vector<std::string> out;
  for (const auto& e : entries_) {
    auto dot = e.key.rfind('.');
    std::string s = dot == std::string::npos ? "" : e.key.substr(0, dot);
    if (std::find(out.begin(), out.end(), s) == out.end()) out.push_back(s);
  }
  return out;
}

std::string ConfigTree::dump() const {
  std::string out;
  for (const auto& section : sections()) {
    if (!section.empty()) out += "\n[" + section + "]\n";
    for (const auto& e : entries_) {
      auto dot = e.key.rfind('.');
      std::string s = dot == std::string::npos ? "" : e.key.substr(0, dot);
      if (s != section) continue;
      out += (dot == std::string::npos ? e.key : e.key.substr(dot + 1)) + " = " + e.value.to_string() + "\n";
    }
  }
  return out;
}

void fail_at(const Value& v, const std::string& key, const std::string& message) {
  throw ParseError(key, v.pos, message);
}

double as_number(const Value& v, const std::string& key) {
  if (v.kind == Value::Kind::number) return v.number;
  if (v.kind == Value::Kind::identifier && v.text == "pi") return kPi;
  if (v.kind == Value::Kind::call && v.items.size() == 1) {
    double x = as_number(v.items[0], key);
    if (v.text == "sqrt") return std::sqrt(x);
    if (v.text == "neg") return -x;
  }
  if (v.kind == Value::Kind::call && v.items.size() == 2) {
    double a = as_number(v.items[0], key);
    double b = as_number(v.items[1], key);
    if (v.text == "mul") return a * b;
    if (v.text == "div") return a / b;
  }
  fail_at(v, key, "expected a number, found '" + v.to_string() + "'");
}

long as_integer(const Value& v, const std::string& key) {
  double x = as_number(v, key);
  if (std::floor(x) != x || std::abs(x) > 1e15) fail_at(v, key, "expected an integer");
  return static_cast<long>(x);
}

std::string as_word(const Value& v, const std::string& key) {
  if (v.kind == Value::Kind::identifier || v.kind == Value::Kind::string) return v.text;
  fail_at(v, key, "expected a name, found '" + v.to_string() + "'");
}

cplx as_complex(const Value& v, const std::string& key) {
  if (v.kind == Value::Kind::tuple) {
    if (v.items.size() != 2) fail_at(v, key, "complex numbers are written (re, im)");
    return {as_number(v.items[0], key), as_number(v.items[1], key)};
  }
  if (v.kind == Value::Kind::call && v.text == "polar" && v.items.size() == 2) {
    return std::polar(as_number(v.items[0], key), as_number(v.items[1], key));
  }
  return {as_number(v, key), 0.0};
}

std::vector<double> as_numbers(const Value& v, const std::string& key) {
  if (v.kind != Value::Kind::list) return {as_number(v, key)};
  std::vector<double> out;
  for (const auto& item : v.items) out.push_back(as_number(item, key));
  return out;
}

std::vector<cplx> as_complexes(const Value& v, const std::string& key) {
  if (v.kind != Value::Kind::list) return {as_complex(v, key)};
  std::vector<cplx> out;
  for (const auto& item : v.items) out.push_back(as_complex(item, key));
  return out;
}

}  // namespace pilotwave
