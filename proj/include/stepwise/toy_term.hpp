#pragma once

#include <cctype>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "stepwise/error.hpp"

namespace stepwise::toy {

// Expression tree over +, *, natural constants, variables a..z. Uppercase
// letters are pattern metavariables and only appear in rewrite rules.
class Term {
public:
  enum class Kind { Num, Var, Meta, Add, Mul };

  static Term num(std::uint64_t v) { return Term(std::make_shared<Node>(Node{Kind::Num, v, 0, {}, {}})); }
  static Term var(char c) { return Term(std::make_shared<Node>(Node{Kind::Var, 0, c, {}, {}})); }
  static Term meta(char c) { return Term(std::make_shared<Node>(Node{Kind::Meta, 0, c, {}, {}})); }
  static Term add(Term a, Term b) { return binary(Kind::Add, std::move(a), std::move(b)); }
  static Term mul(Term a, Term b) { return binary(Kind::Mul, std::move(a), std::move(b)); }

  Kind kind() const { return node_->kind; }
  bool is_binary() const { return kind() == Kind::Add || kind() == Kind::Mul; }
  std::uint64_t value() const { return node_->value; }
  char name() const { return node_->name; }
  const Term& left() const { return *node_->lhs; }
  const Term& right() const { return *node_->rhs; }
  const Term& child(int i) const { return i == 0 ? left() : right(); }

  std::size_t size() const { return is_binary() ? 1 + left().size() + right().size() : 1; }

  friend bool operator==(const Term& a, const Term& b) {
    if (a.node_ == b.node_) return true;
    if (a.kind() != b.kind()) return false;
    switch (a.kind()) {
    case Kind::Num: return a.value() == b.value();
    case Kind::Var:
    case Kind::Meta: return a.name() == b.name();
    default: return a.left() == b.left() && a.right() == b.right();
    }
  }

  // Minimal parentheses; both operators associate to the left and * binds
  // tighter than +.
  std::string render() const {
    std::string out;
    render_into(out, 0);
    return out;
  }

private:
  struct Node {
    Kind kind;
    std::uint64_t value;
    char name;
    std::shared_ptr<const Term> lhs;
    std::shared_ptr<const Term> rhs;
  };

  explicit Term(std::shared_ptr<const Node> n) : node_(std::move(n)) {}

  static Term binary(Kind k, Term a, Term b) {
    return Term(std::make_shared<Node>(Node{k, 0, 0, std::make_shared<const Term>(std::move(a)),
                                            std::make_shared<const Term>(std::move(b))}));
  }

  int precedence() const {
    switch (kind()) {
    case Kind::Add: return 1;
    case Kind::Mul: return 2;
    default: return 3;
    }
  }

  void render_into(std::string& out, int min_prec) const {
    const bool parens = precedence() < min_prec;
    if (parens) out.push_back('(');
    switch (kind()) {
    case Kind::Num: out += std::to_string(value()); break;
    case Kind::Var:
    case Kind::Meta: out.push_back(name()); break;
    case Kind::Add:
    case Kind::Mul: {
      const int p = precedence();
      left().render_into(out, p);
      out += kind() == Kind::Add ? " + " : " * ";
      right().render_into(out, p + 1);
      break;
    }
    }
    if (parens) out.push_back(')');
  }

  std::shared_ptr<const Node> node_;
};

namespace detail {

class Parser {
public:
  Parser(std::string_view src, bool allow_meta) : src_(src), allow_meta_(allow_meta) {}

  Term parse_all() {
    Term t = expr();
    skip_ws();
    if (pos_ != src_.size()) fail("unexpected '" + std::string(1, src_[pos_]) + "'");
    return t;
  }

private:
  void skip_ws() {
    while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
  }

  // Accepts ASCII '*' and the UTF-8 multiplication sign.
  bool eat_mul() {
    skip_ws();
    if (pos_ < src_.size() && src_[pos_] == '*') {
      ++pos_;
      return true;
    }
    if (src_.substr(pos_, 2) == "\xc3\x97") {
      pos_ += 2;
      return true;
    }
    return false;
  }

  bool eat(char c) {
    skip_ws();
    if (pos_ < src_.size() && src_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  Term expr() {
    Term t = term();
    while (eat('+')) t = Term::add(std::move(t), term());
    return t;
  }

  Term term() {
    Term t = factor();
    while (eat_mul()) t = Term::mul(std::move(t), factor());
    return t;
  }

  Term factor() {
    skip_ws();
    if (pos_ >= src_.size()) fail("unexpected end of input");
    const char c = src_[pos_];
    if (c == '(') {
      ++pos_;
      Term t = expr();
      if (!eat(')')) fail("expected ')'");
      return t;
    }
    if (std::isdigit(static_cast<unsigned char>(c))) {
      std::uint64_t v = 0;
      std::size_t digits = 0;
      while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) {
        if (++digits > 9) fail("constant too large");
        v = v * 10 + static_cast<std::uint64_t>(src_[pos_++] - '0');
      }
      return Term::num(v);
    }
    if (c >= 'a' && c <= 'z') {
      ++pos_;
      if (pos_ < src_.size() && std::isalnum(static_cast<unsigned char>(src_[pos_])))
        fail("variables are single letters");
      return Term::var(c);
    }
    if (allow_meta_ && c >= 'A' && c <= 'Z') {
      ++pos_;
      return Term::meta(c);
    }
    fail("unexpected '" + std::string(1, c) + "'");
  }

  [[noreturn]] void fail(const std::string& what) const {
    throw FormatError("toy term parse error at column " + std::to_string(pos_ + 1) + ": " + what);
  }

  std::string_view src_;
  bool allow_meta_;
  std::size_t pos_ = 0;
};

} // namespace detail

inline Term parse_term(std::string_view src, bool allow_meta = false) {
  return detail::Parser(src, allow_meta).parse_all();
}

struct Goal {
  Term lhs;
  Term rhs;

  std::string render() const { return lhs.render() + " = " + rhs.render(); }
  const Term& side(char s) const { return s == 'l' ? lhs : rhs; }

  friend bool operator==(const Goal&, const Goal&) = default;
};

inline Goal parse_goal(std::string_view src) {
  const auto eq = src.find('=');
  if (eq == std::string_view::npos) throw FormatError("toy goal needs '='");
  if (src.find('=', eq + 1) != std::string_view::npos) throw FormatError("toy goal has more than one '='");
  return Goal{parse_term(src.substr(0, eq)), parse_term(src.substr(eq + 1))};
}

using Bindings = std::map<char, Term>;

// First-order matching; repeated metavariables must bind equal subterms.
inline bool match(const Term& pattern, const Term& t, Bindings& b) {
  switch (pattern.kind()) {
  case Term::Kind::Meta: {
    auto [it, inserted] = b.try_emplace(pattern.name(), t);
    return inserted || it->second == t;
  }
  case Term::Kind::Num: return t.kind() == Term::Kind::Num && t.value() == pattern.value();
  case Term::Kind::Var: return t.kind() == Term::Kind::Var && t.name() == pattern.name();
  default:
    return t.kind() == pattern.kind() && match(pattern.left(), t.left(), b) &&
           match(pattern.right(), t.right(), b);
  }
}

inline Term instantiate(const Term& pattern, const Bindings& b) {
  switch (pattern.kind()) {
  case Term::Kind::Meta: {
    auto it = b.find(pattern.name());
    if (it == b.end()) throw Error("unbound metavariable");
    return it->second;
  }
  case Term::Kind::Add: return Term::add(instantiate(pattern.left(), b), instantiate(pattern.right(), b));
  case Term::Kind::Mul: return Term::mul(instantiate(pattern.left(), b), instantiate(pattern.right(), b));
  default: return pattern;
  }
}

inline void collect_metas(const Term& t, std::vector<char>& out) {
  if (t.kind() == Term::Kind::Meta) out.push_back(t.name());
  if (t.is_binary()) {
    collect_metas(t.left(), out);
    collect_metas(t.right(), out);
  }
}

inline const Term* subterm_at(const Term& t, std::span<const int> path) {
  const Term* cur = &t;
  for (int i : path) {
    if (!cur->is_binary()) return nullptr;
    cur = &cur->child(i);
  }
  return cur;
}

inline Term replace_at(const Term& t, std::span<const int> path, const Term& with) {
  if (path.empty()) return with;
  Term sub = replace_at(t.child(path.front()), path.subspan(1), with);
  const Term& other0 = path.front() == 0 ? sub : t.left();
  const Term& other1 = path.front() == 1 ? sub : t.right();
  return t.kind() == Term::Kind::Add ? Term::add(other0, other1) : Term::mul(other0, other1);
}

// All child paths of t in preorder, root first.
inline void enumerate_paths(const Term& t, std::vector<int>& prefix, std::vector<std::vector<int>>& out) {
  out.push_back(prefix);
  if (!t.is_binary()) return;
  for (int i = 0; i < 2; ++i) {
    prefix.push_back(i);
    enumerate_paths(t.child(i), prefix, out);
    prefix.pop_back();
  }
}

} // namespace stepwise::toy
