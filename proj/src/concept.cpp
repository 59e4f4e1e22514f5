#include "casemine/concept.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <limits>
#include <utility>

#include "casemine/error.hpp"

namespace casemine {

bool constraint_contains(const Constraint& outer, const Constraint& inner) {
  if (outer.op != inner.op) return false;
  if (outer.op == ConstraintOp::kGe) return inner.bound >= outer.bound;
  return inner.bound <= outer.bound;
}

namespace {

std::pair<double, double> intersect(const ConstraintSet& set) {
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
  for (const auto& c : set) {
    if (c.op == ConstraintOp::kGe) {
      lo = std::max(lo, c.bound);
    } else {
      hi = std::min(hi, c.bound);
    }
  }
  return {lo, hi};
}

}  // namespace

bool constraint_set_empty(const ConstraintSet& set) {
  auto [lo, hi] = intersect(set);
  return lo >= hi;
}

bool constraint_set_contains(const ConstraintSet& set, const Constraint& d) {
  auto [lo, hi] = intersect(set);
  if (lo >= hi) return true;
  if (d.op == ConstraintOp::kGe) return lo >= d.bound;
  return hi <= d.bound;
}

std::string format_bound(double value) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), value, std::chars_format::fixed);
  std::string out(buf, res.ptr);
  if (out == "-0") out = "0";
  return out;
}

std::string render_constraint(const Constraint& c) {
  return std::string(c.op == ConstraintOp::kGe ? ">= " : "< ") + format_bound(c.bound);
}

struct Concept::Node {
  Kind kind = Kind::kAtomic;
  std::string name;
  std::vector<Concept> operands;  // And operands, or the single role filler
  Constraint constraint;
  std::string text;
};

namespace {

// Rendering of a concept in `term` position of the grammar.
std::string term_text(const Concept& c) {
  if (c.kind() == Concept::Kind::kAnd) return "(" + c.text() + ")";
  return c.text();
}

}  // namespace

Concept Concept::atomic(std::string name) {
  auto node = std::make_shared<Node>();
  node->kind = Kind::kAtomic;
  node->text = name;
  node->name = std::move(name);
  return Concept(std::move(node));
}

Concept Concept::conjunction(std::vector<Concept> operands) {
  std::vector<Concept> flat;
  for (auto& op : operands) {
    if (op.kind() == Kind::kAnd) {
      flat.insert(flat.end(), op.operands().begin(), op.operands().end());
    } else {
      flat.push_back(std::move(op));
    }
  }
  if (flat.empty()) throw ValidationError("conjunction needs at least one operand");
  std::sort(flat.begin(), flat.end(),
            [](const Concept& a, const Concept& b) { return term_text(a) < term_text(b); });
  flat.erase(std::unique(flat.begin(), flat.end()), flat.end());
  if (flat.size() == 1) return flat.front();

  auto node = std::make_shared<Node>();
  node->kind = Kind::kAnd;
  for (std::size_t i = 0; i < flat.size(); ++i) {
    if (i) node->text += " and ";
    node->text += term_text(flat[i]);
  }
  node->operands = std::move(flat);
  return Concept(std::move(node));
}

Concept Concept::some(std::string role, const Concept& filler) {
  auto node = std::make_shared<Node>();
  node->kind = Kind::kExistsRole;
  node->text = "some " + role + "." + term_text(filler);
  node->name = std::move(role);
  node->operands.push_back(filler);
  return Concept(std::move(node));
}

Concept Concept::some(std::string concrete_role, Constraint c) {
  if (!std::isfinite(c.bound)) throw ValidationError("constraint bound must be finite");
  auto node = std::make_shared<Node>();
  node->kind = Kind::kExistsConcrete;
  node->text = "(" + concrete_role + " " + render_constraint(c) + ")";
  node->name = std::move(concrete_role);
  node->constraint = c;
  return Concept(std::move(node));
}

Concept::Kind Concept::kind() const { return node_->kind; }
const std::string& Concept::name() const { return node_->name; }
std::span<const Concept> Concept::operands() const {
  if (node_->kind != Kind::kAnd) return {};
  return node_->operands;
}
const Concept& Concept::filler() const { return node_->operands.front(); }
const Constraint& Concept::constraint() const { return node_->constraint; }
const std::string& Concept::text() const { return node_->text; }

bool Concept::is_property_form() const {
  switch (kind()) {
    case Kind::kAtomic:
    case Kind::kExistsConcrete:
      return true;
    case Kind::kExistsRole:
      return filler().is_property_form();
    case Kind::kAnd:
      return false;
  }
  return false;
}

bool is_identifier(std::string_view s) {
  if (s.empty() || !std::isalpha(static_cast<unsigned char>(s[0]))) return false;
  return std::all_of(s.begin() + 1, s.end(), [](char ch) {
    return std::isalnum(static_cast<unsigned char>(ch)) || ch == '_' || ch == '-';
  });
}

namespace {

enum class Tok { kName, kNumber, kLParen, kRParen, kDot, kGe, kLt, kOther, kEnd };

struct Token {
  Tok kind = Tok::kEnd;
  std::string_view text;
  std::size_t pos = 0;  // 0-based offset
};

bool is_name_start(char ch) { return std::isalpha(static_cast<unsigned char>(ch)) != 0; }
bool is_name_char(char ch) {
  return std::isalnum(static_cast<unsigned char>(ch)) || ch == '_' || ch == '-';
}

class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) {}

  Token next() {
    while (i_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[i_]))) ++i_;
    Token t;
    t.pos = i_;
    if (i_ >= src_.size()) return t;
    const char ch = src_[i_];
    const auto take = [&](Tok kind, std::size_t len) {
      t.kind = kind;
      t.text = src_.substr(i_, len);
      i_ += len;
      return t;
    };
    if (is_name_start(ch)) {
      std::size_t j = i_ + 1;
      while (j < src_.size() && is_name_char(src_[j])) ++j;
      return take(Tok::kName, j - i_);
    }
    if (std::isdigit(static_cast<unsigned char>(ch)) || ch == '-' || ch == '.') {
      std::size_t j = i_;
      if (src_[j] == '-') ++j;
      while (j < src_.size() && (std::isdigit(static_cast<unsigned char>(src_[j])) || src_[j] == '.')) ++j;
      if (j > i_ + (ch == '-' ? 1u : 0u) && !(ch == '.' && j == i_ + 1)) return take(Tok::kNumber, j - i_);
    }
    switch (ch) {
      case '(':
        return take(Tok::kLParen, 1);
      case ')':
        return take(Tok::kRParen, 1);
      case '.':
        return take(Tok::kDot, 1);
      case '>':
        if (i_ + 1 < src_.size() && src_[i_ + 1] == '=') return take(Tok::kGe, 2);
        return take(Tok::kOther, 1);
      case '<':
        if (i_ + 1 < src_.size() && src_[i_ + 1] == '=') return take(Tok::kOther, 2);
        return take(Tok::kLt, 1);
      case '=':
      case '!':
        if (i_ + 1 < src_.size() && src_[i_ + 1] == '=') return take(Tok::kOther, 2);
        return take(Tok::kOther, 1);
      default:
        return take(Tok::kOther, 1);
    }
  }

 private:
  std::string_view src_;
  std::size_t i_ = 0;
};

bool is_unsupported_keyword(std::string_view w) {
  static constexpr std::string_view kWords[] = {"or", "not", "all", "only", "min", "max",
                                                "exactly", "value", "inverse", "that", "self"};
  return std::find(std::begin(kWords), std::end(kWords), w) != std::end(kWords);
}

class Parser {
 public:
  explicit Parser(std::string_view src) : lex_(src) {
    cur_ = lex_.next();
    peek_ = lex_.next();
  }

  Concept parse() {
    Concept c = concept_();
    if (cur_.kind != Tok::kEnd) {
      if (cur_.kind == Tok::kName && is_unsupported_keyword(cur_.text)) unsupported(cur_);
      fail(cur_, "unexpected '" + std::string(cur_.text) + "'");
    }
    return c;
  }

 private:
  [[noreturn]] void fail(const Token& t, const std::string& msg) const {
    throw ParseError(msg, 0, t.pos + 1);
  }
  [[noreturn]] void unsupported(const Token& t) const {
    throw UnsupportedConstruct("unsupported construct '" + std::string(t.text) + "'", 0, t.pos + 1);
  }

  void advance() {
    cur_ = peek_;
    peek_ = lex_.next();
  }

  std::string expect_name(const char* what) {
    if (cur_.kind != Tok::kName || cur_.text == "and" || cur_.text == "some") {
      fail(cur_, std::string("expected ") + what);
    }
    if (is_unsupported_keyword(cur_.text)) unsupported(cur_);
    std::string s(cur_.text);
    advance();
    return s;
  }

  Concept concept_() {
    std::vector<Concept> parts;
    parts.push_back(term());
    while (cur_.kind == Tok::kName && cur_.text == "and") {
      advance();
      parts.push_back(term());
    }
    return parts.size() == 1 ? parts.front() : Concept::conjunction(std::move(parts));
  }

  Concept term() {
    if (cur_.kind == Tok::kName) {
      if (cur_.text == "some") {
        advance();
        std::string role = expect_name("role name");
        if (cur_.kind != Tok::kDot) fail(cur_, "expected '.' after role name");
        advance();
        return Concept::some(std::move(role), term());
      }
      if (cur_.text == "and") fail(cur_, "expected a concept");
      if (is_unsupported_keyword(cur_.text)) unsupported(cur_);
      return Concept::atomic(expect_name("concept name"));
    }
    if (cur_.kind == Tok::kLParen) {
      const Token open = cur_;
      advance();
      if (cur_.kind == Tok::kName && cur_.text != "some" && cur_.text != "and" &&
          (peek_.kind == Tok::kGe || peek_.kind == Tok::kLt || peek_.kind == Tok::kOther)) {
        if (peek_.kind == Tok::kOther) {
          advance();
          unsupported(cur_);
        }
        std::string grole = expect_name("concrete role name");
        const ConstraintOp op = cur_.kind == Tok::kGe ? ConstraintOp::kGe : ConstraintOp::kLt;
        advance();
        if (cur_.kind != Tok::kNumber) fail(cur_, "expected a number");
        double value = 0.0;
        auto [ptr, ec] = std::from_chars(cur_.text.data(), cur_.text.data() + cur_.text.size(), value);
        if (ec != std::errc() || ptr != cur_.text.data() + cur_.text.size() || !std::isfinite(value)) {
          fail(cur_, "invalid number '" + std::string(cur_.text) + "'");
        }
        advance();
        if (cur_.kind != Tok::kRParen) fail(cur_, "expected ')'");
        advance();
        return Concept::some(std::move(grole), Constraint{op, value});
      }
      Concept inner = concept_();
      if (cur_.kind != Tok::kRParen) {
        if (cur_.kind == Tok::kName && is_unsupported_keyword(cur_.text)) unsupported(cur_);
        fail(cur_.kind == Tok::kEnd ? open : cur_, "expected ')'");
      }
      advance();
      return inner;
    }
    if (cur_.kind == Tok::kEnd) fail(cur_, "unexpected end of expression");
    fail(cur_, "unexpected '" + std::string(cur_.text) + "'");
  }

  Lexer lex_;
  Token cur_;
  Token peek_;
};

}  // namespace

Concept parse_concept(std::string_view text) { return Parser(text).parse(); }

}  // namespace casemine
