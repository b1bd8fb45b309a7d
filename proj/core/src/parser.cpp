#include "mstl/stl.hpp"

#include <cctype>

namespace mstl::stl {

namespace {

// Recursive descent over:  or := and ('|' and)* ; and := unary ('&' unary)* ;
// unary := atom | G iv unary | F iv unary | '(' or ')' | atom 'U' iv unary.
class Parser {
 public:
  Parser(const std::string& text, const PredicateTable& table)
      : text_(text), table_(table) {}

  FormulaPtr run() {
    FormulaPtr f = parse_or();
    skip_ws();
    if (pos_ != text_.size()) throw ParseError("trailing input", pos_);
    return f;
  }

 private:
  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_])))
      ++pos_;
  }

  bool eat(char c) {
    skip_ws();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  char peek() {
    skip_ws();
    return pos_ < text_.size() ? text_[pos_] : '\0';
  }

  FormulaPtr parse_or() {
    std::vector<FormulaPtr> terms{parse_and()};
    while (eat('|')) terms.push_back(parse_and());
    return terms.size() == 1 ? terms[0] : Formula::disj(std::move(terms));
  }

  FormulaPtr parse_and() {
    std::vector<FormulaPtr> terms{parse_unary()};
    while (eat('&')) terms.push_back(parse_unary());
    return terms.size() == 1 ? terms[0] : Formula::conj(std::move(terms));
  }

  FormulaPtr parse_unary() {
    char c = peek();
    if (c == '!' || c == '~')
      throw ParseError("negation is not part of the negation-free syntax", pos_);
    if (c == '(') {
      ++pos_;
      FormulaPtr inner = parse_or();
      if (!eat(')')) throw ParseError("expected ')'", pos_);
      return maybe_until(inner);
    }
    if ((c == 'G' || c == 'F') && interval_follows()) {
      ++pos_;
      Interval iv = parse_interval();
      FormulaPtr child = parse_unary();
      return c == 'G' ? Formula::always(child, iv) : Formula::eventually(child, iv);
    }
    return maybe_until(parse_atom());
  }

  // After an atom or parenthesized formula, an infix 'U[iv]' may follow.
  FormulaPtr maybe_until(FormulaPtr lhs) {
    skip_ws();
    if (pos_ < text_.size() && text_[pos_] == 'U' && interval_follows_at(pos_ + 1)) {
      ++pos_;
      Interval iv = parse_interval();
      FormulaPtr rhs = parse_unary();
      return Formula::until(lhs, rhs, iv);
    }
    return lhs;
  }

  bool interval_follows() { return interval_follows_at(pos_ + 1); }

  bool interval_follows_at(std::size_t p) {
    while (p < text_.size() && std::isspace(static_cast<unsigned char>(text_[p]))) ++p;
    return p < text_.size() && text_[p] == '[';
  }

  Interval parse_interval() {
    if (!eat('[')) throw ParseError("expected '[' to open interval", pos_);
    Interval iv;
    iv.lo = parse_nat();
    if (!eat(',')) throw ParseError("expected ',' in interval", pos_);
    skip_ws();
    if (text_.compare(pos_, 3, "inf") == 0) {
      iv.unbounded = true;
      pos_ += 3;
    } else {
      iv.hi = parse_nat();
      if (iv.hi < iv.lo) throw ParseError("interval with t2 < t1", pos_);
    }
    if (!eat(']')) throw ParseError("expected ']' to close interval", pos_);
    return iv;
  }

  int parse_nat() {
    skip_ws();
    if (pos_ < text_.size() && text_[pos_] == '-')
      throw ParseError("negative interval bound", pos_);
    std::size_t start = pos_;
    while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_])))
      ++pos_;
    if (pos_ == start) throw ParseError("expected a natural number", pos_);
    return std::stoi(text_.substr(start, pos_ - start));
  }

  FormulaPtr parse_atom() {
    skip_ws();
    std::size_t start = pos_;
    while (pos_ < text_.size() &&
           (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
      ++pos_;
    if (pos_ == start) throw ParseError("expected an identifier", pos_);
    std::string name = text_.substr(start, pos_ - start);
    if (name == "true") return Formula::truth();
    auto it = table_.find(name);
    if (it == table_.end())
      throw ParseError("unknown predicate name '" + name + "'", start);
    return Formula::pred(it->second);
  }

  const std::string& text_;
  const PredicateTable& table_;
  std::size_t pos_ = 0;
};

}  // namespace

FormulaPtr parse_formula(const std::string& text, const PredicateTable& table) {
  return Parser(text, table).run();
}

}  // namespace mstl::stl
