#include "csge/expression.hpp"

#include <cctype>
#include <cmath>
#include <charconv>
#include <sstream>

namespace csge {

struct Expression::Node {
  enum class Op { Constant, Feature, LeadTime, Neg, Add, Sub, Mul, Div, Sin, Cos, Exp };

  Op op = Op::Constant;
  double value = 0.0;
  Index feature = 0;
  std::shared_ptr<const Node> lhs;
  std::shared_ptr<const Node> rhs;
};

namespace {

using NodePtr = std::shared_ptr<const Expression::Node>;
using Op = Expression::Node::Op;

NodePtr make(Op op, NodePtr lhs = nullptr, NodePtr rhs = nullptr) {
  auto n = std::make_shared<Expression::Node>();
  n->op = op;
  n->lhs = std::move(lhs);
  n->rhs = std::move(rhs);
  return n;
}

class Parser {
public:
  explicit Parser(std::string_view src) : src_(src) {}

  NodePtr parse_all() {
    NodePtr e = expr();
    skip();
    if (pos_ != src_.size()) fail("unexpected '" + std::string(1, src_[pos_]) + "'");
    return e;
  }

  Index max_feature = -1;

private:
  [[noreturn]] void fail(const std::string& what) const {
    std::ostringstream os;
    os << "expression '" << src_ << "' at offset " << pos_ << ": " << what;
    throw Error(ErrorKind::ParseError, os.str());
  }

  void skip() {
    while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip();
    if (pos_ < src_.size() && src_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect(char c) {
    if (!accept(c)) fail(std::string("expected '") + c + "'");
  }

  NodePtr expr() {
    NodePtr lhs = term();
    for (;;) {
      if (accept('+')) lhs = make(Op::Add, lhs, term());
      else if (accept('-')) lhs = make(Op::Sub, lhs, term());
      else return lhs;
    }
  }

  NodePtr term() {
    NodePtr lhs = unary();
    for (;;) {
      if (accept('*')) lhs = make(Op::Mul, lhs, unary());
      else if (accept('/')) lhs = make(Op::Div, lhs, unary());
      else return lhs;
    }
  }

  NodePtr unary() {
    if (accept('-')) return make(Op::Neg, unary());
    if (accept('+')) return unary();
    return primary();
  }

  std::string identifier() {
    const std::size_t start = pos_;
    while (pos_ < src_.size() && std::isalpha(static_cast<unsigned char>(src_[pos_]))) ++pos_;
    return std::string(src_.substr(start, pos_ - start));
  }

  NodePtr number() {
    const std::size_t start = pos_;
    while (pos_ < src_.size() &&
           (std::isdigit(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '.' || src_[pos_] == 'e' ||
            src_[pos_] == 'E' ||
            ((src_[pos_] == '+' || src_[pos_] == '-') && pos_ > start && (src_[pos_ - 1] == 'e' || src_[pos_ - 1] == 'E')))) {
      ++pos_;
    }
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(src_.data() + start, src_.data() + pos_, v);
    if (ec != std::errc() || ptr != src_.data() + pos_) {
      pos_ = start;
      fail("malformed number");
    }
    auto n = std::make_shared<Expression::Node>();
    n->op = Op::Constant;
    n->value = v;
    return n;
  }

  NodePtr primary() {
    skip();
    if (pos_ >= src_.size()) fail("unexpected end of input");
    const char c = src_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (accept('(')) {
      NodePtr e = expr();
      expect(')');
      return e;
    }
    if (std::isalpha(static_cast<unsigned char>(c))) {
      const std::size_t start = pos_;
      const std::string id = identifier();
      if (id == "x") {
        auto n = std::make_shared<Expression::Node>();
        n->op = Op::Feature;
        if (accept('[')) {
          skip();
          const std::size_t digits = pos_;
          while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) ++pos_;
          if (digits == pos_) fail("expected feature index");
          n->feature = std::stol(std::string(src_.substr(digits, pos_ - digits)));
          expect(']');
        }
        max_feature = std::max(max_feature, n->feature);
        return n;
      }
      if (id == "t") return make(Op::LeadTime);
      Op op;
      if (id == "sin") op = Op::Sin;
      else if (id == "cos") op = Op::Cos;
      else if (id == "exp") op = Op::Exp;
      else {
        pos_ = start;
        fail("unknown identifier '" + id + "'");
      }
      expect('(');
      NodePtr arg = expr();
      expect(')');
      return make(op, arg);
    }
    fail(std::string("unexpected '") + c + "'");
  }

  std::string_view src_;
  std::size_t pos_ = 0;
};

double eval(const Expression::Node& n, const Eigen::Ref<const Eigen::RowVectorXd>& x, double t) {
  switch (n.op) {
    case Op::Constant: return n.value;
    case Op::Feature: return x[n.feature];
    case Op::LeadTime: return t;
    case Op::Neg: return -eval(*n.lhs, x, t);
    case Op::Add: return eval(*n.lhs, x, t) + eval(*n.rhs, x, t);
    case Op::Sub: return eval(*n.lhs, x, t) - eval(*n.rhs, x, t);
    case Op::Mul: return eval(*n.lhs, x, t) * eval(*n.rhs, x, t);
    case Op::Div: return eval(*n.lhs, x, t) / eval(*n.rhs, x, t);
    case Op::Sin: return std::sin(eval(*n.lhs, x, t));
    case Op::Cos: return std::cos(eval(*n.lhs, x, t));
    case Op::Exp: return std::exp(eval(*n.lhs, x, t));
  }
  return 0.0;
}

}  // namespace

Expression Expression::parse(std::string_view source) {
  Parser p(source);
  Expression e;
  e.root_ = p.parse_all();
  e.source_ = std::string(source);
  e.max_feature_ = p.max_feature;
  return e;
}

double Expression::evaluate(const Eigen::Ref<const Eigen::RowVectorXd>& x, double t) const {
  if (!root_) throw Error(ErrorKind::NotFitted, "empty expression");
  if (max_feature_ >= x.size()) {
    throw Error(ErrorKind::ShapeMismatch, "expression references x[" + std::to_string(max_feature_) + "]");
  }
  return eval(*root_, x, t);
}

}  // namespace csge
