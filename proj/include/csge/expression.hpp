#pragma once

#include "csge/core.hpp"

#include <memory>
#include <string>
#include <string_view>

namespace csge {

/// Closed-form member over (x, t).
///
/// Grammar:
///   expr    := term (('+' | '-') term)*
///   term    := unary (('*' | '/') unary)*
///   unary   := ('-' | '+') unary | primary
///   primary := number | 'x' | 'x[' int ']' | 't' | func '(' expr ')' | '(' expr ')'
///   func    := 'sin' | 'cos' | 'exp'
///
/// A bare `x` is `x[0]`. Whitespace is ignored.
class Expression {
public:
  struct Node;

  static Expression parse(std::string_view source);

  double evaluate(const Eigen::Ref<const Eigen::RowVectorXd>& x, double t) const;

  const std::string& source() const { return source_; }

  /// Largest referenced feature index, or -1 if x is unused.
  Index max_feature_index() const { return max_feature_; }

private:
  std::shared_ptr<const Node> root_;
  std::string source_;
  Index max_feature_ = -1;
};

}  // namespace csge
