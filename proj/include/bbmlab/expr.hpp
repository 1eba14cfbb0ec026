#pragma once

#include <memory>
#include <string>
#include <vector>

namespace bbmlab {

/// Minimal arithmetic expression over named variables, used by the config
/// layer for kernel and weight specs. Supported: + - * / ^ (right assoc),
/// unary minus, numbers, variables, and the functions
/// abs sin cos tan exp log sqrt pow min max step (step(t) = 1 for t > 0).
class Expr {
 public:
  static Expr parse(const std::string& text);

  /// Evaluate with variables given as (name, value) pairs; unknown names
  /// raise InvalidInputError.
  double eval(const std::vector<std::pair<std::string, double>>& vars) const;

  const std::string& source() const { return source_; }

  struct Node;  // exposed for the parser implementation

 private:
  std::shared_ptr<const Node> root_;
  std::string source_;
};

}  // namespace bbmlab
