#include "bbmlab/expr.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>

#include "bbmlab/errors.hpp"

namespace bbmlab {

struct Expr::Node {
  enum class Kind { Number, Var, Call } kind;
  double number = 0.0;
  std::string name;  // variable or function name
  std::vector<std::shared_ptr<const Node>> args;
};

namespace {

using NodePtr = std::shared_ptr<const Expr::Node>;

struct Parser {
  const std::string& s;
  size_t pos = 0;

  explicit Parser(const std::string& text) : s(text) {}

  void skip_ws() {
    while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
  }

  bool eat(char c) {
    skip_ws();
    if (pos < s.size() && s[pos] == c) {
      ++pos;
      return true;
    }
    return false;
  }

  char peek() {
    skip_ws();
    return pos < s.size() ? s[pos] : '\0';
  }

  [[noreturn]] void fail(const std::string& what) {
    throw ConfigError("expr: " + what + " at position " + std::to_string(pos) + " in '" +
                      s + "'");
  }

  NodePtr make_call(std::string name, std::vector<NodePtr> args) {
    auto n = std::make_shared<Expr::Node>();
    n->kind = Expr::Node::Kind::Call;
    n->name = std::move(name);
    n->args = std::move(args);
    return n;
  }

  NodePtr parse_expr() {
    NodePtr lhs = parse_term();
    while (true) {
      if (eat('+'))
        lhs = make_call("+", {lhs, parse_term()});
      else if (eat('-'))
        lhs = make_call("-", {lhs, parse_term()});
      else
        return lhs;
    }
  }

  NodePtr parse_term() {
    NodePtr lhs = parse_power();
    while (true) {
      if (eat('*'))
        lhs = make_call("*", {lhs, parse_power()});
      else if (eat('/'))
        lhs = make_call("/", {lhs, parse_power()});
      else
        return lhs;
    }
  }

  NodePtr parse_power() {
    NodePtr base = parse_unary();
    if (eat('^')) return make_call("^", {base, parse_power()});
    return base;
  }

  NodePtr parse_unary() {
    if (eat('-')) return make_call("neg", {parse_unary()});
    if (eat('+')) return parse_unary();
    return parse_primary();
  }

  NodePtr parse_primary() {
    skip_ws();
    if (pos >= s.size()) fail("unexpected end of input");
    const char c = s[pos];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      char* end = nullptr;
      const double v = std::strtod(s.c_str() + pos, &end);
      if (end == s.c_str() + pos) fail("bad number");
      pos = static_cast<size_t>(end - s.c_str());
      auto n = std::make_shared<Expr::Node>();
      n->kind = Expr::Node::Kind::Number;
      n->number = v;
      return n;
    }
    if (c == '(') {
      ++pos;
      NodePtr inner = parse_expr();
      if (!eat(')')) fail("missing ')'");
      return inner;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      size_t start = pos;
      while (pos < s.size() &&
             (std::isalnum(static_cast<unsigned char>(s[pos])) || s[pos] == '_'))
        ++pos;
      std::string name = s.substr(start, pos - start);
      if (name == "pi") {
        auto n = std::make_shared<Expr::Node>();
        n->kind = Expr::Node::Kind::Number;
        n->number = M_PI;
        return n;
      }
      if (peek() == '(') {
        eat('(');
        std::vector<NodePtr> args;
        if (peek() != ')') {
          args.push_back(parse_expr());
          while (eat(',')) args.push_back(parse_expr());
        }
        if (!eat(')')) fail("missing ')' in call");
        return make_call(std::move(name), std::move(args));
      }
      auto n = std::make_shared<Expr::Node>();
      n->kind = Expr::Node::Kind::Var;
      n->name = std::move(name);
      return n;
    }
    fail(std::string("unexpected character '") + c + "'");
  }
};

double eval_node(const Expr::Node& n,
                 const std::vector<std::pair<std::string, double>>& vars) {
  using Kind = Expr::Node::Kind;
  switch (n.kind) {
    case Kind::Number:
      return n.number;
    case Kind::Var:
      for (const auto& [name, value] : vars)
        if (name == n.name) return value;
      throw InvalidInputError("expr: unknown variable '" + n.name + "'");
    case Kind::Call:
      break;
  }
  auto arg = [&](size_t i) { return eval_node(*n.args[i], vars); };
  const size_t k = n.args.size();
  if (n.name == "+" && k == 2) return arg(0) + arg(1);
  if (n.name == "-" && k == 2) return arg(0) - arg(1);
  if (n.name == "*" && k == 2) return arg(0) * arg(1);
  if (n.name == "/" && k == 2) return arg(0) / arg(1);
  if ((n.name == "^" || n.name == "pow") && k == 2) return std::pow(arg(0), arg(1));
  if (n.name == "neg" && k == 1) return -arg(0);
  if (n.name == "abs" && k == 1) return std::abs(arg(0));
  if (n.name == "sin" && k == 1) return std::sin(arg(0));
  if (n.name == "cos" && k == 1) return std::cos(arg(0));
  if (n.name == "tan" && k == 1) return std::tan(arg(0));
  if (n.name == "exp" && k == 1) return std::exp(arg(0));
  if (n.name == "log" && k == 1) return std::log(arg(0));
  if (n.name == "sqrt" && k == 1) return std::sqrt(arg(0));
  if (n.name == "min" && k == 2) return std::min(arg(0), arg(1));
  if (n.name == "max" && k == 2) return std::max(arg(0), arg(1));
  if (n.name == "step" && k == 1) return arg(0) > 0.0 ? 1.0 : 0.0;
  throw ConfigError("expr: unknown function '" + n.name + "' with " +
                    std::to_string(k) + " argument(s)");
}

}  // namespace

Expr Expr::parse(const std::string& text) {
  Parser p(text);
  Expr e;
  e.root_ = p.parse_expr();
  p.skip_ws();
  if (p.pos != text.size()) p.fail("trailing input");
  e.source_ = text;
  return e;
}

double Expr::eval(const std::vector<std::pair<std::string, double>>& vars) const {
  if (!root_) throw InvalidInputError("expr: empty expression");
  return eval_node(*root_, vars);
}

}  // namespace bbmlab
