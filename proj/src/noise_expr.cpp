#include "prstl/noise_expr.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

namespace prstl {

namespace {
enum class Op { Const, Var, Add, Sub, Mul, Div, Neg, Sq, Abs, Min, Max, Atan2, Sigm };
} // namespace

struct NoiseExpr::Node {
  Op op;
  double value = 0.0; // Const
  int var = 0;        // Var, zero-based
  std::shared_ptr<const Node> a, b;
};

namespace {

using NodePtr = std::shared_ptr<const NoiseExpr::Node>;

NodePtr make(Op op, NodePtr a = nullptr, NodePtr b = nullptr) {
  auto n = std::make_shared<NoiseExpr::Node>();
  n->op = op;
  n->a = std::move(a);
  n->b = std::move(b);
  return n;
}

NodePtr make_const(double v) {
  auto n = std::make_shared<NoiseExpr::Node>();
  n->op = Op::Const;
  n->value = v;
  return n;
}

NodePtr make_var(int zero_based) {
  auto n = std::make_shared<NoiseExpr::Node>();
  n->op = Op::Var;
  n->var = zero_based;
  return n;
}

// Recursive-descent parser over the raw string; whitespace-insensitive.
class Parser {
 public:
  Parser(const std::string& s, int n,
         const std::map<std::string, double>& constants)
      : s_(s), n_(n), constants_(constants) {}

  NodePtr run() {
    NodePtr e = expr();
    skip_ws();
    if (pos_ != s_.size()) fail("trailing input");
    return e;
  }

 private:
  const std::string& s_;
  int n_;
  const std::map<std::string, double>& constants_;
  size_t pos_ = 0;

  [[noreturn]] void fail(const std::string& what) const {
    throw std::invalid_argument("noise expression: " + what + " at offset " +
                                std::to_string(pos_) + " in \"" + s_ + "\"");
  }

  void skip_ws() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_])))
      ++pos_;
  }

  bool eat(char c) {
    skip_ws();
    if (pos_ < s_.size() && s_[pos_] == c) { ++pos_; return true; }
    return false;
  }

  void expect(char c) {
    if (!eat(c)) fail(std::string("expected '") + c + "'");
  }

  NodePtr expr() {
    NodePtr left = term();
    for (;;) {
      if (eat('+')) {
        left = make(Op::Add, left, term());
      } else if (eat('-')) {
        left = make(Op::Sub, left, term());
      } else {
        return left;
      }
    }
  }

  NodePtr term() {
    NodePtr left = factor();
    for (;;) {
      if (eat('*')) {
        left = make(Op::Mul, left, factor());
      } else if (eat('/')) {
        left = make(Op::Div, left, factor());
      } else {
        return left;
      }
    }
  }

  NodePtr factor() {
    if (eat('-')) return make(Op::Neg, factor());
    NodePtr base = primary();
    if (eat('^')) {
      skip_ws();
      if (pos_ >= s_.size() || s_[pos_] != '2') fail("only ^2 is supported");
      ++pos_;
      base = make(Op::Sq, base);
    }
    return base;
  }

  NodePtr primary() {
    skip_ws();
    if (pos_ >= s_.size()) fail("unexpected end of input");
    char c = s_[pos_];
    if (c == '(') {
      ++pos_;
      NodePtr e = expr();
      expect(')');
      return e;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return identifier();
    fail("unexpected character");
  }

  NodePtr number() {
    size_t end = pos_;
    while (end < s_.size() &&
           (std::isdigit(static_cast<unsigned char>(s_[end])) || s_[end] == '.' ||
            s_[end] == 'e' || s_[end] == 'E' ||
            ((s_[end] == '+' || s_[end] == '-') && end > pos_ &&
             (s_[end - 1] == 'e' || s_[end - 1] == 'E'))))
      ++end;
    try {
      size_t used = 0;
      double v = std::stod(s_.substr(pos_, end - pos_), &used);
      if (used != end - pos_) fail("malformed number");
      pos_ = end;
      return make_const(v);
    } catch (const std::invalid_argument&) {
      fail("malformed number");
    } catch (const std::out_of_range&) {
      fail("number out of range");
    }
  }

  NodePtr identifier() {
    size_t end = pos_;
    while (end < s_.size() &&
           (std::isalnum(static_cast<unsigned char>(s_[end])) || s_[end] == '_'))
      ++end;
    std::string name = s_.substr(pos_, end - pos_);
    pos_ = end;

    if (name.size() >= 2 && name[0] == 'x' &&
        std::all_of(name.begin() + 1, name.end(),
                    [](char d) { return std::isdigit(static_cast<unsigned char>(d)); })) {
      int idx = std::stoi(name.substr(1));
      if (idx < 1 || idx > n_) fail("variable " + name + " out of range");
      return make_var(idx - 1);
    }

    if (name == "abs" || name == "sigm") {
      expect('(');
      NodePtr a = expr();
      expect(')');
      return make(name == "abs" ? Op::Abs : Op::Sigm, a);
    }
    if (name == "min" || name == "max" || name == "atan2") {
      expect('(');
      NodePtr a = expr();
      expect(',');
      NodePtr b = expr();
      expect(')');
      return make(name == "min" ? Op::Min : name == "max" ? Op::Max : Op::Atan2,
                  a, b);
    }

    auto it = constants_.find(name);
    if (it != constants_.end()) return make_const(it->second);
    if (name == "v_large") return make_const(1e3);
    fail("unknown identifier '" + name + "'");
  }
};

double eval_node(const NoiseExpr::Node& n, const Eigen::VectorXd& x) {
  switch (n.op) {
    case Op::Const: return n.value;
    case Op::Var:
      if (n.var >= x.size())
        throw std::invalid_argument("noise expression: state too short");
      return x(n.var);
    case Op::Add: return eval_node(*n.a, x) + eval_node(*n.b, x);
    case Op::Sub: return eval_node(*n.a, x) - eval_node(*n.b, x);
    case Op::Mul: return eval_node(*n.a, x) * eval_node(*n.b, x);
    case Op::Div: return eval_node(*n.a, x) / eval_node(*n.b, x);
    case Op::Neg: return -eval_node(*n.a, x);
    case Op::Sq: {
      double v = eval_node(*n.a, x);
      return v * v;
    }
    case Op::Abs: return std::abs(eval_node(*n.a, x));
    case Op::Min: return std::min(eval_node(*n.a, x), eval_node(*n.b, x));
    case Op::Max: return std::max(eval_node(*n.a, x), eval_node(*n.b, x));
    case Op::Atan2: return std::atan2(eval_node(*n.a, x), eval_node(*n.b, x));
    case Op::Sigm: return 1.0 / (1.0 + std::exp(-eval_node(*n.a, x)));
  }
  throw std::logic_error("noise expression: bad node");
}

} // namespace

NoiseExpr NoiseExpr::parse(const std::string& text, int n,
                           const std::map<std::string, double>& constants) {
  NoiseExpr e;
  e.root_ = Parser(text, n, constants).run();
  e.text_ = text;
  return e;
}

double NoiseExpr::eval_raw(const Eigen::VectorXd& x) const {
  if (!root_) throw std::logic_error("noise expression: empty");
  return eval_node(*root_, x);
}

double eval_noise(const NoiseExpr& e, const Eigen::VectorXd& x) {
  double v = e.eval_raw(x);
  if (!std::isfinite(v))
    throw std::runtime_error("noise expression: non-finite value");
  if (v < 0.0)
    throw std::runtime_error("noise expression: negative value");
  return v;
}

} // namespace prstl
