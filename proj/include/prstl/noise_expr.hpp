#pragma once

#include <Eigen/Dense>
#include <map>
#include <memory>
#include <string>

namespace prstl {

// Per-output-row observation-noise magnitude n_q as an expression over the
// state. Syntax: real literals, x1..xn, + - * /, ^2, abs(t), min(a,b),
// max(a,b), atan2(a,b), sigm(t) = 1/(1+e^-t), parentheses, and named
// constants resolved at parse time.
class NoiseExpr {
 public:
  struct Node;

  NoiseExpr() = default;

  // `n` bounds the variable indices; unknown identifiers must appear in
  // `constants` ("v_large" defaults to 1e3 when absent). Throws
  // std::invalid_argument on syntax errors.
  static NoiseExpr parse(const std::string& text, int n,
                         const std::map<std::string, double>& constants = {});

  double eval_raw(const Eigen::VectorXd& x) const;
  const std::string& text() const { return text_; }

 private:
  std::shared_ptr<const Node> root_;
  std::string text_;
};

// Validated evaluation: throws on NaN/∞ or a negative value.
double eval_noise(const NoiseExpr& e, const Eigen::VectorXd& x);

} // namespace prstl
