#pragma once

#include <Eigen/Dense>
#include <limits>
#include <memory>
#include <set>
#include <string>
#include <vector>

namespace prstl {

// P(hᵀx + c ≤ 0) ≥ 1 − eps, optionally negated. Ids are assigned left to
// right at parse time; structurally identical predicates share one id.
struct ProbPredicate {
  Eigen::VectorXd h;
  double c = 0.0;
  double eps = 0.0;
  bool negated = false;
  int id = -1;
};

struct Formula;
using FormulaPtr = std::shared_ptr<const Formula>;

// b = kUnbounded encodes ∞.
inline constexpr int kUnbounded = std::numeric_limits<int>::max();

struct Formula {
  enum class Kind { Prob, Mode, And, Or, Until, Always };

  Kind kind;
  ProbPredicate pred;            // Prob
  std::set<int> modes;           // Mode: π^Q, full set ≡ ⊤
  std::vector<FormulaPtr> kids;  // And/Or: n-ary; Until: {left, right}; Always: {child}
  int a = 0, b = 0;              // Until/Always window
};

FormulaPtr make_prob(ProbPredicate pred);
FormulaPtr make_mode(std::set<int> modes);
FormulaPtr make_and(std::vector<FormulaPtr> kids);
FormulaPtr make_or(std::vector<FormulaPtr> kids);
FormulaPtr make_until(FormulaPtr left, FormulaPtr right, int a, int b);
FormulaPtr make_always(FormulaPtr child, int a, int b);

// Grammar (whitespace-insensitive):
//   or    := and ("|" and)*
//   and   := until ("&" until)*
//   until := unary ("U[" int "," (int|"inf") "]" unary)?
//   unary := "G[" .. "]" unary | "F[" .. "]" unary | "(" or ")" | atom
//   atom  := ["!"] "P[" real "](" affine "<= 0" ")" | "mode{" int ("," int)* "}"
// F[a,b]φ desugars to ⊤ U[a,b] φ with ⊤ = mode{all declared modes}; mode
// atoms and F therefore require a nonempty mode_ids. Throws
// std::invalid_argument with an offset on syntax errors.
FormulaPtr parse_formula(const std::string& text, int n,
                         const std::set<int>& mode_ids = {});

// Canonical text; parse_formula ∘ print_formula is the identity on the AST.
std::string print_formula(const FormulaPtr& f);

bool formula_equal(const FormulaPtr& a, const FormulaPtr& b);

// Distinct predicates ordered by id.
std::vector<ProbPredicate> collect_predicates(const FormulaPtr& f);

// f, every subformula, every predicate — preorder first-occurrence order,
// structural duplicates dropped.
std::vector<FormulaPtr> closure(const FormulaPtr& f);

struct LtlFormula;
using LtlPtr = std::shared_ptr<const LtlFormula>;

// Untimed abstraction of a Formula: windows dropped, a>0 wrapped in ◇.
struct LtlFormula {
  enum class Kind { Prob, Mode, And, Or, Until, Always, Eventually };

  Kind kind;
  ProbPredicate pred;
  std::set<int> modes;
  std::vector<LtlPtr> kids;
};

LtlPtr to_ltl(const FormulaPtr& f);
std::string print_ltl(const LtlPtr& f);

// N_{K,L}(k) = max(⌈(k−L)/(K+1−L)⌉, 0)
int n_unroll(int k, int K, int L);

// Total nested deadline: Until/Always contribute b (or a when b=∞) plus the
// deepest child; predicates contribute 0.
int formula_horizon(const FormulaPtr& f);

} // namespace prstl
