#include "prstl/formula.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <cstring>
#include <stdexcept>

namespace prstl {

namespace {

// Shortest representation that parses back to the same double.
std::string fmt_double(double v) {
  char buf[64];
  for (int prec = 15; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof(buf), "%.*g", prec, v);
    if (std::stod(buf) == v) break;
  }
  return buf;
}

std::string fmt_window(int a, int b) {
  std::string out = "[" + std::to_string(a) + ",";
  out += (b == kUnbounded) ? "inf" : std::to_string(b);
  out += "]";
  return out;
}

bool pred_same(const ProbPredicate& p, const ProbPredicate& q) {
  return p.negated == q.negated && p.eps == q.eps && p.c == q.c &&
         p.h.size() == q.h.size() && p.h == q.h;
}

class Parser {
 public:
  Parser(const std::string& s, int n, const std::set<int>& mode_ids)
      : s_(s), n_(n), mode_ids_(mode_ids) {}

  FormulaPtr run() {
    FormulaPtr f = parse_or();
    skip_ws();
    if (pos_ != s_.size()) fail("trailing input");
    return f;
  }

 private:
  const std::string& s_;
  int n_;
  const std::set<int>& mode_ids_;
  size_t pos_ = 0;
  std::vector<ProbPredicate> preds_;

  [[noreturn]] void fail(const std::string& what) const {
    throw std::invalid_argument("formula: " + what + " at offset " +
                                std::to_string(pos_));
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

  bool eat_word(const char* w) {
    skip_ws();
    size_t len = std::strlen(w);
    if (s_.compare(pos_, len, w) == 0) { pos_ += len; return true; }
    return false;
  }

  void expect(char c) {
    if (!eat(c)) fail(std::string("expected '") + c + "'");
  }

  double real() {
    skip_ws();
    size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(s_.substr(pos_), &used);
    } catch (const std::exception&) {
      fail("expected a number");
    }
    pos_ += used;
    return v;
  }

  int integer() {
    double v = real();
    int i = static_cast<int>(v);
    if (static_cast<double>(i) != v) fail("expected an integer");
    return i;
  }

  // "[a,b]" with b possibly "inf"
  std::pair<int, int> window() {
    expect('[');
    int a = integer();
    if (a < 0) fail("negative delay");
    expect(',');
    int b;
    if (eat_word("inf")) {
      b = kUnbounded;
    } else {
      b = integer();
      if (a > b) fail("window start exceeds its end");
    }
    expect(']');
    return {a, b};
  }

  FormulaPtr parse_or() {
    std::vector<FormulaPtr> kids{parse_and()};
    while (eat('|')) kids.push_back(parse_and());
    if (kids.size() == 1) return kids.front();
    return make_or(std::move(kids));
  }

  FormulaPtr parse_and() {
    std::vector<FormulaPtr> kids{parse_until()};
    while (eat('&')) kids.push_back(parse_until());
    if (kids.size() == 1) return kids.front();
    return make_and(std::move(kids));
  }

  FormulaPtr parse_until() {
    FormulaPtr left = parse_unary();
    skip_ws();
    if (pos_ < s_.size() && s_[pos_] == 'U') {
      ++pos_;
      auto [a, b] = window();
      FormulaPtr right = parse_unary();
      return make_until(left, right, a, b);
    }
    return left;
  }

  FormulaPtr top() {
    if (mode_ids_.empty()) fail("'F' requires a declared mode set");
    return make_mode(mode_ids_);
  }

  FormulaPtr parse_unary() {
    skip_ws();
    if (pos_ < s_.size() && (s_[pos_] == 'G' || s_[pos_] == 'F')) {
      char op = s_[pos_++];
      auto [a, b] = window();
      FormulaPtr child = parse_unary();
      if (op == 'G') return make_always(child, a, b);
      return make_until(top(), child, a, b);
    }
    if (eat('(')) {
      FormulaPtr f = parse_or();
      expect(')');
      return f;
    }
    return atom();
  }

  FormulaPtr atom() {
    skip_ws();
    bool neg = eat('!');
    if (eat_word("mode")) {
      if (neg) fail("'!' applies to probabilistic predicates only");
      expect('{');
      std::set<int> modes;
      do {
        int q = integer();
        if (!mode_ids_.count(q)) fail("mode " + std::to_string(q) + " not declared");
        modes.insert(q);
      } while (eat(','));
      expect('}');
      return make_mode(std::move(modes));
    }
    if (!eat('P')) fail("expected an atom");
    expect('[');
    double eps = real();
    if (eps < 0.0 || eps > 0.5) fail("eps outside [0, 0.5]");
    expect(']');
    expect('(');
    auto [h, c] = affine();
    if (!eat_word("<=")) fail("expected '<= 0'");
    skip_ws();
    if (pos_ >= s_.size() || s_[pos_] != '0') fail("expected '<= 0'");
    ++pos_;
    expect(')');
    if (h.isZero(0.0)) fail("predicate normal is zero");

    ProbPredicate pred;
    pred.h = std::move(h);
    pred.c = c;
    pred.eps = eps;
    pred.negated = neg;
    for (const auto& existing : preds_) {
      if (pred_same(existing, pred)) {
        pred.id = existing.id;
        break;
      }
    }
    if (pred.id < 0) {
      pred.id = static_cast<int>(preds_.size());
      preds_.push_back(pred);
    }
    return make_prob(std::move(pred));
  }

  // Sum of real*xI, bare xI, and bare reals.
  std::pair<Eigen::VectorXd, double> affine() {
    Eigen::VectorXd h = Eigen::VectorXd::Zero(n_);
    double c = 0.0;
    bool first = true;
    for (;;) {
      skip_ws();
      double sign = 1.0;
      if (eat('-')) {
        sign = -1.0;
      } else if (eat('+')) {
        // explicit plus
      } else if (!first) {
        break;
      }
      first = false;
      skip_ws();
      if (pos_ < s_.size() && s_[pos_] == 'x') {
        h(var_index()) += sign;
        continue;
      }
      double v = sign * real();
      if (eat('*')) {
        skip_ws();
        if (pos_ >= s_.size() || s_[pos_] != 'x') fail("expected a variable after '*'");
        h(var_index()) += v;
      } else {
        c += v;
      }
    }
    return {h, c};
  }

  int var_index() {
    ++pos_; // 'x'
    size_t end = pos_;
    while (end < s_.size() && std::isdigit(static_cast<unsigned char>(s_[end])))
      ++end;
    if (end == pos_) fail("expected a variable index");
    int idx = std::stoi(s_.substr(pos_, end - pos_));
    if (idx < 1 || idx > n_) fail("variable x" + std::to_string(idx) + " out of range");
    pos_ = end;
    return idx - 1;
  }
};

// Slot expected by the surrounding production: | operands sit in And slots,
// & operands in Until slots, temporal operands in Unary slots.
enum class Level { Or, And, Until, Unary };

void print_node(const FormulaPtr& f, Level need, std::string& out);

void print_affine(const ProbPredicate& p, std::string& out) {
  bool first = true;
  for (int i = 0; i < p.h.size(); ++i) {
    double v = p.h(i);
    if (v == 0.0) continue;
    if (first) {
      if (v < 0.0) { out += "-"; v = -v; }
    } else {
      out += v < 0.0 ? " - " : " + ";
      v = std::abs(v);
    }
    if (v != 1.0) { out += fmt_double(v); out += "*"; }
    out += "x" + std::to_string(i + 1);
    first = false;
  }
  if (p.c != 0.0 || first) {
    double v = p.c;
    if (first) {
      out += fmt_double(v);
    } else {
      out += v < 0.0 ? " - " : " + ";
      out += fmt_double(std::abs(v));
    }
  }
}

Level level_of(const FormulaPtr& f) {
  switch (f->kind) {
    case Formula::Kind::Or: return Level::Or;
    case Formula::Kind::And: return Level::And;
    case Formula::Kind::Until: return Level::And; // binds tighter than & but is not unary
    default: return Level::Unary;
  }
}

void print_node(const FormulaPtr& f, Level need, std::string& out) {
  bool parens = false;
  switch (need) {
    case Level::Or:
      break;
    case Level::And:
      parens = f->kind == Formula::Kind::Or;
      break;
    case Level::Until:
      parens = f->kind == Formula::Kind::Or || f->kind == Formula::Kind::And;
      break;
    case Level::Unary:
      parens = f->kind == Formula::Kind::Or || f->kind == Formula::Kind::And ||
               f->kind == Formula::Kind::Until;
      break;
  }
  if (parens) out += "(";
  switch (f->kind) {
    case Formula::Kind::Prob:
      if (f->pred.negated) out += "!";
      out += "P[" + fmt_double(f->pred.eps) + "](";
      print_affine(f->pred, out);
      out += " <= 0)";
      break;
    case Formula::Kind::Mode: {
      out += "mode{";
      bool first = true;
      for (int q : f->modes) {
        if (!first) out += ",";
        out += std::to_string(q);
        first = false;
      }
      out += "}";
      break;
    }
    case Formula::Kind::And: {
      bool first = true;
      for (const auto& k : f->kids) {
        if (!first) out += " & ";
        print_node(k, Level::Until, out);
        first = false;
      }
      break;
    }
    case Formula::Kind::Or: {
      bool first = true;
      for (const auto& k : f->kids) {
        if (!first) out += " | ";
        print_node(k, Level::And, out);
        first = false;
      }
      break;
    }
    case Formula::Kind::Until:
      print_node(f->kids[0], Level::Unary, out);
      out += " U" + fmt_window(f->a, f->b) + " ";
      print_node(f->kids[1], Level::Unary, out);
      break;
    case Formula::Kind::Always:
      out += "G" + fmt_window(f->a, f->b) + " ";
      print_node(f->kids[0], Level::Unary, out);
      break;
  }
  if (parens) out += ")";
}

void closure_walk(const FormulaPtr& f, std::vector<FormulaPtr>& out) {
  for (const auto& seen : out)
    if (formula_equal(seen, f)) return;
  out.push_back(f);
  for (const auto& k : f->kids) closure_walk(k, out);
}

} // namespace

FormulaPtr make_prob(ProbPredicate pred) {
  auto f = std::make_shared<Formula>();
  f->kind = Formula::Kind::Prob;
  f->pred = std::move(pred);
  return f;
}

FormulaPtr make_mode(std::set<int> modes) {
  auto f = std::make_shared<Formula>();
  f->kind = Formula::Kind::Mode;
  f->modes = std::move(modes);
  return f;
}

FormulaPtr make_and(std::vector<FormulaPtr> kids) {
  auto f = std::make_shared<Formula>();
  f->kind = Formula::Kind::And;
  f->kids = std::move(kids);
  return f;
}

FormulaPtr make_or(std::vector<FormulaPtr> kids) {
  auto f = std::make_shared<Formula>();
  f->kind = Formula::Kind::Or;
  f->kids = std::move(kids);
  return f;
}

FormulaPtr make_until(FormulaPtr left, FormulaPtr right, int a, int b) {
  auto f = std::make_shared<Formula>();
  f->kind = Formula::Kind::Until;
  f->kids = {std::move(left), std::move(right)};
  f->a = a;
  f->b = b;
  return f;
}

FormulaPtr make_always(FormulaPtr child, int a, int b) {
  auto f = std::make_shared<Formula>();
  f->kind = Formula::Kind::Always;
  f->kids = {std::move(child)};
  f->a = a;
  f->b = b;
  return f;
}

FormulaPtr parse_formula(const std::string& text, int n,
                         const std::set<int>& mode_ids) {
  return Parser(text, n, mode_ids).run();
}

std::string print_formula(const FormulaPtr& f) {
  std::string out;
  print_node(f, Level::Or, out);
  return out;
}

bool formula_equal(const FormulaPtr& a, const FormulaPtr& b) {
  if (a.get() == b.get()) return true;
  if (a->kind != b->kind) return false;
  switch (a->kind) {
    case Formula::Kind::Prob:
      return a->pred.id == b->pred.id && pred_same(a->pred, b->pred);
    case Formula::Kind::Mode:
      return a->modes == b->modes;
    default:
      break;
  }
  if (a->a != b->a || a->b != b->b) return false;
  if (a->kids.size() != b->kids.size()) return false;
  for (size_t i = 0; i < a->kids.size(); ++i)
    if (!formula_equal(a->kids[i], b->kids[i])) return false;
  return true;
}

std::vector<ProbPredicate> collect_predicates(const FormulaPtr& f) {
  std::vector<ProbPredicate> out;
  std::vector<FormulaPtr> stack{f};
  while (!stack.empty()) {
    FormulaPtr cur = stack.back();
    stack.pop_back();
    if (cur->kind == Formula::Kind::Prob) {
      bool seen = false;
      for (const auto& p : out)
        if (p.id == cur->pred.id) { seen = true; break; }
      if (!seen) out.push_back(cur->pred);
    }
    for (auto it = cur->kids.rbegin(); it != cur->kids.rend(); ++it)
      stack.push_back(*it);
  }
  std::sort(out.begin(), out.end(),
            [](const ProbPredicate& a, const ProbPredicate& b) { return a.id < b.id; });
  return out;
}

std::vector<FormulaPtr> closure(const FormulaPtr& f) {
  std::vector<FormulaPtr> out;
  closure_walk(f, out);
  return out;
}

namespace {

LtlPtr make_ltl(LtlFormula::Kind kind, std::vector<LtlPtr> kids = {}) {
  auto f = std::make_shared<LtlFormula>();
  f->kind = kind;
  f->kids = std::move(kids);
  return f;
}

} // namespace

LtlPtr to_ltl(const FormulaPtr& f) {
  switch (f->kind) {
    case Formula::Kind::Prob: {
      auto out = std::make_shared<LtlFormula>();
      out->kind = LtlFormula::Kind::Prob;
      out->pred = f->pred;
      return out;
    }
    case Formula::Kind::Mode: {
      auto out = std::make_shared<LtlFormula>();
      out->kind = LtlFormula::Kind::Mode;
      out->modes = f->modes;
      return out;
    }
    case Formula::Kind::And: {
      std::vector<LtlPtr> kids;
      for (const auto& k : f->kids) kids.push_back(to_ltl(k));
      return make_ltl(LtlFormula::Kind::And, std::move(kids));
    }
    case Formula::Kind::Or: {
      std::vector<LtlPtr> kids;
      for (const auto& k : f->kids) kids.push_back(to_ltl(k));
      return make_ltl(LtlFormula::Kind::Or, std::move(kids));
    }
    case Formula::Kind::Until: {
      auto u = make_ltl(LtlFormula::Kind::Until,
                        {to_ltl(f->kids[0]), to_ltl(f->kids[1])});
      if (f->a > 0) return make_ltl(LtlFormula::Kind::Eventually, {u});
      return u;
    }
    case Formula::Kind::Always: {
      auto g = make_ltl(LtlFormula::Kind::Always, {to_ltl(f->kids[0])});
      if (f->a > 0) return make_ltl(LtlFormula::Kind::Eventually, {g});
      return g;
    }
  }
  throw std::logic_error("to_ltl: bad node");
}

std::string print_ltl(const LtlPtr& f) {
  switch (f->kind) {
    case LtlFormula::Kind::Prob: {
      std::string out = f->pred.negated ? "!p" : "p";
      return out + std::to_string(f->pred.id);
    }
    case LtlFormula::Kind::Mode: {
      std::string out = "mode{";
      bool first = true;
      for (int q : f->modes) {
        if (!first) out += ",";
        out += std::to_string(q);
        first = false;
      }
      return out + "}";
    }
    case LtlFormula::Kind::And:
    case LtlFormula::Kind::Or: {
      std::string out = "(";
      bool first = true;
      for (const auto& k : f->kids) {
        if (!first) out += f->kind == LtlFormula::Kind::And ? " & " : " | ";
        out += print_ltl(k);
        first = false;
      }
      return out + ")";
    }
    case LtlFormula::Kind::Until:
      return "(" + print_ltl(f->kids[0]) + " U " + print_ltl(f->kids[1]) + ")";
    case LtlFormula::Kind::Always:
      return "G " + print_ltl(f->kids[0]);
    case LtlFormula::Kind::Eventually:
      return "F " + print_ltl(f->kids[0]);
  }
  throw std::logic_error("print_ltl: bad node");
}

int n_unroll(int k, int K, int L) {
  if (L < 1 || L > K) throw std::invalid_argument("n_unroll: need 1 <= L <= K");
  if (k <= L) return 0;
  int num = k - L;
  int den = K + 1 - L;
  return (num + den - 1) / den;
}

int formula_horizon(const FormulaPtr& f) {
  switch (f->kind) {
    case Formula::Kind::Prob:
    case Formula::Kind::Mode:
      return 0;
    case Formula::Kind::And:
    case Formula::Kind::Or: {
      int h = 0;
      for (const auto& k : f->kids) h = std::max(h, formula_horizon(k));
      return h;
    }
    case Formula::Kind::Until: {
      int inner = std::max(formula_horizon(f->kids[0]), formula_horizon(f->kids[1]));
      return (f->b == kUnbounded ? f->a : f->b) + inner;
    }
    case Formula::Kind::Always:
      return (f->b == kUnbounded ? f->a : f->b) + formula_horizon(f->kids[0]);
  }
  throw std::logic_error("formula_horizon: bad node");
}

} // namespace prstl
