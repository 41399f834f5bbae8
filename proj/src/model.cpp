#include "soa/model.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <stdexcept>

#include "soa/parallel.hpp"

namespace soa {

ParseError::ParseError(int line, int column, std::string expected_, std::string detail)
    : std::runtime_error("parse error at line " + std::to_string(line) + ", column " +
                         std::to_string(column) + ": " + detail +
                         (expected_.empty() ? "" : " (expected " + expected_ + ")")),
      line(line),
      column(column),
      expected(std::move(expected_)) {}

namespace {

struct Token {
  enum class Type { number, ident, op, end };
  Type type = Type::end;
  std::string text;
  int line = 1;
  int col = 1;
};

class Lexer {
 public:
  explicit Lexer(const std::string& text) : text_(text) { advance(); }

  const Token& peek() const { return tok_; }
  Token take() {
    Token t = tok_;
    advance();
    return t;
  }

 private:
  const std::string& text_;
  std::size_t pos_ = 0;
  int line_ = 1;
  int col_ = 1;
  Token tok_;

  void advance() {
    while (pos_ < text_.size() &&
           (text_[pos_] == ' ' || text_[pos_] == '\t' || text_[pos_] == '\n' ||
            text_[pos_] == '\r')) {
      if (text_[pos_] == '\n') {
        ++line_;
        col_ = 1;
      } else {
        ++col_;
      }
      ++pos_;
    }
    tok_ = Token{Token::Type::end, "", line_, col_};
    if (pos_ >= text_.size()) return;

    const char c = text_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      std::size_t start = pos_;
      bool seen_dot = false, seen_exp = false;
      while (pos_ < text_.size()) {
        const char k = text_[pos_];
        if (std::isdigit(static_cast<unsigned char>(k))) {
          ++pos_;
        } else if (k == '.' && !seen_dot && !seen_exp) {
          seen_dot = true;
          ++pos_;
        } else if ((k == 'e' || k == 'E') && !seen_exp && pos_ + 1 < text_.size() &&
                   (std::isdigit(static_cast<unsigned char>(text_[pos_ + 1])) ||
                    ((text_[pos_ + 1] == '+' || text_[pos_ + 1] == '-') &&
                     pos_ + 2 < text_.size() &&
                     std::isdigit(static_cast<unsigned char>(text_[pos_ + 2]))))) {
          seen_exp = true;
          pos_ += 2;  // consume e and the sign or first digit
        } else {
          break;
        }
      }
      tok_ = Token{Token::Type::number, text_.substr(start, pos_ - start), line_, col_};
      col_ += static_cast<int>(pos_ - start);
      return;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t start = pos_;
      while (pos_ < text_.size() &&
             (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
        ++pos_;
      tok_ = Token{Token::Type::ident, text_.substr(start, pos_ - start), line_, col_};
      col_ += static_cast<int>(pos_ - start);
      return;
    }
    // Operators, longest match first.
    static const char* two[] = {"<=", ">="};
    for (const char* op : two) {
      if (text_.compare(pos_, 2, op) == 0) {
        tok_ = Token{Token::Type::op, op, line_, col_};
        pos_ += 2;
        col_ += 2;
        return;
      }
    }
    static const std::string singles = "+-*/^(),<>=";
    if (singles.find(c) != std::string::npos) {
      tok_ = Token{Token::Type::op, std::string(1, c), line_, col_};
      ++pos_;
      ++col_;
      return;
    }
    throw ParseError(line_, col_, "", std::string("unexpected character '") + c + "'");
  }
};

class Parser {
 public:
  Parser(const std::string& text, const std::vector<std::string>& names)
      : lex_(text), names_(names) {}

  ModelAst run() {
    ModelAst ast = parse_or();
    const Token& t = lex_.peek();
    if (t.type != Token::Type::end)
      throw ParseError(t.line, t.col, "end of input", "trailing input '" + t.text + "'");
    return ast;
  }

 private:
  Lexer lex_;
  const std::vector<std::string>& names_;

  bool peek_op(const char* op) const {
    return lex_.peek().type == Token::Type::op && lex_.peek().text == op;
  }
  bool peek_kw(const char* kw) const {
    return lex_.peek().type == Token::Type::ident && lex_.peek().text == kw;
  }
  Token expect_op(const char* op) {
    if (!peek_op(op)) {
      const Token& t = lex_.peek();
      throw ParseError(t.line, t.col, std::string("'") + op + "'",
                       "unexpected token '" + t.text + "'");
    }
    return lex_.take();
  }

  static ModelAst binary(ModelAst::Kind kind, ModelAst lhs, ModelAst rhs) {
    ModelAst n;
    n.kind = kind;
    n.children.push_back(std::move(lhs));
    n.children.push_back(std::move(rhs));
    return n;
  }

  ModelAst parse_or() {
    ModelAst lhs = parse_and();
    while (peek_kw("or")) {
      lex_.take();
      lhs = binary(ModelAst::Kind::logical_or, std::move(lhs), parse_and());
    }
    return lhs;
  }

  ModelAst parse_and() {
    ModelAst lhs = parse_not();
    while (peek_kw("and")) {
      lex_.take();
      lhs = binary(ModelAst::Kind::logical_and, std::move(lhs), parse_not());
    }
    return lhs;
  }

  ModelAst parse_not() {
    if (peek_kw("not")) {
      lex_.take();
      ModelAst n;
      n.kind = ModelAst::Kind::logical_not;
      n.children.push_back(parse_cmp());
      return n;
    }
    return parse_cmp();
  }

  ModelAst parse_cmp() {
    ModelAst lhs = parse_sum();
    static const std::pair<const char*, ModelAst::Kind> cmps[] = {
        {"<=", ModelAst::Kind::le}, {">=", ModelAst::Kind::ge}, {"<", ModelAst::Kind::lt},
        {">", ModelAst::Kind::gt},  {"=", ModelAst::Kind::eq},
    };
    for (const auto& [op, kind] : cmps) {
      if (peek_op(op)) {
        lex_.take();
        return binary(kind, std::move(lhs), parse_sum());
      }
    }
    return lhs;
  }

  ModelAst parse_sum() {
    ModelAst lhs = parse_term();
    while (peek_op("+") || peek_op("-")) {
      const bool add = lex_.take().text == "+";
      lhs = binary(add ? ModelAst::Kind::add : ModelAst::Kind::sub, std::move(lhs),
                   parse_term());
    }
    return lhs;
  }

  ModelAst parse_term() {
    ModelAst lhs = parse_pow();
    while (peek_op("*") || peek_op("/")) {
      const bool mul = lex_.take().text == "*";
      lhs = binary(mul ? ModelAst::Kind::mul : ModelAst::Kind::div, std::move(lhs),
                   parse_pow());
    }
    return lhs;
  }

  ModelAst parse_pow() {
    ModelAst base = parse_unary();
    if (peek_op("^")) {
      lex_.take();
      const Token t = lex_.peek();
      if (t.type != Token::Type::number ||
          t.text.find_first_not_of("0123456789") != std::string::npos)
        throw ParseError(t.line, t.col, "integer exponent",
                         "non-integer exponent '" + t.text + "'");
      lex_.take();
      ModelAst n;
      n.kind = ModelAst::Kind::pow;
      n.exponent = static_cast<int>(std::stoll(t.text));
      if (n.exponent > 1000)
        throw ParseError(t.line, t.col, "exponent <= 1000", "exponent too large");
      n.children.push_back(std::move(base));
      return n;
    }
    return base;
  }

  ModelAst parse_unary() {
    if (peek_op("-")) {
      lex_.take();
      ModelAst n;
      n.kind = ModelAst::Kind::neg;
      n.children.push_back(parse_atom());
      return n;
    }
    return parse_atom();
  }

  int resolve_variable(const Token& t) {
    for (std::size_t i = 0; i < names_.size(); ++i)
      if (names_[i] == t.text) return static_cast<int>(i) + 1;
    if (t.text.size() >= 2 && t.text[0] == 'x' &&
        t.text.find_first_not_of("0123456789", 1) == std::string::npos) {
      const long idx = std::stol(t.text.substr(1));
      if (idx >= 1 && idx <= Coalition::kMaxDim) return static_cast<int>(idx);
      throw ParseError(t.line, t.col, "input index in [1, 24]",
                       "input index out of range in '" + t.text + "'");
    }
    throw ParseError(t.line, t.col, "variable, number, function, or '('",
                     "unknown identifier '" + t.text + "'");
  }

  ModelAst parse_atom() {
    const Token t = lex_.peek();
    if (t.type == Token::Type::number) {
      lex_.take();
      ModelAst n;
      n.kind = ModelAst::Kind::number;
      n.lexeme = t.text;
      try {
        n.number = Rational::parse(t.text);
      } catch (const std::exception& e) {
        throw ParseError(t.line, t.col, "number", e.what());
      }
      return n;
    }
    if (t.type == Token::Type::ident) {
      lex_.take();
      if (peek_op("(")) {
        static const std::pair<const char*, std::pair<ModelAst::Kind, int>> funcs[] = {
            {"sin", {ModelAst::Kind::call_sin, 1}},
            {"cos", {ModelAst::Kind::call_cos, 1}},
            {"exp", {ModelAst::Kind::call_exp, 1}},
            {"abs", {ModelAst::Kind::call_abs, 1}},
            {"if", {ModelAst::Kind::call_if, 3}},
        };
        for (const auto& [name, sig] : funcs) {
          if (t.text == name) {
            expect_op("(");
            ModelAst n;
            n.kind = sig.first;
            n.children.push_back(parse_or());
            while (peek_op(",")) {
              lex_.take();
              n.children.push_back(parse_or());
            }
            expect_op(")");
            if (static_cast<int>(n.children.size()) != sig.second)
              throw ParseError(t.line, t.col, std::to_string(sig.second) + " argument(s)",
                               std::string("wrong arity for ") + name);
            return n;
          }
        }
        throw ParseError(t.line, t.col, "sin, cos, exp, abs, or if",
                         "unknown function '" + t.text + "'");
      }
      ModelAst n;
      n.kind = ModelAst::Kind::variable;
      n.variable = resolve_variable(t);
      return n;
    }
    if (peek_op("(")) {
      lex_.take();
      ModelAst inner = parse_or();
      expect_op(")");
      return inner;
    }
    throw ParseError(t.line, t.col, "variable, number, function, or '('",
                     t.type == Token::Type::end ? "unexpected end of input"
                                                : "unexpected token '" + t.text + "'");
  }
};

}  // namespace

ModelAst parse(const std::string& text, const std::vector<std::string>& names) {
  if (text.empty()) throw ParseError(1, 1, "an expression", "empty input");
  return Parser(text, names).run();
}

int max_variable(const ModelAst& ast) {
  int m = ast.kind == ModelAst::Kind::variable ? ast.variable : 0;
  for (const auto& c : ast.children) m = std::max(m, max_variable(c));
  return m;
}

bool uses_transcendentals(const ModelAst& ast) {
  if (ast.kind == ModelAst::Kind::call_sin || ast.kind == ModelAst::Kind::call_cos ||
      ast.kind == ModelAst::Kind::call_exp)
    return true;
  for (const auto& c : ast.children)
    if (uses_transcendentals(c)) return true;
  return false;
}

double eval(const ModelAst& ast, const Eigen::VectorXd& x) {
  using K = ModelAst::Kind;
  auto truth = [](double v) { return v != 0.0; };
  switch (ast.kind) {
    case K::number:
      return ast.number.to_double();
    case K::variable:
      if (ast.variable > x.size())
        throw std::invalid_argument("evaluation point has too few coordinates");
      return x(ast.variable - 1);
    case K::add:
      return eval(ast.children[0], x) + eval(ast.children[1], x);
    case K::sub:
      return eval(ast.children[0], x) - eval(ast.children[1], x);
    case K::mul:
      return eval(ast.children[0], x) * eval(ast.children[1], x);
    case K::div: {
      const double b = eval(ast.children[1], x);
      if (b == 0) throw std::domain_error("division by zero");
      return eval(ast.children[0], x) / b;
    }
    case K::pow: {
      double base = eval(ast.children[0], x), out = 1;
      for (int e = ast.exponent; e > 0; e >>= 1, base *= base)
        if (e & 1) out *= base;
      return out;
    }
    case K::neg:
      return -eval(ast.children[0], x);
    case K::logical_and:
      return (truth(eval(ast.children[0], x)) && truth(eval(ast.children[1], x))) ? 1 : 0;
    case K::logical_or:
      return (truth(eval(ast.children[0], x)) || truth(eval(ast.children[1], x))) ? 1 : 0;
    case K::logical_not:
      return truth(eval(ast.children[0], x)) ? 0 : 1;
    case K::lt:
      return eval(ast.children[0], x) < eval(ast.children[1], x) ? 1 : 0;
    case K::le:
      return eval(ast.children[0], x) <= eval(ast.children[1], x) ? 1 : 0;
    case K::gt:
      return eval(ast.children[0], x) > eval(ast.children[1], x) ? 1 : 0;
    case K::ge:
      return eval(ast.children[0], x) >= eval(ast.children[1], x) ? 1 : 0;
    case K::eq:
      return eval(ast.children[0], x) == eval(ast.children[1], x) ? 1 : 0;
    case K::call_sin:
      return std::sin(eval(ast.children[0], x));
    case K::call_cos:
      return std::cos(eval(ast.children[0], x));
    case K::call_exp:
      return std::exp(eval(ast.children[0], x));
    case K::call_abs:
      return std::abs(eval(ast.children[0], x));
    case K::call_if: {
      const double c = eval(ast.children[0], x);
      const double a = eval(ast.children[1], x);
      const double b = eval(ast.children[2], x);
      return truth(c) ? a : b;
    }
  }
  throw std::logic_error("unhandled expression node");
}

Rational eval_exact(const ModelAst& ast, const std::vector<Rational>& x) {
  using K = ModelAst::Kind;
  auto truth = [](const Rational& v) { return !v.is_zero(); };
  switch (ast.kind) {
    case K::number:
      return ast.number;
    case K::variable:
      if (ast.variable > static_cast<int>(x.size()))
        throw std::invalid_argument("evaluation point has too few coordinates");
      return x[ast.variable - 1];
    case K::add:
      return eval_exact(ast.children[0], x) + eval_exact(ast.children[1], x);
    case K::sub:
      return eval_exact(ast.children[0], x) - eval_exact(ast.children[1], x);
    case K::mul:
      return eval_exact(ast.children[0], x) * eval_exact(ast.children[1], x);
    case K::div: {
      const Rational b = eval_exact(ast.children[1], x);
      if (b.is_zero()) throw std::domain_error("division by zero");
      return eval_exact(ast.children[0], x) / b;
    }
    case K::pow: {
      Rational base = eval_exact(ast.children[0], x), out(1);
      for (int e = ast.exponent; e > 0; e >>= 1) {
        if (e & 1) out *= base;
        if (e > 1) base *= base;
      }
      return out;
    }
    case K::neg:
      return -eval_exact(ast.children[0], x);
    case K::logical_and:
      return Rational(truth(eval_exact(ast.children[0], x)) &&
                              truth(eval_exact(ast.children[1], x))
                          ? 1
                          : 0);
    case K::logical_or:
      return Rational(truth(eval_exact(ast.children[0], x)) ||
                              truth(eval_exact(ast.children[1], x))
                          ? 1
                          : 0);
    case K::logical_not:
      return Rational(truth(eval_exact(ast.children[0], x)) ? 0 : 1);
    case K::lt:
      return Rational(eval_exact(ast.children[0], x) < eval_exact(ast.children[1], x) ? 1 : 0);
    case K::le:
      return Rational(eval_exact(ast.children[0], x) <= eval_exact(ast.children[1], x) ? 1 : 0);
    case K::gt:
      return Rational(eval_exact(ast.children[0], x) > eval_exact(ast.children[1], x) ? 1 : 0);
    case K::ge:
      return Rational(eval_exact(ast.children[0], x) >= eval_exact(ast.children[1], x) ? 1 : 0);
    case K::eq:
      return Rational(eval_exact(ast.children[0], x) == eval_exact(ast.children[1], x) ? 1 : 0);
    case K::call_sin:
    case K::call_cos:
    case K::call_exp:
      throw std::domain_error(
          "expression uses sin/cos/exp; exact enumeration needs rational-valued operations");
    case K::call_abs:
      return abs(eval_exact(ast.children[0], x));
    case K::call_if: {
      const Rational c = eval_exact(ast.children[0], x);
      const Rational a = eval_exact(ast.children[1], x);
      const Rational b = eval_exact(ast.children[2], x);
      return truth(c) ? a : b;
    }
  }
  throw std::logic_error("unhandled expression node");
}

namespace {

// Grammar levels, loosest first; a child is parenthesized when its level is
// below what its position requires.
int level(const ModelAst& n) {
  using K = ModelAst::Kind;
  switch (n.kind) {
    case K::logical_or:
      return 1;
    case K::logical_and:
      return 2;
    case K::logical_not:
      return 3;
    case K::lt:
    case K::le:
    case K::gt:
    case K::ge:
    case K::eq:
      return 4;
    case K::add:
    case K::sub:
      return 5;
    case K::mul:
    case K::div:
      return 6;
    case K::pow:
      return 7;
    case K::neg:
      return 8;
    default:
      return 9;
  }
}

void print(const ModelAst& n, int min_level, std::string& out) {
  using K = ModelAst::Kind;
  const bool parens = level(n) < min_level;
  if (parens) out += "(";
  switch (n.kind) {
    case K::number:
      if (!n.lexeme.empty()) {
        out += n.lexeme;
      } else if (n.number.is_integer()) {
        out += n.number.to_string();
      } else {
        // No decimal lexeme to reproduce: fall back to a division form,
        // which preserves the value though not the node shape.
        out += "(" + detail::int128_to_string(n.number.num()) + " / " +
               detail::int128_to_string(n.number.den()) + ")";
      }
      break;
    case K::variable:
      out += "x" + std::to_string(n.variable);
      break;
    case K::add:
    case K::sub:
      print(n.children[0], 5, out);
      out += n.kind == K::add ? " + " : " - ";
      print(n.children[1], 6, out);
      break;
    case K::mul:
    case K::div:
      print(n.children[0], 6, out);
      out += n.kind == K::mul ? " * " : " / ";
      print(n.children[1], 7, out);
      break;
    case K::pow:
      print(n.children[0], 8, out);
      out += " ^ " + std::to_string(n.exponent);
      break;
    case K::neg:
      out += "-";
      print(n.children[0], 9, out);
      break;
    case K::logical_or:
      print(n.children[0], 1, out);
      out += " or ";
      print(n.children[1], 2, out);
      break;
    case K::logical_and:
      print(n.children[0], 2, out);
      out += " and ";
      print(n.children[1], 3, out);
      break;
    case K::logical_not:
      out += "not ";
      print(n.children[0], 4, out);
      break;
    case K::lt:
    case K::le:
    case K::gt:
    case K::ge:
    case K::eq: {
      print(n.children[0], 5, out);
      const char* op = n.kind == K::lt   ? " < "
                       : n.kind == K::le ? " <= "
                       : n.kind == K::gt ? " > "
                       : n.kind == K::ge ? " >= "
                                         : " = ";
      out += op;
      print(n.children[1], 5, out);
      break;
    }
    case K::call_sin:
    case K::call_cos:
    case K::call_exp:
    case K::call_abs:
    case K::call_if: {
      const char* name = n.kind == K::call_sin   ? "sin"
                         : n.kind == K::call_cos ? "cos"
                         : n.kind == K::call_exp ? "exp"
                         : n.kind == K::call_abs ? "abs"
                                                 : "if";
      out += name;
      out += "(";
      for (std::size_t i = 0; i < n.children.size(); ++i) {
        if (i) out += ", ";
        print(n.children[i], 1, out);
      }
      out += ")";
      break;
    }
  }
  if (parens) out += ")";
}

}  // namespace

std::string pretty(const ModelAst& ast) {
  std::string out;
  print(ast, 1, out);
  return out;
}

ModelFn make_evaluator(const ModelAst& ast, int d) {
  if (max_variable(ast) > d)
    throw std::invalid_argument("expression references inputs beyond the dimension");
  return [ast, d](const Eigen::VectorXd& x) {
    if (x.size() != d) throw std::invalid_argument("evaluation point dimension mismatch");
    return eval(ast, x);
  };
}

namespace {

using Outcome = std::pair<std::vector<Rational>, Rational>;

std::vector<Outcome> product_outcomes(const DistributionSpec& dist) {
  if (!dist.is_independent_product() || !dist.discrete())
    throw std::invalid_argument(
        "exact enumeration needs finite discrete marginals (or an explicit joint pmf)");
  const int d = dist.dim();
  std::vector<DiscreteMarginal> dms;
  dms.reserve(d);
  unsigned long long count = 1;
  for (const auto& m : dist.marginals()) {
    dms.push_back(m.as_discrete());
    count *= dms.back().values.size();
    if (count > (1ull << 24))
      throw std::invalid_argument("outcome count exceeds 2^24; enumeration refused");
  }
  std::vector<Outcome> out;
  out.reserve(count);
  std::vector<std::size_t> idx(d, 0);
  while (true) {
    std::vector<Rational> x(d);
    Rational p(1);
    for (int k = 0; k < d; ++k) {
      x[k] = dms[k].values[idx[k]];
      p *= dms[k].probs[idx[k]];
    }
    if (!p.is_zero()) out.emplace_back(std::move(x), std::move(p));
    int k = d - 1;
    while (k >= 0 && ++idx[k] == dms[k].values.size()) idx[k--] = 0;
    if (k < 0) break;
  }
  return out;
}

DiscreteGameResult enumerate_game(const ModelAst& ast, std::vector<Outcome> outcomes, int d,
                                  int threads) {
  if (max_variable(ast) > d)
    throw std::invalid_argument("expression references inputs beyond the dimension");
  if (uses_transcendentals(ast))
    throw std::domain_error(
        "expression uses sin/cos/exp; exact enumeration needs rational-valued operations");

  const std::size_t n = outcomes.size();
  std::vector<Rational> y(n);
  parallel_chunks(n, threads, [&](std::uint64_t lo, std::uint64_t hi) {
    for (std::uint64_t i = lo; i < hi; ++i) y[i] = eval_exact(ast, outcomes[i].first);
  });

  Rational mean(0), second(0);
  for (std::size_t i = 0; i < n; ++i) {
    mean += outcomes[i].second * y[i];
    second += outcomes[i].second * y[i] * y[i];
  }
  const Rational variance = second - mean * mean;

  const std::uint32_t full = Coalition::mask_all(d);
  std::vector<Rational> vals(std::size_t{1} << d, Rational(0));
  vals[full] = variance;
  // Masks are independent work items; each groups outcomes by the projected
  // coordinates and sums conditional means.
  parallel_chunks(full, std::min(threads, 8), [&](std::uint64_t lo, std::uint64_t hi) {
    for (std::uint64_t m = lo; m < hi; ++m) {
      const std::uint32_t mask = static_cast<std::uint32_t>(m) + 1;  // skip empty
      if (mask == full) continue;
      std::map<std::vector<Rational>, std::pair<Rational, Rational>> groups;
      std::vector<int> members;
      for (int k = 0; k < d; ++k)
        if ((mask >> k) & 1) members.push_back(k);
      std::vector<Rational> key(members.size());
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < members.size(); ++j)
          key[j] = outcomes[i].first[members[j]];
        auto& g = groups[key];
        g.first += outcomes[i].second;
        g.second += outcomes[i].second * y[i];
      }
      Rational acc(0);
      for (const auto& [k, g] : groups) acc += g.second * g.second / g.first;
      vals[mask] = acc - mean * mean;
    }
  });

  DiscreteGameResult r{Game<Rational>(d, std::move(vals)), mean, variance};
  return r;
}

}  // namespace

DiscreteGameResult exact_game(const ModelAst& ast, const DistributionSpec& dist, int threads) {
  return enumerate_game(ast, product_outcomes(dist), dist.dim(), threads);
}

DiscreteGameResult exact_game(const ModelAst& ast, const JointPmf& pmf, int threads) {
  if (pmf.d < 1 || pmf.d > Coalition::kMaxDim)
    throw std::invalid_argument("joint pmf dimension must lie in [1, 24]");
  if (pmf.rows.empty()) throw std::invalid_argument("joint pmf has no rows");
  if (pmf.rows.size() > (1ull << 24))
    throw std::invalid_argument("outcome count exceeds 2^24; enumeration refused");
  std::map<std::vector<Rational>, Rational> merged;
  Rational total(0);
  for (const auto& [x, p] : pmf.rows) {
    if (static_cast<int>(x.size()) != pmf.d)
      throw std::invalid_argument("joint pmf row dimension mismatch");
    if (p < Rational(0)) throw std::invalid_argument("joint pmf probabilities must be >= 0");
    total += p;
    if (!p.is_zero()) merged[x] += p;
  }
  if (total != Rational(1))
    throw std::invalid_argument("joint pmf probabilities must sum to 1 exactly");
  std::vector<Outcome> outcomes;
  outcomes.reserve(merged.size());
  for (auto& [x, p] : merged) outcomes.emplace_back(x, p);
  return enumerate_game(ast, std::move(outcomes), pmf.d, threads);
}

}  // namespace soa
