#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "soa/coalition.hpp"
#include "soa/distribution.hpp"
#include "soa/game.hpp"
#include "soa/model.hpp"
#include "soa/rational.hpp"

using soa::Coalition;
using soa::DistributionSpec;
using soa::JointPmf;
using soa::Marginal;
using soa::ModelAst;
using soa::ParseError;
using soa::Rational;

namespace {

double eval_at(const std::string& text, std::initializer_list<double> xs) {
  const ModelAst ast = soa::parse(text);
  Eigen::VectorXd x(static_cast<int>(xs.size()));
  int i = 0;
  for (double v : xs) x(i++) = v;
  return soa::eval(ast, x);
}

DistributionSpec fair_coins(int d) {
  std::vector<Marginal> ms(static_cast<std::size_t>(d),
                           Marginal::bernoulli_with(Rational(1, 2)));
  return DistributionSpec::independent(std::move(ms));
}

}  // namespace

TEST_SUITE_BEGIN("model");

TEST_CASE("arithmetic follows standard precedence and associativity") {
  CHECK(eval_at("1 + 2 * 3", {}) == 7.0);
  CHECK(eval_at("(1 + 2) * 3", {}) == 9.0);
  CHECK(eval_at("2 ^ 3", {}) == 8.0);
  CHECK(eval_at("-2 ^ 2", {}) == 4.0);  // the sign belongs to the base
  CHECK(eval_at("(x1 ^ 2) ^ 3", {2}) == 64.0);
  CHECK_THROWS_AS(soa::parse("2 ^ 3 ^ 2"), ParseError);  // exponents are literals
  CHECK(eval_at("10 - 4 - 3", {}) == 3.0);   // left-associative subtraction
  CHECK(eval_at("12 / 4 / 3", {}) == 1.0);
  CHECK(eval_at("2 * x1 + x2", {3, 1}) == 7.0);
  CHECK(eval_at("1.5e1 + 0.25", {}) == 15.25);
}

TEST_CASE("comparisons and logic yield zero or one") {
  CHECK(eval_at("3 < 5", {}) == 1.0);
  CHECK(eval_at("3 >= 5", {}) == 0.0);
  CHECK(eval_at("2 = 2", {}) == 1.0);
  CHECK(eval_at("(1 < 2) and (3 > 4)", {}) == 0.0);
  CHECK(eval_at("(1 < 2) or (3 > 4)", {}) == 1.0);
  CHECK(eval_at("not (1 < 2)", {}) == 0.0);
  CHECK(eval_at("not 0", {}) == 1.0);
  CHECK(eval_at("0.5 and 2", {}) == 1.0);  // any nonzero operand is true
  CHECK(eval_at("if(x1 > 0, 10, 20)", {1}) == 10.0);
  CHECK(eval_at("if(x1 > 0, 10, 20)", {-1}) == 20.0);
}

TEST_CASE("builtin functions evaluate numerically") {
  CHECK(eval_at("sin(0)", {}) == 0.0);
  CHECK(eval_at("cos(0)", {}) == 1.0);
  CHECK(eval_at("exp(1)", {}) == doctest::Approx(std::exp(1.0)).epsilon(1e-15));
  CHECK(eval_at("abs(-3.5)", {}) == 3.5);
}

TEST_CASE("named inputs resolve by position, fallbacks by x-index") {
  const ModelAst named = soa::parse("income + 2 * age", {"income", "age"});
  Eigen::VectorXd x(2);
  x << 10, 3;
  CHECK(soa::eval(named, x) == 16.0);
  CHECK(soa::max_variable(named) == 2);

  const ModelAst fallback = soa::parse("x2 - x1");
  CHECK(soa::eval(fallback, x) == -7.0);
  CHECK(soa::max_variable(soa::parse("3 + 4")) == 0);
}

TEST_CASE("parse errors carry position and expectation") {
  CHECK_THROWS_AS(soa::parse("1 +"), ParseError);
  CHECK_THROWS_AS(soa::parse("(1 + 2"), ParseError);
  CHECK_THROWS_AS(soa::parse("x1 ^ 2.5"), ParseError);
  CHECK_THROWS_AS(soa::parse("x1 ^ -2"), ParseError);
  CHECK_THROWS_AS(soa::parse("x1 ^ 1001"), ParseError);
  CHECK_THROWS_AS(soa::parse("sin(1, 2)"), ParseError);
  CHECK_THROWS_AS(soa::parse("if(1, 2)"), ParseError);
  CHECK_THROWS_AS(soa::parse("frobnicate(1)"), ParseError);
  CHECK_THROWS_AS(soa::parse("x25"), ParseError);
  CHECK_THROWS_AS(soa::parse("wage + 1", {"income"}), ParseError);
  CHECK_THROWS_AS(soa::parse(""), ParseError);

  try {
    soa::parse("1 + \n  * 2");
  } catch (const ParseError& e) {
    CHECK(e.line == 2);
    CHECK(e.column == 3);
    CHECK(!e.expected.empty());
  }
  try {
    soa::parse("unknownvar");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("unknown identifier") != std::string::npos);
  }
}

TEST_CASE("exact evaluation agrees with numeric evaluation on rational points") {
  const std::vector<std::string> exprs = {
      "x1 + x2 * x3",          "x1 ^ 3 - x2 / 4",
      "(x1 < x2) and (x3 >= 0)", "if(x1 > 1/2, x2, x3)",
      "abs(x1 - x2) + 2",      "not (x1 = x2)"};
  const std::vector<Rational> pts = {Rational(1, 2), Rational(-3, 4), Rational(2)};
  Eigen::VectorXd xd(3);
  for (int i = 0; i < 3; ++i) xd(i) = pts[i].to_double();
  for (const auto& s : exprs) {
    const ModelAst ast = soa::parse(s);
    CHECK_MESSAGE(soa::eval_exact(ast, pts).to_double() ==
                      doctest::Approx(soa::eval(ast, xd)).epsilon(1e-15),
                  s);
  }
}

TEST_CASE("exact evaluation rejects transcendentals, numeric flags them") {
  const ModelAst ast = soa::parse("sin(x1) + 1");
  CHECK(soa::uses_transcendentals(ast));
  CHECK_FALSE(soa::uses_transcendentals(soa::parse("abs(x1) + x2 ^ 2")));
  CHECK_THROWS_AS(soa::eval_exact(ast, {Rational(0)}), std::domain_error);
}

TEST_CASE("division by zero is an error in both evaluators") {
  const ModelAst ast = soa::parse("1 / x1");
  Eigen::VectorXd x(1);
  x << 0.0;
  CHECK_THROWS_AS(soa::eval(ast, x), std::domain_error);
  CHECK_THROWS_AS(soa::eval_exact(ast, {Rational(0)}), std::domain_error);
}

TEST_CASE("pretty-printing round-trips the tree") {
  const std::vector<std::string> exprs = {
      "x1 + x2 * x3",
      "(x1 + x2) * x3",
      "(x1 ^ 2) ^ 3",
      "-x1 ^ 2",
      "(-x1) ^ 2",
      "x1 - (x2 - x3)",
      "x1 / x2 / x3",
      "(x1 and x2) or (not x3)",
      "if(x1 < x2, abs(x1), exp(x2))",
      "not (x1 or x2)",
      "1.25 * x1 - 3 / 4",
  };
  for (const auto& s : exprs) {
    const ModelAst ast = soa::parse(s);
    const std::string printed = soa::pretty(ast);
    CHECK_MESSAGE(soa::parse(printed) == ast, s << "  ->  " << printed);
    // Canonical text is a fixed point of parse-then-print.
    CHECK(soa::pretty(soa::parse(printed)) == printed);
  }
  // Number literals keep their written form.
  CHECK(soa::pretty(soa::parse("1.5e1 + x1")) == "1.5e1 + x1");
}

TEST_CASE("the evaluator wrapper checks dimensions") {
  const soa::ModelFn f = soa::make_evaluator(soa::parse("x1 + x2"), 2);
  Eigen::VectorXd x(2);
  x << 1, 2;
  CHECK(f(x) == 3.0);
  Eigen::VectorXd bad(3);
  bad << 1, 2, 3;
  CHECK_THROWS_AS(f(bad), std::invalid_argument);
  CHECK_THROWS_AS(soa::make_evaluator(soa::parse("x3"), 2), std::invalid_argument);
}

TEST_CASE("enumeration reproduces a propositional game exactly") {
  // y = (x1 and x2) or (not x1 and x3) over three fair coins.
  const ModelAst ast = soa::parse("(x1 and x2) or (not x1 and x3)");
  const soa::DiscreteGameResult r = soa::exact_game(ast, fair_coins(3));

  CHECK(r.mean == Rational(1, 2));
  CHECK(r.variance == Rational(1, 4));
  CHECK(r.game.value(Coalition::empty(3)) == Rational(0));
  CHECK(r.game.value(Coalition::single(3, 1)) == Rational(0));
  CHECK(r.game.value(Coalition::single(3, 2)) == Rational(1, 16));
  CHECK(r.game.value(Coalition::single(3, 3)) == Rational(1, 16));
  CHECK(r.game.value(Coalition::of(3, {1, 2})) == Rational(1, 8));
  CHECK(r.game.value(Coalition::of(3, {1, 3})) == Rational(1, 8));
  CHECK(r.game.value(Coalition::of(3, {2, 3})) == Rational(1, 8));
  CHECK(r.game.value(Coalition::full(3)) == Rational(1, 4));
  // Law of total variance: conditioning on everything recovers sigma2.
  CHECK(r.game.grand_value() == r.variance);
}

TEST_CASE("enumeration of a two-input disjunction") {
  const soa::DiscreteGameResult r = soa::exact_game(soa::parse("x1 or x2"), fair_coins(2));
  CHECK(r.mean == Rational(3, 4));
  CHECK(r.variance == Rational(3, 16));
  CHECK(r.game.value(Coalition::single(2, 1)) == Rational(1, 16));
  CHECK(r.game.value(Coalition::single(2, 2)) == Rational(1, 16));
}

TEST_CASE("enumeration handles non-uniform discrete marginals") {
  // E[y] and the one-input game for y = x1 with P(x1 = 1) = 1/4.
  soa::DiscreteGameResult r =
      soa::exact_game(soa::parse("x1"), DistributionSpec::independent(
                                            {Marginal::bernoulli_with(Rational(1, 4))}));
  CHECK(r.mean == Rational(1, 4));
  CHECK(r.variance == Rational(3, 16));  // p(1-p)
  CHECK(r.game.value(Coalition::single(1, 1)) == Rational(3, 16));

  // Three-point marginal with exact fractional support.
  soa::DiscreteMarginal dm;
  dm.values = {Rational(-1), Rational(0), Rational(1)};
  dm.probs = {Rational(1, 4), Rational(1, 2), Rational(1, 4)};
  r = soa::exact_game(soa::parse("x1 ^ 2"),
                      DistributionSpec::independent({Marginal::discrete_with(dm)}));
  CHECK(r.mean == Rational(1, 2));
  CHECK(r.variance == Rational(1, 4));
}

TEST_CASE("an explicit joint law captures dependence") {
  // Perfectly correlated coins: knowing either input resolves the sum.
  JointPmf pmf;
  pmf.d = 2;
  pmf.rows = {{{Rational(0), Rational(0)}, Rational(1, 2)},
              {{Rational(1), Rational(1)}, Rational(1, 2)}};
  const soa::DiscreteGameResult r = soa::exact_game(soa::parse("x1 + x2"), pmf);
  CHECK(r.mean == Rational(1));
  CHECK(r.variance == Rational(1));
  CHECK(r.game.value(Coalition::single(2, 1)) == Rational(1));
  CHECK(r.game.value(Coalition::single(2, 2)) == Rational(1));
  CHECK(r.game.grand_value() == Rational(1));
}

TEST_CASE("joint laws are validated") {
  JointPmf bad;
  bad.d = 2;
  bad.rows = {{{Rational(0)}, Rational(1)}};  // row arity mismatch
  CHECK_THROWS_AS(soa::exact_game(soa::parse("x1"), bad), std::invalid_argument);

  JointPmf negative;
  negative.d = 1;
  negative.rows = {{{Rational(0)}, Rational(3, 2)}, {{Rational(1)}, Rational(-1, 2)}};
  CHECK_THROWS_AS(soa::exact_game(soa::parse("x1"), negative), std::invalid_argument);

  JointPmf off_total;
  off_total.d = 1;
  off_total.rows = {{{Rational(0)}, Rational(1, 3)}, {{Rational(1)}, Rational(1, 3)}};
  CHECK_THROWS_AS(soa::exact_game(soa::parse("x1"), off_total), std::invalid_argument);
}

TEST_CASE("enumeration refuses continuous laws and transcendental models") {
  const DistributionSpec continuous =
      DistributionSpec::independent({Marginal::uniform_on(0, 1)});
  CHECK_THROWS_AS(soa::exact_game(soa::parse("x1"), continuous), std::invalid_argument);
  CHECK_THROWS_AS(soa::exact_game(soa::parse("sin(x1)"), fair_coins(1)), std::domain_error);
}

TEST_CASE("threaded enumeration matches single-threaded results") {
  const ModelAst ast = soa::parse("(x1 and x2) or (not x1 and x3) + x4 * x2");
  const soa::DiscreteGameResult a = soa::exact_game(ast, fair_coins(4), 1);
  const soa::DiscreteGameResult b = soa::exact_game(ast, fair_coins(4), 4);
  CHECK(a.mean == b.mean);
  CHECK(a.variance == b.variance);
  for (std::uint32_t m = 0; m < 16; ++m)
    CHECK(a.game.value(Coalition(4, m)) == b.game.value(Coalition(4, m)));
}

TEST_SUITE_END();
