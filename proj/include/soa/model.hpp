#pragma once

#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "soa/distribution.hpp"
#include "soa/game.hpp"
#include "soa/pce.hpp"
#include "soa/rational.hpp"

namespace soa {

// Expression tree over inputs x1..xd.  Comparisons and logical operators
// yield 0/1; any nonzero operand counts as true.
struct ModelAst {
  enum class Kind {
    number,
    variable,
    add,
    sub,
    mul,
    div,
    pow,
    neg,
    logical_and,
    logical_or,
    logical_not,
    lt,
    le,
    gt,
    ge,
    eq,
    call_sin,
    call_cos,
    call_exp,
    call_abs,
    call_if
  };

  Kind kind = Kind::number;
  Rational number;         // Kind::number: exact literal value
  std::string lexeme;      // Kind::number: the literal as written
  int variable = 0;        // Kind::variable: 1-based input index
  int exponent = 0;        // Kind::pow: nonnegative integer power
  std::vector<ModelAst> children;

  bool operator==(const ModelAst&) const = default;
};

// Parse failure with position and the token set that would have been valid.
class ParseError : public std::runtime_error {
 public:
  ParseError(int line, int column, std::string expected, std::string detail);
  int line;
  int column;
  std::string expected;
};

// Parses the expression grammar.  Identifiers resolve to x1..x24, to a name
// in `names` (1-based position), or to a function; anything else is an
// unknown-identifier error.
ModelAst parse(const std::string& text, const std::vector<std::string>& names = {});

// Largest input index referenced; 0 for constant expressions.
int max_variable(const ModelAst& ast);

// Strict numeric evaluation; booleans as 0/1.  Throws on division by zero.
double eval(const ModelAst& ast, const Eigen::VectorXd& x);

// Exact evaluation for the enumeration path.  Rejects sin/cos/exp, whose
// values leave the rationals.
Rational eval_exact(const ModelAst& ast, const std::vector<Rational>& x);

// True when the expression contains sin, cos, or exp.
bool uses_transcendentals(const ModelAst& ast);

// Canonical text form; parse(pretty(ast)) reproduces the tree and
// pretty(parse(s)) is token-identical to s up to whitespace for text in
// canonical form.
std::string pretty(const ModelAst& ast);

// Wraps the tree as a point evaluator.
ModelFn make_evaluator(const ModelAst& ast, int d);

// Explicit finite joint law: outcome rows with exact probabilities.
struct JointPmf {
  int d = 0;
  std::vector<std::pair<std::vector<Rational>, Rational>> rows;
};

// Exact relative-importance game of a model under a finite input law:
// val(u) is the variance of the conditional expectation given the inputs
// in u, via full enumeration.
struct DiscreteGameResult {
  Game<Rational> game;
  Rational mean;
  Rational variance;
};

DiscreteGameResult exact_game(const ModelAst& ast, const DistributionSpec& dist,
                              int threads = 1);
DiscreteGameResult exact_game(const ModelAst& ast, const JointPmf& pmf, int threads = 1);

}  // namespace soa
