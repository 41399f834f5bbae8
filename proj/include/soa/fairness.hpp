#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "soa/coalition.hpp"
#include "soa/game.hpp"

namespace soa {

// Constraint over attribution values: an upper bound on one subset, a ratio
// band between two subsets, or an absolute difference band.
struct Constraint {
  enum class Kind { threshold, ratio, difference };

  Kind kind = Kind::threshold;
  Coalition subset;  // threshold
  Coalition a, b;    // ratio, difference
  double tau = 0;      // threshold: value(subset) <= tau
  double epsilon = 0;  // ratio: value(a)/value(b) within (e^-eps, e^eps)
  double delta = 0;    // difference: |value(a) - value(b)| <= delta

  static Constraint threshold(Coalition subset, double tau);
  static Constraint ratio(Coalition a, Coalition b, double epsilon);
  static Constraint difference(Coalition a, Coalition b, double delta);

  // Ratio band with lower edge 0.8, by analogy with the four-fifths
  // selection-rate rule; attributions are variance shares, not selection
  // rates, so this is a transplanted convention rather than that rule.
  static double disparate_impact_epsilon();
  static Constraint disparate_impact(Coalition a, Coalition b);
};

enum class VerdictStatus { pass, fail, indeterminate };

// Outcome of checking one constraint against attribution intervals.
// margin is the worst-case slack: the smallest distance from an interval
// endpoint to the satisfying region, negative when any endpoint violates.
// pass requires the whole interval to satisfy, fail requires all of it to
// violate; anything straddling is indeterminate.
struct Verdict {
  VerdictStatus status = VerdictStatus::indeterminate;
  double margin = 0;
  std::string detail;
  std::vector<Attribution> inputs;
};

std::string to_string(VerdictStatus s);

// Evaluates the constraint over [value - error_bound, value + error_bound]
// intervals.  Throws when a referenced subset has no attribution.
Verdict check(const Constraint& constraint, const std::vector<Attribution>& attributions);

// Shapley ratio Sh1/Sh2 of a two-input game, rewritten so no explicit
// Shapley evaluation is needed: with complements t(u) = sigma^2 - val(u),
// the ratio equals (val(1)+t(2)) / (t(1)+val(2)).
template <typename T>
T two_input_ratio(const Game<T>& game) {
  if (game.dim() != 2) throw std::invalid_argument("two_input_ratio needs a 2-input game");
  const Coalition one = Coalition::single(2, 1), two = Coalition::single(2, 2);
  const T sigma2 = game.value(Coalition::full(2));
  const T num = game.value(one) + sigma2 - game.value(two);
  const T den = sigma2 - game.value(one) + game.value(two);
  if (den == T(0))
    throw std::domain_error("two_input_ratio: zero denominator, disparity is unbounded");
  return num / den;
}

}  // namespace soa
