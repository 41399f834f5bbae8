#include "soa/fairness.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace soa {

Constraint Constraint::threshold(Coalition subset, double tau) {
  if (subset.empty_set()) throw std::invalid_argument("threshold subset must be nonempty");
  if (!(tau >= 0)) throw std::invalid_argument("threshold tau must be >= 0");
  Constraint c;
  c.kind = Kind::threshold;
  c.subset = subset;
  c.tau = tau;
  return c;
}

Constraint Constraint::ratio(Coalition a, Coalition b, double epsilon) {
  if (a.empty_set() || b.empty_set())
    throw std::invalid_argument("ratio subsets must be nonempty");
  if (!(epsilon > 0)) throw std::invalid_argument("ratio epsilon must be > 0");
  Constraint c;
  c.kind = Kind::ratio;
  c.a = a;
  c.b = b;
  c.epsilon = epsilon;
  return c;
}

Constraint Constraint::difference(Coalition a, Coalition b, double delta) {
  if (a.empty_set() || b.empty_set())
    throw std::invalid_argument("difference subsets must be nonempty");
  if (!(delta >= 0)) throw std::invalid_argument("difference delta must be >= 0");
  Constraint c;
  c.kind = Kind::difference;
  c.a = a;
  c.b = b;
  c.delta = delta;
  return c;
}

double Constraint::disparate_impact_epsilon() { return -std::log(0.8); }

Constraint Constraint::disparate_impact(Coalition a, Coalition b) {
  return ratio(a, b, disparate_impact_epsilon());
}

std::string to_string(VerdictStatus s) {
  switch (s) {
    case VerdictStatus::pass:
      return "pass";
    case VerdictStatus::fail:
      return "fail";
    case VerdictStatus::indeterminate:
      return "indeterminate";
  }
  return "indeterminate";
}

namespace {

struct Interval {
  double lo = 0;
  double hi = 0;
};

const Attribution& find_attribution(const std::vector<Attribution>& attrs,
                                    const Coalition& u) {
  for (const auto& a : attrs)
    if (a.subset.dim() == u.dim() && a.subset.bits() == u.bits()) return a;
  throw std::invalid_argument("no attribution for subset " + u.to_string());
}

Interval interval_of(const Attribution& a) {
  const double e = a.exact ? 0.0 : a.error_bound;
  return {a.value - e, a.value + e};
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(12);
  os << v;
  return os.str();
}

// Classifies the tested interval against a satisfying band [blo, bhi]
// (either edge may be infinite).  margin = worst-case slack.
Verdict band_verdict(Interval x, double blo, double bhi, std::string quantity) {
  Verdict v;
  double slack = std::numeric_limits<double>::infinity();
  if (std::isfinite(blo)) slack = std::min(slack, x.lo - blo);
  if (std::isfinite(bhi)) slack = std::min(slack, bhi - x.hi);
  v.margin = slack;
  const bool disjoint = x.hi < blo || x.lo > bhi;
  if (slack >= 0)
    v.status = VerdictStatus::pass;
  else if (disjoint)
    v.status = VerdictStatus::fail;
  else
    v.status = VerdictStatus::indeterminate;
  std::ostringstream os;
  os << quantity << " in [" << fmt(x.lo) << ", " << fmt(x.hi) << "], required in [";
  os << (std::isfinite(blo) ? fmt(blo) : "-inf") << ", ";
  os << (std::isfinite(bhi) ? fmt(bhi) : "inf") << "]: " << to_string(v.status);
  v.detail = os.str();
  return v;
}

}  // namespace

Verdict check(const Constraint& constraint, const std::vector<Attribution>& attributions) {
  const double inf = std::numeric_limits<double>::infinity();
  switch (constraint.kind) {
    case Constraint::Kind::threshold: {
      const Attribution& a = find_attribution(attributions, constraint.subset);
      Verdict v = band_verdict(interval_of(a), -inf, constraint.tau,
                               "value" + constraint.subset.to_string());
      v.inputs = {a};
      return v;
    }
    case Constraint::Kind::ratio: {
      const Attribution& a = find_attribution(attributions, constraint.a);
      const Attribution& b = find_attribution(attributions, constraint.b);
      const Interval ia = interval_of(a), ib = interval_of(b);
      if (ib.lo <= 0 && ib.hi >= 0) {
        Verdict v;
        v.status = VerdictStatus::indeterminate;
        v.margin = -inf;
        v.detail = "denominator interval [" + fmt(ib.lo) + ", " + fmt(ib.hi) +
                   "] for value" + constraint.b.to_string() +
                   " contains 0; the ratio is unbounded over the error bounds";
        v.inputs = {a, b};
        return v;
      }
      const double q[] = {ia.lo / ib.lo, ia.lo / ib.hi, ia.hi / ib.lo, ia.hi / ib.hi};
      const Interval r{std::min(std::min(q[0], q[1]), std::min(q[2], q[3])),
                       std::max(std::max(q[0], q[1]), std::max(q[2], q[3]))};
      Verdict v = band_verdict(r, std::exp(-constraint.epsilon), std::exp(constraint.epsilon),
                               "ratio value" + constraint.a.to_string() + " / value" +
                                   constraint.b.to_string());
      v.inputs = {a, b};
      return v;
    }
    case Constraint::Kind::difference: {
      const Attribution& a = find_attribution(attributions, constraint.a);
      const Attribution& b = find_attribution(attributions, constraint.b);
      const Interval ia = interval_of(a), ib = interval_of(b);
      const Interval diff{ia.lo - ib.hi, ia.hi - ib.lo};
      Verdict v = band_verdict(diff, -constraint.delta, constraint.delta,
                               "difference value" + constraint.a.to_string() + " - value" +
                                   constraint.b.to_string());
      v.inputs = {a, b};
      return v;
    }
  }
  throw std::logic_error("unhandled constraint kind");
}

}  // namespace soa
