#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <type_traits>
#include <vector>

#include <Eigen/Dense>

#include "soa/coalition.hpp"
#include "soa/rational.hpp"

namespace soa {

// Cooperative game on inputs {1, ..., d}: one value per coalition, stored
// densely by bitmask.  val(empty) = 0 is enforced at construction.
template <typename T>
class Game {
 public:
  explicit Game(int d)
      : d_(Coalition::check_dim(d)), values_(std::size_t{1} << d, T{}) {}
  Game(int d, std::vector<T> values) : d_(Coalition::check_dim(d)), values_(std::move(values)) {
    if (values_.size() != (std::size_t{1} << d_))
      throw std::invalid_argument("game value table must have 2^d entries");
    if (!(values_[0] == T{}))
      throw std::invalid_argument("game must assign 0 to the empty coalition");
  }

  int dim() const { return d_; }
  std::size_t coalition_count() const { return values_.size(); }

  const T& value(std::uint32_t mask) const { return values_[mask]; }
  const T& value(const Coalition& u) const {
    check_dim_match(u);
    return values_[u.bits()];
  }
  void set_value(const Coalition& u, T v) {
    check_dim_match(u);
    if (u.empty_set() && !(v == T{}))
      throw std::invalid_argument("game must assign 0 to the empty coalition");
    values_[u.bits()] = std::move(v);
  }
  const T& grand_value() const { return values_.back(); }

  friend bool operator==(const Game& a, const Game& b) {
    return a.d_ == b.d_ && a.values_ == b.values_;
  }

 private:
  int d_;
  std::vector<T> values_;

  void check_dim_match(const Coalition& u) const {
    if (u.dim() != d_) throw std::invalid_argument("coalition dimension mismatch with game");
  }
};

using RationalGame = Game<Rational>;
using RealGame = Game<double>;

// One attribution result: the measured effect of `subset`, a certified
// half-width around it (0 on exact paths), and the exact value when the
// computation ran in rational arithmetic.
struct Attribution {
  Coalition subset;
  double value = 0;
  double error_bound = 0;
  bool exact = false;
  std::optional<Rational> exact_value;
};

namespace detail {

template <typename T>
T frac(long long num, long long den) {
  if constexpr (std::is_same_v<T, Rational>) {
    return Rational(num, den);
  } else {
    return static_cast<T>(num) / static_cast<T>(den);
  }
}

}  // namespace detail

// Shapley value of input i: expected marginal contribution over uniformly
// random join orders, written as the coalition-size weighted sum.
template <typename T>
T shapley(const Game<T>& g, int i) {
  const int d = g.dim();
  const std::uint32_t bit = Coalition::single(d, i).bits();
  const std::uint32_t rest = Coalition::mask_all(d) & ~bit;
  T acc{};
  for_each_submask(rest, [&](std::uint32_t v) {
    const int k = std::popcount(v);
    T w = detail::frac<T>(1, static_cast<long long>(d) * binomial(d - 1, k));
    acc += w * (g.value(v | bit) - g.value(v));
  });
  return acc;
}

// Same value computed the slow way: average marginal contribution over all
// d! permutations.  Kept as an independent path for cross-checking; d <= 8.
template <typename T>
T shapley_permutation(const Game<T>& g, int i) {
  const int d = g.dim();
  if (d > 8) throw std::invalid_argument("permutation evaluation is limited to d <= 8");
  std::vector<int> perm(d);
  for (int k = 0; k < d; ++k) perm[k] = k + 1;
  long long fact = 1;
  for (int k = 2; k <= d; ++k) fact *= k;
  const std::uint32_t bit = 1u << (i - 1);
  T acc{};
  do {
    std::uint32_t prefix = 0;
    for (int p : perm) {
      if (p == i) {
        acc += g.value(prefix | bit) - g.value(prefix);
        break;
      }
      prefix |= 1u << (p - 1);
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return acc * detail::frac<T>(1, fact);
}

// Shapley-Owen effect of a nonempty subset u: the size-weighted average over
// outside coalitions v of the alternating (inclusion-exclusion) sum of game
// values over the corners w of u laid on top of v.
template <typename T>
T shapley_owen(const Game<T>& g, const Coalition& u) {
  if (u.dim() != g.dim()) throw std::invalid_argument("coalition dimension mismatch with game");
  if (u.empty_set()) throw std::invalid_argument("Shapley-Owen effect needs a nonempty subset");
  const int d = g.dim();
  const int usize = u.size();
  const int n = d - usize;
  const std::uint32_t ubar = u.complement().bits();
  T acc{};
  for_each_submask(ubar, [&](std::uint32_t v) {
    T inner{};
    for_each_submask(u.bits(), [&](std::uint32_t w) {
      const bool negate = ((usize - std::popcount(w)) & 1) != 0;
      if (negate)
        inner -= g.value(v | w);
      else
        inner += g.value(v | w);
    });
    T weight = detail::frac<T>(1, static_cast<long long>(n + 1) * binomial(n, std::popcount(v)));
    acc += weight * inner;
  });
  return acc;
}

enum class InteractionKind { antagonistic, none, synergistic };

template <typename T>
InteractionKind classify_interaction(const T& value) {
  if (value < T{}) return InteractionKind::antagonistic;
  if (T{} < value) return InteractionKind::synergistic;
  return InteractionKind::none;
}

// Pairwise effect of {i, j}; coincides with shapley_owen on the pair and is
// the quantity whose sign classifies the interaction.
template <typename T>
T two_factor_interaction(const Game<T>& g, int i, int j) {
  if (i == j) throw std::invalid_argument("two-factor interaction needs distinct inputs");
  return shapley_owen(g, Coalition::of(g.dim(), {i, j}));
}

// Harsanyi dividends: the unique coefficients c_v with
// val(u) = sum over v subset of u of c_v.  Computed by a subset Moebius
// transform in O(d 2^d); exact zeros are dropped from the result.
template <typename T>
std::map<std::uint32_t, T> unanimity_decompose(const Game<T>& g) {
  const int d = g.dim();
  std::vector<T> f(std::size_t{1} << d);
  for (std::uint32_t m = 0; m < f.size(); ++m) f[m] = g.value(m);
  for (int b = 0; b < d; ++b) {
    const std::uint32_t bit = 1u << b;
    for (std::uint32_t m = 0; m < f.size(); ++m)
      if (m & bit) f[m] -= f[m ^ bit];
  }
  std::map<std::uint32_t, T> out;
  for (std::uint32_t m = 1; m < f.size(); ++m)
    if (!(f[m] == T{})) out.emplace(m, std::move(f[m]));
  return out;
}

// Inverse of unanimity_decompose; mostly used to cross-check round trips.
template <typename T>
Game<T> game_from_dividends(int d, const std::map<std::uint32_t, T>& dividends) {
  Game<T> g(d);
  std::vector<T> vals(std::size_t{1} << d, T{});
  for (const auto& [v, c] : dividends) {
    if (v == 0) throw std::invalid_argument("dividend on the empty coalition");
    for (std::uint32_t m = 0; m < vals.size(); ++m)
      if ((v & ~m) == 0) vals[m] += c;
  }
  return Game<T>(d, std::move(vals));
}

// Shapley value assembled from dividends: each coalition containing i shares
// its dividend equally among its members.
template <typename T>
T shapley_from_dividends(const std::map<std::uint32_t, T>& dividends, int d, int i) {
  Coalition::check_dim(d);
  if (i < 1 || i > d) throw std::out_of_range("input index outside [1, d]");
  const std::uint32_t bit = 1u << (i - 1);
  T acc{};
  for (const auto& [v, c] : dividends) {
    if (v & bit) acc += c * detail::frac<T>(1, std::popcount(v));
  }
  return acc;
}

// Shapley-Owen effect from a dividend map: coalitions containing all of u
// contribute their dividend split over |v| - |u| + 1 shares.
template <typename T>
T mobius_shapley_owen(const std::map<std::uint32_t, T>& dividends, const Coalition& u) {
  if (u.empty_set()) throw std::invalid_argument("Shapley-Owen effect needs a nonempty subset");
  const std::uint32_t ub = u.bits();
  T acc{};
  for (const auto& [v, c] : dividends) {
    if ((ub & ~v) == 0)
      acc += c * detail::frac<T>(1, std::popcount(v) - u.size() + 1);
  }
  return acc;
}

// Bracketing of the Shapley-Owen effect of u for variance decompositions
// (all dividends nonnegative): the own-term sigma2_u from below, the full
// tail gamma_u from above, and the midpoint of the two as a sharper upper
// bound.  lower <= effect <= sharpened <= upper holds throughout.
template <typename T>
struct Brackets {
  T lower{};
  T upper{};
  T sharpened{};
};

template <typename T>
Brackets<T> shapley_owen_brackets(const std::map<std::uint32_t, T>& sigma2, const Coalition& u) {
  if (u.empty_set()) throw std::invalid_argument("Shapley-Owen effect needs a nonempty subset");
  const std::uint32_t ub = u.bits();
  Brackets<T> b;
  for (const auto& [v, s2] : sigma2) {
    if (s2 < T{})
      throw std::domain_error("bracketing needs nonnegative partial-effect variances");
    if ((ub & ~v) == 0) {
      b.upper += s2;
      if (v == ub) b.lower = s2;
    }
  }
  b.sharpened = (b.lower + b.upper) * detail::frac<T>(1, 2);
  return b;
}

// Restriction of the game to the players other than j, with the remaining
// players renumbered in order.  Supports the balanced-contributions check.
template <typename T>
Game<T> restrict_game(const Game<T>& g, int j) {
  const int d = g.dim();
  if (d < 2) throw std::invalid_argument("cannot restrict a one-player game");
  if (j < 1 || j > d) throw std::out_of_range("input index outside [1, d]");
  const std::uint32_t low = (1u << (j - 1)) - 1;
  Game<T> out(d - 1);
  for (std::uint32_t m = 0; m < (1u << (d - 1)); ++m) {
    const std::uint32_t expanded = (m & low) | ((m & ~low) << 1);
    out.set_value(Coalition(d - 1, m), g.value(expanded));
  }
  return out;
}

// Closed form for additive models Y = sum b_i X_i with independent inputs:
// the game is additive, so each input's effect is its own variance share.
inline Eigen::VectorXd closed_form_linear(const Eigen::VectorXd& b, const Eigen::VectorXd& var) {
  if (b.size() != var.size()) throw std::invalid_argument("coefficient/variance size mismatch");
  if ((var.array() < 0).any()) throw std::invalid_argument("variances must be nonnegative");
  return (b.array().square() * var.array()).matrix();
}

// Game induced by a symmetric influence matrix: val(u) sums w(i, j) over all
// ordered pairs drawn from u, so diagonals count once and each unordered
// off-diagonal pair twice.  Under this convention the Shapley value of i is
// the plain row sum (see closed_form_graph).
inline RealGame induced_graph_game(const Eigen::MatrixXd& w) {
  const int d = static_cast<int>(w.rows());
  if (w.cols() != d) throw std::invalid_argument("influence matrix must be square");
  if ((w - w.transpose()).cwiseAbs().maxCoeff() != 0)
    throw std::invalid_argument("influence matrix must be symmetric");
  Coalition::check_dim(d);
  RealGame g(d);
  for (std::uint32_t m = 1; m < (1u << d); ++m) {
    double v = 0;
    for (int i = 0; i < d; ++i) {
      if (!((m >> i) & 1)) continue;
      for (int j = 0; j < d; ++j)
        if ((m >> j) & 1) v += w(i, j);
    }
    g.set_value(Coalition(d, m), v);
  }
  return g;
}

// Shapley values of the induced graph game: row sums of w.
inline Eigen::VectorXd closed_form_graph(const Eigen::MatrixXd& w) {
  if (w.cols() != w.rows()) throw std::invalid_argument("influence matrix must be square");
  if ((w - w.transpose()).cwiseAbs().maxCoeff() != 0)
    throw std::invalid_argument("influence matrix must be symmetric");
  return w.rowwise().sum();
}

// Shapley effects of a linear model Y = b' X under X ~ N(mu, Sigma): the
// marginal contribution of i past a coalition u is the squared conditional
// covariance of X_i with Y over the conditional variance of X_i, averaged
// with the usual Shapley weights.  Exact up to linear algebra in double.
inline Eigen::VectorXd closed_form_linear_gaussian(const Eigen::VectorXd& b,
                                                   const Eigen::MatrixXd& sigma) {
  const int d = static_cast<int>(b.size());
  if (sigma.rows() != d || sigma.cols() != d)
    throw std::invalid_argument("covariance dimension mismatch");
  if (d < 1 || d > 20) throw std::invalid_argument("closed form supports 1 <= d <= 20");
  if (!sigma.isApprox(sigma.transpose(), 1e-12))
    throw std::invalid_argument("covariance must be symmetric");
  Eigen::LLT<Eigen::MatrixXd> llt(sigma);
  if (llt.info() != Eigen::Success)
    throw std::invalid_argument("covariance must be positive definite");

  Eigen::VectorXd out = Eigen::VectorXd::Zero(d);
  for (int i = 0; i < d; ++i) {
    const std::uint32_t rest = Coalition::mask_all(d) & ~(1u << i);
    double acc = 0;
    for_each_submask(rest, [&](std::uint32_t um) {
      std::vector<int> cond, free_idx;
      for (int k = 0; k < d; ++k)
        ((um >> k) & 1 ? cond : free_idx).push_back(k);
      const int nf = static_cast<int>(free_idx.size());
      Eigen::MatrixXd s_ff(nf, nf);
      Eigen::VectorXd b_f(nf);
      for (int a = 0; a < nf; ++a) {
        b_f(a) = b(free_idx[a]);
        for (int c = 0; c < nf; ++c) s_ff(a, c) = sigma(free_idx[a], free_idx[c]);
      }
      Eigen::MatrixXd s_cond = s_ff;
      if (!cond.empty()) {
        const int nc = static_cast<int>(cond.size());
        Eigen::MatrixXd s_cc(nc, nc), s_fc(nf, nc);
        for (int a = 0; a < nc; ++a)
          for (int c = 0; c < nc; ++c) s_cc(a, c) = sigma(cond[a], cond[c]);
        for (int a = 0; a < nf; ++a)
          for (int c = 0; c < nc; ++c) s_fc(a, c) = sigma(free_idx[a], cond[c]);
        s_cond -= s_fc * s_cc.ldlt().solve(s_fc.transpose());
      }
      int pos = 0;
      while (free_idx[pos] != i) ++pos;
      const double cov_iy = (s_cond * b_f)(pos);
      const double var_i = s_cond(pos, pos);
      const double w = 1.0 / (d * static_cast<double>(binomial(d - 1, std::popcount(um))));
      acc += w * (cov_iy * cov_iy) / var_i;
    });
    out(i) = acc;
  }
  return out;
}

}  // namespace soa
