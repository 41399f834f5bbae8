#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "soa/coalition.hpp"
#include "soa/game.hpp"
#include "soa/multi_index.hpp"
#include "soa/pce.hpp"
#include "soa/rational.hpp"

namespace soa {

// Value of the 0/1 membership game of multi-index alpha on coalition u:
// 1 exactly when every input alpha touches lies in u.
int elementary_value(const MultiIndex& alpha, const Coalition& u);

// Shapley-Owen effect of target u in the membership game with support s,
// evaluated exactly from the defining alternating sum (the outer sum is
// grouped by coalition size; the inner alternating sum runs explicitly).
// Equals 1/(|s| - |u| + 1) when u is contained in s and 0 otherwise, which
// the tests pin against the game-module brute force.
Rational elementary_shapley_owen(const Coalition& s, const Coalition& u, int d);

// A requested support set is outside what a table covers.
class CoverageError : public std::runtime_error {
 public:
  CoverageError(Coalition support, std::string msg)
      : std::runtime_error(std::move(msg)), support(std::move(support)) {}
  Coalition support;
};

// Precomputed effects of membership games: (support s, target u) -> exact
// rational.  Pairs with both sizes within max_order are fully enumerated;
// individual pairs beyond that can be appended on demand.
class ElementaryTable {
 public:
  using Key = std::pair<std::uint32_t, std::uint32_t>;

  ElementaryTable(int d, int max_order);

  int dim() const { return d_; }
  int max_order() const { return max_order_; }
  std::size_t entry_count() const { return entries_.size(); }
  const std::map<Key, Rational>& entries() const { return entries_; }
  const std::map<Key, Rational>& extras() const { return extra_; }

  bool covers(const Coalition& s, const Coalition& u) const;
  // Exact effect; 0 for covered pairs whose target is not inside the
  // support.  Throws CoverageError outside coverage.
  Rational lookup(const Coalition& s, const Coalition& u) const;
  // Computes and stores the pair if it is not covered yet.
  void ensure(const Coalition& s, const Coalition& u);

  // Used by precompute/deserialization; key sets must stay consistent with
  // covers(), which insert() maintains.
  void insert(const Coalition& s, const Coalition& u, Rational value);

 private:
  int d_;
  int max_order_;
  std::map<Key, Rational> entries_;  // nonzero values only (u subset of s)
  std::map<Key, Rational> extra_;    // on-demand pairs outside max_order
};

// Fills the table for every support and target with sizes in
// [1, max_order]; refuses tables beyond 2e6 stored entries.
ElementaryTable precompute_table(int d, int max_order, int threads = 1);

// Model-independent bound on the magnitude of any membership-game effect of
// a subset of size |u|, from the literal size-grouped sum; collapses to
// 2^(|u|-1), which the tests enforce.
Rational kappa_exact(const Coalition& u, int d);
double kappa(const Coalition& u, int d);

// One spectral attribution: the estimate assembled from squared
// coefficients times table entries, and the certified error radius
// kappa * epsilon_l around it.
struct SpectralResult {
  Coalition subset;
  double estimate = 0;
  double epsilon_l = 0;
  double kappa = 0;
  double error_bound = 0;
};

// Assembles the Shapley-Owen estimate of u from an expansion over
// independent uniforms: sum over stored alpha != 0 of y^2 * table entry of
// (support(alpha), u).
SpectralResult spectral_shapley_owen(const Pce& pce, const Coalition& u,
                                     const ElementaryTable& table);

// Full pipeline result over several subsets.
struct EndToEndRun {
  std::vector<SpectralResult> results;
  bool converged = true;
  double epsilon_l = 0;        // worst truncation residual across builds
  int pce_terms = 0;           // stored coefficients of the (first) build
  double sigma2_estimate = 0;  // variance estimate of the (first) build
  int orderings = 1;           // expansions built (d! under dependence)
  std::optional<Pce> pce;      // the expansion, when exactly one was built
};

// Transform, expand, assemble.  Independent inputs use one expansion in
// input coordinates.  Dependent inputs are handled by averaging the
// estimates over all d! conditioning orders, because a single order aligns
// conditioning only on its prefixes; the average is exact for linear
// models under Gaussian dependence on singleton subsets (d <= 8 guard).
// With a table given, missing supports either extend it (extend_table) or
// raise CoverageError; without one, an internal table is filled lazily.
EndToEndRun end_to_end_run(const ModelFn& model, const DistributionSpec& dist,
                           const SparseConfig& cfg, const std::vector<Coalition>& subsets,
                           ElementaryTable* table = nullptr, bool extend_table = true);

// Single-subset convenience wrapper.
SpectralResult end_to_end(const ModelFn& model, const DistributionSpec& dist,
                          const SparseConfig& cfg, const Coalition& u);

}  // namespace soa
