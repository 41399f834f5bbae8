#include "soa/spectral.hpp"

#include <algorithm>
#include <cmath>

#include "soa/parallel.hpp"
#include "soa/quadrature.hpp"

namespace soa {

int elementary_value(const MultiIndex& alpha, const Coalition& u) {
  if (alpha.dim() != u.dim()) throw std::invalid_argument("dimension mismatch");
  if (alpha.is_zero())
    throw std::invalid_argument("membership game needs a nonzero multi-index");
  return alpha.support().subset_of(u) ? 1 : 0;
}

Rational elementary_shapley_owen(const Coalition& s, const Coalition& u, int d) {
  Coalition::check_dim(d);
  if (s.dim() != d || u.dim() != d) throw std::invalid_argument("dimension mismatch");
  if (s.empty_set() || u.empty_set())
    throw std::invalid_argument("support and target must be nonempty");

  const int usize = u.size();
  const int n = d - usize;

  // Inner alternating sum over the corners w of u.  The game value
  // [s - u subset of v] factors out of it, so the sum is v-independent.
  Rational inner(0);
  for_each_submask(u.bits(), [&](std::uint32_t w) {
    const bool member = (s.bits() & u.bits() & ~w) == 0;  // s cap u inside w
    if (!member) return;
    const bool negate = ((usize - std::popcount(w)) & 1) != 0;
    inner += negate ? Rational(-1) : Rational(1);
  });
  if (inner.is_zero()) return Rational(0);

  // Outer sum grouped by |v|: of the C(n, k) outside coalitions of size k,
  // exactly C(n - r, k - r) contain the r = |s - u| required members.
  const int r = (s - u).size();
  Rational outer(0);
  for (int k = r; k <= n; ++k) {
    outer += Rational(binomial(n - r, k - r), binomial(n, k));
  }
  return Rational(1, n + 1) * outer * inner;
}

ElementaryTable::ElementaryTable(int d, int max_order)
    : d_(Coalition::check_dim(d)), max_order_(max_order) {
  if (max_order < 0 || max_order > d)
    throw std::invalid_argument("max_order must lie in [0, d]");
}

bool ElementaryTable::covers(const Coalition& s, const Coalition& u) const {
  if (s.dim() != d_ || u.dim() != d_) return false;
  if (s.size() >= 1 && s.size() <= max_order_ && u.size() >= 1 && u.size() <= max_order_)
    return true;
  return extra_.count({s.bits(), u.bits()}) > 0;
}

Rational ElementaryTable::lookup(const Coalition& s, const Coalition& u) const {
  if (s.dim() != d_ || u.dim() != d_)
    throw std::invalid_argument("coalition dimension mismatch with table");
  if (!covers(s, u))
    throw CoverageError(s, "table does not cover support set " + s.to_string() +
                               " (max_order " + std::to_string(max_order_) + ")");
  auto it = entries_.find({s.bits(), u.bits()});
  if (it != entries_.end()) return it->second;
  auto ex = extra_.find({s.bits(), u.bits()});
  if (ex != extra_.end()) return ex->second;
  return Rational(0);
}

void ElementaryTable::ensure(const Coalition& s, const Coalition& u) {
  if (covers(s, u)) return;
  extra_.emplace(Key{s.bits(), u.bits()}, elementary_shapley_owen(s, u, d_));
}

void ElementaryTable::insert(const Coalition& s, const Coalition& u, Rational value) {
  if (s.dim() != d_ || u.dim() != d_)
    throw std::invalid_argument("coalition dimension mismatch with table");
  const bool core = s.size() >= 1 && s.size() <= max_order_ && u.size() >= 1 &&
                    u.size() <= max_order_;
  if (core) {
    if (!value.is_zero()) entries_[{s.bits(), u.bits()}] = std::move(value);
  } else {
    extra_[{s.bits(), u.bits()}] = std::move(value);
  }
}

namespace {

// All coalitions of size 1..max_size, ascending by bitmask.
std::vector<std::uint32_t> coalitions_up_to(int d, int max_size) {
  std::vector<std::uint32_t> out;
  const std::uint32_t all = Coalition::mask_all(d);
  for (std::uint32_t m = 1; m <= all; ++m)
    if (std::popcount(m) <= max_size) out.push_back(m);
  return out;
}

}  // namespace

ElementaryTable precompute_table(int d, int max_order, int threads) {
  ElementaryTable table(d, max_order);
  const std::vector<std::uint32_t> sets = coalitions_up_to(d, max_order);

  // Stored entries are the pairs with u inside s; count before computing.
  std::size_t stored = 0;
  for (std::uint32_t s : sets) stored += (std::size_t{1} << std::popcount(s)) - 1;
  if (stored > 2000000)
    throw std::invalid_argument(
        "table would store " + std::to_string(stored) +
        " entries; lower max_order or the dimension (guard: 2e6)");

  std::vector<std::pair<ElementaryTable::Key, Rational>> flat;
  flat.reserve(stored);
  for (std::uint32_t sm : sets) {
    for_each_submask(sm, [&](std::uint32_t um) {
      if (um == 0) return;
      flat.emplace_back(ElementaryTable::Key{sm, um}, Rational(0));
    });
  }
  parallel_chunks(flat.size(), threads, [&](std::uint64_t lo, std::uint64_t hi) {
    for (std::uint64_t i = lo; i < hi; ++i)
      flat[i].second = elementary_shapley_owen(Coalition(d, flat[i].first.first),
                                               Coalition(d, flat[i].first.second), d);
  });
  for (auto& [key, value] : flat)
    table.insert(Coalition(d, key.first), Coalition(d, key.second), std::move(value));
  return table;
}

Rational kappa_exact(const Coalition& u, int d) {
  if (u.empty_set()) throw std::invalid_argument("kappa needs a nonempty subset");
  if (u.dim() != d) throw std::invalid_argument("dimension mismatch");
  const int n = d - u.size();
  // (2^(|u|-1) / (n + 1)) * sum over outside coalitions of 1 / C(n, |v|),
  // the sum grouped by size.
  Rational sum(0);
  for (int k = 0; k <= n; ++k) sum += Rational(binomial(n, k), 1) * Rational(1, binomial(n, k));
  Rational lead(1);
  for (int i = 1; i < u.size(); ++i) lead *= Rational(2);
  return lead * Rational(1, n + 1) * sum;
}

double kappa(const Coalition& u, int d) { return kappa_exact(u, d).to_double(); }

SpectralResult spectral_shapley_owen(const Pce& pce, const Coalition& u,
                                     const ElementaryTable& table) {
  if (u.empty_set()) throw std::invalid_argument("Shapley-Owen effect needs a nonempty subset");
  if (u.dim() != pce.d) throw std::invalid_argument("subset dimension mismatch");
  if (table.dim() != pce.d)
    throw std::invalid_argument("table dimension mismatch with expansion");

  CompensatedSum acc;
  for (const auto& [alpha, y] : pce.coeffs) {
    if (alpha.is_zero()) continue;
    const Coalition s = alpha.support();
    acc.add(y * y * table.lookup(s, u).to_double());
  }
  SpectralResult r;
  r.subset = u;
  r.estimate = acc.value();
  r.epsilon_l = truncation_error(pce, pce.variance_estimate);
  r.kappa = kappa(u, pce.d);
  r.error_bound = r.kappa * r.epsilon_l;
  return r;
}

namespace {

void ensure_supports(const Pce& pce, const std::vector<Coalition>& subsets,
                     ElementaryTable& table, bool extend) {
  for (const auto& [alpha, y] : pce.coeffs) {
    if (alpha.is_zero()) continue;
    const Coalition s = alpha.support();
    for (const auto& u : subsets) {
      if (table.covers(s, u)) continue;
      if (!extend)
        throw CoverageError(s, "table does not cover support set " + s.to_string() +
                                   " (max_order " + std::to_string(table.max_order()) + ")");
      table.ensure(s, u);
    }
  }
}

}  // namespace

EndToEndRun end_to_end_run(const ModelFn& model, const DistributionSpec& dist,
                           const SparseConfig& cfg, const std::vector<Coalition>& subsets,
                           ElementaryTable* table, bool extend_table) {
  if (!dist.continuous())
    throw std::invalid_argument("end-to-end estimation needs continuous inputs");
  const int d = dist.dim();
  for (const auto& u : subsets)
    if (u.dim() != d) throw std::invalid_argument("subset dimension mismatch");

  std::optional<ElementaryTable> local;
  if (table == nullptr) {
    local.emplace(d, 0);
    table = &*local;
    extend_table = true;
  }

  EndToEndRun run;
  if (dist.independent()) {
    Pce pce = build_sparse(model, dist, cfg);
    ensure_supports(pce, subsets, *table, extend_table);
    for (const auto& u : subsets) run.results.push_back(spectral_shapley_owen(pce, u, *table));
    run.converged = pce.converged;
    run.epsilon_l = truncation_error(pce, pce.variance_estimate);
    run.pce_terms = static_cast<int>(pce.coeffs.size());
    run.sigma2_estimate = pce.variance_estimate;
    run.orderings = 1;
    run.pce = std::move(pce);
    return run;
  }

  // Dependent inputs: a single conditioning order aligns the conditional
  // structure only on its own prefixes, so average the per-order estimates
  // over all d! orders.  Each order's bound certifies its own estimate, so
  // the averaged bound certifies the average.
  if (d > 8)
    throw std::invalid_argument("dependent-input averaging is limited to d <= 8");
  std::vector<int> perm(d);
  for (int k = 0; k < d; ++k) perm[k] = k + 1;

  std::vector<CompensatedSum> est(subsets.size()), bound(subsets.size());
  run.converged = true;
  run.orderings = 0;
  bool first = true;
  do {
    DistributionSpec ordered = dist;
    ordered.set_ordering(perm);
    Pce pce = build_sparse(model, ordered, cfg);

    // Slot a of this expansion carries input perm[a]; translate each
    // requested input subset into slot space.
    std::vector<Coalition> slot_subsets;
    slot_subsets.reserve(subsets.size());
    for (const auto& u : subsets) {
      Coalition s = Coalition::empty(d);
      for (int a = 0; a < d; ++a)
        if (u.contains(perm[a])) s = s.with(a + 1);
      slot_subsets.push_back(s);
    }
    ensure_supports(pce, slot_subsets, *table, extend_table);
    for (std::size_t i = 0; i < subsets.size(); ++i) {
      SpectralResult r = spectral_shapley_owen(pce, slot_subsets[i], *table);
      est[i].add(r.estimate);
      bound[i].add(r.error_bound);
    }
    run.converged = run.converged && pce.converged;
    run.epsilon_l = std::max(run.epsilon_l, truncation_error(pce, pce.variance_estimate));
    if (first) {
      run.pce_terms = static_cast<int>(pce.coeffs.size());
      run.sigma2_estimate = pce.variance_estimate;
      first = false;
    }
    ++run.orderings;
  } while (std::next_permutation(perm.begin(), perm.end()));

  for (std::size_t i = 0; i < subsets.size(); ++i) {
    SpectralResult r;
    r.subset = subsets[i];
    r.estimate = est[i].value() / run.orderings;
    r.error_bound = bound[i].value() / run.orderings;
    r.kappa = kappa(subsets[i], d);
    r.epsilon_l = run.epsilon_l;
    run.results.push_back(r);
  }
  return run;
}

SpectralResult end_to_end(const ModelFn& model, const DistributionSpec& dist,
                          const SparseConfig& cfg, const Coalition& u) {
  EndToEndRun run = end_to_end_run(model, dist, cfg, {u});
  return run.results.front();
}

}  // namespace soa
