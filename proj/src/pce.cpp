#include "soa/pce.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <stdexcept>

#include "soa/basis.hpp"
#include "soa/parallel.hpp"
#include "soa/quadrature.hpp"
#include "soa/rosenblatt.hpp"

namespace soa {

double mean(const Pce& pce) {
  auto it = pce.coeffs.find(MultiIndex::zero(pce.d));
  if (it == pce.coeffs.end())
    throw std::logic_error("expansion is missing its mean coefficient");
  return it->second;
}

double variance(const Pce& pce) {
  CompensatedSum s;
  for (const auto& [a, y] : pce.coeffs)
    if (!a.is_zero()) s.add(y * y);
  return s.value();
}

double truncation_error(const Pce& pce, double sigma2_total) {
  const double retained = variance(pce);
  const double tol = 1e-8 * std::max(1.0, std::abs(sigma2_total));
  if (sigma2_total < retained - tol)
    throw std::invalid_argument(
        "total variance is below the retained variance: inconsistent sigma2");
  return std::max(0.0, sigma2_total - retained);
}

double chebyshev_tail(const Pce& pce, double sigma2_total, double t) {
  if (!(t > 0)) throw std::invalid_argument("deviation level t must be positive");
  const double e = truncation_error(pce, sigma2_total);
  return (e * e) / (t * t);
}

double partial_variance(const Pce& pce, const Coalition& u) {
  if (u.empty_set()) throw std::invalid_argument("partial variance needs a nonempty subset");
  if (u.dim() != pce.d) throw std::invalid_argument("subset dimension mismatch");
  CompensatedSum s;
  for (const auto& [a, y] : pce.coeffs)
    if (!a.is_zero() && a.support() == u) s.add(y * y);
  return s.value();
}

namespace {

void require_independent(const Pce& pce, const char* what) {
  if (!pce.distribution.independent())
    throw std::invalid_argument(std::string(what) +
                                " decompose variance per input subset, which needs "
                                "independent inputs; this expansion's distribution is dependent");
}

}  // namespace

double sobol(const Pce& pce, const Coalition& u) {
  require_independent(pce, "Sobol indices");
  if (u.empty_set()) throw std::invalid_argument("Sobol index needs a nonempty subset");
  if (u.dim() != pce.d) throw std::invalid_argument("subset dimension mismatch");
  CompensatedSum s;
  for (const auto& [a, y] : pce.coeffs)
    if (!a.is_zero() && a.support().subset_of(u)) s.add(y * y);
  return s.value();
}

double total_sobol(const Pce& pce, const Coalition& u) {
  require_independent(pce, "Sobol indices");
  if (u.empty_set()) throw std::invalid_argument("Sobol index needs a nonempty subset");
  if (u.dim() != pce.d) throw std::invalid_argument("subset dimension mismatch");
  CompensatedSum s;
  for (const auto& [a, y] : pce.coeffs)
    if (!a.is_zero() && !(a.support() & u).empty_set()) s.add(y * y);
  return s.value();
}

namespace {

// Model composed with the inverse transform so it takes points of
// [-1, 1]^d.  Independent products keep slot k = input k; a joint normal's
// slots follow its conditioning order.
struct ComposedModel {
  ModelFn g;
  bool identity = false;
};

bool is_unit_uniform(const DistributionSpec& dist) {
  if (!dist.is_independent_product()) return false;
  for (const auto& m : dist.marginals())
    if (m.type != Marginal::Type::uniform || m.a != -1 || m.b != 1) return false;
  return true;
}

ComposedModel compose(const ModelFn& model, const DistributionSpec& dist) {
  if (is_unit_uniform(dist)) return {model, true};
  DistributionSpec spec = dist;
  if (dist.is_independent_product()) {
    // Independence makes the conditioning order immaterial; pin the
    // identity so expansion coordinates always mean input coordinates.
    std::vector<int> id(dist.dim());
    for (int k = 0; k < dist.dim(); ++k) id[k] = k + 1;
    spec.set_ordering(std::move(id));
  }
  auto tr = std::make_shared<Rosenblatt>(std::move(spec));
  ModelFn g = [tr, model](const Eigen::VectorXd& u) { return model(tr->inverse(u)); };
  return {std::move(g), false};
}

// Model values over a tensor grid, chunked across threads, stored by flat
// node index so the result is independent of scheduling.
std::vector<double> grid_values(const ModelFn& g, const TensorRule& grid, int threads) {
  std::vector<double> vals(grid.node_count());
  parallel_chunks(grid.node_count(), threads, [&](std::uint64_t lo, std::uint64_t hi) {
    for (std::uint64_t i = lo; i < hi; ++i) vals[i] = g(grid.node(i));
  });
  return vals;
}

// Normalized Legendre values per dimension: table[i][n] = P~_n(node_i).
std::vector<std::vector<double>> legendre_table(const QuadratureRule& rule, int max_degree) {
  std::vector<std::vector<double>> t(rule.points());
  for (int i = 0; i < rule.points(); ++i) {
    t[i].resize(max_degree + 1);
    legendre_normalized_values(max_degree, rule.nodes(i), t[i]);
  }
  return t;
}

// Projection of the tabulated model values onto the basis element alpha,
// summed in grid order with compensation.
double project_on_grid(const std::vector<double>& gvals, const TensorRule& grid,
                       const std::vector<std::vector<double>>& lvals,
                       const MultiIndex& alpha) {
  const int d = grid.dim();
  const int m = grid.rule1d().points();
  std::vector<int> idx(d, 0);
  CompensatedSum s;
  for (std::uint64_t flat = 0; flat < grid.node_count(); ++flat) {
    double w = 1.0;
    for (int k = 0; k < d; ++k) {
      const auto& row = lvals[idx[k]];
      w *= grid.rule1d().weights(idx[k]) * row[alpha[k]];
    }
    s.add(w * gvals[flat]);
    for (int k = d - 1; k >= 0; --k) {
      if (++idx[k] < m) break;
      idx[k] = 0;
    }
  }
  return s.value();
}

}  // namespace

Pce build_sparse(const ModelFn& model, const DistributionSpec& dist, const SparseConfig& cfg) {
  if (!(cfg.q > 0 && cfg.q <= 1)) throw std::invalid_argument("q must lie in (0, 1]");
  if (!(cfg.epsilon > 0)) throw std::invalid_argument("epsilon must be positive");
  if (cfg.p_max < 0) throw std::invalid_argument("p_max must be nonnegative");
  if (cfg.degree_hint < 0) throw std::invalid_argument("degree hint must be nonnegative");
  if (!(cfg.chebyshev_t > 0)) throw std::invalid_argument("chebyshev_t must be positive");
  if (!dist.continuous())
    throw std::invalid_argument(
        "sparse construction needs continuous inputs; finite discrete laws go through "
        "exact enumeration instead");

  const int d = dist.dim();
  ComposedModel cm = compose(model, dist);

  Pce out;
  out.d = d;
  out.distribution = dist;
  out.epsilon = cfg.epsilon;

  // Variance estimate: quadrature of the composed model and its square on a
  // hint-sized grid; Monte Carlo fallback when the grid would overflow.
  const int sigma_points = cfg.degree_hint + 3;
  double y0 = 0;
  bool grid_sigma = true;
  {
    long double nodes = 1;
    for (int k = 0; k < d; ++k) nodes *= sigma_points;
    grid_sigma = nodes <= 1e8;
  }
  if (grid_sigma) {
    TensorRule grid(gauss_legendre(sigma_points), d);
    std::vector<double> gvals = grid_values(cm.g, grid, cfg.threads);
    CompensatedSum s1, s2;
    std::uint64_t flat = 0;
    grid.for_each_node([&](const Eigen::VectorXd&, double w, std::uint64_t) {
      const double v = gvals[flat++];
      s1.add(w * v);
      s2.add(w * v * v);
    });
    y0 = s1.value();
    out.variance_estimate = std::max(0.0, s2.value() - y0 * y0);
  } else {
    // Welford over seeded samples of the original distribution.
    const int n = 100000;
    Eigen::MatrixXd xs = sample(dist, n, cfg.seed);
    double m = 0, m2 = 0;
    for (int r = 0; r < n; ++r) {
      const double v = model(xs.row(r).transpose());
      const double delta = v - m;
      m += delta / (r + 1);
      m2 += delta * (v - m);
    }
    y0 = m;
    out.variance_estimate = m2 / (n - 1);
    out.sigma2_stderr = out.variance_estimate * std::sqrt(2.0 / (n - 1));
  }

  out.coeffs.emplace(MultiIndex::zero(d), y0);

  const double sigma2 = out.variance_estimate;
  const double kappa_coeff =
      cfg.kappa_coeff > 0 ? cfg.kappa_coeff : 1e-8 * std::sqrt(std::max(sigma2, 0.0));
  // Coefficients indistinguishable from quadrature noise are withheld
  // entirely: within the rule's exactness degree they would be exact zeros.
  const double noise_floor = 1e-13 * std::max(1.0, std::sqrt(std::max(sigma2, 0.0)));

  double retained = 0;
  auto residual = [&]() { return sigma2 - retained; };
  auto stopped = [&]() {
    if (cfg.use_chebyshev) {
      const double r = std::max(0.0, residual());
      return (r * r) / (cfg.chebyshev_t * cfg.chebyshev_t) < cfg.epsilon;
    }
    return residual() < cfg.epsilon;
  };

  out.construction_log.push_back({0, 1, 1, 0, residual()});
  if (stopped()) {
    out.converged = true;
    return out;
  }

  std::map<MultiIndex, double, MultiIndexOrder> waiting;
  for (int p = 1; p <= cfg.p_max; ++p) {
    const std::vector<MultiIndex> ring = q_norm_ring(d, cfg.q, p);
    RingLog log{p, static_cast<int>(ring.size()), 0, 0, 0};
    if (!ring.empty()) {
      const int points = points_for_degree(p, cfg.degree_hint);
      TensorRule grid(gauss_legendre(points), d);
      const std::vector<double> gvals = grid_values(cm.g, grid, cfg.threads);
      const auto lvals = legendre_table(grid.rule1d(), p);

      std::vector<double> ys(ring.size());
      parallel_chunks(ring.size(), cfg.threads, [&](std::uint64_t lo, std::uint64_t hi) {
        for (std::uint64_t i = lo; i < hi; ++i)
          ys[i] = project_on_grid(gvals, grid, lvals, ring[i]);
      });

      for (std::size_t i = 0; i < ring.size(); ++i) {
        const double y = ys[i];
        if (std::abs(y) < noise_floor) continue;
        if (std::abs(y) >= kappa_coeff) {
          out.coeffs.emplace(ring[i], y);
          retained += y * y;
          ++log.admitted;
        } else {
          waiting.emplace(ring[i], y);
        }
      }
    }
    if (!waiting.empty()) {
      auto best = waiting.begin();
      for (auto it = waiting.begin(); it != waiting.end(); ++it)
        if (std::abs(it->second) > std::abs(best->second)) best = it;
      out.coeffs.emplace(best->first, best->second);
      retained += best->second * best->second;
      waiting.erase(best);
      log.promoted = 1;
    }
    log.residual = residual();
    out.construction_log.push_back(log);
    if (stopped()) {
      out.converged = true;
      return out;
    }
  }
  out.converged = false;
  return out;
}

LooValidation loo_validate(const ModelFn& model, const DistributionSpec& dist,
                           const std::vector<Eigen::VectorXd>& samples,
                           const std::vector<MultiIndex>& terms) {
  const int n = static_cast<int>(samples.size());
  const int m = static_cast<int>(terms.size());
  if (n < 10) throw std::invalid_argument("leave-one-out validation needs >= 10 samples");
  if (n < m)
    throw std::invalid_argument("degenerate regression: fewer samples than basis terms");
  if (!dist.continuous())
    throw std::invalid_argument("leave-one-out validation needs continuous inputs");

  const int d = dist.dim();
  std::optional<Rosenblatt> tr;
  if (!is_unit_uniform(dist)) {
    DistributionSpec spec = dist;
    if (dist.is_independent_product()) {
      std::vector<int> id(d);
      for (int k = 0; k < d; ++k) id[k] = k + 1;
      spec.set_ordering(std::move(id));
    }
    tr.emplace(std::move(spec));
  }

  int max_deg = 0;
  for (const auto& a : terms) max_deg = std::max(max_deg, a.max_degree());

  Eigen::MatrixXd a(n, m);
  Eigen::VectorXd y(n);
  std::vector<double> lv(max_deg + 1);
  for (int r = 0; r < n; ++r) {
    if (samples[r].size() != d) throw std::invalid_argument("sample dimension mismatch");
    y(r) = model(samples[r]);
    const Eigen::VectorXd u = tr ? tr->forward(samples[r]) : samples[r];
    for (int j = 0; j < m; ++j) {
      double prod = 1.0;
      for (int k = 0; k < d; ++k) {
        const int deg = terms[j][k];
        if (deg == 0) continue;
        legendre_normalized_values(deg, u(k), lv);
        prod *= lv[deg];
      }
      a(r, j) = prod;
    }
  }

  LooValidation out;
  Eigen::VectorXd fitted = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd hat = Eigen::VectorXd::Zero(n);
  if (m > 0) {
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
    Eigen::VectorXd c = qr.solve(y);
    fitted = a * c;
    // Leverages via the thin Q factor: h_r = || row r of Q_thin ||^2.
    Eigen::MatrixXd qthin =
        qr.householderQ() * Eigen::MatrixXd::Identity(n, m);
    hat = qthin.rowwise().squaredNorm();
  }
  CompensatedSum press;
  for (int r = 0; r < n; ++r) {
    const double denom = 1.0 - hat(r);
    if (denom <= 1e-12)
      throw std::invalid_argument(
          "degenerate regression: a sample is fitted exactly (hat value 1)");
    const double e = (y(r) - fitted(r)) / denom;
    press.add(e * e);
  }
  out.l1o = press.value() / n;

  const double mean_y = y.mean();
  const double s2 = (y.array() - mean_y).square().sum() / (n - 1);
  if (s2 < 1e-300)
    out.quality = out.l1o <= 1e-14 ? 1.0 : 0.0;
  else
    out.quality = 1.0 - out.l1o / s2;
  return out;
}

}  // namespace soa
