#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <vector>

#include <Eigen/Dense>

#include "soa/coalition.hpp"
#include "soa/distribution.hpp"
#include "soa/multi_index.hpp"

namespace soa {

using ModelFn = std::function<double(const Eigen::VectorXd&)>;

// Knobs of the sparse construction.
struct SparseConfig {
  double q = 1.0;          // q-norm of the truncation simplex, in (0, 1]
  double epsilon = 1e-8;   // target residual variance
  double kappa_coeff = 0;  // immediate-admission cutoff; 0 means 1e-8 * sqrt(sigma2)
  int p_max = 12;          // largest simplex radius explored
  bool use_chebyshev = false;  // stop on the concentration bound instead of the residual
  double chebyshev_t = 1.0;    // deviation level t for the concentration stoppage
  int degree_hint = 10;        // assumed model degree for sizing quadrature rules
  std::uint64_t seed = 0x5eedb0b5u;  // Monte Carlo variance fallback seed
  int threads = 1;
};

// One ring of the construction audit trail.
struct RingLog {
  int ring = 0;       // simplex radius p
  int candidates = 0; // indices whose projection was computed
  int admitted = 0;   // stored via the magnitude threshold
  int promoted = 0;   // stored via the waiting-set promotion
  double residual = 0;  // sigma2 estimate minus retained variance, after the ring
};

// Truncated expansion of a model in the orthonormal Legendre tensor basis
// over [-1, 1]^d; for non-uniform inputs the coefficients describe the
// model composed with the inverse transform, and `distribution` records the
// original input law.
struct Pce {
  int d = 0;
  std::map<MultiIndex, double, MultiIndexOrder> coeffs;  // always contains index 0
  DistributionSpec distribution = DistributionSpec::independent(
      {Marginal::uniform_on(-1, 1)});
  double variance_estimate = 0;  // sigma2-hat of the underlying model
  double sigma2_stderr = 0;      // nonzero only for the Monte Carlo fallback
  bool converged = false;
  double epsilon = 0;  // the target the construction ran with
  std::vector<RingLog> construction_log;
};

// y_0.
double mean(const Pce& pce);

// Retained variance: sum of squared coefficients over alpha != 0.
double variance(const Pce& pce);

// Residual variance sigma2_total - variance(pce), clamped at 0; throws if
// the difference is negative beyond numerical tolerance (inconsistent
// sigma2).
double truncation_error(const Pce& pce, double sigma2_total);

// Tail bound (1/t^2) * (sigma2_total - variance(pce))^2 on the probability
// that the truncation error exceeds t.
double chebyshev_tail(const Pce& pce, double sigma2_total, double t);

// Variance carried by terms supported exactly on u.
double partial_variance(const Pce& pce, const Coalition& u);

// Sobol index: variance explained by subsets of u.  The total index counts
// every term touching u.  Both require independent inputs.
double sobol(const Pce& pce, const Coalition& u);
double total_sobol(const Pce& pce, const Coalition& u);

// Builds a sparse expansion by scanning q-norm rings p = 0, 1, 2, ...:
// candidates are projected on a per-ring Gauss-Legendre tensor grid, terms
// with |y| >= kappa_coeff are stored immediately, smaller ones wait, and
// after each ring the largest waiting coefficient is promoted.  Stops when
// the residual variance drops below cfg.epsilon (or the concentration bound
// does, with use_chebyshev) or when p_max is exhausted, in which case the
// result carries converged = false.
Pce build_sparse(const ModelFn& model, const DistributionSpec& dist, const SparseConfig& cfg);

// Leave-one-out cross-validation of a regression fit of the model onto the
// given basis terms at the given sample points (input space).
struct LooValidation {
  double l1o = 0;      // mean squared leave-one-out residual
  double quality = 0;  // 1 - l1o / sample variance of the model
};
LooValidation loo_validate(const ModelFn& model, const DistributionSpec& dist,
                           const std::vector<Eigen::VectorXd>& samples,
                           const std::vector<MultiIndex>& terms);

}  // namespace soa
