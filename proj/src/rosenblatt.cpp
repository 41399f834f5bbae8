#include "soa/rosenblatt.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

#include <Eigen/Cholesky>

namespace soa {

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

namespace {

// Rational approximation with |relative error| < 1.15e-9 (Acklam's
// coefficients), used only as the Newton starting point.
double quantile_seed(double p) {
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00,  2.938163982698783e+00};
  static const double dd[] = {7.784695709041462e-03, 3.224671290700398e-01,
                              2.445134137142996e+00, 3.754408661907416e+00};
  const double plow = 0.02425;
  if (p < plow) {
    const double q = std::sqrt(-2 * std::log(p));
    return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((dd[0] * q + dd[1]) * q + dd[2]) * q + dd[3]) * q + 1);
  }
  if (p > 1 - plow) {
    const double q = std::sqrt(-2 * std::log(1 - p));
    return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((dd[0] * q + dd[1]) * q + dd[2]) * q + dd[3]) * q + 1);
  }
  const double q = p - 0.5;
  const double r = q * q;
  return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
         (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1);
}

double normal_pdf(double x) {
  return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}

}  // namespace

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0))
    throw std::domain_error("normal quantile needs p in (0, 1)");
  double x = quantile_seed(p);
  // Two Newton steps push the seed's ~1e-9 relative error below 1e-12.
  for (int it = 0; it < 2; ++it) {
    const double err = normal_cdf(x) - p;
    const double dens = normal_pdf(x);
    if (dens <= 0) break;
    x -= err / dens;
  }
  return x;
}

namespace {

double uniform_cdf(const Marginal& m, double x) {
  if (x <= m.a) return 0;
  if (x >= m.b) return 1;
  return (x - m.a) / (m.b - m.a);
}

double marginal_cdf_1d(const Marginal& m, double x) {
  switch (m.type) {
    case Marginal::Type::uniform:
      return uniform_cdf(m, x);
    case Marginal::Type::normal:
      return normal_cdf((x - m.mu) / m.sigma);
    default:
      throw std::invalid_argument("transform requires continuous marginals");
  }
}

double marginal_quantile_1d(const Marginal& m, double p) {
  switch (m.type) {
    case Marginal::Type::uniform:
      return m.a + p * (m.b - m.a);
    case Marginal::Type::normal:
      return m.mu + m.sigma * normal_quantile(p);
    default:
      throw std::invalid_argument("transform requires continuous marginals");
  }
}

// Maps a cdf value in (0, 1) to [-1, 1].
double to_symmetric(double f) { return 2 * f - 1; }
double from_symmetric(double u) { return 0.5 * (u + 1); }

}  // namespace

Rosenblatt::Rosenblatt(DistributionSpec spec) : spec_(std::move(spec)) {
  if (!spec_.continuous())
    throw std::invalid_argument("Rosenblatt transform requires continuous inputs");
  order1_ = spec_.ordering();
  if (spec_.is_mvnormal()) {
    const auto& n = spec_.normal();
    const int d = spec_.dim();
    Eigen::MatrixXd cov_perm(d, d);
    mean_perm_.resize(d);
    for (int a = 0; a < d; ++a) {
      mean_perm_(a) = n.mean(order1_[a] - 1);
      for (int b = 0; b < d; ++b)
        cov_perm(a, b) = n.cov(order1_[a] - 1, order1_[b] - 1);
    }
    Eigen::LLT<Eigen::MatrixXd> llt(cov_perm);
    if (llt.info() != Eigen::Success)
      throw std::invalid_argument("covariance must be positive definite");
    chol_ = llt.matrixL();
  }
}

Eigen::VectorXd Rosenblatt::forward(const Eigen::VectorXd& x) const {
  const int d = dim();
  if (x.size() != d) throw std::invalid_argument("point dimension mismatch");
  Eigen::VectorXd u(d);
  if (spec_.is_mvnormal()) {
    // z = L^-1 (x - mu) in conditioning order; z_k is the standardized
    // residual of input order[k] given its predecessors, so its cdf is the
    // conditional cdf the transform needs.
    Eigen::VectorXd xp(d);
    for (int a = 0; a < d; ++a) xp(a) = x(order1_[a] - 1);
    Eigen::VectorXd z =
        chol_.triangularView<Eigen::Lower>().solve(xp - mean_perm_);
    for (int a = 0; a < d; ++a) u(a) = to_symmetric(normal_cdf(z(a)));
    return u;
  }
  const auto& ms = spec_.marginals();
  for (int a = 0; a < d; ++a) {
    const int i = order1_[a] - 1;
    u(a) = to_symmetric(marginal_cdf_1d(ms[i], x(i)));
  }
  return u;
}

Eigen::VectorXd Rosenblatt::inverse(const Eigen::VectorXd& u) const {
  const int d = dim();
  if (u.size() != d) throw std::invalid_argument("point dimension mismatch");
  for (int a = 0; a < d; ++a)
    if (!(u(a) > -1 && u(a) < 1))
      throw std::domain_error("inverse transform needs u in the open cube (-1, 1)^d");
  Eigen::VectorXd x(d);
  if (spec_.is_mvnormal()) {
    Eigen::VectorXd z(d);
    for (int a = 0; a < d; ++a) z(a) = normal_quantile(from_symmetric(u(a)));
    Eigen::VectorXd xp = mean_perm_ + chol_ * z;
    for (int a = 0; a < d; ++a) x(order1_[a] - 1) = xp(a);
    return x;
  }
  const auto& ms = spec_.marginals();
  for (int a = 0; a < d; ++a) {
    const int i = order1_[a] - 1;
    x(i) = marginal_quantile_1d(ms[i], from_symmetric(u(a)));
  }
  return x;
}

double marginal_cdf(const DistributionSpec& spec, int k, std::span<const double> prefix,
                    double xk) {
  const int d = spec.dim();
  if (k < 1 || k > d) throw std::out_of_range("input index outside [1, d]");
  if (static_cast<int>(prefix.size()) != k - 1)
    throw std::invalid_argument("prefix must hold the first k-1 coordinates");
  if (spec.is_independent_product())
    return marginal_cdf_1d(spec.marginals()[k - 1], xk);

  // Joint normal: condition on the prefix through the Schur complement.
  const auto& n = spec.normal();
  double mean = n.mean(k - 1);
  double var = n.cov(k - 1, k - 1);
  if (k > 1) {
    const int m = k - 1;
    Eigen::MatrixXd s_pp = n.cov.topLeftCorner(m, m);
    Eigen::VectorXd s_kp = n.cov.block(k - 1, 0, 1, m).transpose();
    Eigen::VectorXd delta(m);
    for (int a = 0; a < m; ++a) delta(a) = prefix[a] - n.mean(a);
    Eigen::VectorXd w = s_pp.llt().solve(s_kp);
    mean += w.dot(delta);
    var -= w.dot(s_kp);
  }
  if (!(var > 0)) throw std::runtime_error("degenerate conditional variance");
  return normal_cdf((xk - mean) / std::sqrt(var));
}

Eigen::MatrixXd sample(const DistributionSpec& spec, int n, std::uint64_t seed) {
  const int d = spec.dim();
  Eigen::MatrixXd out(n, d);
  std::mt19937_64 rng(seed);
  // Uniforms strictly inside (0, 1); inverse-transform per coordinate.
  auto next_u = [&]() {
    const double u = (static_cast<double>(rng() >> 11) + 0.5) * 0x1p-53;
    return u;
  };
  if (spec.is_mvnormal()) {
    const auto& nn = spec.normal();
    Eigen::LLT<Eigen::MatrixXd> llt(nn.cov);
    Eigen::MatrixXd L = llt.matrixL();
    Eigen::VectorXd z(d);
    for (int r = 0; r < n; ++r) {
      for (int k = 0; k < d; ++k) z(k) = normal_quantile(next_u());
      out.row(r) = (nn.mean + L * z).transpose();
    }
    return out;
  }
  const auto& ms = spec.marginals();
  for (int r = 0; r < n; ++r) {
    for (int k = 0; k < d; ++k) {
      const Marginal& m = ms[k];
      const double u = next_u();
      if (m.continuous()) {
        out(r, k) = marginal_quantile_1d(m, u);
      } else {
        DiscreteMarginal dm = m.as_discrete();
        double acc = 0;
        double x = dm.values.back().to_double();
        for (std::size_t j = 0; j < dm.values.size(); ++j) {
          acc += dm.probs[j].to_double();
          if (u <= acc) {
            x = dm.values[j].to_double();
            break;
          }
        }
        out(r, k) = x;
      }
    }
  }
  return out;
}

}  // namespace soa
