#include "soa/basis.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace soa {

Polynomial<Rational> legendre(int n) {
  if (n < 0) throw std::invalid_argument("Legendre degree must be >= 0");
  Polynomial<Rational> p0 = Polynomial<Rational>::constant(1, Rational(1));
  if (n == 0) return p0;
  Polynomial<Rational> p1 = Polynomial<Rational>::monomial(MultiIndex({1}), Rational(1));
  if (n == 1) return p1;
  Polynomial<Rational> x = p1;
  for (int k = 1; k < n; ++k) {
    // (k+1) P_{k+1} = (2k+1) x P_k - k P_{k-1}
    Polynomial<Rational> next =
        Rational(2 * k + 1, k + 1) * (x * p1) - Rational(k, k + 1) * p0;
    p0 = std::move(p1);
    p1 = std::move(next);
  }
  return p1;
}

Rational uniform_moment(const MultiIndex& alpha) {
  Rational m(1);
  for (int k = 0; k < alpha.dim(); ++k) {
    if (alpha[k] % 2 != 0) return Rational(0);
    m *= Rational(1, alpha[k] + 1);
  }
  return m;
}

Rational norm2_uniform(const Polynomial<Rational>& p) {
  Rational acc(0);
  for (const auto& [a, ca] : p.terms())
    for (const auto& [b, cb] : p.terms()) acc += ca * cb * uniform_moment(a + b);
  return acc;
}

Polynomial<double> normalize_uniform(const Polynomial<Rational>& p) {
  Rational n2 = norm2_uniform(p);
  if (!(Rational(0) < n2)) throw std::invalid_argument("cannot normalize the zero polynomial");
  const double scale = 1.0 / std::sqrt(n2.to_double());
  Polynomial<double> out(p.dim());
  for (const auto& [a, c] : p.terms()) out.add_term(a, scale * c.to_double());
  return out;
}

Polynomial<double> tensor_legendre(const MultiIndex& alpha) {
  const int d = alpha.dim();
  Polynomial<double> out = Polynomial<double>::constant(d, 1.0);
  for (int k = 0; k < d; ++k) {
    if (alpha[k] == 0) continue;
    // Embed the univariate normalized Legendre factor into input k.
    Polynomial<Rational> uni = legendre(alpha[k]);
    const double scale = std::sqrt(2.0 * alpha[k] + 1.0);
    Polynomial<double> factor(d);
    for (const auto& [a, c] : uni.terms()) {
      std::vector<int> deg(d, 0);
      deg[k] = a[0];
      factor.add_term(MultiIndex(std::move(deg)), scale * c.to_double());
    }
    out = out * factor;
  }
  return out;
}

void legendre_normalized_values(int nmax, double x, std::span<double> out) {
  if (static_cast<int>(out.size()) < nmax + 1)
    throw std::invalid_argument("output span too small for Legendre values");
  double pkm1 = 1.0;
  out[0] = 1.0;
  if (nmax == 0) return;
  double pk = x;
  out[1] = std::sqrt(3.0) * x;
  for (int k = 1; k < nmax; ++k) {
    const double pkp1 = ((2 * k + 1) * x * pk - k * pkm1) / (k + 1);
    out[k + 1] = std::sqrt(2.0 * (k + 1) + 1.0) * pkp1;
    pkm1 = pk;
    pk = pkp1;
  }
}

namespace {

// First `count` multi-indices in canonical order.
std::vector<MultiIndex> leading_monomials(int d, int count) {
  std::vector<MultiIndex> out;
  out.reserve(count);
  out.push_back(MultiIndex::zero(d));
  for (int t = 1; static_cast<int>(out.size()) < count; ++t) {
    for_each_of_total_degree(d, t, [&](const MultiIndex& a) {
      if (static_cast<int>(out.size()) < count) out.push_back(a);
    });
    if (t > 4 * count) throw std::logic_error("monomial enumeration runaway");
  }
  return out;
}

}  // namespace

MomentBasis gram_schmidt_from_moments(
    int d, const std::map<MultiIndex, double, MultiIndexOrder>& moments, int count) {
  if (count < 1) throw std::invalid_argument("basis size must be >= 1");
  auto moment = [&](const MultiIndex& a) -> double {
    auto it = moments.find(a);
    if (it == moments.end())
      throw std::invalid_argument("missing moment for multi-index " + a.to_string());
    return it->second;
  };

  MomentBasis out;
  out.leading = leading_monomials(d, count);

  Eigen::MatrixXd gram(count, count);
  for (int a = 0; a < count; ++a)
    for (int b = 0; b <= a; ++b)
      gram(a, b) = gram(b, a) = moment(out.leading[a] + out.leading[b]);
  if (std::abs(gram(0, 0) - 1.0) > 1e-12)
    throw std::invalid_argument("moment of the zero index must be 1 (probability measure)");

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram, Eigen::EigenvaluesOnly);
  const double lo = eig.eigenvalues().minCoeff();
  const double hi = eig.eigenvalues().maxCoeff();
  if (lo <= 0)
    throw std::invalid_argument("moment matrix is not positive definite");
  out.condition = hi / lo;
  out.ill_conditioned = out.condition > 1e12;

  // Modified Gram-Schmidt with one re-orthogonalization pass, in coefficient
  // space over the leading monomials; <p, q> = c_p' G c_q.
  Eigen::MatrixXd coef = Eigen::MatrixXd::Identity(count, count);
  for (int j = 0; j < count; ++j) {
    for (int pass = 0; pass < 2; ++pass) {
      for (int k = 0; k < j; ++k) {
        const double proj = coef.col(k).dot(gram * coef.col(j));
        coef.col(j) -= proj * coef.col(k);
      }
    }
    const double n2 = coef.col(j).dot(gram * coef.col(j));
    if (n2 <= 0) throw std::invalid_argument("moment matrix is not positive definite");
    coef.col(j) /= std::sqrt(n2);
  }

  out.polys.reserve(count);
  for (int j = 0; j < count; ++j) {
    Polynomial<double> p(d);
    for (int a = 0; a < count; ++a)
      if (coef(a, j) != 0) p.add_term(out.leading[a], coef(a, j));
    out.polys.push_back(std::move(p));
  }
  return out;
}

double Basis::eval(const MultiIndex& alpha, const Eigen::VectorXd& x) const {
  if (alpha.dim() != d_ || x.size() != d_)
    throw std::invalid_argument("basis evaluation dimension mismatch");
  if (kind_ == Kind::legendre) {
    double prod = 1.0;
    std::vector<double> vals;
    for (int k = 0; k < d_; ++k) {
      const int n = alpha[k];
      if (n == 0) continue;
      vals.assign(n + 1, 0.0);
      legendre_normalized_values(n, x(k), vals);
      prod *= vals[n];
    }
    return prod;
  }
  for (std::size_t j = 0; j < mb_.leading.size(); ++j) {
    if (mb_.leading[j] == alpha) {
      std::vector<double> pt(x.data(), x.data() + x.size());
      return mb_.polys[j].eval(pt);
    }
  }
  throw std::invalid_argument("multi-index outside the moment basis family");
}

Polynomial<double> Basis::element(const MultiIndex& alpha) const {
  if (alpha.dim() != d_) throw std::invalid_argument("basis element dimension mismatch");
  if (kind_ == Kind::legendre) return tensor_legendre(alpha);
  for (std::size_t j = 0; j < mb_.leading.size(); ++j)
    if (mb_.leading[j] == alpha) return mb_.polys[j];
  throw std::invalid_argument("multi-index outside the moment basis family");
}

}  // namespace soa
