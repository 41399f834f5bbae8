#pragma once

#include <cmath>
#include <map>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "soa/multi_index.hpp"
#include "soa/polynomial.hpp"

namespace soa {

// Legendre polynomial P_n on [-1, 1] with P_n(1) = 1, exact coefficients,
// built by the three-term recurrence.
Polynomial<Rational> legendre(int n);

// Moment of the uniform distribution on [-1, 1]^d (density 2^-d):
// the product over k of 1/(alpha_k + 1) for even alpha_k, else 0.
Rational uniform_moment(const MultiIndex& alpha);

// Squared L2 norm of an exact polynomial under the uniform distribution on
// [-1, 1]^d.
Rational norm2_uniform(const Polynomial<Rational>& p);

// Scales a polynomial to unit norm under the uniform distribution; the
// scale factor is a square root, so the result has double coefficients.
Polynomial<double> normalize_uniform(const Polynomial<Rational>& p);

// Tensor product of normalized Legendre polynomials with per-input degrees
// alpha: the standard orthonormal basis element for uniform inputs.
Polynomial<double> tensor_legendre(const MultiIndex& alpha);

// Writes the normalized Legendre values sqrt(2n+1) P_n(x) for n = 0..nmax
// into out (size nmax + 1).  This is the hot path of every projection.
void legendre_normalized_values(int nmax, double x, std::span<double> out);

// Result of moment-based orthogonalization; polys[j] has leading monomial
// equal to the j-th multi-index of the canonical enumeration.
struct MomentBasis {
  std::vector<MultiIndex> leading;
  std::vector<Polynomial<double>> polys;
  double condition = 1.0;
  bool ill_conditioned = false;
};

// Gram-Schmidt orthogonalization of the first `count` monomials (canonical
// order) against the inner product <x^a, x^b> = moment(a + b).  Requires
// moment(0) = 1 and a positive definite moment matrix; sets ill_conditioned
// when the Gram condition number exceeds 1e12.
MomentBasis gram_schmidt_from_moments(
    int d, const std::map<MultiIndex, double, MultiIndexOrder>& moments, int count);

// Orthonormal basis used by expansions: either the Legendre tensor family
// (closed under any multi-index) or a finite moment-derived family.
class Basis {
 public:
  enum class Kind { legendre, moments };

  static Basis legendre_basis(int d) { return Basis(d); }
  static Basis moment_basis(int d, MomentBasis mb) { return Basis(d, std::move(mb)); }

  int dim() const { return d_; }
  Kind kind() const { return kind_; }
  const MomentBasis& moment_family() const { return mb_; }

  // Value of the normalized basis element indexed by alpha at a point of
  // [-1, 1]^d (legendre) or of the native space (moments).
  double eval(const MultiIndex& alpha, const Eigen::VectorXd& x) const;

  // Expanded coefficient form of the element indexed by alpha.
  Polynomial<double> element(const MultiIndex& alpha) const;

 private:
  explicit Basis(int d) : d_(d), kind_(Kind::legendre) {}
  Basis(int d, MomentBasis mb) : d_(d), kind_(Kind::moments), mb_(std::move(mb)) {}

  int d_;
  Kind kind_;
  MomentBasis mb_;
};

}  // namespace soa
