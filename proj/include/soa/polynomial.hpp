#pragma once

#include <map>
#include <stdexcept>
#include <vector>

#include "soa/multi_index.hpp"
#include "soa/rational.hpp"

namespace soa {

// Sparse multivariate polynomial: multi-index -> coefficient, zero
// coefficients never stored.  T is double or Rational.
template <typename T>
class Polynomial {
 public:
  using TermMap = std::map<MultiIndex, T, MultiIndexOrder>;

  explicit Polynomial(int d) : d_(d) {
    if (d < 1) throw std::invalid_argument("polynomial needs dimension >= 1");
  }
  static Polynomial constant(int d, T c) {
    Polynomial p(d);
    p.add_term(MultiIndex::zero(d), std::move(c));
    return p;
  }
  static Polynomial monomial(MultiIndex alpha, T c) {
    Polynomial p(alpha.dim());
    p.add_term(std::move(alpha), std::move(c));
    return p;
  }

  int dim() const { return d_; }
  const TermMap& terms() const { return terms_; }
  bool is_zero() const { return terms_.empty(); }
  int degree() const {
    int deg = 0;
    for (const auto& [a, c] : terms_) deg = std::max(deg, a.total_degree());
    return deg;
  }

  T coeff(const MultiIndex& alpha) const {
    auto it = terms_.find(alpha);
    return it == terms_.end() ? T{} : it->second;
  }

  void add_term(MultiIndex alpha, T c) {
    if (alpha.dim() != d_) throw std::invalid_argument("term dimension mismatch");
    auto it = terms_.find(alpha);
    if (it == terms_.end()) {
      if (!(c == T{})) terms_.emplace(std::move(alpha), std::move(c));
      return;
    }
    it->second += c;
    if (it->second == T{}) terms_.erase(it);
  }

  Polynomial& operator+=(const Polynomial& o) {
    check_same(o);
    for (const auto& [a, c] : o.terms_) add_term(a, c);
    return *this;
  }
  Polynomial& operator-=(const Polynomial& o) {
    check_same(o);
    for (const auto& [a, c] : o.terms_) add_term(a, -c);
    return *this;
  }
  friend Polynomial operator+(Polynomial a, const Polynomial& b) { return a += b; }
  friend Polynomial operator-(Polynomial a, const Polynomial& b) { return a -= b; }

  friend Polynomial operator*(const Polynomial& a, const Polynomial& b) {
    a.check_same(b);
    Polynomial out(a.d_);
    for (const auto& [ai, ac] : a.terms_)
      for (const auto& [bi, bc] : b.terms_) out.add_term(ai + bi, ac * bc);
    return out;
  }
  friend Polynomial operator*(const T& s, const Polynomial& p) {
    Polynomial out(p.d_);
    if (s == T{}) return out;
    for (const auto& [a, c] : p.terms_) out.add_term(a, s * c);
    return out;
  }

  T eval(const std::vector<T>& x) const {
    if (static_cast<int>(x.size()) != d_)
      throw std::invalid_argument("evaluation point dimension mismatch");
    T acc{};
    for (const auto& [a, c] : terms_) {
      T term = c;
      for (int k = 0; k < d_; ++k)
        for (int e = 0; e < a[k]; ++e) term *= x[k];
      acc += term;
    }
    return acc;
  }

 private:
  int d_;
  TermMap terms_;

  void check_same(const Polynomial& o) const {
    if (d_ != o.d_) throw std::invalid_argument("polynomial dimension mismatch");
  }
};

// Converts an exact polynomial to double coefficients.
inline Polynomial<double> to_double(const Polynomial<Rational>& p) {
  Polynomial<double> out(p.dim());
  for (const auto& [a, c] : p.terms()) out.add_term(a, c.to_double());
  return out;
}

}  // namespace soa
