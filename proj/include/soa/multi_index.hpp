#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "soa/coalition.hpp"

namespace soa {

// Degree vector of one tensor-product basis polynomial: alpha_k is the
// univariate degree in input k (components are 0-based internally, input
// k+1 in user-facing terms).
class MultiIndex {
 public:
  MultiIndex() = default;
  explicit MultiIndex(std::vector<int> degrees) : deg_(std::move(degrees)) {
    for (int a : deg_)
      if (a < 0) throw std::invalid_argument("multi-index degrees must be >= 0");
    if (deg_.empty()) throw std::invalid_argument("multi-index needs dimension >= 1");
  }
  static MultiIndex zero(int d) { return MultiIndex(std::vector<int>(d, 0)); }
  static MultiIndex unit(int d, int input, int degree = 1) {
    std::vector<int> v(d, 0);
    if (input < 1 || input > d) throw std::out_of_range("input index outside [1, d]");
    v[input - 1] = degree;
    return MultiIndex(std::move(v));
  }

  int dim() const { return static_cast<int>(deg_.size()); }
  int operator[](int k) const { return deg_[k]; }
  const std::vector<int>& degrees() const { return deg_; }
  int total_degree() const { return std::accumulate(deg_.begin(), deg_.end(), 0); }
  int max_degree() const {
    int m = 0;
    for (int a : deg_) m = a > m ? a : m;
    return m;
  }
  bool is_zero() const { return total_degree() == 0; }

  // Inputs with nonzero degree; identifies which variables the basis
  // polynomial actually depends on.
  Coalition support() const {
    Coalition c = Coalition::empty(dim());
    for (int k = 0; k < dim(); ++k)
      if (deg_[k] > 0) c = c.with(k + 1);
    return c;
  }

  // (sum_k alpha_k^q)^(1/q); q = 1 is the total degree.
  double q_norm(double q) const {
    if (q <= 0) throw std::invalid_argument("q-norm needs q > 0");
    double s = 0;
    for (int a : deg_) s += std::pow(static_cast<double>(a), q);
    return std::pow(s, 1.0 / q);
  }

  MultiIndex operator+(const MultiIndex& o) const {
    if (dim() != o.dim()) throw std::invalid_argument("multi-index dimension mismatch");
    std::vector<int> v(deg_);
    for (int k = 0; k < dim(); ++k) v[k] += o.deg_[k];
    return MultiIndex(std::move(v));
  }

  friend bool operator==(const MultiIndex& a, const MultiIndex& b) {
    return a.deg_ == b.deg_;
  }
  friend bool operator!=(const MultiIndex& a, const MultiIndex& b) { return !(a == b); }

  std::string to_string() const {
    std::string s = "(";
    for (int k = 0; k < dim(); ++k) {
      if (k) s += ",";
      s += std::to_string(deg_[k]);
    }
    return s + ")";
  }

 private:
  std::vector<int> deg_;
};

// Canonical enumeration order: by total degree, ties broken with higher
// degree on earlier inputs first; for d = 2 this yields (0,0), (1,0), (0,1),
// (2,0), (1,1), (0,2), ...  Used everywhere a deterministic term order is
// needed (maps, reports, candidate scans).
struct MultiIndexOrder {
  bool operator()(const MultiIndex& a, const MultiIndex& b) const {
    if (a.dim() != b.dim()) return a.dim() < b.dim();
    int ta = a.total_degree(), tb = b.total_degree();
    if (ta != tb) return ta < tb;
    for (int k = 0; k < a.dim(); ++k)
      if (a[k] != b[k]) return a[k] > b[k];
    return false;
  }
};

// Membership test for the q-norm simplex ||alpha||_q <= p.  Exact for q = 1
// and for indices supported on one input; otherwise evaluated in long double
// with a relative slack of 1e-9 toward inclusion, so borderline indices are
// admitted rather than dropped.
inline bool q_norm_within(const MultiIndex& alpha, double q, int p) {
  if (q <= 0 || q > 1) throw std::invalid_argument("q must lie in (0, 1]");
  if (p < 0) return false;
  if (q == 1.0) return alpha.total_degree() <= p;
  if (alpha.support().size() <= 1) return alpha.max_degree() <= p;
  long double s = 0;
  for (int k = 0; k < alpha.dim(); ++k)
    s += std::pow(static_cast<long double>(alpha[k]), static_cast<long double>(q));
  long double bound = std::pow(static_cast<long double>(p), static_cast<long double>(q));
  return s <= bound * (1 + 1e-9L);
}

namespace detail {

template <typename F>
void walk_total_degree(std::vector<int>& cur, int pos, int remaining, F&& fn) {
  if (pos == static_cast<int>(cur.size()) - 1) {
    cur[pos] = remaining;
    fn(cur);
    cur[pos] = 0;
    return;
  }
  for (int a = remaining; a >= 0; --a) {
    cur[pos] = a;
    walk_total_degree(cur, pos + 1, remaining - a, fn);
  }
  cur[pos] = 0;
}

}  // namespace detail

// All indices with total degree exactly t, in canonical order.
template <typename F>
void for_each_of_total_degree(int d, int t, F&& fn) {
  std::vector<int> cur(d, 0);
  detail::walk_total_degree(cur, 0, t, [&](const std::vector<int>& v) {
    fn(MultiIndex(std::vector<int>(v)));
  });
}

// Indices in the ring between the q-norm simplexes of radius p-1 and p:
// ||alpha||_q <= p but not <= p-1, excluding alpha = 0, canonical order.
// Every such index has total degree in [1, p] because q <= 1.
inline std::vector<MultiIndex> q_norm_ring(int d, double q, int p) {
  std::vector<MultiIndex> out;
  for (int t = 1; t <= p; ++t) {
    for_each_of_total_degree(d, t, [&](const MultiIndex& alpha) {
      if (q_norm_within(alpha, q, p) && !q_norm_within(alpha, q, p - 1))
        out.push_back(alpha);
    });
  }
  return out;
}

}  // namespace soa
