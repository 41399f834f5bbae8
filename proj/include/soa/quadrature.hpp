#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "soa/multi_index.hpp"
#include "soa/polynomial.hpp"

namespace soa {

// One-dimensional quadrature under the uniform probability measure on
// [-1, 1]: weights sum to 1.
struct QuadratureRule {
  Eigen::VectorXd nodes;
  Eigen::VectorXd weights;
  int points() const { return static_cast<int>(nodes.size()); }
};

// Gauss-Legendre rule with m points; integrates polynomials up to degree
// 2m - 1 exactly.  Nodes are ascending and exactly antisymmetric.
QuadratureRule gauss_legendre(int points);

// Full tensor grid of a 1-d rule over d dimensions.  Nodes are enumerated
// lazily in odometer order (last dimension fastest); refuses grids beyond
// 1e8 nodes.
class TensorRule {
 public:
  TensorRule(QuadratureRule rule, int d);

  int dim() const { return d_; }
  const QuadratureRule& rule1d() const { return rule_; }
  std::uint64_t node_count() const { return count_; }

  // Calls fn(node, weight, flat_index) for every grid point, in a fixed
  // deterministic order.
  template <typename F>
  void for_each_node(F&& fn) const {
    const int m = rule_.points();
    std::vector<int> idx(d_, 0);
    Eigen::VectorXd x(d_);
    for (int k = 0; k < d_; ++k) x(k) = rule_.nodes(0);
    std::uint64_t flat = 0;
    while (true) {
      double w = 1.0;
      for (int k = 0; k < d_; ++k) w *= rule_.weights(idx[k]);
      fn(static_cast<const Eigen::VectorXd&>(x), w, flat);
      ++flat;
      int k = d_ - 1;
      while (k >= 0) {
        if (++idx[k] < m) {
          x(k) = rule_.nodes(idx[k]);
          break;
        }
        idx[k] = 0;
        x(k) = rule_.nodes(0);
        --k;
      }
      if (k < 0) break;
    }
  }

  // Node coordinates for a flat index (same order as for_each_node).
  Eigen::VectorXd node(std::uint64_t flat) const;
  double weight(std::uint64_t flat) const;

 private:
  QuadratureRule rule_;
  int d_;
  std::uint64_t count_;
};

TensorRule tensor_rule(const QuadratureRule& rule, int d);

// Number of 1-d points that keeps degree `target_degree` integrands exact
// with headroom: ceil((target_degree + hint + 1) / 2) + 2.
int points_for_degree(int target_degree, int hint);

// Neumaier compensated sum over a fixed index order; deterministic for a
// given sequence regardless of magnitude spread.
class CompensatedSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x))
      comp_ += (sum_ - t) + x;
    else
      comp_ += (x - t) + sum_;
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0;
  double comp_ = 0;
};

// Inner product <f, g> under the uniform measure approximated on the grid;
// the summation order is the grid order, compensated.
double galerkin_project(const std::function<double(const Eigen::VectorXd&)>& f,
                        const std::function<double(const Eigen::VectorXd&)>& g,
                        const TensorRule& grid);

// Projection of f onto a polynomial basis element.
double galerkin_project(const std::function<double(const Eigen::VectorXd&)>& f,
                        const Polynomial<double>& element, const TensorRule& grid);

// Plain integral of f on the grid.
double integrate(const std::function<double(const Eigen::VectorXd&)>& f,
                 const TensorRule& grid);

}  // namespace soa
