#include "soa/quadrature.hpp"

#include <cmath>
#include <stdexcept>

namespace soa {

QuadratureRule gauss_legendre(int points) {
  if (points < 1) throw std::invalid_argument("quadrature needs at least one point");
  if (points == 1) {
    QuadratureRule r;
    r.nodes = Eigen::VectorXd::Zero(1);
    r.weights = Eigen::VectorXd::Ones(1);
    return r;
  }

  // Golub-Welsch: the Jacobi matrix of the Legendre recurrence has zero
  // diagonal and off-diagonal k / sqrt(4k^2 - 1); eigenvalues are the nodes
  // and the squared first eigenvector components are the probability
  // weights (the measure has total mass 1).
  Eigen::VectorXd diag = Eigen::VectorXd::Zero(points);
  Eigen::VectorXd sub(points - 1);
  for (int k = 1; k < points; ++k)
    sub(k - 1) = k / std::sqrt(4.0 * k * k - 1.0);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
  solver.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
  if (solver.info() != Eigen::Success)
    throw std::runtime_error("Gauss-Legendre eigensolve failed");

  QuadratureRule r;
  r.nodes = solver.eigenvalues();
  r.weights = solver.eigenvectors().row(0).transpose().array().square();

  // Enforce the symmetry the rule has in exact arithmetic: antisymmetric
  // nodes, symmetric weights, middle node exactly 0 for odd counts.
  for (int i = 0, j = points - 1; i < j; ++i, --j) {
    const double n = 0.5 * (r.nodes(j) - r.nodes(i));
    r.nodes(i) = -n;
    r.nodes(j) = n;
    const double w = 0.5 * (r.weights(i) + r.weights(j));
    r.weights(i) = w;
    r.weights(j) = w;
  }
  if (points % 2 == 1) r.nodes(points / 2) = 0.0;
  const double total = r.weights.sum();
  r.weights /= total;

  for (int i = 0; i < points; ++i) {
    if (r.weights(i) <= 0) throw std::runtime_error("nonpositive quadrature weight");
    if (i > 0 && r.nodes(i) <= r.nodes(i - 1))
      throw std::runtime_error("quadrature nodes not strictly increasing");
  }
  return r;
}

TensorRule::TensorRule(QuadratureRule rule, int d) : rule_(std::move(rule)), d_(d) {
  if (d < 1) throw std::invalid_argument("tensor rule needs dimension >= 1");
  long double c = 1;
  for (int k = 0; k < d; ++k) c *= rule_.points();
  if (c > 1e8) throw std::invalid_argument("tensor grid exceeds 1e8 nodes");
  count_ = 1;
  for (int k = 0; k < d; ++k) count_ *= static_cast<std::uint64_t>(rule_.points());
}

Eigen::VectorXd TensorRule::node(std::uint64_t flat) const {
  Eigen::VectorXd x(d_);
  const std::uint64_t m = rule_.points();
  for (int k = d_ - 1; k >= 0; --k) {
    x(k) = rule_.nodes(static_cast<int>(flat % m));
    flat /= m;
  }
  return x;
}

double TensorRule::weight(std::uint64_t flat) const {
  double w = 1.0;
  const std::uint64_t m = rule_.points();
  for (int k = d_ - 1; k >= 0; --k) {
    w *= rule_.weights(static_cast<int>(flat % m));
    flat /= m;
  }
  return w;
}

TensorRule tensor_rule(const QuadratureRule& rule, int d) { return TensorRule(rule, d); }

int points_for_degree(int target_degree, int hint) {
  if (target_degree < 0 || hint < 0)
    throw std::invalid_argument("degrees must be nonnegative");
  return (target_degree + hint + 1 + 1) / 2 + 2;
}

double galerkin_project(const std::function<double(const Eigen::VectorXd&)>& f,
                        const std::function<double(const Eigen::VectorXd&)>& g,
                        const TensorRule& grid) {
  CompensatedSum s;
  grid.for_each_node([&](const Eigen::VectorXd& x, double w, std::uint64_t) {
    s.add(w * f(x) * g(x));
  });
  return s.value();
}

double galerkin_project(const std::function<double(const Eigen::VectorXd&)>& f,
                        const Polynomial<double>& element, const TensorRule& grid) {
  CompensatedSum s;
  std::vector<double> pt(grid.dim());
  grid.for_each_node([&](const Eigen::VectorXd& x, double w, std::uint64_t) {
    for (int k = 0; k < grid.dim(); ++k) pt[k] = x(k);
    s.add(w * f(x) * element.eval(pt));
  });
  return s.value();
}

double integrate(const std::function<double(const Eigen::VectorXd&)>& f,
                 const TensorRule& grid) {
  CompensatedSum s;
  grid.for_each_node([&](const Eigen::VectorXd& x, double w, std::uint64_t) {
    s.add(w * f(x));
  });
  return s.value();
}

}  // namespace soa
