#include "soa/distribution.hpp"

#include <Eigen/Cholesky>

namespace soa {

DiscreteMarginal Marginal::as_discrete() const {
  if (type == Type::discrete) return discrete;
  if (type == Type::bernoulli) {
    DiscreteMarginal dm;
    dm.values = {Rational(0), Rational(1)};
    dm.probs = {Rational(1) - p, p};
    return dm;
  }
  throw std::logic_error("marginal has no discrete representation");
}

Marginal Marginal::uniform_on(double a, double b) {
  if (!(a < b)) throw std::invalid_argument("uniform marginal needs a < b");
  Marginal m;
  m.type = Type::uniform;
  m.a = a;
  m.b = b;
  return m;
}

Marginal Marginal::normal_with(double mu, double sigma) {
  if (!(sigma > 0)) throw std::invalid_argument("normal marginal needs sigma > 0");
  Marginal m;
  m.type = Type::normal;
  m.mu = mu;
  m.sigma = sigma;
  return m;
}

Marginal Marginal::bernoulli_with(Rational p) {
  if (p < Rational(0) || Rational(1) < p)
    throw std::invalid_argument("bernoulli probability outside [0, 1]");
  Marginal m;
  m.type = Type::bernoulli;
  m.p = std::move(p);
  return m;
}

Marginal Marginal::discrete_with(DiscreteMarginal dm) {
  if (dm.values.empty() || dm.values.size() != dm.probs.size())
    throw std::invalid_argument("discrete marginal needs matching values and probabilities");
  Rational total(0);
  for (std::size_t i = 0; i < dm.values.size(); ++i) {
    if (dm.probs[i] < Rational(0))
      throw std::invalid_argument("discrete probabilities must be nonnegative");
    if (i > 0 && !(dm.values[i - 1] < dm.values[i]))
      throw std::invalid_argument("discrete support must be strictly increasing");
    total += dm.probs[i];
  }
  if (total != Rational(1))
    throw std::invalid_argument("discrete probabilities must sum to 1 exactly");
  Marginal m;
  m.type = Type::discrete;
  m.discrete = std::move(dm);
  return m;
}

DistributionSpec DistributionSpec::independent(std::vector<Marginal> marginals) {
  if (marginals.empty()) throw std::invalid_argument("distribution needs dimension >= 1");
  if (marginals.size() > 24) throw std::invalid_argument("dimension must be <= 24");
  DistributionSpec s;
  s.body_ = std::move(marginals);
  return s;
}

DistributionSpec DistributionSpec::mvnormal(Eigen::VectorXd mean, Eigen::MatrixXd cov) {
  const int d = static_cast<int>(mean.size());
  if (d < 1 || d > 24) throw std::invalid_argument("dimension must be in [1, 24]");
  if (cov.rows() != d || cov.cols() != d)
    throw std::invalid_argument("covariance dimension mismatch");
  if (!cov.isApprox(cov.transpose(), 1e-12))
    throw std::invalid_argument("covariance must be symmetric");
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success)
    throw std::invalid_argument("covariance must be positive definite");
  DistributionSpec s;
  s.body_ = MvNormal{std::move(mean), std::move(cov)};
  return s;
}

int DistributionSpec::dim() const {
  if (is_independent_product())
    return static_cast<int>(std::get<std::vector<Marginal>>(body_).size());
  return static_cast<int>(std::get<MvNormal>(body_).mean.size());
}

bool DistributionSpec::continuous() const {
  if (is_mvnormal()) return true;
  for (const auto& m : marginals())
    if (!m.continuous()) return false;
  return true;
}

bool DistributionSpec::discrete() const {
  if (is_mvnormal()) return false;
  for (const auto& m : marginals())
    if (m.continuous()) return false;
  return true;
}

bool DistributionSpec::independent() const {
  if (is_independent_product()) return true;
  const auto& n = std::get<MvNormal>(body_);
  for (int i = 0; i < n.cov.rows(); ++i)
    for (int j = 0; j < i; ++j)
      if (n.cov(i, j) != 0) return false;
  return true;
}

const std::vector<Marginal>& DistributionSpec::marginals() const {
  if (!is_independent_product())
    throw std::logic_error("distribution is not an independent product");
  return std::get<std::vector<Marginal>>(body_);
}

const MvNormal& DistributionSpec::normal() const {
  if (!is_mvnormal()) throw std::logic_error("distribution is not a joint normal");
  return std::get<MvNormal>(body_);
}

std::vector<int> DistributionSpec::ordering() const {
  if (ordering_) return *ordering_;
  std::vector<int> id(dim());
  for (int k = 0; k < dim(); ++k) id[k] = k + 1;
  return id;
}

void DistributionSpec::set_ordering(std::vector<int> ordering) {
  const int d = dim();
  if (static_cast<int>(ordering.size()) != d)
    throw std::invalid_argument("ordering must list each input exactly once");
  std::vector<bool> seen(d, false);
  for (int i : ordering) {
    if (i < 1 || i > d || seen[i - 1])
      throw std::invalid_argument("ordering must list each input exactly once");
    seen[i - 1] = true;
  }
  ordering_ = std::move(ordering);
}

}  // namespace soa
