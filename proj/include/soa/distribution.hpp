#pragma once

#include <optional>
#include <stdexcept>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "soa/rational.hpp"

namespace soa {

// Finite discrete marginal: strictly increasing support points with exact
// probabilities summing to 1.
struct DiscreteMarginal {
  std::vector<Rational> values;
  std::vector<Rational> probs;
};

// One independent input's law.
struct Marginal {
  enum class Type { uniform, normal, bernoulli, discrete };
  Type type = Type::uniform;
  double a = -1, b = 1;      // uniform on [a, b]
  double mu = 0, sigma = 1;  // normal
  Rational p = Rational(1, 2);  // bernoulli success probability
  DiscreteMarginal discrete;

  bool continuous() const { return type == Type::uniform || type == Type::normal; }

  // Bernoulli viewed as the two-point discrete law on {0, 1}.
  DiscreteMarginal as_discrete() const;

  static Marginal uniform_on(double a, double b);
  static Marginal normal_with(double mu, double sigma);
  static Marginal bernoulli_with(Rational p);
  static Marginal discrete_with(DiscreteMarginal dm);
};

struct MvNormal {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
};

// Input distribution: either a product of independent marginals or a joint
// normal.  An optional conditioning order steers the Rosenblatt transform.
class DistributionSpec {
 public:
  static DistributionSpec independent(std::vector<Marginal> marginals);
  static DistributionSpec mvnormal(Eigen::VectorXd mean, Eigen::MatrixXd cov);

  int dim() const;
  bool is_independent_product() const { return std::holds_alternative<std::vector<Marginal>>(body_); }
  bool is_mvnormal() const { return !is_independent_product(); }

  // All inputs have continuous (invertible-cdf) laws.
  bool continuous() const;
  // All inputs have finite discrete laws.
  bool discrete() const;
  // No statistical dependence between inputs.
  bool independent() const;

  const std::vector<Marginal>& marginals() const;
  const MvNormal& normal() const;

  // Conditioning order for the transform, 1-based; defaults to 1..d.
  std::vector<int> ordering() const;
  void set_ordering(std::vector<int> ordering);
  bool has_explicit_ordering() const { return ordering_.has_value(); }

 private:
  DistributionSpec() = default;
  std::variant<std::vector<Marginal>, MvNormal> body_;
  std::optional<std::vector<int>> ordering_;
};

}  // namespace soa
