#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "soa/distribution.hpp"

namespace soa {

// Standard normal cdf.
double normal_cdf(double x);

// Standard normal quantile, |error| < 1e-12 on (0, 1): rational
// approximation polished by two Newton steps on the cdf.
double normal_quantile(double p);

// Sequential conditional-cdf transform sending the input vector to
// independent uniforms on [-1, 1]^d, conditioning in the distribution's
// declared coordinate order. Continuous distributions only.
class Rosenblatt {
 public:
  explicit Rosenblatt(DistributionSpec spec);

  const DistributionSpec& spec() const { return spec_; }
  // 1-based conditioning order; slot k of the transformed vector carries
  // input order()[k].
  const std::vector<int>& order() const { return order1_; }
  int dim() const { return spec_.dim(); }

  // x (input space) -> u in [-1, 1]^d.
  Eigen::VectorXd forward(const Eigen::VectorXd& x) const;
  // u in (-1, 1)^d -> x; inverse of forward.
  Eigen::VectorXd inverse(const Eigen::VectorXd& u) const;

 private:
  DistributionSpec spec_;
  std::vector<int> order1_;
  // mvnormal only: Cholesky factor and mean of the covariance permuted into
  // conditioning order; forward/inverse are triangular solves through it.
  Eigen::MatrixXd chol_;
  Eigen::VectorXd mean_perm_;
};

// Conditional cdf F(x_k | x_1..x_{k-1}) in natural input order; k is
// 1-based and prefix holds the first k-1 coordinates.
double marginal_cdf(const DistributionSpec& spec, int k, std::span<const double> prefix,
                    double xk);

// n inverse-transform samples of the distribution (rows), deterministic in
// the seed.  Works for continuous and discrete specs alike.
Eigen::MatrixXd sample(const DistributionSpec& spec, int n, std::uint64_t seed);

}  // namespace soa
