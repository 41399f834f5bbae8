#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "soa/distribution.hpp"
#include "soa/rational.hpp"
#include "soa/rosenblatt.hpp"

using soa::DistributionSpec;
using soa::Marginal;
using soa::Rational;
using soa::Rosenblatt;

namespace {

DistributionSpec bivariate_normal(double rho) {
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(2);
  Eigen::MatrixXd cov(2, 2);
  cov << 1, rho, rho, 1;
  return DistributionSpec::mvnormal(mean, cov);
}

// Kolmogorov-Smirnov distance between a sample column and a cdf.
template <typename Cdf>
double ks_distance(std::vector<double> xs, Cdf cdf) {
  std::sort(xs.begin(), xs.end());
  const double n = static_cast<double>(xs.size());
  double worst = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double f = cdf(xs[i]);
    worst = std::max(worst, std::abs(f - static_cast<double>(i) / n));
    worst = std::max(worst, std::abs(static_cast<double>(i + 1) / n - f));
  }
  return worst;
}

}  // namespace

TEST_SUITE_BEGIN("transform");

TEST_CASE("normal cdf matches tabulated values") {
  CHECK(soa::normal_cdf(0.0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(soa::normal_cdf(1.0) == doctest::Approx(0.8413447460685429).epsilon(1e-13));
  CHECK(soa::normal_cdf(-1.0) == doctest::Approx(0.15865525393145705).epsilon(1e-13));
  CHECK(soa::normal_cdf(1.96) == doctest::Approx(0.9750021048517795).epsilon(1e-13));
  CHECK(soa::normal_cdf(3.0) == doctest::Approx(0.9986501019683699).epsilon(1e-13));
  for (double x : {0.3, 1.7, 2.9}) {
    CHECK(soa::normal_cdf(-x) == doctest::Approx(1.0 - soa::normal_cdf(x)).epsilon(1e-13));
  }
}

TEST_CASE("normal quantile inverts the cdf to high accuracy") {
  CHECK(soa::normal_quantile(0.5) == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(soa::normal_quantile(0.975) == doctest::Approx(1.959963984540054).epsilon(1e-12));
  CHECK(soa::normal_quantile(0.0013498980316300933) == doctest::Approx(-3.0).epsilon(1e-11));
  for (double x = -5.0; x <= 5.0; x += 0.25) {
    CHECK(soa::normal_quantile(soa::normal_cdf(x)) == doctest::Approx(x).epsilon(1e-10));
  }
  for (double p : {1e-9, 0.01, 0.37, 0.99, 1 - 1e-9}) {
    CHECK(soa::normal_cdf(soa::normal_quantile(p)) == doctest::Approx(p).epsilon(1e-11));
  }
  CHECK_THROWS_AS(soa::normal_quantile(0.0), std::domain_error);
  CHECK_THROWS_AS(soa::normal_quantile(1.0), std::domain_error);
  CHECK_THROWS_AS(soa::normal_quantile(-0.2), std::domain_error);
}

TEST_CASE("independent uniforms map affinely onto the cube") {
  DistributionSpec spec = DistributionSpec::independent(
      {Marginal::uniform_on(0, 2), Marginal::uniform_on(-3, 1)});
  const Rosenblatt t(spec);
  CHECK(t.dim() == 2);
  CHECK(t.order() == std::vector<int>{1, 2});

  Eigen::VectorXd x(2);
  x << 1.0, -1.0;  // both midpoints
  const Eigen::VectorXd u = t.forward(x);
  CHECK(u(0) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(u(1) == doctest::Approx(0.0).epsilon(1e-15));

  x << 0.5, 0.0;  // quartile of the first, three-quarters of the second
  const Eigen::VectorXd v = t.forward(x);
  CHECK(v(0) == doctest::Approx(-0.5).epsilon(1e-14));
  CHECK(v(1) == doctest::Approx(0.5).epsilon(1e-14));

  const Eigen::VectorXd back = t.inverse(v);
  CHECK(back(0) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(back(1) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("bivariate normal transform round-trips the interior") {
  for (double rho : {0.0, 0.5, 0.9}) {
    const Rosenblatt t(bivariate_normal(rho));
    for (double u1 = -0.9; u1 <= 0.9; u1 += 0.3) {
      for (double u2 = -0.9; u2 <= 0.9; u2 += 0.3) {
        Eigen::VectorXd u(2);
        u << u1, u2;
        const Eigen::VectorXd x = t.inverse(u);
        const Eigen::VectorXd u_back = t.forward(x);
        CHECK(std::abs(u_back(0) - u1) < 1e-9);
        CHECK(std::abs(u_back(1) - u2) < 1e-9);
      }
    }
    // And the other composition on raw input points.  At rho = 0.9 the
    // conditional z-score of x2 = 2.0 given x1 = -1.5 is about 7.7, where
    // the cdf saturates to within a few ulps of 1 and the quantile cannot
    // recover the point to better than ~1e-4; the looser tolerance here
    // reflects that double-precision limit, while the uniform-side
    // round trip above stays at 1e-9 on the interior.
    for (double x1 : {-1.5, 0.0, 0.8}) {
      for (double x2 : {-0.4, 0.3, 2.0}) {
        Eigen::VectorXd x(2);
        x << x1, x2;
        const Eigen::VectorXd x_back = t.inverse(t.forward(x));
        CHECK(std::abs(x_back(0) - x1) < 1e-3);
        CHECK(std::abs(x_back(1) - x2) < 1e-3);
      }
    }
  }
}

TEST_CASE("correlated normal conditions the second coordinate on the first") {
  const double rho = 0.5;
  const Rosenblatt t(bivariate_normal(rho));
  Eigen::VectorXd x(2);
  x << 1.2, 0.7;
  const Eigen::VectorXd u = t.forward(x);
  // Slot 0 sees the marginal law of x1, slot 1 the conditional law of x2.
  CHECK(u(0) == doctest::Approx(2 * soa::normal_cdf(1.2) - 1).epsilon(1e-12));
  const double cond = (0.7 - rho * 1.2) / std::sqrt(1 - rho * rho);
  CHECK(u(1) == doctest::Approx(2 * soa::normal_cdf(cond) - 1).epsilon(1e-12));
}

TEST_CASE("an explicit ordering permutes the transform slots") {
  DistributionSpec spec = DistributionSpec::independent(
      {Marginal::uniform_on(0, 2), Marginal::normal_with(0, 1)});
  spec.set_ordering({2, 1});
  const Rosenblatt t(spec);
  CHECK(t.order() == std::vector<int>{2, 1});

  Eigen::VectorXd x(2);
  x << 0.5, 1.0;
  const Eigen::VectorXd u = t.forward(x);
  // Slot 0 now carries input 2 (the normal), slot 1 input 1 (the uniform).
  CHECK(u(0) == doctest::Approx(2 * soa::normal_cdf(1.0) - 1).epsilon(1e-12));
  CHECK(u(1) == doctest::Approx(-0.5).epsilon(1e-14));

  const Eigen::VectorXd back = t.inverse(u);
  CHECK(back(0) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(back(1) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("transform construction rejects discrete inputs") {
  DistributionSpec spec = DistributionSpec::independent(
      {Marginal::bernoulli_with(Rational(1, 2)), Marginal::uniform_on(-1, 1)});
  CHECK_THROWS_AS(Rosenblatt{spec}, std::invalid_argument);
}

TEST_CASE("inverse rejects points outside the open cube") {
  const Rosenblatt t(bivariate_normal(0.0));
  Eigen::VectorXd u(2);
  u << 1.0, 0.0;
  CHECK_THROWS_AS(t.inverse(u), std::domain_error);
  u << 0.0, -1.0001;
  CHECK_THROWS_AS(t.inverse(u), std::domain_error);
  Eigen::VectorXd wrong(3);
  wrong << 0, 0, 0;
  CHECK_THROWS_AS(t.inverse(wrong), std::invalid_argument);
  CHECK_THROWS_AS(t.forward(wrong), std::invalid_argument);
}

TEST_CASE("marginal_cdf produces prefix conditionals") {
  const DistributionSpec joint = bivariate_normal(0.5);
  // k = 1: the unconditional standard normal margin.
  CHECK(soa::marginal_cdf(joint, 1, {}, 0.7) ==
        doctest::Approx(soa::normal_cdf(0.7)).epsilon(1e-12));
  // k = 2: normal with mean rho*x1 and variance 1 - rho^2.
  const std::vector<double> prefix = {1.2};
  const double cond = (0.7 - 0.5 * 1.2) / std::sqrt(1 - 0.25);
  CHECK(soa::marginal_cdf(joint, 2, prefix, 0.7) ==
        doctest::Approx(soa::normal_cdf(cond)).epsilon(1e-12));

  // Independent product: conditioning on a prefix changes nothing.
  const DistributionSpec prod = DistributionSpec::independent(
      {Marginal::uniform_on(0, 2), Marginal::uniform_on(0, 1)});
  CHECK(soa::marginal_cdf(prod, 2, prefix, 0.25) == doctest::Approx(0.25).epsilon(1e-14));

  CHECK_THROWS_AS(soa::marginal_cdf(joint, 3, prefix, 0.0), std::out_of_range);
  CHECK_THROWS_AS(soa::marginal_cdf(joint, 2, {}, 0.0), std::invalid_argument);
}

TEST_CASE("sampling is deterministic in the seed") {
  const DistributionSpec spec = DistributionSpec::independent(
      {Marginal::uniform_on(0, 1), Marginal::normal_with(2, 3)});
  const Eigen::MatrixXd a = soa::sample(spec, 64, 1234);
  const Eigen::MatrixXd b = soa::sample(spec, 64, 1234);
  const Eigen::MatrixXd c = soa::sample(spec, 64, 999);
  CHECK(a == b);
  CHECK(a != c);
  CHECK(a.rows() == 64);
  CHECK(a.cols() == 2);
}

TEST_CASE("sampled marginals pass a KS check at n = 1e5") {
  const int n = 100000;
  SUBCASE("independent uniform and normal") {
    const DistributionSpec spec = DistributionSpec::independent(
        {Marginal::uniform_on(0, 1), Marginal::normal_with(1, 2)});
    const Eigen::MatrixXd s = soa::sample(spec, n, 42);
    std::vector<double> col0(n), col1(n);
    for (int i = 0; i < n; ++i) {
      col0[i] = s(i, 0);
      col1[i] = s(i, 1);
    }
    CHECK(ks_distance(col0, [](double x) { return std::clamp(x, 0.0, 1.0); }) < 0.02);
    CHECK(ks_distance(col1, [](double x) { return soa::normal_cdf((x - 1) / 2); }) < 0.02);
  }
  SUBCASE("correlated normal margins stay standard normal") {
    const Eigen::MatrixXd s = soa::sample(bivariate_normal(0.9), n, 7);
    std::vector<double> col0(n), col1(n);
    double cross = 0;
    for (int i = 0; i < n; ++i) {
      col0[i] = s(i, 0);
      col1[i] = s(i, 1);
      cross += s(i, 0) * s(i, 1);
    }
    CHECK(ks_distance(col0, [](double x) { return soa::normal_cdf(x); }) < 0.02);
    CHECK(ks_distance(col1, [](double x) { return soa::normal_cdf(x); }) < 0.02);
    CHECK(cross / n == doctest::Approx(0.9).epsilon(0.05));
  }
}

TEST_CASE("discrete laws sample their support with the right frequencies") {
  soa::DiscreteMarginal three;
  three.values = {Rational(-1), Rational(0), Rational(2)};
  three.probs = {Rational(1, 4), Rational(1, 4), Rational(1, 2)};
  const DistributionSpec spec = DistributionSpec::independent(
      {Marginal::discrete_with(three), Marginal::bernoulli_with(Rational(1, 4))});
  const int n = 100000;
  const Eigen::MatrixXd s = soa::sample(spec, n, 5);
  int hits_minus1 = 0, hits0 = 0, hits2 = 0, ones = 0;
  for (int i = 0; i < n; ++i) {
    if (s(i, 0) == -1.0) ++hits_minus1;
    else if (s(i, 0) == 0.0) ++hits0;
    else if (s(i, 0) == 2.0) ++hits2;
    else FAIL("sample off the support: " << s(i, 0));
    REQUIRE((s(i, 1) == 0.0 || s(i, 1) == 1.0));
    if (s(i, 1) == 1.0) ++ones;
  }
  CHECK(hits_minus1 / double(n) == doctest::Approx(0.25).epsilon(0.05));
  CHECK(hits0 / double(n) == doctest::Approx(0.25).epsilon(0.05));
  CHECK(hits2 / double(n) == doctest::Approx(0.50).epsilon(0.05));
  CHECK(ones / double(n) == doctest::Approx(0.25).epsilon(0.05));
}

TEST_SUITE_END();
