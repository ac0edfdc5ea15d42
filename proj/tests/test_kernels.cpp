#include <catch2/catch_amalgamated.hpp>

#include "sbss/kernels.hpp"
#include "support/oracles.hpp"

using sbss::KernelSpec;

namespace {
Eigen::Vector2d lag(double x, double y) { return Eigen::Vector2d(x, y); }
}  // namespace

TEST_CASE("ball kernel indicator", "[kernels]") {
  const auto ball = KernelSpec::ball(1.0);
  REQUIRE(sbss::eval_kernel(ball, lag(0, 0)) == 1.0);
  REQUIRE(sbss::eval_kernel(ball, lag(1.1, 0)) == 0.0);
  REQUIRE(sbss::eval_kernel(ball, lag(1.0, 0)) == 1.0);  // inclusive
}

TEST_CASE("ring kernel has strict inner and inclusive outer bound", "[kernels]") {
  const auto ring = KernelSpec::ring(1.0, 2.0);
  REQUIRE(sbss::eval_kernel(ring, lag(1.0, 0)) == 0.0);
  REQUIRE(sbss::eval_kernel(ring, lag(2.0, 0)) == 1.0);
  REQUIRE(sbss::eval_kernel(ring, lag(1.5, 0)) == 1.0);
  REQUIRE(sbss::eval_kernel(ring, lag(2.5, 0)) == 0.0);
}

TEST_CASE("gauss kernel value is fixed by the 0.95 normal quantile", "[kernels]") {
  const double q = oracle::inv_norm_bisect(0.95);
  const auto gauss = KernelSpec::gauss(2.0);
  // at the kernel radius the exponent is exactly -q^2/2
  REQUIRE(sbss::eval_kernel(gauss, lag(2.0, 0)) == Catch::Approx(std::exp(-0.5 * q * q)).epsilon(1e-12));
  REQUIRE(sbss::eval_kernel(gauss, lag(0, 0)) == 1.0);
  REQUIRE(sbss::gauss_kernel_quantile() == Catch::Approx(q).margin(1e-10));
}

TEST_CASE("zero-lag kernel is an exact indicator", "[kernels]") {
  const auto zero = KernelSpec::zero_lag();
  REQUIRE(sbss::eval_kernel(zero, lag(0, 0)) == 1.0);
  REQUIRE(sbss::eval_kernel(zero, lag(1e-300, 0)) == 0.0);
}

TEST_CASE("kernels are symmetric in the lag and bounded in [0,1]", "[kernels]") {
  sbss::Rng rng(41);
  const std::vector<KernelSpec> specs = {KernelSpec::ball(1.3), KernelSpec::ring(0.5, 2.0),
                                         KernelSpec::gauss(1.7), KernelSpec::zero_lag()};
  for (int it = 0; it < 200; ++it) {
    const Eigen::Vector2d h(rng.uniform(-3, 3), rng.uniform(-3, 3));
    for (const auto& spec : specs) {
      const double v = sbss::eval_kernel(spec, h);
      REQUIRE(v == sbss::eval_kernel(spec, Eigen::Vector2d(-h)));
      REQUIRE(v >= 0.0);
      REQUIRE(v <= 1.0);
      if (spec.kind() != sbss::KernelKind::Gauss) REQUIRE((v == 0.0 || v == 1.0));
    }
  }
}

TEST_CASE("weight matrix of coincident locations", "[kernels]") {
  Eigen::MatrixXd coords(2, 2);
  coords << 0.5, 0.5, 0.5, 0.5;
  const sbss::LocationSet locs(coords);
  REQUIRE(sbss::kernel_weights(KernelSpec::ball(1.0), locs).isApprox(Eigen::MatrixXd::Ones(2, 2)));
  // coincident pairs also count as zero lag
  REQUIRE(sbss::kernel_weights(KernelSpec::zero_lag(), locs).isApprox(Eigen::MatrixXd::Ones(2, 2)));
}

TEST_CASE("weight matrix of separated locations is the identity pattern", "[kernels]") {
  Eigen::MatrixXd coords(2, 2);
  coords << 0, 0, 3, 0;
  const sbss::LocationSet locs(coords);
  const Eigen::MatrixXd w = sbss::kernel_weights(KernelSpec::ball(1.0), locs);
  REQUIRE(w.isApprox(Eigen::MatrixXd::Identity(2, 2)));
}

TEST_CASE("zero-lag weights reduce to the identity for distinct locations", "[kernels]") {
  sbss::Rng rng(7);
  const auto locs = oracle::random_locations(12, 10.0, rng);
  REQUIRE(sbss::kernel_weights(KernelSpec::zero_lag(), locs)
              .isApprox(Eigen::MatrixXd::Identity(12, 12)));
}

TEST_CASE("weight matrix matches direct pairwise evaluation", "[kernels]") {
  sbss::Rng rng(11);
  const auto locs = oracle::random_locations(5, 2.0, rng);
  for (const auto& spec : {KernelSpec::ring(0.0, 1.0), KernelSpec::gauss(0.8)}) {
    const Eigen::MatrixXd w = sbss::kernel_weights(spec, locs);
    REQUIRE(w.isApprox(w.transpose()));
    for (Eigen::Index i = 0; i < 5; ++i)
      for (Eigen::Index j = 0; j < 5; ++j) {
        const Eigen::VectorXd h = (locs.coords.row(i) - locs.coords.row(j)).transpose();
        REQUIRE(w(i, j) == sbss::eval_kernel(spec, h));
      }
  }
}

TEST_CASE("kernel config strings round trip", "[kernels]") {
  for (const std::string text : {"ball:1.5", "ring:0:2", "ring:1:2.5", "gauss:1", "zero"}) {
    const KernelSpec spec = KernelSpec::parse(text);
    const KernelSpec again = KernelSpec::parse(spec.to_string());
    REQUIRE(spec.kind() == again.kind());
    REQUIRE(spec.r_inner() == again.r_inner());
    REQUIRE(spec.r_outer() == again.r_outer());
  }
}

TEST_CASE("bad kernel specs are rejected", "[kernels]") {
  for (const std::string text : {"ball", "ball:x", "ball:-1", "ring:2:1", "ring:1", "disc:1",
                                 "zero:0", "gauss:0", ""}) {
    REQUIRE_THROWS_AS(KernelSpec::parse(text), sbss::SchemaError);
  }
  REQUIRE_THROWS_AS(KernelSpec::ball(0.0), sbss::Error);
  REQUIRE_THROWS_AS(KernelSpec::ring(-0.5, 1.0), sbss::Error);
  REQUIRE_THROWS_AS(KernelSpec::ring(1.0, 1.0), sbss::Error);
}

TEST_CASE("location set validation", "[kernels]") {
  REQUIRE_THROWS_AS(sbss::LocationSet(Eigen::MatrixXd::Zero(1, 2)), sbss::Error);
  Eigen::MatrixXd bad(2, 2);
  bad << 0, 0, 1, std::numeric_limits<double>::quiet_NaN();
  REQUIRE_THROWS_AS(sbss::LocationSet(bad), sbss::Error);
}
