#include <catch2/catch_amalgamated.hpp>

#include "sbss/scatter.hpp"
#include "support/oracles.hpp"

using sbss::FieldSample;
using sbss::KernelSpec;

namespace {

FieldSample random_sample(Eigen::Index n, Eigen::Index p, double side, sbss::Rng& rng) {
  auto locs = oracle::random_locations(n, side, rng);
  return FieldSample(oracle::random_matrix(n, p, rng, -2.0, 2.0), std::move(locs));
}

/// Quantize to multiples of 2^-26 so constant shifts by similarly quantized
/// values are exact in double precision.
double quantize(double x) { return std::ldexp(std::round(std::ldexp(x, 26)), -26); }

}  // namespace

TEST_CASE("zero-lag lcov is the sample covariance with divisor n", "[scatter]") {
  sbss::Rng rng(3);
  const auto sample = random_sample(20, 3, 6.0, rng);
  const Eigen::RowVectorXd mean = sample.data.colwise().mean();
  const Eigen::MatrixXd centered = sample.data.rowwise() - mean;
  const Eigen::MatrixXd cov = centered.transpose() * centered / 20.0;
  const auto s = sbss::lcov(sample, KernelSpec::zero_lag());
  REQUIRE((s.m - cov).cwiseAbs().maxCoeff() < 1e-13);
  REQUIRE(s.kind == sbss::ScatterKind::Cov);
}

TEST_CASE("constant field has zero scatter", "[scatter]") {
  sbss::Rng rng(5);
  auto locs = oracle::random_locations(8, 3.0, rng);
  Eigen::MatrixXd data(8, 2);
  data.col(0).setConstant(2.5);
  data.col(1).setConstant(-1.0);
  const FieldSample sample(data, locs);
  REQUIRE(sbss::lcov(sample, KernelSpec::ball(2.0)).m.cwiseAbs().maxCoeff() < 1e-14);
  REQUIRE(sbss::ldiff(sample, KernelSpec::ball(2.0)).m.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("lcov matches the brute-force double loop", "[scatter]") {
  sbss::Rng rng(9);
  const auto small = random_sample(4, 2, 2.0, rng);
  const auto brute4 = oracle::lcov_brute(small.data, small.locs, KernelSpec::ball(1.5));
  REQUIRE((sbss::lcov(small, KernelSpec::ball(1.5)).m - brute4).cwiseAbs().maxCoeff() < 1e-13);

  const auto bigger = random_sample(15, 3, 3.0, rng);
  for (const auto& spec : {KernelSpec::ball(1.0), KernelSpec::ring(0.5, 2.0), KernelSpec::gauss(1.0)}) {
    const auto brute = oracle::lcov_brute(bigger.data, bigger.locs, spec);
    REQUIRE((sbss::lcov(bigger, spec).m - brute).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("ldiff matches the brute-force double loop", "[scatter]") {
  sbss::Rng rng(13);
  const auto small = random_sample(4, 2, 2.0, rng);
  const auto brute4 = oracle::ldiff_brute(small.data, small.locs, KernelSpec::ring(0.0, 2.0));
  REQUIRE((sbss::ldiff(small, KernelSpec::ring(0.0, 2.0)).m - brute4).cwiseAbs().maxCoeff() < 1e-12);

  const auto bigger = random_sample(15, 3, 3.0, rng);
  for (const auto& spec : {KernelSpec::ball(1.5), KernelSpec::gauss(1.0)}) {
    const auto brute = oracle::ldiff_brute(bigger.data, bigger.locs, spec);
    REQUIRE((sbss::ldiff(bigger, spec).m - brute).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("ldiff is exactly invariant to constant shifts", "[scatter]") {
  sbss::Rng rng(17);
  auto locs = oracle::random_locations(12, 4.0, rng);
  Eigen::MatrixXd data = oracle::random_matrix(12, 3, rng, -2.0, 2.0).unaryExpr(&quantize);
  Eigen::RowVector3d shift(quantize(7.25), quantize(-3.5), quantize(11.0));
  const FieldSample base(data, locs);
  const FieldSample shifted(data.rowwise() + shift, locs);
  const auto spec = KernelSpec::ball(2.0);
  // bitwise identical: differences cancel the shift before any rounding
  REQUIRE(sbss::ldiff(base, spec).m == sbss::ldiff(shifted, spec).m);
}

TEST_CASE("scatters transform covariantly under invertible maps", "[scatter]") {
  sbss::Rng rng(19);
  const auto sample = random_sample(25, 3, 4.0, rng);
  const Eigen::MatrixXd b = oracle::random_invertible(3, rng);
  const FieldSample mapped(sample.data * b.transpose(), sample.locs);
  for (const auto& spec : {KernelSpec::ball(1.5), KernelSpec::ring(0.0, 2.0)}) {
    const Eigen::MatrixXd lc = sbss::lcov(sample, spec).m;
    const Eigen::MatrixXd lc_mapped = sbss::lcov(mapped, spec).m;
    REQUIRE((lc_mapped - b * lc * b.transpose()).cwiseAbs().maxCoeff() < 1e-10);
    const Eigen::MatrixXd ld = sbss::ldiff(sample, spec).m;
    const Eigen::MatrixXd ld_mapped = sbss::ldiff(mapped, spec).m;
    REQUIRE((ld_mapped - b * ld * b.transpose()).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("ball smaller than every inter-point gap keeps only on-site terms", "[scatter]") {
  Eigen::MatrixXd coords(4, 2);
  coords << 0, 0, 10, 0, 0, 10, 10, 10;
  const sbss::LocationSet locs(coords);
  sbss::Rng rng(23);
  const FieldSample sample(oracle::random_matrix(4, 2, rng), locs);
  const auto tiny_ball = sbss::lcov(sample, KernelSpec::ball(0.5));
  REQUIRE((tiny_ball.m - oracle::lcov_brute(sample.data, locs, KernelSpec::ball(0.5)))
              .cwiseAbs()
              .maxCoeff() < 1e-14);
  // distinct locations: only the i = j terms survive, i.e. the covariance
  REQUIRE((tiny_ball.m - sbss::lcov(sample, KernelSpec::zero_lag()).m).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("ring capturing a single pair gives the variogram-style outer product", "[scatter]") {
  Eigen::MatrixXd coords(4, 2);
  coords << 0, 0, 1.5, 0, 10, 0, 20, 0;  // only the (0,1) pair has distance in (1, 2]
  const sbss::LocationSet locs(coords);
  sbss::Rng rng(29);
  const FieldSample sample(oracle::random_matrix(4, 2, rng), locs);
  const auto s = sbss::ldiff(sample, KernelSpec::ring(1.0, 2.0));
  const Eigen::RowVectorXd d = sample.data.row(0) - sample.data.row(1);
  const Eigen::MatrixXd expected = 2.0 / 4.0 * d.transpose() * d;  // (i,j) and (j,i)
  REQUIRE((s.m - expected).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("normalized variant rescales by total weight", "[scatter]") {
  sbss::Rng rng(31);
  const auto sample = random_sample(10, 2, 3.0, rng);
  const auto spec = KernelSpec::ball(1.5);
  const Eigen::MatrixXd w = sbss::kernel_weights(spec, sample.locs);
  const auto by_n = sbss::lcov(sample, spec, sbss::Normalization::ByN);
  const auto by_w = sbss::lcov(sample, spec, sbss::Normalization::ByWeightSum);
  REQUIRE((by_w.m * w.sum() / 10.0 - by_n.m).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("degenerate kernels are rejected", "[scatter]") {
  sbss::Rng rng(37);
  const auto sample = random_sample(6, 2, 2.0, rng);
  // max distance inside a 2x2 box is ~2.8, so this ring is empty
  REQUIRE_THROWS_WITH(sbss::lcov(sample, KernelSpec::ring(50.0, 60.0)),
                      Catch::Matchers::ContainsSubstring("empty kernel support"));
  REQUIRE_THROWS_WITH(sbss::ldiff(sample, KernelSpec::ring(50.0, 60.0)),
                      Catch::Matchers::ContainsSubstring("empty kernel support"));
  REQUIRE_THROWS_AS(sbss::ldiff(sample, KernelSpec::zero_lag()), sbss::Error);

  // ball keeps the diagonal, but ldiff has no genuine pair inside a tiny radius
  Eigen::MatrixXd coords(3, 2);
  coords << 0, 0, 5, 0, 0, 5;
  const FieldSample far_apart(oracle::random_matrix(3, 2, rng), sbss::LocationSet(coords));
  REQUIRE_NOTHROW(sbss::lcov(far_apart, KernelSpec::ball(0.1)));
  REQUIRE_THROWS_WITH(sbss::ldiff(far_apart, KernelSpec::ball(0.1)),
                      Catch::Matchers::ContainsSubstring("empty kernel support"));
}

TEST_CASE("inv_sqrt basics", "[scatter]") {
  REQUIRE(sbss::inv_sqrt(Eigen::MatrixXd::Identity(3, 3)).isApprox(Eigen::MatrixXd::Identity(3, 3)));

  Eigen::MatrixXd d = Eigen::Vector2d(4.0, 9.0).asDiagonal();
  const Eigen::MatrixXd r = sbss::inv_sqrt(d);
  REQUIRE(r(0, 0) == Catch::Approx(0.5).margin(1e-14));
  REQUIRE(r(1, 1) == Catch::Approx(1.0 / 3.0).margin(1e-14));
  REQUIRE(std::abs(r(0, 1)) < 1e-15);

  sbss::Rng rng(41);
  const Eigen::MatrixXd s = oracle::random_spd(5, rng);
  const Eigen::MatrixXd is = sbss::inv_sqrt(s);
  REQUIRE((is * s * is - Eigen::MatrixXd::Identity(5, 5)).cwiseAbs().maxCoeff() < 1e-10);
  REQUIRE(is.isApprox(is.transpose(), 1e-12));
}

TEST_CASE("inv_sqrt rejects non-SPD input and names the eigenvalue", "[scatter]") {
  Eigen::MatrixXd m = Eigen::Vector2d(1.0, -0.5).asDiagonal();
  REQUIRE_THROWS_WITH(sbss::inv_sqrt(m), Catch::Matchers::ContainsSubstring("-0.5"));
  REQUIRE_THROWS_AS(sbss::inv_sqrt(Eigen::MatrixXd::Zero(2, 2)), sbss::Error);
}

TEST_CASE("field sample validation", "[scatter]") {
  sbss::Rng rng(43);
  auto locs = oracle::random_locations(4, 2.0, rng);
  REQUIRE_THROWS_AS(FieldSample(Eigen::MatrixXd::Zero(3, 2), locs), sbss::Error);
  REQUIRE_THROWS_AS(FieldSample(Eigen::MatrixXd::Zero(4, 1), locs), sbss::Error);
  Eigen::MatrixXd bad = Eigen::MatrixXd::Zero(4, 2);
  bad(1, 1) = std::numeric_limits<double>::infinity();
  REQUIRE_THROWS_AS(FieldSample(bad, locs), sbss::Error);
}
