#include <catch2/catch_amalgamated.hpp>

#include "sbss/diag.hpp"
#include "sbss/mdi.hpp"
#include "support/oracles.hpp"

using sbss::joint_diag;
using sbss::JointDiagOptions;
using sbss::Order;
using sbss::simultaneous_diag;

namespace {

/// Generalized eigenvalues of det(s2 - lambda s1) = 0 by scanning the
/// characteristic function for sign changes and bisecting each bracket.
std::vector<double> pencil_roots_scan(const Eigen::MatrixXd& s1, const Eigen::MatrixXd& s2) {
  auto f = [&](double lam) { return (s2 - lam * s1).determinant(); };
  const double lo = -100.0, hi = 100.0;
  const int steps = 400000;
  std::vector<double> roots;
  double prev_x = lo, prev_f = f(lo);
  for (int i = 1; i <= steps; ++i) {
    const double x = lo + (hi - lo) * i / steps;
    const double fx = f(x);
    if ((prev_f < 0 && fx > 0) || (prev_f > 0 && fx < 0)) {
      double a = prev_x, b = x;
      for (int it = 0; it < 100; ++it) {
        const double mid = 0.5 * (a + b);
        if ((f(a) < 0) == (f(mid) < 0))
          a = mid;
        else
          b = mid;
      }
      roots.push_back(0.5 * (a + b));
    }
    prev_x = x;
    prev_f = fx;
  }
  return roots;
}

bool is_signed_permutation(const Eigen::MatrixXd& m, double tol) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    int big = 0;
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      const double a = std::abs(m(r, c));
      if (a > 1.0 - tol && a < 1.0 + tol)
        ++big;
      else if (a > tol)
        return false;
    }
    if (big != 1) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("pencil of identity and a diagonal matrix sorts its entries", "[diag]") {
  const Eigen::MatrixXd s1 = Eigen::MatrixXd::Identity(3, 3);
  const Eigen::MatrixXd s2 = Eigen::Vector3d(3.0, 1.0, 2.0).asDiagonal();
  const auto res = simultaneous_diag(s1, s2, Order::Decreasing);
  REQUIRE(res.diag_values(0) == Catch::Approx(3.0).margin(1e-12));
  REQUIRE(res.diag_values(1) == Catch::Approx(2.0).margin(1e-12));
  REQUIRE(res.diag_values(2) == Catch::Approx(1.0).margin(1e-12));
  REQUIRE(is_signed_permutation(res.w, 1e-10));
  REQUIRE_FALSE(res.near_tie_warning);

  const auto inc = simultaneous_diag(s1, s2, Order::Increasing);
  REQUIRE(inc.diag_values(0) == Catch::Approx(1.0).margin(1e-12));
  REQUIRE(inc.diag_values(2) == Catch::Approx(3.0).margin(1e-12));
}

TEST_CASE("pencil of a matrix with itself gives unit values and a tie warning", "[diag]") {
  sbss::Rng rng(3);
  const Eigen::MatrixXd s = oracle::random_spd(4, rng);
  const auto res = simultaneous_diag(s, s, Order::Decreasing);
  for (Eigen::Index i = 0; i < 4; ++i)
    REQUIRE(res.diag_values(i) == Catch::Approx(1.0).margin(1e-10));
  REQUIRE(res.near_tie_warning);
  REQUIRE((res.w * s * res.w.transpose() - Eigen::MatrixXd::Identity(4, 4)).norm() < 1e-9);
  // All generalized eigenvalues tie, so W is S^{-1/2} only up to a rotation
  // inside the degenerate eigenspace (exactly what the warning flags):
  // W S^{1/2} is orthogonal but not necessarily a signed permutation.
  const Eigen::MatrixXd q = res.w * sbss::inv_sqrt(s).inverse();
  REQUIRE((q * q.transpose() - Eigen::MatrixXd::Identity(4, 4)).norm() < 1e-9);
}

TEST_CASE("simultaneous diagonalization satisfies both contracts", "[diag]") {
  sbss::Rng rng(7);
  for (int rep = 0; rep < 20; ++rep) {
    const Eigen::MatrixXd s1 = oracle::random_spd(4, rng);
    const Eigen::MatrixXd s2 = oracle::random_symmetric(4, rng);
    const auto res = simultaneous_diag(s1, s2, Order::Decreasing);
    REQUIRE((res.w * s1 * res.w.transpose() - Eigen::MatrixXd::Identity(4, 4)).norm() < 1e-9);
    const Eigen::MatrixXd d = res.w * s2 * res.w.transpose();
    const double spectral = d.cwiseAbs().maxCoeff();
    for (Eigen::Index i = 0; i < 4; ++i)
      for (Eigen::Index j = 0; j < 4; ++j)
        if (i != j) REQUIRE(std::abs(d(i, j)) < 1e-9 * std::max(spectral, 1.0));
    for (Eigen::Index i = 0; i + 1 < 4; ++i) REQUIRE(res.diag_values(i) >= res.diag_values(i + 1));
  }
}

TEST_CASE("generalized eigenvalues match the characteristic-polynomial scan", "[diag]") {
  sbss::Rng rng(11);
  const Eigen::MatrixXd s1 = oracle::random_spd(4, rng);
  const Eigen::MatrixXd s2 = oracle::random_symmetric(4, rng);
  const auto res = simultaneous_diag(s1, s2, Order::Increasing);
  const auto roots = pencil_roots_scan(s1, s2);
  REQUIRE(roots.size() == 4);
  for (Eigen::Index i = 0; i < 4; ++i)
    REQUIRE(res.diag_values(i) == Catch::Approx(roots[i]).margin(1e-6));
}

TEST_CASE("non-SPD first matrix is rejected", "[diag]") {
  Eigen::MatrixXd s1 = Eigen::Vector2d(1.0, -1.0).asDiagonal();
  REQUIRE_THROWS_AS(simultaneous_diag(s1, Eigen::MatrixXd::Identity(2, 2), Order::Decreasing),
                    sbss::Error);
}

TEST_CASE("single-matrix joint diagonalization is an eigendecomposition", "[diag]") {
  sbss::Rng rng(13);
  const Eigen::MatrixXd m = oracle::random_symmetric(4, rng);
  const auto res = joint_diag({m});
  REQUIRE(res.converged);
  const Eigen::MatrixXd d = res.u * m * res.u.transpose();
  for (Eigen::Index i = 0; i < 4; ++i)
    for (Eigen::Index j = 0; j < 4; ++j)
      if (i != j) REQUIRE(std::abs(d(i, j)) < 1e-10);
  // rows of U are the eigenvectors up to sign/permutation
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
  REQUIRE(sbss::mdi(res.u * es.eigenvectors()) < 1e-8);
}

TEST_CASE("commuting family is jointly diagonalized to machine precision", "[diag]") {
  sbss::Rng rng(17);
  const Eigen::MatrixXd v = oracle::random_orthogonal(5, rng);
  std::vector<Eigen::MatrixXd> mats;
  for (int k = 0; k < 3; ++k) {
    Eigen::VectorXd d(5);
    for (int i = 0; i < 5; ++i) d(i) = rng.uniform(-2.0, 2.0);
    mats.push_back(v * d.asDiagonal() * v.transpose());
  }
  const auto res = joint_diag(mats);
  REQUIRE(res.converged);
  for (const auto& m : mats) {
    const Eigen::MatrixXd d = res.u * m * res.u.transpose();
    const double spectral = d.cwiseAbs().maxCoeff();
    for (Eigen::Index i = 0; i < 5; ++i)
      for (Eigen::Index j = 0; j < 5; ++j)
        if (i != j) REQUIRE(std::abs(d(i, j)) < 1e-8 * spectral);
  }
}

TEST_CASE("joint diagonalization beats random orthogonal search", "[diag]") {
  sbss::Rng rng(19);
  const Eigen::MatrixXd m1 = oracle::random_symmetric(3, rng);
  const Eigen::MatrixXd m2 = oracle::random_symmetric(3, rng);
  const auto res = joint_diag({m1, m2});

  double best_random = 0.0;
  for (int it = 0; it < 10000; ++it) {
    const Eigen::MatrixXd q = oracle::random_orthogonal(3, rng);
    const double obj = (q * m1 * q.transpose()).diagonal().squaredNorm() +
                       (q * m2 * q.transpose()).diagonal().squaredNorm();
    best_random = std::max(best_random, obj);
  }
  REQUIRE(res.objective >= best_random - 1e-9);
}

TEST_CASE("joint diagonalizer stays orthogonal and preserves traces", "[diag]") {
  sbss::Rng rng(23);
  std::vector<Eigen::MatrixXd> mats = {oracle::random_symmetric(5, rng),
                                       oracle::random_symmetric(5, rng),
                                       oracle::random_symmetric(5, rng)};
  for (int sweeps : {1, 2, 5, 100}) {
    JointDiagOptions opts;
    opts.max_sweeps = sweeps;
    const auto res = joint_diag(mats, opts);
    REQUIRE((res.u.transpose() * res.u - Eigen::MatrixXd::Identity(5, 5)).norm() < 1e-10);
    for (const auto& m : mats) {
      const double tr = (res.u * m * res.u.transpose()).trace();
      REQUIRE(tr == Catch::Approx(m.trace()).margin(1e-10));
    }
  }
}

TEST_CASE("objective is monotone over individual rotations", "[diag]") {
  sbss::Rng rng(29);
  std::vector<Eigen::MatrixXd> mats = {oracle::random_symmetric(5, rng),
                                       oracle::random_symmetric(5, rng)};
  double prev = mats[0].diagonal().squaredNorm() + mats[1].diagonal().squaredNorm();
  int rotations = 0;
  JointDiagOptions opts;
  opts.on_rotation = [&](double obj) {
    REQUIRE(obj >= prev - 1e-10 * (1.0 + std::abs(prev)));
    prev = obj;
    ++rotations;
  };
  const auto res = joint_diag(mats, opts);
  REQUIRE(rotations > 0);
  REQUIRE(res.objective == Catch::Approx(prev).margin(1e-12));
}

TEST_CASE("sweep cap sets the non-converged flag without throwing", "[diag]") {
  sbss::Rng rng(31);
  std::vector<Eigen::MatrixXd> mats = {oracle::random_symmetric(6, rng),
                                       oracle::random_symmetric(6, rng)};
  JointDiagOptions opts;
  opts.max_sweeps = 1;
  opts.tol = 1e-15;
  const auto res = joint_diag(mats, opts);
  REQUIRE_FALSE(res.converged);
  REQUIRE(res.sweeps == 1);
}

TEST_CASE("closed-form pair rotation matches a fine grid search", "[diag]") {
  sbss::Rng rng(37);
  for (int rep = 0; rep < 50; ++rep) {
    const std::size_t k = 1 + rep % 4;
    std::vector<double> h(k), g(k);
    for (std::size_t i = 0; i < k; ++i) {
      h[i] = rng.uniform(-2.0, 2.0);
      g[i] = rng.uniform(-2.0, 2.0);
    }
    auto objective = [&](double theta) {
      const double c2 = std::cos(2.0 * theta), s2 = std::sin(2.0 * theta);
      double obj = 0.0;
      for (std::size_t i = 0; i < k; ++i) {
        const double d = h[i] * c2 + g[i] * s2;
        obj += d * d;
      }
      return obj;
    };
    const double theta_star = sbss::detail::pair_rotation_angle(h, g);
    REQUIRE(theta_star > -std::numbers::pi / 4 - 1e-12);
    REQUIRE(theta_star <= std::numbers::pi / 4 + 1e-12);
    double grid_best = 0.0;
    for (int i = 0; i <= 40000; ++i) {
      const double theta = -std::numbers::pi / 4 + std::numbers::pi / 2 * i / 40000.0;
      grid_best = std::max(grid_best, objective(theta));
    }
    REQUIRE(objective(theta_star) >= grid_best - 1e-8 * (1.0 + grid_best));
  }
}

TEST_CASE("two-step joint diagonalization agrees with the pencil solver", "[diag]") {
  sbss::Rng rng(41);
  const Eigen::MatrixXd s1 = oracle::random_spd(4, rng);
  const Eigen::MatrixXd s2 = oracle::random_symmetric(4, rng);
  const auto pencil = simultaneous_diag(s1, s2, Order::Decreasing);

  const Eigen::MatrixXd b = sbss::inv_sqrt(s1);
  const Eigen::MatrixXd whitened = b * s2 * b;
  const auto jd = joint_diag({whitened});
  const Eigen::MatrixXd w_joint = jd.u * b;
  REQUIRE(sbss::mdi(w_joint * pencil.w.inverse()) < 1e-8);
}
