#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <vector>

#include "sbss/scatter.hpp"

namespace sbss {

enum class Order { Increasing, Decreasing };

/// Result of diagonalizing a two-matrix pencil: W with W S1 W^T = I and
/// W S2 W^T diagonal, rows ordered by the achieved diagonal values.
struct DiagResult {
  Eigen::MatrixXd w;
  Eigen::VectorXd diag_values;
  Order order;
  /// Set when adjacent generalized eigenvalues are closer than 1e-8 relative:
  /// the unmixing is then defined only up to rotation inside the eigenspace.
  bool near_tie_warning = false;
};

struct JointDiagResult {
  Eigen::MatrixXd u;   // orthogonal, rows ordered by decreasing diagonal energy
  double objective;    // sum_k || diag(U M_k U^T) ||^2
  int sweeps;
  bool converged;
};

namespace detail {

/// Closed-form angle of the 2x2 subproblem: the rotation by theta in
/// (-pi/4, pi/4] maximizing sum_k of the two squared diagonal entries of the
/// rotated pair (i,j). h_k and g_k are M_k(i,i)-M_k(j,j) and 2 M_k(i,j).
inline double pair_rotation_angle(const std::vector<double>& h, const std::vector<double>& g) {
  double gxx = 0.0, gyy = 0.0, gxy = 0.0;
  for (std::size_t k = 0; k < h.size(); ++k) {
    gxx += h[k] * h[k];
    gyy += g[k] * g[k];
    gxy += h[k] * g[k];
  }
  // Principal axis of the 2x2 Gram matrix of (h_k, g_k) pairs; the double
  // angle lands in (-pi/2, pi/2].
  return 0.5 * (0.5 * std::atan2(2.0 * gxy, gxx - gyy));
}

inline void apply_givens(Eigen::MatrixXd& m, Eigen::Index i, Eigen::Index j, double c, double s) {
  const Eigen::Index n = m.cols();
  for (Eigen::Index k = 0; k < n; ++k) {
    const double a = m(i, k), b = m(j, k);
    m(i, k) = c * a + s * b;
    m(j, k) = -s * a + c * b;
  }
  for (Eigen::Index k = 0; k < n; ++k) {
    const double a = m(k, i), b = m(k, j);
    m(k, i) = c * a + s * b;
    m(k, j) = -s * a + c * b;
  }
}

inline void apply_givens_rows(Eigen::MatrixXd& m, Eigen::Index i, Eigen::Index j, double c, double s) {
  const Eigen::Index n = m.cols();
  for (Eigen::Index k = 0; k < n; ++k) {
    const double a = m(i, k), b = m(j, k);
    m(i, k) = c * a + s * b;
    m(j, k) = -s * a + c * b;
  }
}

inline double diag_objective(const std::vector<Eigen::MatrixXd>& mats) {
  double obj = 0.0;
  for (const auto& m : mats) obj += m.diagonal().squaredNorm();
  return obj;
}

}  // namespace detail

// ============================================================================
// Simultaneous diagonalization of a pencil (S1 SPD, S2 symmetric)
// ============================================================================

inline DiagResult simultaneous_diag(const Eigen::MatrixXd& s1, const Eigen::MatrixXd& s2,
                                    Order order) {
  if (s1.rows() != s2.rows() || s1.cols() != s2.cols())
    throw Error("simultaneous_diag: dimension mismatch");
  const Eigen::MatrixXd b = inv_sqrt(s1);  // throws when s1 is not SPD
  Eigen::MatrixXd c = b * s2 * b;
  c = 0.5 * (c + c.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(c);
  if (es.info() != Eigen::Success) throw Error("simultaneous_diag: eigendecomposition failed");
  const Eigen::VectorXd lam = es.eigenvalues();  // ascending
  const Eigen::Index p = lam.size();

  std::vector<Eigen::Index> idx(p);
  std::iota(idx.begin(), idx.end(), 0);
  if (order == Order::Decreasing)
    std::stable_sort(idx.begin(), idx.end(),
                     [&](Eigen::Index a, Eigen::Index bb) { return lam(a) > lam(bb); });
  // ascending already matches Order::Increasing; ties keep the earlier index

  DiagResult res;
  res.order = order;
  res.w.resize(p, p);
  res.diag_values.resize(p);
  for (Eigen::Index r = 0; r < p; ++r) {
    res.w.row(r) = es.eigenvectors().col(idx[r]).transpose() * b;
    res.diag_values(r) = lam(idx[r]);
  }

  const double scale = std::max(lam.cwiseAbs().maxCoeff(), 1e-300);
  for (Eigen::Index k = 0; k + 1 < p; ++k)
    if (std::abs(lam(k + 1) - lam(k)) < 1e-8 * scale) res.near_tie_warning = true;
  return res;
}

inline DiagResult simultaneous_diag(const ScatterMatrix& s1, const ScatterMatrix& s2, Order order) {
  return simultaneous_diag(s1.m, s2.m, order);
}

// ============================================================================
// Approximate orthogonal joint diagonalization (cyclic Givens sweeps)
// ============================================================================

struct JointDiagOptions {
  double tol = 1e-10;    // |sin theta| below which a rotation is skipped
  int max_sweeps = 100;
  /// Called with the current objective after every applied rotation;
  /// lets tests assert per-rotation monotonicity.
  std::function<void(double)> on_rotation;
};

/// Maximizes sum_k ||diag(U M_k U^T)||_F^2 over orthogonal U. Rows of the
/// returned U are ordered by decreasing diagonal energy across the set.
inline JointDiagResult joint_diag(std::vector<Eigen::MatrixXd> mats,
                                  const JointDiagOptions& opts = {}) {
  if (mats.empty()) throw Error("joint_diag: need at least one matrix");
  const Eigen::Index p = mats[0].rows();
  for (auto& m : mats) {
    if (m.rows() != p || m.cols() != p) throw Error("joint_diag: dimension mismatch");
    m = 0.5 * (m + m.transpose()).eval();
  }
  const std::size_t kk = mats.size();

  Eigen::MatrixXd u = Eigen::MatrixXd::Identity(p, p);
  std::vector<double> h(kk), g(kk);
  int sweeps = 0;
  bool converged = (p < 2);
  while (sweeps < opts.max_sweeps && !converged) {
    double max_abs_sin = 0.0;
    for (Eigen::Index i = 0; i < p - 1; ++i) {
      for (Eigen::Index j = i + 1; j < p; ++j) {
        for (std::size_t k = 0; k < kk; ++k) {
          h[k] = mats[k](i, i) - mats[k](j, j);
          g[k] = 2.0 * mats[k](i, j);
        }
        const double theta = detail::pair_rotation_angle(h, g);
        const double s = std::sin(theta);
        max_abs_sin = std::max(max_abs_sin, std::abs(s));
        if (std::abs(s) < opts.tol) continue;
        const double c = std::cos(theta);
        for (auto& m : mats) detail::apply_givens(m, i, j, c, s);
        detail::apply_givens_rows(u, i, j, c, s);
        if (opts.on_rotation) opts.on_rotation(detail::diag_objective(mats));
      }
    }
    ++sweeps;
    if (max_abs_sin < opts.tol) converged = true;
  }

  // Row order: decreasing sum over k of squared diagonal entries.
  Eigen::VectorXd energy = Eigen::VectorXd::Zero(p);
  for (const auto& m : mats) energy += m.diagonal().cwiseAbs2();
  std::vector<Eigen::Index> idx(p);
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return energy(a) > energy(b); });

  JointDiagResult res;
  res.u.resize(p, p);
  for (Eigen::Index r = 0; r < p; ++r) res.u.row(r) = u.row(idx[r]);
  res.objective = detail::diag_objective(mats);
  res.sweeps = sweeps;
  res.converged = converged;
  return res;
}

inline JointDiagResult joint_diag(const std::vector<ScatterMatrix>& mats,
                                  const JointDiagOptions& opts = {}) {
  std::vector<Eigen::MatrixXd> raw;
  raw.reserve(mats.size());
  for (const auto& s : mats) raw.push_back(s.m);
  return joint_diag(std::move(raw), opts);
}

}  // namespace sbss
