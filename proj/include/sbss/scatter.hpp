#pragma once

#include <Eigen/Dense>
#include <cstring>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>

#include "sbss/kernels.hpp"

namespace sbss {

/// One realization of a multivariate random field: row i of data is the
/// observation at locs row i.
struct FieldSample {
  Eigen::MatrixXd data;
  LocationSet locs;

  FieldSample(Eigen::MatrixXd d, LocationSet l) : data(std::move(d)), locs(std::move(l)) {
    if (data.rows() != locs.n())
      throw Error(detail::str("FieldSample: ", data.rows(), " rows vs ", locs.n(), " locations"));
    if (data.cols() < 2) throw Error("FieldSample: need p >= 2 variables");
    if (!data.allFinite()) throw Error("FieldSample: non-finite entry");
  }

  Eigen::Index n() const { return data.rows(); }
  Eigen::Index p() const { return data.cols(); }
};

enum class ScatterKind { Cov, LCov, LDiff };

struct ScatterMatrix {
  Eigen::MatrixXd m;
  ScatterKind kind;
  std::optional<KernelSpec> kernel;
};

/// Divisor convention for the local scatter sums: the displayed formulas
/// divide by n; the normalized variant divides by the total kernel weight.
/// Either choice only rescales, so the methods' eigenstructure is unchanged.
enum class Normalization { ByN, ByWeightSum };

// ============================================================================
// Local covariance / local difference matrices
// ============================================================================

namespace detail {

/// Zero-lag sum without materializing the n x n weight matrix: groups rows
/// whose coordinates agree exactly; distinct locations reduce to the plain
/// covariance sum.
inline Eigen::MatrixXd zero_lag_sum(const Eigen::MatrixXd& centered, const LocationSet& locs) {
  const Eigen::Index n = centered.rows(), p = centered.cols(), d = locs.dim();
  std::unordered_map<std::string, Eigen::RowVectorXd> groups;
  bool any_coincident = false;
  std::string key(static_cast<std::size_t>(d) * sizeof(double), '\0');
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index c = 0; c < d; ++c) {
      const double v = locs.coords(i, c);
      std::memcpy(key.data() + c * sizeof(double), &v, sizeof(double));
    }
    auto [it, inserted] = groups.try_emplace(key, centered.row(i));
    if (!inserted) {
      it->second += centered.row(i);
      any_coincident = true;
    }
  }
  if (!any_coincident) return centered.transpose() * centered;
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(p, p);
  for (const auto& [unused, sum] : groups) m += sum.transpose() * sum;
  return m;
}

}  // namespace detail

/// LCov_f: (1/n) sum_{i,j} f(s_i - s_j) (x_i - xbar)(x_j - xbar)^T with the
/// global sample mean xbar. ZeroLag reduces to the covariance with divisor n.
inline ScatterMatrix lcov(const FieldSample& sample, const KernelSpec& spec,
                          Normalization norm = Normalization::ByN) {
  const Eigen::Index n = sample.n();
  const Eigen::RowVectorXd mean = sample.data.colwise().mean();
  const Eigen::MatrixXd centered = sample.data.rowwise() - mean;

  Eigen::MatrixXd m;
  double total = 0.0;
  if (spec.kind() == KernelKind::ZeroLag) {
    m = detail::zero_lag_sum(centered, sample.locs);
    total = static_cast<double>(n);  // at least the i = j pairs
  } else {
    const Eigen::MatrixXd w = kernel_weights(spec, sample.locs);
    total = w.sum();
    if (total == 0.0) throw Error(detail::str("lcov: empty kernel support for ", spec.to_string()));
    m = centered.transpose() * (w * centered);
  }
  m /= (norm == Normalization::ByN) ? static_cast<double>(n) : total;
  m = 0.5 * (m + m.transpose()).eval();  // shed floating-point asymmetry only
  return {std::move(m), spec.kind() == KernelKind::ZeroLag ? ScatterKind::Cov : ScatterKind::LCov, spec};
}

/// LDiff_f: (1/n) sum_{i,j} f(s_i - s_j) (x_i - x_j)(x_i - x_j)^T. The sum is
/// accumulated from the literal pairwise differences, so no mean estimate
/// enters and adding a constant vector to every row changes nothing, bit for
/// bit. Pairs with zero weight are skipped.
inline ScatterMatrix ldiff(const FieldSample& sample, const KernelSpec& spec,
                           Normalization norm = Normalization::ByN) {
  if (spec.kind() == KernelKind::ZeroLag)
    throw Error("ldiff: zero-lag kernel is degenerate (all differences vanish)");
  const Eigen::Index n = sample.n(), p = sample.p();
  const Eigen::MatrixXd& x = sample.data;
  const LocationSet& locs = sample.locs;
  const double q = gauss_kernel_quantile();

  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(p, p);
  Eigen::VectorXd diff(p);
  double pair_weight = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double dist = (locs.coords.row(i) - locs.coords.row(j)).norm();
      double w = 0.0;
      switch (spec.kind()) {
        case KernelKind::Ball:
          w = dist <= spec.radius() ? 1.0 : 0.0;
          break;
        case KernelKind::Ring:
          w = (spec.r_inner() < dist && dist <= spec.r_outer()) ? 1.0 : 0.0;
          break;
        case KernelKind::Gauss: {
          const double t = q * dist / spec.radius();
          w = std::exp(-0.5 * t * t);
          break;
        }
        case KernelKind::ZeroLag:
          break;
      }
      if (w == 0.0) continue;
      pair_weight += 2.0 * w;  // (i,j) and (j,i)
      diff = (x.row(i) - x.row(j)).transpose();
      m.selfadjointView<Eigen::Lower>().rankUpdate(diff, 2.0 * w);
    }
  }
  if (pair_weight == 0.0)
    throw Error(detail::str("ldiff: empty kernel support for ", spec.to_string()));
  const Eigen::MatrixXd full = m.selfadjointView<Eigen::Lower>();
  m = full;

  // the ByWeightSum divisor counts the diagonal f(0) terms of the display sum
  const double f0 = eval_kernel(spec, Eigen::VectorXd::Zero(locs.dim()));
  const double divisor = (norm == Normalization::ByN)
                             ? static_cast<double>(n)
                             : pair_weight + f0 * static_cast<double>(n);
  m /= divisor;
  return {std::move(m), ScatterKind::LDiff, spec};
}

// ============================================================================
// Symmetric inverse square root
// ============================================================================

/// S^{-1/2} of a symmetric positive definite matrix via eigendecomposition.
/// Rejects inputs whose smallest eigenvalue is below 1e-10 x the largest.
inline Eigen::MatrixXd inv_sqrt(const Eigen::MatrixXd& s) {
  if (s.rows() != s.cols()) throw Error("inv_sqrt: matrix not square");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (s + s.transpose()));
  if (es.info() != Eigen::Success) throw Error("inv_sqrt: eigendecomposition failed");
  const Eigen::VectorXd lam = es.eigenvalues();
  const double lam_max = lam.maxCoeff();
  const double lam_min = lam.minCoeff();
  if (!(lam_min > 1e-10 * lam_max) || !(lam_max > 0.0))
    throw Error(detail::str("inv_sqrt: matrix not positive definite (smallest eigenvalue ",
                            lam_min, ", largest ", lam_max, ")"));
  const Eigen::VectorXd inv_root = lam.array().rsqrt();
  return es.eigenvectors() * inv_root.asDiagonal() * es.eigenvectors().transpose();
}

inline Eigen::MatrixXd inv_sqrt(const ScatterMatrix& s) { return inv_sqrt(s.m); }

}  // namespace sbss
