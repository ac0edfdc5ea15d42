#pragma once

#include <Eigen/Dense>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "sbss/estimators.hpp"

namespace sbss {

/// Strictly positive concentration table, one sample per row.
struct Composition {
  Eigen::MatrixXd parts;
  std::vector<std::string> part_names;

  Composition(Eigen::MatrixXd m, std::vector<std::string> names)
      : parts(std::move(m)), part_names(std::move(names)) {
    if (static_cast<Eigen::Index>(part_names.size()) != parts.cols())
      throw Error(detail::str("Composition: ", part_names.size(), " names for ", parts.cols(),
                              " columns"));
    std::set<std::string> uniq(part_names.begin(), part_names.end());
    if (uniq.size() != part_names.size()) throw Error("Composition: duplicate part names");
    for (Eigen::Index i = 0; i < parts.rows(); ++i)
      for (Eigen::Index j = 0; j < parts.cols(); ++j)
        if (!(parts(i, j) > 0.0))
          throw Error(detail::str("Composition: non-positive entry at row ", i + 1, ", part '",
                                  part_names[j], "' (", parts(i, j), ")"));
  }

  Eigen::Index n() const { return parts.rows(); }
  Eigen::Index p() const { return parts.cols(); }
};

/// Orthonormal p x (p-1) matrix linking ilr coordinates back to clr space:
/// clr = ilr * V^T, V^T V = I, columns orthogonal to the all-ones vector.
struct ContrastMatrix {
  Eigen::MatrixXd v;
};

// ============================================================================
// Log-ratio transforms
// ============================================================================

/// Centered log-ratio: log of each part over the row geometric mean.
/// Every output row sums to zero, so the result is rank-deficient.
inline Eigen::MatrixXd clr(const Composition& comp) {
  const Eigen::MatrixXd logs = comp.parts.array().log();
  const Eigen::VectorXd row_means = logs.rowwise().mean();
  return logs.colwise() - row_means;
}

/// The pivot-coordinate contrast matrix for dimension p.
inline ContrastMatrix pivot_contrast_matrix(Eigen::Index p) {
  if (p < 2) throw Error("pivot_contrast_matrix: need p >= 2");
  Eigen::MatrixXd v = Eigen::MatrixXd::Zero(p, p - 1);
  for (Eigen::Index j = 0; j < p - 1; ++j) {
    const double tail = static_cast<double>(p - 1 - j);  // parts after the pivot
    const double head = std::sqrt(tail / (tail + 1.0));
    v(j, j) = head;
    for (Eigen::Index i = j + 1; i < p; ++i) v(i, j) = -head / tail;
  }
  return {std::move(v)};
}

/// Isometric log-ratio pivot coordinates: coordinate j compares part j to the
/// geometric mean of all later parts. An orthogonal change of basis of the
/// clr data that drops the redundant dimension (p -> p-1).
inline std::pair<Eigen::MatrixXd, ContrastMatrix> ilr_pivot(const Composition& comp) {
  ContrastMatrix contrast = pivot_contrast_matrix(comp.p());
  Eigen::MatrixXd coords = clr(comp) * contrast.v;
  return {std::move(coords), std::move(contrast)};
}

// ============================================================================
// Combined loadings
// ============================================================================

/// Loadings of each latent component on the clr coordinates: the report is
/// p x (p-1), parts as rows and components as columns, so each column sums
/// to zero by the contrast matrix's orthogonality to the ones vector.
struct CombinedLoadings {
  Eigen::MatrixXd table;                // p x (p-1)
  std::vector<std::string> part_names;  // row labels
};

inline CombinedLoadings combined_loadings(const ContrastMatrix& contrast,
                                          const UnmixingResult& unmixing,
                                          std::vector<std::string> part_names) {
  const Eigen::Index p = contrast.v.rows();
  if (unmixing.w.rows() != p - 1 || unmixing.w.cols() != p - 1)
    throw Error(detail::str("combined_loadings: unmixing is ", unmixing.w.rows(), "x",
                            unmixing.w.cols(), ", expected ", p - 1, "x", p - 1));
  if (static_cast<Eigen::Index>(part_names.size()) != p)
    throw Error(detail::str("combined_loadings: ", part_names.size(), " part names for p=", p));
  return {contrast.v * unmixing.w.transpose(), std::move(part_names)};
}

}  // namespace sbss
