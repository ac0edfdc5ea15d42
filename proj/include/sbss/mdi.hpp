#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <vector>

#include "sbss/common.hpp"

namespace sbss {
namespace detail {

/// Exact min-cost perfect assignment on a square cost matrix (Hungarian
/// method with potentials, O(n^3)). Returns row assigned to each column.
inline std::vector<int> hungarian_min(const Eigen::MatrixXd& cost) {
  const int n = static_cast<int>(cost.rows());
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::fill(minv.begin(), minv.end(), inf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      int j1 = -1;
      double delta = inf;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> row_of_col(n);
  for (int j = 1; j <= n; ++j) row_of_col[j - 1] = p[j] - 1;
  return row_of_col;
}

}  // namespace detail

// ============================================================================
// Minimum distance index
// ============================================================================

/// MD(G) = inf over permutation x positive-scale x sign matrices M of
/// ||M G - I||_F / sqrt(p-1). For a fixed row assignment the optimal scale
/// is closed form, which reduces the infimum to a linear assignment over
/// squared row-normalized entries; the assignment is solved exactly.
/// 0 means G is a perfect unmixing-times-mixing product, 1 the worst case.
inline double mdi(const Eigen::MatrixXd& g) {
  if (g.rows() != g.cols()) throw Error("mdi: gain matrix not square");
  const Eigen::Index p = g.rows();
  if (p < 2) throw Error("mdi: need p >= 2");
  if (!g.allFinite()) throw Error("mdi: non-finite entry");

  Eigen::MatrixXd sq(p, p);
  for (Eigen::Index r = 0; r < p; ++r) {
    const double norm = g.row(r).norm();
    if (norm < 1e-12) throw Error(detail::str("mdi: row ", r, " has (near-)zero norm; scale undefined"));
    sq.row(r) = (g.row(r) / norm).cwiseAbs2();
  }

  // maximize sum_i sq(pi(i), i)  ==  minimize sum_i -sq(pi(i), i)
  const std::vector<int> assign = detail::hungarian_min(-sq);
  double best = 0.0;
  for (Eigen::Index col = 0; col < p; ++col) best += sq(assign[col], col);
  const double val = (static_cast<double>(p) - best) / (static_cast<double>(p) - 1.0);
  return std::sqrt(std::max(val, 0.0));
}

}  // namespace sbss
