#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "sbss/diag.hpp"
#include "sbss/scatter.hpp"

namespace sbss {

enum class Method { LCovSD, LCovJD, LDiffSD, LDiffWhitened, FOBI };

inline std::string method_name(Method m) {
  switch (m) {
    case Method::LCovSD: return "lcov_sd";
    case Method::LCovJD: return "lcov_jd";
    case Method::LDiffSD: return "ldiff_sd";
    case Method::LDiffWhitened: return "ldiff_whitened";
    case Method::FOBI: return "fobi";
  }
  return "?";
}

inline Method parse_method(const std::string& s) {
  if (s == "lcov_sd") return Method::LCovSD;
  if (s == "lcov_jd") return Method::LCovJD;
  if (s == "ldiff_sd") return Method::LDiffSD;
  if (s == "ldiff_whitened") return Method::LDiffWhitened;
  if (s == "fobi") return Method::FOBI;
  throw SchemaError(detail::str("unknown method '", s,
                                "' (expected lcov_sd, lcov_jd, ldiff_sd, ldiff_whitened, fobi)"));
}

struct UnmixingResult {
  Eigen::MatrixXd w;
  Method method;
  std::optional<Eigen::VectorXd> diag_values;
  bool converged = true;
  bool near_tie_warning = false;
};

namespace detail {

/// Fixed sign convention: scale each row so its largest-magnitude entry is
/// positive. Makes estimates reproducible; the model leaves signs free.
inline void normalize_row_signs(Eigen::MatrixXd& w) {
  for (Eigen::Index r = 0; r < w.rows(); ++r) {
    Eigen::Index arg = 0;
    w.row(r).cwiseAbs().maxCoeff(&arg);
    if (w(r, arg) < 0.0) w.row(r) = -w.row(r);
  }
}

}  // namespace detail

// ============================================================================
// SBSS estimators
// ============================================================================

/// Simultaneous diagonalization of the covariance and one local covariance
/// matrix; diagonal values decreasing.
inline UnmixingResult sbss_sd(const FieldSample& sample, const KernelSpec& f) {
  const ScatterMatrix cov = lcov(sample, KernelSpec::zero_lag());
  const ScatterMatrix local = lcov(sample, f);
  DiagResult d = simultaneous_diag(cov, local, Order::Decreasing);
  detail::normalize_row_signs(d.w);
  return {std::move(d.w), Method::LCovSD, std::move(d.diag_values), true, d.near_tie_warning};
}

/// Whiten with the covariance, then jointly diagonalize the local covariance
/// matrices of the whitened field over a set of kernels.
inline UnmixingResult sbss_jd(const FieldSample& sample, const std::vector<KernelSpec>& fs,
                              const JointDiagOptions& opts = {}) {
  if (fs.empty()) throw Error("sbss_jd: need at least one kernel");
  const ScatterMatrix cov = lcov(sample, KernelSpec::zero_lag());
  const Eigen::MatrixXd white = inv_sqrt(cov);
  const Eigen::RowVectorXd mean = sample.data.colwise().mean();
  Eigen::MatrixXd xw = (sample.data.rowwise() - mean) * white;  // white is symmetric
  const FieldSample whitened(std::move(xw), sample.locs);

  std::vector<Eigen::MatrixXd> mats;
  mats.reserve(fs.size());
  for (const auto& f : fs) mats.push_back(lcov(whitened, f).m);
  const JointDiagResult jd = joint_diag(std::move(mats), opts);

  // With U M U^T diagonal for the whitened local covariances, U * white is
  // the unmixing that diagonalizes the local covariances of the raw field.
  UnmixingResult res{jd.u * white, Method::LCovJD, std::nullopt, jd.converged, false};
  detail::normalize_row_signs(res.w);
  return res;
}

/// Simultaneous diagonalization of the covariance and one local difference
/// matrix; diagonal values increasing.
inline UnmixingResult sbss_ldiff(const FieldSample& sample, const KernelSpec& f) {
  const ScatterMatrix cov = lcov(sample, KernelSpec::zero_lag());
  const ScatterMatrix local = ldiff(sample, f);
  DiagResult d = simultaneous_diag(cov, local, Order::Increasing);
  detail::normalize_row_signs(d.w);
  return {std::move(d.w), Method::LDiffSD, std::move(d.diag_values), true, d.near_tie_warning};
}

/// Simultaneous diagonalization of two local difference matrices (whitening
/// by LDiff_{f1}); diagonal values increasing. The recovered components'
/// variances are then free: rows are not rescaled unless standardize is set,
/// in which case each is scaled to unit sample variance.
inline UnmixingResult sbss_ldiff_whitened(const FieldSample& sample, const KernelSpec& f1,
                                          const KernelSpec& f2, bool standardize = false) {
  if (f1.to_string() == f2.to_string())
    throw Error("sbss_ldiff_whitened: the two kernels must differ");
  const ScatterMatrix d1 = ldiff(sample, f1);
  const ScatterMatrix d2 = ldiff(sample, f2);
  DiagResult d = simultaneous_diag(d1, d2, Order::Increasing);
  if (standardize) {
    const ScatterMatrix cov = lcov(sample, KernelSpec::zero_lag());
    const Eigen::VectorXd var = (d.w * cov.m * d.w.transpose()).diagonal();
    for (Eigen::Index r = 0; r < d.w.rows(); ++r) {
      if (!(var(r) > 0.0))
        throw Error(detail::str("sbss_ldiff_whitened: component ", r, " has non-positive variance"));
      d.w.row(r) /= std::sqrt(var(r));
    }
  }
  detail::normalize_row_signs(d.w);
  return {std::move(d.w), Method::LDiffWhitened, std::move(d.diag_values), true, d.near_tie_warning};
}

/// Fourth-order blind identification: whiten, then eigendecompose the
/// norm-weighted fourth-moment matrix. Spatially agnostic baseline.
inline UnmixingResult fobi(const FieldSample& sample) {
  const Eigen::Index n = sample.n();
  const ScatterMatrix cov = lcov(sample, KernelSpec::zero_lag());
  const Eigen::MatrixXd white = inv_sqrt(cov);
  const Eigen::RowVectorXd mean = sample.data.colwise().mean();
  const Eigen::MatrixXd xw = (sample.data.rowwise() - mean) * white;

  const Eigen::VectorXd sq_norms = xw.rowwise().squaredNorm();
  Eigen::MatrixXd m4 = xw.transpose() * (sq_norms.asDiagonal() * xw) / static_cast<double>(n);
  m4 = 0.5 * (m4 + m4.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m4);
  if (es.info() != Eigen::Success) throw Error("fobi: eigendecomposition failed");

  const Eigen::Index p = sample.p();
  Eigen::MatrixXd w(p, p);
  Eigen::VectorXd vals(p);
  for (Eigen::Index r = 0; r < p; ++r) {  // decreasing fourth-moment eigenvalues
    w.row(r) = es.eigenvectors().col(p - 1 - r).transpose() * white;
    vals(r) = es.eigenvalues()(p - 1 - r);
  }
  detail::normalize_row_signs(w);

  // Eigenvalues estimate kurtosis + p + 2; gaps below the finite-sample
  // noise floor mean the components are not identifiable from kurtosis.
  const double noise_floor = 15.0 * std::sqrt(static_cast<double>(p) / static_cast<double>(n));
  bool warn = false;
  for (Eigen::Index k = 0; k + 1 < p; ++k)
    if (vals(k) - vals(k + 1) < noise_floor) warn = true;

  return {std::move(w), Method::FOBI, std::move(vals), true, warn};
}

// ============================================================================
// Latent recovery
// ============================================================================

/// y_i = W (x_i - xbar) when centered, else y_i = W x_i. The uncentered form
/// is the drift-contaminated workflow where the mean is not trusted.
inline Eigen::MatrixXd recover_latent(const FieldSample& sample, const UnmixingResult& result,
                                      bool center) {
  if (result.w.cols() != sample.p())
    throw Error(detail::str("recover_latent: W has ", result.w.cols(), " columns, data has ",
                            sample.p()));
  if (center) {
    const Eigen::RowVectorXd mean = sample.data.colwise().mean();
    return (sample.data.rowwise() - mean) * result.w.transpose();
  }
  return sample.data * result.w.transpose();
}

/// Default centering: off for the LDiff-whitened estimator, on otherwise.
inline Eigen::MatrixXd recover_latent(const FieldSample& sample, const UnmixingResult& result) {
  return recover_latent(sample, result, result.method != Method::LDiffWhitened);
}

}  // namespace sbss
