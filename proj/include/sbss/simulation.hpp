#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <utility>
#include <vector>

#include "sbss/kernels.hpp"
#include "sbss/random.hpp"
#include "sbss/scatter.hpp"

namespace sbss {

// ============================================================================
// Domain and covariance models
// ============================================================================

enum class Pattern { Uniform, Skew };

/// Square domain [0,l] x [0,l]; the location count is l^2 rounded to the
/// nearest integer. Uniform draws both coordinates U(0,1); the skew pattern
/// draws the first coordinate Beta(2,4) instead, concentrating points left.
struct DomainSpec {
  double side;
  Pattern pattern = Pattern::Uniform;

  DomainSpec(double l, Pattern pat) : side(l), pattern(pat) {
    if (!(side > 0.0)) throw Error(detail::str("DomainSpec: side must be > 0, got ", l));
  }
  Eigen::Index count() const { return static_cast<Eigen::Index>(std::llround(side * side)); }
};

struct CovModel {
  enum class Kind { Matern, FBM };
  Kind kind;
  double sigma2 = 1.0, nu = 0.5, phi = 1.0;  // Matern
  double hurst = 0.5;                        // FBM

  static CovModel matern(double sigma2, double nu, double phi) {
    if (!(sigma2 > 0.0 && nu > 0.0 && phi > 0.0))
      throw Error(detail::str("matern model: need sigma2, nu, phi > 0, got (", sigma2, ",", nu, ",", phi, ")"));
    CovModel m;
    m.kind = Kind::Matern;
    m.sigma2 = sigma2;
    m.nu = nu;
    m.phi = phi;
    return m;
  }
  static CovModel fbm(double hurst) {
    if (!(hurst > 0.0 && hurst <= 1.0))
      throw Error(detail::str("fbm model: hurst must be in (0,1], got ", hurst));
    CovModel m;
    m.kind = Kind::FBM;
    m.hurst = hurst;
    return m;
  }
};

// ============================================================================
// Covariance functions
// ============================================================================

/// Matern covariance sigma2 / (2^(nu-1) Gamma(nu)) (h/phi)^nu K_nu(h/phi),
/// with the continuity value sigma2 at h = 0.
inline double matern_cov(double h, double sigma2, double nu, double phi) {
  if (h < 0.0) throw Error("matern_cov: negative distance");
  if (h == 0.0) return sigma2;
  const double v = h / phi;
  const double bessel = std::cyl_bessel_k(nu, v);
  return sigma2 / (std::pow(2.0, nu - 1.0) * std::tgamma(nu)) * std::pow(v, nu) * bessel;
}

/// Fractional Brownian field covariance
/// 0.5 (|s|^2H + |s'|^2H - |s-s'|^2H); the field is pinned at the origin.
inline double fbm_cov(const Eigen::VectorXd& s, const Eigen::VectorXd& s2, double hurst) {
  const double th = 2.0 * hurst;
  return 0.5 * (std::pow(s.norm(), th) + std::pow(s2.norm(), th) - std::pow((s - s2).norm(), th));
}

// ============================================================================
// Location sampling
// ============================================================================

inline LocationSet sample_locations(const DomainSpec& spec, Rng& rng) {
  const Eigen::Index n = spec.count();
  Eigen::MatrixXd coords(n, 2);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double s1 = (spec.pattern == Pattern::Skew) ? rng.beta24() : rng.uniform();
    const double s2 = rng.uniform();
    coords(i, 0) = s1 * spec.side;
    coords(i, 1) = s2 * spec.side;
  }
  return LocationSet(std::move(coords));
}

// ============================================================================
// Latent field simulation
// ============================================================================

namespace detail {

inline Eigen::MatrixXd cov_matrix(const LocationSet& locs, const CovModel& model) {
  const Eigen::Index n = locs.n();
  Eigen::MatrixXd c(n, n);
  if (model.kind == CovModel::Kind::Matern) {
    for (Eigen::Index i = 0; i < n; ++i) {
      c(i, i) = model.sigma2;
      for (Eigen::Index j = i + 1; j < n; ++j) {
        const double h = (locs.coords.row(i) - locs.coords.row(j)).norm();
        const double v = matern_cov(h, model.sigma2, model.nu, model.phi);
        c(i, j) = v;
        c(j, i) = v;
      }
    }
  } else {
    const double th = 2.0 * model.hurst;
    Eigen::VectorXd norms(n);
    for (Eigen::Index i = 0; i < n; ++i) norms(i) = std::pow(locs.coords.row(i).norm(), th);
    for (Eigen::Index i = 0; i < n; ++i) {
      c(i, i) = norms(i);
      for (Eigen::Index j = i + 1; j < n; ++j) {
        const double d = std::pow((locs.coords.row(i) - locs.coords.row(j)).norm(), th);
        const double v = 0.5 * (norms(i) + norms(j) - d);
        c(i, j) = v;
        c(j, i) = v;
      }
    }
  }
  return c;
}

/// Cholesky with escalating diagonal jitter. The fractional Brownian
/// covariance is singular whenever a location sits at the origin, so a bit
/// of regularization must be tolerated; starts at 1e-10 x mean diagonal and
/// escalates tenfold up to 1e-6 before giving up.
inline Eigen::MatrixXd cholesky_with_jitter(const Eigen::MatrixXd& cov) {
  const Eigen::Index n = cov.rows();
  const double base = cov.trace() / static_cast<double>(n);
  for (int attempt = 0; attempt <= 4; ++attempt) {
    const double jitter = 1e-10 * std::pow(10.0, attempt) * base;
    Eigen::MatrixXd shifted = cov;
    shifted.diagonal().array() += jitter;
    Eigen::LLT<Eigen::MatrixXd> llt(shifted);
    if (llt.info() == Eigen::Success) return llt.matrixL();
  }
  throw Error(detail::str("cholesky_with_jitter: covariance not PSD within jitter budget (trace/n=",
                          base, ")"));
}

}  // namespace detail

/// Draws one realization of p independent centered Gaussian random fields at
/// the given locations, column k governed by models[k].
inline Eigen::MatrixXd simulate_latent(const LocationSet& locs, const std::vector<CovModel>& models,
                                       Rng& rng) {
  const Eigen::Index n = locs.n();
  const Eigen::Index p = static_cast<Eigen::Index>(models.size());
  if (p == 0) throw Error("simulate_latent: no covariance models");
  Eigen::MatrixXd z(n, p);
  for (Eigen::Index k = 0; k < p; ++k) {
    const Eigen::MatrixXd c = detail::cov_matrix(locs, models[k]);
    const Eigen::MatrixXd l = detail::cholesky_with_jitter(c);
    Eigen::VectorXd g(n);
    for (Eigen::Index i = 0; i < n; ++i) g(i) = rng.normal();
    z.col(k) = l * g;
  }
  return z;
}

// ============================================================================
// Drift models
// ============================================================================

struct DriftModel {
  enum class Kind { Zero, RadialLog, LinearX, BlockCluster };
  Kind kind = Kind::Zero;
  Eigen::VectorXd coeffs;    // RadialLog, LinearX: one coefficient per variable
  int n_clusters = 3;        // BlockCluster
  double value_max = 3.0;    // BlockCluster values are U(0, value_max)

  static DriftModel zero() { return DriftModel{}; }
  static DriftModel radial_log(Eigen::VectorXd c) {
    DriftModel m;
    m.kind = Kind::RadialLog;
    m.coeffs = std::move(c);
    return m;
  }
  static DriftModel linear_x(Eigen::VectorXd c) {
    DriftModel m;
    m.kind = Kind::LinearX;
    m.coeffs = std::move(c);
    return m;
  }
  static DriftModel block_cluster(int clusters = 3, double value_max = 3.0) {
    if (clusters < 1) throw Error("block_cluster drift: need at least one cluster");
    if (!(value_max > 0.0)) throw Error("block_cluster drift: value_max must be > 0");
    DriftModel m;
    m.kind = Kind::BlockCluster;
    m.n_clusters = clusters;
    m.value_max = value_max;
    return m;
  }
};

/// A drift model with its per-replicate randomness drawn: anchor locations
/// and cluster values are redrawn for every realization.
struct DriftRealization {
  DriftModel model;
  Eigen::MatrixXd anchors;         // RadialLog: 1x2; BlockCluster: k x 2
  Eigen::MatrixXd cluster_values;  // BlockCluster: k x p
};

inline DriftRealization realize_drift(const DriftModel& model, Eigen::Index p, double domain_side,
                                      Rng& rng) {
  if ((model.kind == DriftModel::Kind::RadialLog || model.kind == DriftModel::Kind::LinearX) &&
      model.coeffs.size() != p)
    throw Error(detail::str("drift model: coefficient vector has length ", model.coeffs.size(),
                            ", field has p=", p));
  DriftRealization real;
  real.model = model;
  switch (model.kind) {
    case DriftModel::Kind::Zero:
    case DriftModel::Kind::LinearX:
      break;
    case DriftModel::Kind::RadialLog:
      real.anchors.resize(1, 2);
      real.anchors(0, 0) = rng.uniform(0.0, domain_side);
      real.anchors(0, 1) = rng.uniform(0.0, domain_side);
      break;
    case DriftModel::Kind::BlockCluster: {
      const int k = model.n_clusters;
      real.anchors.resize(k, 2);
      for (int j = 0; j < k; ++j) {
        real.anchors(j, 0) = rng.uniform(0.0, domain_side);
        real.anchors(j, 1) = rng.uniform(0.0, domain_side);
      }
      real.cluster_values.resize(k, p);
      for (int j = 0; j < k; ++j)
        for (Eigen::Index c = 0; c < p; ++c)
          real.cluster_values(j, c) = rng.uniform(0.0, model.value_max);
      break;
    }
  }
  return real;
}

/// Deterministic drift surface of a realized model, one row per location.
inline Eigen::MatrixXd drift_matrix(const DriftRealization& real, const LocationSet& locs,
                                    Eigen::Index p) {
  const Eigen::Index n = locs.n();
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, p);
  switch (real.model.kind) {
    case DriftModel::Kind::Zero:
      break;
    case DriftModel::Kind::RadialLog: {
      for (Eigen::Index i = 0; i < n; ++i) {
        double dist = (locs.coords.row(i) - real.anchors.row(0)).norm();
        if (dist < 1e-9) dist = 1e-9;  // log singularity guard
        const double lg = std::log(dist);
        for (Eigen::Index c = 0; c < p; ++c) m(i, c) = real.model.coeffs(c) * lg;
      }
      break;
    }
    case DriftModel::Kind::LinearX: {
      const double s1_max = locs.coords.col(0).maxCoeff();
      if (!(s1_max > 0.0)) throw Error("linear_x drift: max first coordinate is not positive");
      for (Eigen::Index i = 0; i < n; ++i) {
        const double t = locs.coords(i, 0) / s1_max;
        for (Eigen::Index c = 0; c < p; ++c) m(i, c) = real.model.coeffs(c) * t;
      }
      break;
    }
    case DriftModel::Kind::BlockCluster: {
      for (Eigen::Index i = 0; i < n; ++i) {
        Eigen::Index best = 0;
        double best_dist = (locs.coords.row(i) - real.anchors.row(0)).squaredNorm();
        for (Eigen::Index j = 1; j < real.anchors.rows(); ++j) {
          const double d = (locs.coords.row(i) - real.anchors.row(j)).squaredNorm();
          if (d < best_dist) {
            best_dist = d;
            best = j;
          }
        }
        m.row(i) = real.cluster_values.row(best);
      }
      break;
    }
  }
  return m;
}

struct DriftedSample {
  FieldSample sample;
  DriftRealization drift;
};

/// x_i = z_i + m(s_i) with the drift's random internals drawn from rng.
inline DriftedSample apply_drift(const Eigen::MatrixXd& latent, const LocationSet& locs,
                                 const DriftModel& model, double domain_side, Rng& rng) {
  if (latent.rows() != locs.n())
    throw Error(detail::str("apply_drift: ", latent.rows(), " rows vs ", locs.n(), " locations"));
  DriftRealization real = realize_drift(model, latent.cols(), domain_side, rng);
  Eigen::MatrixXd data = latent + drift_matrix(real, locs, latent.cols());
  return {FieldSample(std::move(data), locs), std::move(real)};
}

// ============================================================================
// Mixing
// ============================================================================

/// x(s) = A z(s): rows right-multiplied by A^T.
inline Eigen::MatrixXd mix(const Eigen::MatrixXd& data, const Eigen::MatrixXd& a) {
  if (a.rows() != a.cols() || a.rows() != data.cols())
    throw Error("mix: mixing matrix shape does not match data");
  Eigen::FullPivLU<Eigen::MatrixXd> lu(a);
  if (!lu.isInvertible()) throw Error("mix: mixing matrix is singular");
  return data * a.transpose();
}

}  // namespace sbss
