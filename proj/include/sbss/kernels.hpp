#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <string>
#include <vector>

#include "sbss/common.hpp"
#include "sbss/random.hpp"

namespace sbss {

// ============================================================================
// Sample locations
// ============================================================================

/// n sample locations in d-dimensional space, one per row.
struct LocationSet {
  Eigen::MatrixXd coords;

  explicit LocationSet(Eigen::MatrixXd c) : coords(std::move(c)) {
    if (coords.rows() < 2) throw Error("LocationSet: need at least 2 locations");
    if (coords.cols() < 1) throw Error("LocationSet: need at least 1 dimension");
    if (!coords.allFinite()) throw Error("LocationSet: non-finite coordinate");
  }

  Eigen::Index n() const { return coords.rows(); }
  Eigen::Index dim() const { return coords.cols(); }
};

// ============================================================================
// Spatial kernels
// ============================================================================

enum class KernelKind { Ball, Ring, Gauss, ZeroLag };

/// Spatial kernel description: ball(r), ring(r_inner, r_outer], gauss(r),
/// or the zero-lag indicator. Parameters are validated at construction.
class KernelSpec {
 public:
  static KernelSpec ball(double r) {
    if (!(r > 0.0)) throw Error(detail::str("ball kernel: radius must be > 0, got ", r));
    return KernelSpec(KernelKind::Ball, r, 0.0);
  }
  static KernelSpec ring(double r_inner, double r_outer) {
    if (!(r_inner >= 0.0 && r_inner < r_outer))
      throw Error(detail::str("ring kernel: need 0 <= r_inner < r_outer, got (", r_inner, ",", r_outer, ")"));
    return KernelSpec(KernelKind::Ring, r_inner, r_outer);
  }
  static KernelSpec gauss(double r) {
    if (!(r > 0.0)) throw Error(detail::str("gauss kernel: radius must be > 0, got ", r));
    return KernelSpec(KernelKind::Gauss, r, 0.0);
  }
  static KernelSpec zero_lag() { return KernelSpec(KernelKind::ZeroLag, 0.0, 0.0); }

  KernelKind kind() const { return kind_; }
  double radius() const { return a_; }
  double r_inner() const { return a_; }
  double r_outer() const { return b_; }

  /// Config-string form: `ball:r`, `ring:ri:ro`, `gauss:r`, `zero`.
  static KernelSpec parse(const std::string& text);
  std::string to_string() const;

 private:
  KernelSpec(KernelKind k, double a, double b) : kind_(k), a_(a), b_(b) {}
  KernelKind kind_;
  double a_, b_;
};

/// 0.95 quantile of the standard normal, computed (not hardcoded) from the
/// inverse-CDF routine; scales the Gauss kernel so that f(r) matches the
/// tail mass convention of its definition.
inline double gauss_kernel_quantile() {
  static const double q = inv_norm_cdf(0.95);
  return q;
}

/// Kernel value at lag h. Ball: I(|h| <= r). Ring: I(ri < |h| <= ro).
/// Gauss: exp(-0.5 (q |h| / r)^2). ZeroLag: I(h = 0), exact componentwise
/// comparison (a squared norm can underflow for subnormal lags).
inline double eval_kernel(const KernelSpec& spec, const Eigen::VectorXd& h) {
  if (!h.allFinite()) throw Error("eval_kernel: non-finite lag");
  switch (spec.kind()) {
    case KernelKind::Ball:
      return h.norm() <= spec.radius() ? 1.0 : 0.0;
    case KernelKind::Ring: {
      const double norm = h.norm();
      return (spec.r_inner() < norm && norm <= spec.r_outer()) ? 1.0 : 0.0;
    }
    case KernelKind::Gauss: {
      const double t = gauss_kernel_quantile() * h.norm() / spec.radius();
      return std::exp(-0.5 * t * t);
    }
    case KernelKind::ZeroLag:
      return (h.array() == 0.0).all() ? 1.0 : 0.0;
  }
  throw Error("eval_kernel: unknown kernel kind");
}

/// Pairwise weight matrix F(i,j) = f(s_i - s_j). Symmetric since all four
/// kernels depend on the lag only through its norm.
inline Eigen::MatrixXd kernel_weights(const KernelSpec& spec, const LocationSet& locs) {
  const Eigen::Index n = locs.n();
  Eigen::MatrixXd w(n, n);
  const double q = gauss_kernel_quantile();
  for (Eigen::Index i = 0; i < n; ++i) {
    w(i, i) = (spec.kind() == KernelKind::Ring) ? 0.0 : 1.0;  // all kernels give f(0)=1 except ring
    for (Eigen::Index j = i + 1; j < n; ++j) {
      double v = 0.0;
      switch (spec.kind()) {
        case KernelKind::Ball:
          v = (locs.coords.row(i) - locs.coords.row(j)).norm() <= spec.radius() ? 1.0 : 0.0;
          break;
        case KernelKind::Ring: {
          const double dist = (locs.coords.row(i) - locs.coords.row(j)).norm();
          v = (spec.r_inner() < dist && dist <= spec.r_outer()) ? 1.0 : 0.0;
          break;
        }
        case KernelKind::Gauss: {
          const double t = q * (locs.coords.row(i) - locs.coords.row(j)).norm() / spec.radius();
          v = std::exp(-0.5 * t * t);
          break;
        }
        case KernelKind::ZeroLag:
          // coincidence compared exactly on coordinates, not through the norm
          v = (locs.coords.row(i).array() == locs.coords.row(j).array()).all() ? 1.0 : 0.0;
          break;
      }
      w(i, j) = v;
      w(j, i) = v;
    }
  }
  return w;
}

// ----------------------------------------------------------------------------

inline KernelSpec KernelSpec::parse(const std::string& text) {
  std::vector<std::string> parts;
  std::string cur;
  for (char ch : text) {
    if (ch == ':') {
      parts.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  parts.push_back(cur);

  auto num = [&](const std::string& s) {
    std::size_t pos = 0;
    double v;
    try {
      v = std::stod(s, &pos);
    } catch (const std::exception&) {
      throw SchemaError(detail::str("kernel spec '", text, "': bad number '", s, "'"));
    }
    if (pos != s.size()) throw SchemaError(detail::str("kernel spec '", text, "': bad number '", s, "'"));
    return v;
  };

  try {
    if (parts[0] == "zero" && parts.size() == 1) return zero_lag();
    if (parts[0] == "ball" && parts.size() == 2) return ball(num(parts[1]));
    if (parts[0] == "gauss" && parts.size() == 2) return gauss(num(parts[1]));
    if (parts[0] == "ring" && parts.size() == 3) return ring(num(parts[1]), num(parts[2]));
  } catch (const Error& e) {
    throw SchemaError(detail::str("kernel spec '", text, "': ", e.what()));
  }
  throw SchemaError(detail::str("kernel spec '", text, "': expected ball:r, ring:ri:ro, gauss:r or zero"));
}

inline std::string KernelSpec::to_string() const {
  std::ostringstream oss;
  oss.precision(15);
  switch (kind_) {
    case KernelKind::Ball:
      oss << "ball:" << a_;
      break;
    case KernelKind::Ring:
      oss << "ring:" << a_ << ":" << b_;
      break;
    case KernelKind::Gauss:
      oss << "gauss:" << a_;
      break;
    case KernelKind::ZeroLag:
      oss << "zero";
      break;
  }
  return oss.str();
}

}  // namespace sbss
