#pragma once

// Linear CCA and the regularized total-correlation machinery shared with
// the deep (DCCA) objective.

#include "mmfuse/common.hpp"
#include "mmfuse/error.hpp"
#include "mmfuse/model_io.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <string>

namespace mmfuse {

inline constexpr double kDefaultRegularizer = 1e-4;
inline constexpr double kEigenClamp = 1e-12;

struct CovarianceTriplet {
  Matrix s11;
  Matrix s22;
  Matrix s12;
};

/// Sample (co)variances of column-centered views with ridge terms on the
/// diagonal blocks. Divides by n-1.
inline CovarianceTriplet covariance_triplet(const Matrix& h1, const Matrix& h2, double r1, double r2) {
  if (h1.rows() != h2.rows()) throw DimensionError("covariance_triplet: row counts differ");
  const Index n = h1.rows();
  if (n < 2) throw NumericError("covariance_triplet: need at least 2 samples, got " + std::to_string(n));
  if (r1 < 0.0 || r2 < 0.0) throw ConfigError("covariance_triplet: regularizers must be non-negative");
  const double scale = 1.0 / static_cast<double>(n - 1);
  CovarianceTriplet c;
  c.s11 = scale * (h1.transpose() * h1);
  c.s11.diagonal().array() += r1;
  c.s22 = scale * (h2.transpose() * h2);
  c.s22.diagonal().array() += r2;
  c.s12 = scale * (h1.transpose() * h2);
  return c;
}

/// M^{-1/2} for symmetric PSD M. Eigenvalues below `eps` are clamped to eps.
inline Matrix inv_sqrt_psd(const Matrix& m, double eps = kEigenClamp) {
  if (m.rows() != m.cols()) throw DimensionError("inv_sqrt_psd: matrix not square");
  const double asym = (m - m.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-10 * std::max(1.0, m.cwiseAbs().maxCoeff()))
    throw NumericError("inv_sqrt_psd: matrix not symmetric (max asymmetry " + format_real(asym) + ")");
  // Symmetrize so round-off in the caller never reaches the eigensolver.
  const Matrix sym = 0.5 * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> es(sym);
  if (es.info() != Eigen::Success) throw NumericError("inv_sqrt_psd: eigendecomposition failed");
  const Vector inv = es.eigenvalues().cwiseMax(eps).cwiseSqrt().cwiseInverse();
  return es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose();
}

/// Column j of `u` is flipped (together with column j of `v`, when given) so
/// that its largest-magnitude entry is non-negative. The first index wins ties.
inline void canonicalize_signs(Matrix& u, Matrix* v = nullptr) {
  for (Index j = 0; j < u.cols(); ++j) {
    Index best = 0;
    u.col(j).cwiseAbs().maxCoeff(&best);
    if (u(best, j) < 0.0) {
      u.col(j) *= -1.0;
      if (v) v->col(j) *= -1.0;
    }
  }
}

namespace detail {

/// Whitened cross-covariance T = S11^{-1/2} S12 S22^{-1/2} of centered views
/// together with its SVD. Shared by the CCA fit, the total-correlation
/// objective and its gradient so all three agree bit-for-bit.
struct CorrelationAnalysis {
  CovarianceTriplet cov;
  Matrix s11_isqrt;
  Matrix s22_isqrt;
  Matrix u;       // d1 x m, m = min(d1, d2)
  Matrix v;       // d2 x m
  Vector sigma;   // descending
};

inline CorrelationAnalysis analyze_centered(const Matrix& h1, const Matrix& h2, double r1, double r2) {
  CorrelationAnalysis a;
  a.cov = covariance_triplet(h1, h2, r1, r2);
  a.s11_isqrt = inv_sqrt_psd(a.cov.s11);
  a.s22_isqrt = inv_sqrt_psd(a.cov.s22);
  const Matrix t = a.s11_isqrt * a.cov.s12 * a.s22_isqrt;
  Eigen::JacobiSVD<Matrix> svd(t, Eigen::ComputeThinU | Eigen::ComputeThinV);
  a.u = svd.matrixU();
  a.v = svd.matrixV();
  a.sigma = svd.singularValues();
  return a;
}

inline void check_k(Index k, Index d1, Index d2) {
  if (k < 1 || k > std::min(d1, d2))
    throw ConfigError("k=" + std::to_string(k) + " outside [1, min(" + std::to_string(d1) + ", " + std::to_string(d2) +
                      ")]");
}

inline Matrix center_columns(const Matrix& h) { return h.rowwise() - h.colwise().mean(); }

}  // namespace detail

/// Sum of the top-k singular values of the whitened cross-covariance.
/// Inputs are centered internally.
inline double total_correlation(const Matrix& h1, const Matrix& h2, Index k, double r1 = kDefaultRegularizer,
                                double r2 = kDefaultRegularizer) {
  detail::check_k(k, h1.cols(), h2.cols());
  const auto a = detail::analyze_centered(detail::center_columns(h1), detail::center_columns(h2), r1, r2);
  return a.sigma.head(k).sum();
}

/// A fitted linear CCA: per-side means and projections, plus the canonical
/// correlations (non-increasing) they achieve on the fitting data.
struct CcaProjection {
  RowVector mean_1;
  RowVector mean_2;
  Matrix proj_1;  // d1 x k
  Matrix proj_2;  // d2 x k
  Vector correlations;
  double r1 = kDefaultRegularizer;
  double r2 = kDefaultRegularizer;

  Index k() const noexcept { return proj_1.cols(); }
  Index dim(int side) const { return side == 1 ? proj_1.rows() : proj_2.rows(); }
};

inline CcaProjection cca_fit(const Matrix& x1, const Matrix& x2, Index k, double r1 = kDefaultRegularizer,
                             double r2 = kDefaultRegularizer) {
  if (x1.rows() != x2.rows()) throw DimensionError("cca_fit: row counts differ");
  detail::check_k(k, x1.cols(), x2.cols());
  CcaProjection p;
  p.r1 = r1;
  p.r2 = r2;
  p.mean_1 = x1.colwise().mean();
  p.mean_2 = x2.colwise().mean();
  auto a = detail::analyze_centered(x1.rowwise() - p.mean_1, x2.rowwise() - p.mean_2, r1, r2);
  Matrix u = a.u.leftCols(k);
  Matrix v = a.v.leftCols(k);
  canonicalize_signs(u, &v);
  p.proj_1 = a.s11_isqrt * u;
  p.proj_2 = a.s22_isqrt * v;
  p.correlations = a.sigma.head(k);
  return p;
}

/// (X - mean_side) * proj_side.
inline Matrix cca_transform(const CcaProjection& p, const Matrix& x, int side) {
  if (side != 1 && side != 2) throw ConfigError("cca_transform: side must be 1 or 2");
  const RowVector& mean = side == 1 ? p.mean_1 : p.mean_2;
  const Matrix& proj = side == 1 ? p.proj_1 : p.proj_2;
  if (x.cols() != proj.rows())
    throw DimensionError("cca_transform: expected " + std::to_string(proj.rows()) + " columns, got " +
                         std::to_string(x.cols()));
  return (x.rowwise() - mean) * proj;
}

// Model file: magic "CCA1", see model_io.hpp for the record layout.

inline void write_cca(std::ostream& out, const CcaProjection& p) {
  io::write_magic(out, "CCA1");
  out << "dims " << p.proj_1.rows() << ' ' << p.proj_2.rows() << ' ' << p.k() << '\n';
  out << "regularizer " << format_real(p.r1) << ' ' << format_real(p.r2) << '\n';
  io::write_vector(out, "mean_1", p.mean_1.transpose());
  io::write_vector(out, "mean_2", p.mean_2.transpose());
  io::write_matrix(out, "proj_1", p.proj_1);
  io::write_matrix(out, "proj_2", p.proj_2);
  io::write_vector(out, "correlations", p.correlations);
}

inline CcaProjection read_cca(std::istream& in) {
  io::expect_magic(in, "CCA1");
  io::expect_key(in, "dims");
  const Index d1 = io::read_index(in), d2 = io::read_index(in), k = io::read_index(in);
  CcaProjection p;
  io::expect_key(in, "regularizer");
  p.r1 = io::read_real(in);
  p.r2 = io::read_real(in);
  p.mean_1 = io::read_vector(in, "mean_1").transpose();
  p.mean_2 = io::read_vector(in, "mean_2").transpose();
  p.proj_1 = io::read_matrix(in, "proj_1");
  p.proj_2 = io::read_matrix(in, "proj_2");
  p.correlations = io::read_vector(in, "correlations");
  if (p.mean_1.size() != d1 || p.mean_2.size() != d2 || p.proj_1.rows() != d1 || p.proj_2.rows() != d2 ||
      p.proj_1.cols() != k || p.proj_2.cols() != k || p.correlations.size() != k)
    throw ParseError("model", 0, "CCA1 record shapes disagree with declared dims");
  return p;
}

}  // namespace mmfuse
