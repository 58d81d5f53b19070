#pragma once

// MAX-VAR generalized CCA.
//
// With C_i = X_i'X_i + rI, the shared representation G is the top-k
// eigenvectors of M = sum_i w_i X_i C_i^{-1} X_i'. Writing
// Z = [sqrt(w_1) X_1 C_1^{-1/2} | ... ], M = Z Z', so G is read off the left
// singular vectors of Z without forming the n x n matrix M. Each view then
// gets U_i = C_i^{-1} X_i' G, the ridge regression of G on that view.

#include "mmfuse/cca.hpp"
#include "mmfuse/embedding.hpp"
#include "mmfuse/model_io.hpp"
#include "mmfuse/views.hpp"

#include <Eigen/SVD>

#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace mmfuse {

struct GccaModel {
  std::vector<RowVector> means;
  std::vector<Matrix> projections;  // d_i x k
  std::vector<double> weights;
  Vector eigenvalues;               // top-k eigenvalues of M, descending
  Matrix shared;                    // G on the fitting rows, n x k, orthonormal columns
  Index k = 0;
  double r = kDefaultRegularizer;

  std::size_t view_count() const noexcept { return projections.size(); }
};

inline GccaModel gcca_fit(const std::vector<Matrix>& views, Index k, double r = kDefaultRegularizer,
                          std::optional<std::vector<double>> weights = std::nullopt) {
  if (views.size() < 2) throw ConfigError("gcca_fit: needs at least 2 views");
  if (r < 0.0) throw ConfigError("gcca_fit: regularizer must be non-negative");
  const Index n = views.front().rows();
  Index min_d = views.front().cols();
  Index total_d = 0;
  for (const auto& v : views) {
    if (v.rows() != n) throw AlignmentError("gcca_fit: views have different sample counts");
    min_d = std::min(min_d, v.cols());
    total_d += v.cols();
  }
  if (k < 1 || k > min_d)
    throw ConfigError("gcca_fit: k=" + std::to_string(k) + " outside [1, " + std::to_string(min_d) + "]");
  if (k > n) throw ConfigError("gcca_fit: k exceeds sample count");
  std::vector<double> w = weights.value_or(std::vector<double>(views.size(), 1.0));
  if (w.size() != views.size()) throw ConfigError("gcca_fit: one weight per view required");
  for (double x : w)
    if (!(x > 0.0)) throw ConfigError("gcca_fit: view weights must be positive");

  GccaModel m;
  m.k = k;
  m.r = r;
  m.weights = w;
  std::vector<Matrix> whiteners;
  std::vector<Matrix> centered;
  Matrix z(n, total_d);
  Index col = 0;
  for (std::size_t i = 0; i < views.size(); ++i) {
    m.means.push_back(views[i].colwise().mean());
    centered.push_back(views[i].rowwise() - m.means.back());
    Matrix c = centered.back().transpose() * centered.back();
    c.diagonal().array() += r;
    whiteners.push_back(inv_sqrt_psd(c));
    z.middleCols(col, views[i].cols()) = std::sqrt(w[i]) * centered.back() * whiteners.back();
    col += views[i].cols();
  }

  Eigen::BDCSVD<Matrix> svd(z, Eigen::ComputeThinU);
  Matrix g = svd.matrixU().leftCols(k);
  canonicalize_signs(g);
  m.eigenvalues = svd.singularValues().head(k).array().square();
  for (std::size_t i = 0; i < views.size(); ++i)
    m.projections.push_back(whiteners[i] * (whiteners[i] * (centered[i].transpose() * g)));
  m.shared = std::move(g);
  return m;
}

/// (X_i - mean_i) U_i for every view.
inline std::vector<Matrix> gcca_project(const GccaModel& m, const std::vector<Matrix>& views) {
  if (views.size() != m.view_count())
    throw DimensionError("gcca_project: expected " + std::to_string(m.view_count()) + " views");
  std::vector<Matrix> out;
  for (std::size_t i = 0; i < views.size(); ++i) {
    if (views[i].cols() != m.projections[i].rows())
      throw DimensionError("gcca_project: view " + std::to_string(i) + " has " + std::to_string(views[i].cols()) +
                           " columns, model expects " + std::to_string(m.projections[i].rows()));
    out.push_back((views[i].rowwise() - m.means[i]) * m.projections[i]);
  }
  return out;
}

/// Horizontal concatenation of the per-view projections (width = views * k).
inline FusedEmbedding gcca_transform(const GccaModel& m, const std::vector<FeatureMatrix>& views,
                                     std::string config_hash = {}) {
  std::vector<Matrix> raw;
  Provenance prov;
  prov.algorithm = FusionAlgorithm::Gcca;
  prov.k_values = {m.k};
  prov.config_hash = std::move(config_hash);
  for (const auto& v : views) {
    if (v.ids() != views.front().ids()) throw AlignmentError("gcca_transform: views are not aligned");
    raw.push_back(v.data());
    prov.view_order.push_back(v.name());
    prov.view_dims.push_back(v.cols());
  }
  const auto parts = gcca_project(m, raw);
  Matrix out(views.front().rows(), m.k * static_cast<Index>(parts.size()));
  for (std::size_t i = 0; i < parts.size(); ++i) out.middleCols(static_cast<Index>(i) * m.k, m.k) = parts[i];
  return {std::move(out), views.front().ids(), std::move(prov)};
}

inline void write_gcca(std::ostream& out, const GccaModel& m) {
  io::write_magic(out, "GCCA1");
  out << "views " << m.view_count() << " k " << m.k << " regularizer " << format_real(m.r) << '\n';
  io::write_vector(out, "eigenvalues", m.eigenvalues);
  for (std::size_t i = 0; i < m.view_count(); ++i) {
    out << "weight " << format_real(m.weights[i]) << '\n';
    io::write_vector(out, "mean", m.means[i].transpose());
    io::write_matrix(out, "projection", m.projections[i]);
  }
}

/// The fitting-time shared representation G is not persisted.
inline GccaModel read_gcca(std::istream& in) {
  io::expect_magic(in, "GCCA1");
  GccaModel m;
  io::expect_key(in, "views");
  const Index views = io::read_index(in);
  io::expect_key(in, "k");
  m.k = io::read_index(in);
  io::expect_key(in, "regularizer");
  m.r = io::read_real(in);
  m.eigenvalues = io::read_vector(in, "eigenvalues");
  for (Index i = 0; i < views; ++i) {
    io::expect_key(in, "weight");
    m.weights.push_back(io::read_real(in));
    m.means.push_back(io::read_vector(in, "mean").transpose());
    m.projections.push_back(io::read_matrix(in, "projection"));
    if (m.projections.back().cols() != m.k || m.projections.back().rows() != m.means.back().size())
      throw ParseError("model", 0, "GCCA1 projection shape mismatch");
  }
  return m;
}

}  // namespace mmfuse
