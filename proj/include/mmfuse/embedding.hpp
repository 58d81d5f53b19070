#pragma once

#include "mmfuse/common.hpp"
#include "mmfuse/error.hpp"
#include "mmfuse/views.hpp"

#include <fstream>
#include <numeric>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace mmfuse {

enum class FusionAlgorithm { OneStep, TwoStep, Gcca, Concat, Unimodal };

inline std::string_view to_string(FusionAlgorithm a) {
  switch (a) {
    case FusionAlgorithm::OneStep: return "one-step";
    case FusionAlgorithm::TwoStep: return "two-step";
    case FusionAlgorithm::Gcca: return "gcca";
    case FusionAlgorithm::Concat: return "concat";
    case FusionAlgorithm::Unimodal: return "unimodal";
  }
  return "?";
}

inline std::optional<FusionAlgorithm> parse_algorithm(std::string_view s) {
  for (auto a : {FusionAlgorithm::OneStep, FusionAlgorithm::TwoStep, FusionAlgorithm::Gcca, FusionAlgorithm::Concat,
                 FusionAlgorithm::Unimodal})
    if (to_string(a) == s) return a;
  return std::nullopt;
}

/// Where an embedding came from. For two-step fusion `view_order` is
/// (first pair..., third) and `k_values` is (k1, k2).
struct Provenance {
  FusionAlgorithm algorithm = FusionAlgorithm::Concat;
  std::vector<std::string> view_order;
  std::vector<Index> view_dims;
  std::vector<Index> k_values;
  std::string config_hash;

  Index raw_width() const { return std::accumulate(view_dims.begin(), view_dims.end(), Index{0}); }

  /// Width of the correlated (learned) part of the embedding.
  Index correlated_width() const {
    switch (algorithm) {
      case FusionAlgorithm::OneStep: return 2 * k_values.at(0);
      case FusionAlgorithm::TwoStep: return 2 * k_values.at(0) + 2 * k_values.at(1);
      case FusionAlgorithm::Gcca: return static_cast<Index>(view_dims.size()) * k_values.at(0);
      default: return 0;
    }
  }

  /// Closed-form embedding width for the algorithm:
  ///   one-step  2k + sum(d)          two-step  2k1 + 2k2 + d_third
  ///   gcca      views * k            concat    sum(d)
  Index expected_width() const {
    switch (algorithm) {
      case FusionAlgorithm::OneStep: return correlated_width() + raw_width();
      case FusionAlgorithm::TwoStep: return correlated_width() + view_dims.at(2);
      case FusionAlgorithm::Gcca: return correlated_width();
      case FusionAlgorithm::Concat:
      case FusionAlgorithm::Unimodal: return raw_width();
    }
    return 0;
  }
};

/// A fused multi-view embedding; construction asserts the dimension law.
class FusedEmbedding {
 public:
  FusedEmbedding(Matrix data, std::vector<std::string> ids, Provenance prov)
      : matrix_("fused", std::move(data), std::move(ids)), prov_(std::move(prov)) {
    if (prov_.view_order.size() != prov_.view_dims.size())
      throw ConfigError("provenance: view_order and view_dims differ in length");
    if (matrix_.cols() != prov_.expected_width())
      throw DimensionError("fused embedding width " + std::to_string(matrix_.cols()) + " violates " +
                           std::string(to_string(prov_.algorithm)) + " law (expected " +
                           std::to_string(prov_.expected_width()) + ")");
  }

  const FeatureMatrix& matrix() const noexcept { return matrix_; }
  const Matrix& data() const noexcept { return matrix_.data(); }
  const std::vector<std::string>& ids() const noexcept { return matrix_.ids(); }
  const Provenance& provenance() const noexcept { return prov_; }
  Index width() const noexcept { return matrix_.cols(); }

 private:
  FeatureMatrix matrix_;
  Provenance prov_;
};

namespace detail {

template <typename T>
std::string join(const std::vector<T>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ',';
    if constexpr (std::is_same_v<T, std::string>)
      out += v[i];
    else
      out += std::to_string(v[i]);
  }
  return out;
}

}  // namespace detail

/// Key-value provenance sidecar.
inline void write_provenance(std::ostream& out, const FusedEmbedding& e) {
  const auto& p = e.provenance();
  out << "algorithm=" << to_string(p.algorithm) << '\n';
  out << "view_order=" << detail::join(p.view_order) << '\n';
  out << "view_dims=" << detail::join(p.view_dims) << '\n';
  out << "k_values=" << detail::join(p.k_values) << '\n';
  out << "samples=" << e.data().rows() << '\n';
  out << "width=" << e.width() << '\n';
  out << "correlated_width=" << p.correlated_width() << '\n';
  out << "raw_width=" << (p.algorithm == FusionAlgorithm::Gcca ? 0 : e.width() - p.correlated_width()) << '\n';
  out << "config_hash=" << p.config_hash << '\n';
}

inline void save_embedding(const std::string& csv_path, const std::string& meta_path, const FusedEmbedding& e) {
  save_view_matrix(csv_path, e.matrix());
  std::ofstream meta(meta_path);
  if (!meta) throw IoError("cannot write '" + meta_path + "'");
  write_provenance(meta, e);
}

}  // namespace mmfuse
