#pragma once

// Per-view feature matrices, aligned multi-view bundles, label handling and
// the synthetic planted-latent generator.

#include "mmfuse/common.hpp"
#include "mmfuse/error.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

namespace mmfuse {

enum class Split { Train, Val, Test };

inline std::string_view to_string(Split s) {
  switch (s) {
    case Split::Train: return "train";
    case Split::Val: return "val";
    case Split::Test: return "test";
  }
  return "?";
}

inline std::optional<Split> parse_split(std::string_view s) {
  if (s == "train") return Split::Train;
  if (s == "val") return Split::Val;
  if (s == "test") return Split::Test;
  return std::nullopt;
}

/// One view's features: n samples by d features plus per-row sample ids.
/// Immutable once constructed; the constructor enforces n >= 1, d >= 1,
/// finite entries and unique ids.
class FeatureMatrix {
 public:
  FeatureMatrix(std::string view_name, Matrix data, std::vector<std::string> sample_ids)
      : name_(std::move(view_name)), data_(std::move(data)), ids_(std::move(sample_ids)) {
    if (data_.rows() < 1) throw DimensionError("view '" + name_ + "': needs at least one sample");
    if (data_.cols() < 1) throw DimensionError("view '" + name_ + "': needs at least one feature");
    if (static_cast<Index>(ids_.size()) != data_.rows())
      throw DimensionError("view '" + name_ + "': " + std::to_string(ids_.size()) + " ids for " +
                           std::to_string(data_.rows()) + " rows");
    if (!data_.allFinite()) throw InputError("view '" + name_ + "': non-finite entry");
    std::unordered_set<std::string> seen;
    for (const auto& id : ids_)
      if (!seen.insert(id).second) throw InputError("view '" + name_ + "': duplicate sample id '" + id + "'");
  }

  const std::string& name() const noexcept { return name_; }
  const Matrix& data() const noexcept { return data_; }
  const std::vector<std::string>& ids() const noexcept { return ids_; }
  Index rows() const noexcept { return data_.rows(); }
  Index cols() const noexcept { return data_.cols(); }

  FeatureMatrix renamed(std::string name) const { return {std::move(name), data_, ids_}; }

  FeatureMatrix select_rows(const std::vector<Index>& rows) const {
    Matrix out(static_cast<Index>(rows.size()), cols());
    std::vector<std::string> ids;
    ids.reserve(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      out.row(static_cast<Index>(i)) = data_.row(rows[i]);
      ids.push_back(ids_[static_cast<std::size_t>(rows[i])]);
    }
    return {name_, std::move(out), std::move(ids)};
  }

  FeatureMatrix slice_cols(Index begin, Index count, std::string name) const {
    if (begin < 0 || count < 1 || begin + count > cols())
      throw DimensionError("column slice out of range for view '" + name_ + "'");
    return {std::move(name), data_.middleCols(begin, count), ids_};
  }

 private:
  std::string name_;
  Matrix data_;
  std::vector<std::string> ids_;
};

// ---------------------------------------------------------------------------
// Text parsing

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    auto pos = line.find(',', start);
    out.push_back(trim(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline std::optional<double> parse_real(std::string_view s) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  if (s.empty()) return std::nullopt;
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

inline std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  return in;
}

}  // namespace detail

/// Parses the comma-separated feature format: header "id,f0,...,f{d-1}",
/// then one row per sample.
inline FeatureMatrix parse_view_matrix(std::istream& in, const std::string& source, std::string view_name,
                                       std::optional<Index> expected_dim = std::nullopt) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError(source, 1, "missing header");
  auto header = detail::split_csv(line);
  if (header.empty() || header[0] != "id") throw ParseError(source, 1, "header must start with 'id'");
  const Index d = static_cast<Index>(header.size()) - 1;
  for (Index j = 0; j < d; ++j)
    if (header[static_cast<std::size_t>(j + 1)] != "f" + std::to_string(j))
      throw ParseError(source, 1, "expected header column 'f" + std::to_string(j) + "'");
  if (d < 1) throw DimensionError(source + ": header declares no features");
  if (expected_dim && *expected_dim != d)
    throw DimensionError(source + ": expected dimension " + std::to_string(*expected_dim) + ", header declares " +
                         std::to_string(d));

  std::vector<double> values;
  std::vector<std::string> ids;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (detail::trim(line).empty()) continue;
    auto fields = detail::split_csv(line);
    if (static_cast<Index>(fields.size()) != d + 1)
      throw ParseError(source, lineno,
                       "expected " + std::to_string(d + 1) + " fields, found " + std::to_string(fields.size()));
    if (fields[0].empty()) throw ParseError(source, lineno, "empty sample id");
    ids.emplace_back(fields[0]);
    for (Index j = 1; j <= d; ++j) {
      auto v = detail::parse_real(fields[static_cast<std::size_t>(j)]);
      if (!v) throw ParseError(source, lineno, "non-numeric value '" + std::string(fields[static_cast<std::size_t>(j)]) + "'");
      if (!std::isfinite(*v)) throw ParseError(source, lineno, "non-finite value");
      values.push_back(*v);
    }
  }
  if (ids.empty()) throw ParseError(source, lineno, "no sample rows");
  const Index n = static_cast<Index>(ids.size());
  Matrix data = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      values.data(), n, d);
  return {std::move(view_name), std::move(data), std::move(ids)};
}

inline FeatureMatrix load_view_matrix(const std::string& path, std::optional<Index> expected_dim = std::nullopt,
                                      std::string view_name = {}) {
  auto in = detail::open_input(path);
  if (view_name.empty()) view_name = path;
  return parse_view_matrix(in, path, std::move(view_name), expected_dim);
}

inline void write_view_matrix(std::ostream& out, const FeatureMatrix& m) {
  out << "id";
  for (Index j = 0; j < m.cols(); ++j) out << ",f" << j;
  out << '\n';
  for (Index i = 0; i < m.rows(); ++i) {
    out << m.ids()[static_cast<std::size_t>(i)];
    for (Index j = 0; j < m.cols(); ++j) out << ',' << format_real(m.data()(i, j));
    out << '\n';
  }
}

inline void save_view_matrix(const std::string& path, const FeatureMatrix& m) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path + "'");
  write_view_matrix(out, m);
}

// ---------------------------------------------------------------------------
// Labels and splits

struct IdLabels {
  std::vector<std::string> ids;
  std::vector<int> labels;
};

struct IdScores {
  std::vector<std::string> ids;
  std::vector<double> scores;
};

struct IdSplits {
  std::vector<std::string> ids;
  std::vector<Split> splits;
};

/// A labels file holds either binary labels ("id,label") or raw sentiment
/// scores ("id,score"); exactly one of the members is set.
struct LabelFile {
  std::optional<IdLabels> labels;
  std::optional<IdScores> scores;
};

inline LabelFile parse_labels(std::istream& in, const std::string& source) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError(source, 1, "missing header");
  auto header = detail::split_csv(line);
  if (header.size() != 2 || header[0] != "id" || (header[1] != "label" && header[1] != "score"))
    throw ParseError(source, 1, "header must be 'id,label' or 'id,score'");
  const bool is_score = header[1] == "score";
  IdLabels labels;
  IdScores scores;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (detail::trim(line).empty()) continue;
    auto f = detail::split_csv(line);
    if (f.size() != 2) throw ParseError(source, lineno, "expected 2 fields");
    if (f[0].empty()) throw ParseError(source, lineno, "empty sample id");
    auto v = detail::parse_real(f[1]);
    if (!v || !std::isfinite(*v)) throw ParseError(source, lineno, "bad value '" + std::string(f[1]) + "'");
    if (is_score) {
      if (*v < -3.0 || *v > 3.0) throw RangeError(source + ":" + std::to_string(lineno) + ": score outside [-3,3]");
      scores.ids.emplace_back(f[0]);
      scores.scores.push_back(*v);
    } else {
      if (*v != 0.0 && *v != 1.0) throw ParseError(source, lineno, "label must be 0 or 1");
      labels.ids.emplace_back(f[0]);
      labels.labels.push_back(static_cast<int>(*v));
    }
  }
  LabelFile out;
  if (is_score)
    out.scores = std::move(scores);
  else
    out.labels = std::move(labels);
  return out;
}

inline LabelFile load_labels(const std::string& path) {
  auto in = detail::open_input(path);
  return parse_labels(in, path);
}

inline IdSplits parse_splits(std::istream& in, const std::string& source) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError(source, 1, "missing header");
  auto header = detail::split_csv(line);
  if (header.size() != 2 || header[0] != "id" || header[1] != "split")
    throw ParseError(source, 1, "header must be 'id,split'");
  IdSplits out;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (detail::trim(line).empty()) continue;
    auto f = detail::split_csv(line);
    if (f.size() != 2) throw ParseError(source, lineno, "expected 2 fields");
    auto s = parse_split(f[1]);
    if (!s) throw ParseError(source, lineno, "split must be train, val or test");
    out.ids.emplace_back(f[0]);
    out.splits.push_back(*s);
  }
  return out;
}

inline IdSplits load_splits(const std::string& path) {
  auto in = detail::open_input(path);
  return parse_splits(in, path);
}

// ---------------------------------------------------------------------------
// Bundles

/// Aligned multi-view dataset. Every view shares the same sample order;
/// labels and splits are indexed by that order.
class ViewBundle {
 public:
  ViewBundle(std::map<std::string, FeatureMatrix> views, std::vector<int> labels, std::vector<Split> splits)
      : views_(std::move(views)), labels_(std::move(labels)), splits_(std::move(splits)) {
    if (views_.empty()) throw ConfigError("bundle needs at least one view");
    const auto& ref = views_.begin()->second;
    for (const auto& [name, m] : views_)
      if (m.ids() != ref.ids()) throw AlignmentError("view '" + name + "' is not aligned with '" + ref.name() + "'");
    if (static_cast<Index>(labels_.size()) != ref.rows() || static_cast<Index>(splits_.size()) != ref.rows())
      throw AlignmentError("labels/splits length does not match sample count");
    for (int y : labels_)
      if (y != 0 && y != 1) throw RangeError("labels must be 0 or 1");
  }

  const std::map<std::string, FeatureMatrix>& views() const noexcept { return views_; }
  const std::vector<int>& labels() const noexcept { return labels_; }
  const std::vector<Split>& splits() const noexcept { return splits_; }
  const std::vector<std::string>& ids() const noexcept { return views_.begin()->second.ids(); }
  Index size() const noexcept { return views_.begin()->second.rows(); }

  bool has_view(const std::string& name) const { return views_.count(name) != 0; }

  const FeatureMatrix& view(const std::string& name) const {
    auto it = views_.find(name);
    if (it == views_.end()) throw ConfigError("bundle has no view named '" + name + "'");
    return it->second;
  }

  std::vector<Index> rows_in(Split s) const {
    std::vector<Index> out;
    for (std::size_t i = 0; i < splits_.size(); ++i)
      if (splits_[i] == s) out.push_back(static_cast<Index>(i));
    return out;
  }

  /// Throws unless train, val and test each hold at least one sample.
  void require_all_splits() const {
    for (Split s : {Split::Train, Split::Val, Split::Test})
      if (rows_in(s).empty()) throw ConfigError("split '" + std::string(to_string(s)) + "' is empty");
  }

  ViewBundle select_rows(const std::vector<Index>& rows) const {
    std::map<std::string, FeatureMatrix> views;
    for (const auto& [name, m] : views_) views.emplace(name, m.select_rows(rows));
    std::vector<int> labels;
    std::vector<Split> splits;
    for (Index r : rows) {
      labels.push_back(labels_[static_cast<std::size_t>(r)]);
      splits.push_back(splits_[static_cast<std::size_t>(r)]);
    }
    return {std::move(views), std::move(labels), std::move(splits)};
  }

 private:
  std::map<std::string, FeatureMatrix> views_;
  std::vector<int> labels_;
  std::vector<Split> splits_;
};

namespace detail {

template <typename T>
std::vector<T> align_by_id(const std::vector<std::string>& order, const std::vector<std::string>& ids,
                           const std::vector<T>& values, const std::string& what) {
  std::unordered_map<std::string, std::size_t> pos;
  for (std::size_t i = 0; i < ids.size(); ++i)
    if (!pos.emplace(ids[i], i).second) throw AlignmentError(what + ": duplicate id '" + ids[i] + "'");
  std::vector<T> out;
  out.reserve(order.size());
  std::vector<std::string> missing;
  for (const auto& id : order) {
    auto it = pos.find(id);
    if (it == pos.end())
      missing.push_back(id);
    else
      out.push_back(values[it->second]);
  }
  if (!missing.empty()) {
    std::string msg = what + ": missing ids";
    for (const auto& m : missing) msg += " " + m;
    throw AlignmentError(msg);
  }
  return out;
}

}  // namespace detail

/// Aligns every matrix, the labels and the splits to the sample order of the
/// first matrix. Ids absent from any view are reported in the error.
inline ViewBundle bundle_views(const std::vector<FeatureMatrix>& matrices, const IdLabels& labels,
                               const IdSplits& splits) {
  if (matrices.empty()) throw ConfigError("bundle_views: at least one matrix required");
  const auto& order = matrices.front().ids();
  std::unordered_set<std::string> ref(order.begin(), order.end());

  std::map<std::string, FeatureMatrix> views;
  for (const auto& m : matrices) {
    if (views.count(m.name())) throw ConfigError("duplicate view name '" + m.name() + "'");
    std::unordered_map<std::string, Index> pos;
    for (std::size_t i = 0; i < m.ids().size(); ++i) pos.emplace(m.ids()[i], static_cast<Index>(i));

    std::vector<std::string> missing;
    std::vector<std::string> extra;
    for (const auto& id : order)
      if (!pos.count(id)) missing.push_back(id);
    for (const auto& id : m.ids())
      if (!ref.count(id)) extra.push_back(id);
    if (!missing.empty() || !extra.empty()) {
      std::string msg = "view '" + m.name() + "' misaligned:";
      if (!missing.empty()) {
        msg += " missing";
        for (const auto& id : missing) msg += " " + id;
      }
      if (!extra.empty()) {
        msg += " unexpected";
        for (const auto& id : extra) msg += " " + id;
      }
      throw AlignmentError(msg);
    }
    std::vector<Index> rows;
    rows.reserve(order.size());
    for (const auto& id : order) rows.push_back(pos.at(id));
    views.emplace(m.name(), m.select_rows(rows));
  }
  auto y = detail::align_by_id(order, labels.ids, labels.labels, "labels");
  auto s = detail::align_by_id(order, splits.ids, splits.splits, "splits");
  return {std::move(views), std::move(y), std::move(s)};
}

// ---------------------------------------------------------------------------
// Sentiment score binarization

enum class LabelRule {
  GeqZeroPositive,  ///< label 1 iff score >= 0; every sample kept
  ZeroExcluded,     ///< (0,3] positive, [-3,0) negative, exact zeros dropped
};

struct SentimentScores {
  std::vector<double> scores;
  LabelRule rule = LabelRule::GeqZeroPositive;
};

struct BinarizedLabels {
  std::vector<int> labels;
  std::vector<Index> kept;
};

inline BinarizedLabels binarize_labels(const SentimentScores& s) {
  BinarizedLabels out;
  for (std::size_t i = 0; i < s.scores.size(); ++i) {
    const double v = s.scores[i];
    if (!(v >= -3.0 && v <= 3.0))
      throw RangeError("score " + format_real(v) + " at index " + std::to_string(i) + " outside [-3,3]");
    if (s.rule == LabelRule::ZeroExcluded && v == 0.0) continue;
    out.labels.push_back(v >= 0.0 ? 1 : 0);
    out.kept.push_back(static_cast<Index>(i));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Concatenation and centering

inline FeatureMatrix concat_views(const FeatureMatrix& a, const FeatureMatrix& b) {
  if (a.rows() != b.rows())
    throw AlignmentError("concat: " + a.name() + " has " + std::to_string(a.rows()) + " rows, " + b.name() + " has " +
                         std::to_string(b.rows()));
  if (a.ids() != b.ids()) throw AlignmentError("concat: sample order differs between " + a.name() + " and " + b.name());
  Matrix out(a.rows(), a.cols() + b.cols());
  out << a.data(), b.data();
  return {a.name() + "|" + b.name(), std::move(out), a.ids()};
}

struct Centered {
  RowVector means;
  Matrix train;
  std::vector<Matrix> others;
};

/// Column means from `train` only, subtracted from train and every other matrix.
inline Centered center_fit_apply(const Matrix& train, const std::vector<Matrix>& others = {}) {
  if (train.rows() < 1) throw DimensionError("center_fit_apply: empty training matrix");
  Centered c;
  c.means = train.colwise().mean();
  c.train = train.rowwise() - c.means;
  for (const auto& m : others) {
    if (m.cols() != train.cols()) throw DimensionError("center_fit_apply: column count mismatch");
    c.others.push_back(m.rowwise() - c.means);
  }
  return c;
}

// ---------------------------------------------------------------------------
// Synthetic planted-latent bundles

struct SynthSpec {
  Index n = 500;
  Index latent_dim = 4;
  std::vector<Index> view_dims{20, 10, 8};
  std::vector<double> noise_levels{0.5, 1.0, 1.5};
  std::vector<std::string> view_names;   // defaults: text/audio/video for 3 views, else view0..
  std::optional<Vector> label_weights;   // defaults to the first basis vector
  std::uint64_t seed = 0;
};

struct SynthResult {
  ViewBundle bundle;
  Matrix latent;                 // n x latent_dim
  std::vector<Matrix> mixing;    // latent_dim x d_i, one per view
};

inline std::vector<std::string> default_view_names(std::size_t count) {
  if (count == 3) return {"text", "audio", "video"};
  std::vector<std::string> names;
  for (std::size_t i = 0; i < count; ++i) names.push_back("view" + std::to_string(i));
  return names;
}

/// Every view is a fixed random linear image of a shared Gaussian latent
/// plus isotropic noise; the label is the sign of a projection of the latent.
/// Splits are 60/20/20 by sample index.
inline SynthResult synth_bundle_with_latent(const SynthSpec& spec) {
  if (spec.view_dims.empty()) throw ConfigError("synth: at least one view required");
  if (spec.view_dims.size() != spec.noise_levels.size())
    throw ConfigError("synth: view_dims and noise_levels differ in length");
  if (spec.n < 4) throw ConfigError("synth: n must be at least 4");
  if (spec.latent_dim < 1) throw ConfigError("synth: latent_dim must be positive");
  for (Index d : spec.view_dims)
    if (spec.latent_dim > d)
      throw ConfigError("synth: latent_dim " + std::to_string(spec.latent_dim) + " exceeds view dimension " +
                        std::to_string(d));
  for (double s : spec.noise_levels)
    if (!(s >= 0.0)) throw ConfigError("synth: noise levels must be non-negative");
  auto names = spec.view_names.empty() ? default_view_names(spec.view_dims.size()) : spec.view_names;
  if (names.size() != spec.view_dims.size()) throw ConfigError("synth: view_names length mismatch");

  Vector w = Vector::Zero(spec.latent_dim);
  if (spec.label_weights) {
    if (spec.label_weights->size() != spec.latent_dim) throw ConfigError("synth: label_weights length mismatch");
    w = *spec.label_weights;
  } else {
    w(0) = 1.0;
  }

  std::normal_distribution<double> normal(0.0, 1.0);
  auto fill = [&](Matrix& m, std::mt19937_64& rng) {
    for (Index j = 0; j < m.cols(); ++j)
      for (Index i = 0; i < m.rows(); ++i) m(i, j) = normal(rng);
  };

  std::mt19937_64 latent_rng(derive_seed(spec.seed, "synth.latent"));
  Matrix z(spec.n, spec.latent_dim);
  fill(z, latent_rng);

  std::vector<std::string> ids;
  for (Index i = 0; i < spec.n; ++i) ids.push_back("s" + std::to_string(i));

  std::vector<int> labels(static_cast<std::size_t>(spec.n));
  const Vector score = z * w;
  for (Index i = 0; i < spec.n; ++i) labels[static_cast<std::size_t>(i)] = score(i) >= 0.0 ? 1 : 0;

  std::vector<Split> splits(static_cast<std::size_t>(spec.n));
  const Index n_train = spec.n * 6 / 10;
  const Index n_val = spec.n * 2 / 10;
  for (Index i = 0; i < spec.n; ++i)
    splits[static_cast<std::size_t>(i)] = i < n_train ? Split::Train : (i < n_train + n_val ? Split::Val : Split::Test);

  std::map<std::string, FeatureMatrix> views;
  std::vector<Matrix> mixing;
  const double scale = 1.0 / std::sqrt(static_cast<double>(spec.latent_dim));
  for (std::size_t v = 0; v < spec.view_dims.size(); ++v) {
    std::mt19937_64 mix_rng(derive_seed(spec.seed, "synth.mixing." + std::to_string(v)));
    std::mt19937_64 noise_rng(derive_seed(spec.seed, "synth.noise." + std::to_string(v)));
    Matrix a(spec.latent_dim, spec.view_dims[v]);
    fill(a, mix_rng);
    a *= scale;
    Matrix x = z * a;
    if (spec.noise_levels[v] > 0.0) {
      Matrix eps(spec.n, spec.view_dims[v]);
      fill(eps, noise_rng);
      x += spec.noise_levels[v] * eps;
    }
    views.emplace(names[v], FeatureMatrix(names[v], std::move(x), ids));
    mixing.push_back(std::move(a));
  }
  return {ViewBundle(std::move(views), std::move(labels), std::move(splits)), std::move(z), std::move(mixing)};
}

inline ViewBundle synth_bundle(const SynthSpec& spec) { return synth_bundle_with_latent(spec).bundle; }

}  // namespace mmfuse
