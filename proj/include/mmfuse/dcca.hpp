#pragma once

// Deep CCA: a pair of feed-forward encoders trained full-batch with RMSProp
// to maximize the total correlation of their outputs, followed by a terminal
// linear CCA that canonicalizes the outputs to k correlated coordinates.

#include "mmfuse/cca.hpp"
#include "mmfuse/common.hpp"
#include "mmfuse/error.hpp"
#include "mmfuse/model_io.hpp"
#include "mmfuse/views.hpp"

#include <charconv>
#include <cmath>
#include <istream>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace mmfuse {

enum class Activation {
  ReluAll,              ///< ReLU after every layer, output included
  ReluHiddenLinearOut,  ///< ReLU on hidden layers, affine output
};

inline std::string_view to_string(Activation a) {
  return a == Activation::ReluAll ? "relu-all" : "relu-hidden";
}

inline std::optional<Activation> parse_activation(std::string_view s) {
  if (s == "relu-all") return Activation::ReluAll;
  if (s == "relu-hidden") return Activation::ReluHiddenLinearOut;
  return std::nullopt;
}

enum class Init {
  GlorotUniform,  ///< U(-a, a), a = sqrt(6 / (fan_in + fan_out))
  Identity,       ///< square identity weights, zero bias
};

struct DenseLayer {
  Matrix weight;  // fan_in x fan_out, applied as X * W
  Vector bias;    // fan_out
};

class EncoderNetwork {
 public:
  EncoderNetwork() = default;

  EncoderNetwork(std::vector<Index> layer_dims, Activation activation, std::uint64_t seed,
                 Init init = Init::GlorotUniform)
      : dims_(std::move(layer_dims)), activation_(activation), seed_(seed) {
    if (dims_.size() < 2) throw ConfigError("encoder needs at least an input and an output dimension");
    for (Index d : dims_)
      if (d < 1) throw ConfigError("encoder layer dimensions must be positive");
    std::mt19937_64 rng(seed);
    for (std::size_t l = 0; l + 1 < dims_.size(); ++l) {
      const Index fan_in = dims_[l], fan_out = dims_[l + 1];
      DenseLayer layer{Matrix(fan_in, fan_out), Vector::Zero(fan_out)};
      if (init == Init::Identity) {
        if (fan_in != fan_out) throw ConfigError("identity init needs square layers");
        layer.weight.setIdentity();
      } else {
        const double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
        std::uniform_real_distribution<double> u(-a, a);
        for (Index j = 0; j < fan_out; ++j)
          for (Index i = 0; i < fan_in; ++i) layer.weight(i, j) = u(rng);
      }
      layers_.push_back(std::move(layer));
    }
  }

  const std::vector<Index>& layer_dims() const noexcept { return dims_; }
  Index input_dim() const { return dims_.front(); }
  Index output_dim() const { return dims_.back(); }
  Activation activation() const noexcept { return activation_; }
  std::uint64_t seed() const noexcept { return seed_; }
  std::vector<DenseLayer>& layers() noexcept { return layers_; }
  const std::vector<DenseLayer>& layers() const noexcept { return layers_; }

  Index parameter_count() const {
    Index n = 0;
    for (const auto& l : layers_) n += l.weight.size() + l.bias.size();
    return n;
  }

  bool rectifies(std::size_t layer) const {
    return activation_ == Activation::ReluAll || layer + 1 < layers_.size();
  }

  bool parameters_finite() const {
    for (const auto& l : layers_)
      if (!l.weight.allFinite() || !l.bias.allFinite()) return false;
    return true;
  }

 private:
  std::vector<Index> dims_;
  Activation activation_ = Activation::ReluHiddenLinearOut;
  std::uint64_t seed_ = 0;
  std::vector<DenseLayer> layers_;
};

/// Activations of every layer; entry 0 is the input, the last the output.
struct ForwardTrace {
  std::vector<Matrix> activations;
};

inline ForwardTrace forward_trace(const EncoderNetwork& net, const Matrix& x) {
  if (x.cols() != net.input_dim())
    throw DimensionError("encoder expects " + std::to_string(net.input_dim()) + " inputs, got " +
                         std::to_string(x.cols()));
  ForwardTrace t;
  t.activations.reserve(net.layers().size() + 1);
  t.activations.push_back(x);
  for (std::size_t l = 0; l < net.layers().size(); ++l) {
    const auto& layer = net.layers()[l];
    Matrix z = t.activations.back() * layer.weight;
    z.rowwise() += layer.bias.transpose();
    if (net.rectifies(l)) z = z.cwiseMax(0.0);
    t.activations.push_back(std::move(z));
  }
  return t;
}

inline Matrix forward(const EncoderNetwork& net, const Matrix& x) {
  return std::move(forward_trace(net, x).activations.back());
}

struct NetGradients {
  std::vector<Matrix> weight;
  std::vector<Vector> bias;
};

/// Chain rule through the encoder given dLoss/dOutput.
inline NetGradients backprop(const EncoderNetwork& net, const ForwardTrace& trace, const Matrix& upstream) {
  const auto& acts = trace.activations;
  if (upstream.rows() != acts.back().rows() || upstream.cols() != acts.back().cols())
    throw DimensionError("backprop: upstream gradient shape mismatch");
  const std::size_t depth = net.layers().size();
  NetGradients g;
  g.weight.resize(depth);
  g.bias.resize(depth);
  Matrix delta = upstream;
  for (std::size_t l = depth; l-- > 0;) {
    // A ReLU output is positive exactly where its pre-activation was.
    if (net.rectifies(l)) delta = (acts[l + 1].array() > 0.0).select(delta, 0.0);
    g.weight[l] = acts[l].transpose() * delta;
    g.bias[l] = delta.colwise().sum().transpose();
    if (l > 0) delta = delta * net.layers()[l].weight.transpose();
  }
  return g;
}

inline NetGradients backprop(const EncoderNetwork& net, const Matrix& x, const Matrix& upstream) {
  return backprop(net, forward_trace(net, x), upstream);
}

// ---------------------------------------------------------------------------
// Objective

struct CorrLossResult {
  double loss = 0.0;
  Matrix grad_1;  // dLoss/dH1, n x d1
  Matrix grad_2;  // dLoss/dH2, n x d2
  bool tie_at_k = false;  ///< sigma_k and sigma_{k+1} within 1e-9: gradient not unique
};

/// Negative total correlation of (H1, H2) and its gradient.
///
/// With T = S11^{-1/2} S12 S22^{-1/2} = U S V' truncated to the top k,
///   d corr / d H1 = (2 H1c D11 + H2c D12') / (n-1),
///   D12 = S11^{-1/2} U V' S22^{-1/2},  D11 = -1/2 S11^{-1/2} U S U' S11^{-1/2},
/// and symmetrically for H2. H1c, H2c are the centered inputs; the gradient
/// has zero column means so it is also the gradient w.r.t. the raw inputs.
inline CorrLossResult corr_loss_and_grad(const Matrix& h1, const Matrix& h2, Index k, double r1 = kDefaultRegularizer,
                                         double r2 = kDefaultRegularizer) {
  if (h1.rows() != h2.rows()) throw DimensionError("corr_loss_and_grad: row counts differ");
  detail::check_k(k, h1.cols(), h2.cols());
  const Matrix c1 = detail::center_columns(h1);
  const Matrix c2 = detail::center_columns(h2);
  const auto a = detail::analyze_centered(c1, c2, r1, r2);
  const double scale = 1.0 / static_cast<double>(h1.rows() - 1);

  const Matrix uk = a.u.leftCols(k);
  const Matrix vk = a.v.leftCols(k);
  const Vector sk = a.sigma.head(k);
  const Matrix d12 = a.s11_isqrt * uk * vk.transpose() * a.s22_isqrt;
  const Matrix d11 = -0.5 * a.s11_isqrt * uk * sk.asDiagonal() * uk.transpose() * a.s11_isqrt;
  const Matrix d22 = -0.5 * a.s22_isqrt * vk * sk.asDiagonal() * vk.transpose() * a.s22_isqrt;

  CorrLossResult r;
  r.loss = -sk.sum();
  r.grad_1 = -scale * (2.0 * c1 * d11 + c2 * d12.transpose());
  r.grad_2 = -scale * (2.0 * c2 * d22 + c1 * d12);
  r.tie_at_k = k < a.sigma.size() && (a.sigma(k - 1) - a.sigma(k)) < 1e-9;
  return r;
}

// ---------------------------------------------------------------------------
// RMSProp

/// state <- decay*state + (1-decay)*g^2;  param <- param - lr*g/sqrt(state+eps).
template <typename Param, typename Grad, typename State>
void rmsprop_step(Eigen::MatrixBase<Param>& param, const Eigen::MatrixBase<Grad>& grad, Eigen::MatrixBase<State>& state,
                  double lr, double decay, double eps) {
  if (param.rows() != grad.rows() || param.cols() != grad.cols() || param.rows() != state.rows() ||
      param.cols() != state.cols())
    throw DimensionError("rmsprop_step: shape mismatch");
  state.derived().array() = decay * state.array() + (1.0 - decay) * grad.array().square();
  param.derived().array() -= lr * grad.array() / (state.array() + eps).sqrt();
}

struct RmsPropState {
  std::vector<Matrix> weight;
  std::vector<Vector> bias;

  static RmsPropState zeros_like(const EncoderNetwork& net) {
    RmsPropState s;
    for (const auto& l : net.layers()) {
      s.weight.push_back(Matrix::Zero(l.weight.rows(), l.weight.cols()));
      s.bias.push_back(Vector::Zero(l.bias.size()));
    }
    return s;
  }
};

inline void rmsprop_update(EncoderNetwork& net, const NetGradients& g, RmsPropState& state, double lr, double decay,
                           double eps) {
  for (std::size_t l = 0; l < net.layers().size(); ++l) {
    rmsprop_step(net.layers()[l].weight, g.weight[l], state.weight[l], lr, decay, eps);
    rmsprop_step(net.layers()[l].bias, g.bias[l], state.bias[l], lr, decay, eps);
  }
}

// ---------------------------------------------------------------------------
// Training

struct TrainConfig {
  int epochs = 200;
  double learning_rate = 1e-3;
  double rmsprop_decay = 0.9;
  double rmsprop_eps = 1e-8;
  double r1 = kDefaultRegularizer;
  double r2 = kDefaultRegularizer;
  Index k = 30;
  Index out_dim = 0;  ///< encoder output width; 0 means k
  std::vector<Index> hidden{64, 64};
  std::vector<std::vector<Index>> grid;  ///< hidden-size candidates; empty means {hidden}
  Activation activation = Activation::ReluHiddenLinearOut;
  Init init = Init::GlorotUniform;
  bool standardize = false;  ///< z-score encoder inputs with train statistics
  int early_stop_patience = 20;  ///< 0 disables
  std::uint64_t seed = 0;

  Index output_dim() const { return out_dim > 0 ? out_dim : k; }

  /// Stable text form used for provenance hashes.
  std::string canonical() const {
    std::ostringstream s;
    s << "epochs=" << epochs << ";lr=" << format_real(learning_rate) << ";decay=" << format_real(rmsprop_decay)
      << ";eps=" << format_real(rmsprop_eps) << ";r1=" << format_real(r1) << ";r2=" << format_real(r2) << ";k=" << k
      << ";out=" << out_dim << ";hidden=";
    for (Index h : hidden) s << h << ',';
    s << ";grid=";
    for (const auto& g : grid) {
      for (Index h : g) s << h << ',';
      s << '/';
    }
    s << ";act=" << to_string(activation) << ";init=" << (init == Init::Identity ? "identity" : "glorot")
      << ";std=" << standardize << ";patience=" << early_stop_patience << ";seed=" << seed;
    return s.str();
  }

  /// Inverse of canonical().
  static TrainConfig from_canonical(std::string_view text);
};

namespace detail {

inline std::vector<Index> parse_index_list(std::string_view s) {
  std::vector<Index> out;
  std::size_t start = 0;
  while (start < s.size()) {
    const auto end = s.find(',', start);
    const auto item = s.substr(start, end == std::string_view::npos ? std::string_view::npos : end - start);
    Index v = 0;
    if (std::from_chars(item.data(), item.data() + item.size(), v).ec != std::errc{})
      throw ParseError("model", 0, "bad size list '" + std::string(s) + "'");
    out.push_back(v);
    if (end == std::string_view::npos) break;
    start = end + 1;
  }
  return out;
}

}  // namespace detail

inline TrainConfig TrainConfig::from_canonical(std::string_view text) {
  TrainConfig c;
  std::map<std::string, std::string, std::less<>> kv;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto end = text.find(';', start);
    if (end == std::string_view::npos) end = text.size();
    const auto field = text.substr(start, end - start);
    const auto eq = field.find('=');
    if (eq == std::string_view::npos) throw ParseError("model", 0, "bad config field '" + std::string(field) + "'");
    kv.emplace(std::string(field.substr(0, eq)), std::string(field.substr(eq + 1)));
    start = end + 1;
  }
  auto get = [&](const char* key) -> const std::string& {
    auto it = kv.find(key);
    if (it == kv.end()) throw ParseError("model", 0, std::string("config missing '") + key + "'");
    return it->second;
  };
  auto real = [&](const char* key) {
    std::istringstream in(get(key));
    return io::read_real(in);
  };
  auto integer = [&](const char* key) {
    long long v = 0;
    const auto& s = get(key);
    if (std::from_chars(s.data(), s.data() + s.size(), v).ec != std::errc{})
      throw ParseError("model", 0, std::string("bad integer for '") + key + "'");
    return v;
  };
  c.epochs = static_cast<int>(integer("epochs"));
  c.learning_rate = real("lr");
  c.rmsprop_decay = real("decay");
  c.rmsprop_eps = real("eps");
  c.r1 = real("r1");
  c.r2 = real("r2");
  c.k = static_cast<Index>(integer("k"));
  c.out_dim = static_cast<Index>(integer("out"));
  c.hidden = detail::parse_index_list(get("hidden"));
  c.grid.clear();
  const std::string& grid = get("grid");
  std::size_t g = 0;
  while (g < grid.size()) {
    const auto slash = grid.find('/', g);
    if (slash == std::string::npos) throw ParseError("model", 0, "bad grid '" + grid + "'");
    c.grid.push_back(detail::parse_index_list(std::string_view(grid).substr(g, slash - g)));
    g = slash + 1;
  }
  const auto act = parse_activation(get("act"));
  if (!act) throw ParseError("model", 0, "unknown activation '" + get("act") + "'");
  c.activation = *act;
  const std::string& init = get("init");
  if (init != "identity" && init != "glorot") throw ParseError("model", 0, "unknown init '" + init + "'");
  c.init = init == "identity" ? Init::Identity : Init::GlorotUniform;
  c.standardize = integer("std") != 0;
  c.early_stop_patience = static_cast<int>(integer("patience"));
  const std::string& seed = get("seed");
  if (std::from_chars(seed.data(), seed.data() + seed.size(), c.seed).ec != std::errc{})
    throw ParseError("model", 0, "bad seed '" + seed + "'");
  return c;
}

/// Cartesian product of per-layer candidate sizes, e.g. {64,128} over 2
/// layers gives {64,64},{64,128},{128,64},{128,128}.
inline std::vector<std::vector<Index>> expand_hidden_grid(const std::vector<Index>& sizes, std::size_t layers) {
  std::vector<std::vector<Index>> out{{}};
  for (std::size_t l = 0; l < layers; ++l) {
    std::vector<std::vector<Index>> next;
    for (const auto& prefix : out)
      for (Index s : sizes) {
        auto v = prefix;
        v.push_back(s);
        next.push_back(std::move(v));
      }
    out = std::move(next);
  }
  return out;
}

/// Per-column affine input map; identity when disabled.
struct InputScaler {
  RowVector mean;
  RowVector inv_std;

  static InputScaler identity(Index d) { return {RowVector::Zero(d), RowVector::Ones(d)}; }

  static InputScaler fit(const Matrix& train) {
    InputScaler s;
    s.mean = train.colwise().mean();
    const Matrix c = train.rowwise() - s.mean;
    const double denom = std::max<double>(1.0, static_cast<double>(train.rows() - 1));
    RowVector sd = (c.colwise().squaredNorm() / denom).cwiseSqrt();
    s.inv_std = sd.unaryExpr([](double v) { return v > 1e-12 ? 1.0 / v : 1.0; });
    return s;
  }

  Matrix apply(const Matrix& x) const { return (x.rowwise() - mean).array().rowwise() * inv_std.array(); }
};

struct TrainHistory {
  std::vector<double> train_corr;  // index = epoch, 0 is before any update
  std::vector<double> val_corr;
  int best_epoch = 0;
};

struct DccaModel {
  EncoderNetwork net_1;
  EncoderNetwork net_2;
  InputScaler scaler_1;
  InputScaler scaler_2;
  CcaProjection terminal_cca;
  Index k = 0;
  TrainHistory history;
  TrainConfig config;

  double best_val_corr() const { return history.val_corr.at(static_cast<std::size_t>(history.best_epoch)); }
};

namespace detail {

inline Matrix rows_of(const Matrix& x, const std::vector<Index>& rows) {
  Matrix out(static_cast<Index>(rows.size()), x.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Index>(i)) = x.row(rows[i]);
  return out;
}

}  // namespace detail

/// Full-batch DCCA training on the train split; validation rows drive early
/// stopping. When fewer than two validation rows exist the validation column
/// mirrors the training one and early stopping is off.
inline DccaModel train_dcca(const Matrix& v1, const Matrix& v2, const std::vector<Split>& splits,
                            const TrainConfig& cfg) {
  if (v1.rows() != v2.rows() || static_cast<Index>(splits.size()) != v1.rows())
    throw AlignmentError("train_dcca: views and splits must have the same number of rows");
  if (cfg.k < 1) throw ConfigError("train_dcca: k must be at least 1");
  if (cfg.epochs < 0 || !(cfg.learning_rate > 0.0) || !(cfg.rmsprop_decay >= 0.0 && cfg.rmsprop_decay < 1.0) ||
      !(cfg.rmsprop_eps > 0.0) || cfg.early_stop_patience < 0)
    throw ConfigError("train_dcca: invalid optimizer settings");
  const Index out_dim = cfg.output_dim();
  if (cfg.k > out_dim)
    throw ConfigError("train_dcca: k=" + std::to_string(cfg.k) + " exceeds encoder output width " +
                      std::to_string(out_dim));

  std::vector<Index> train_rows, val_rows;
  for (std::size_t i = 0; i < splits.size(); ++i) {
    if (splits[i] == Split::Train) train_rows.push_back(static_cast<Index>(i));
    if (splits[i] == Split::Val) val_rows.push_back(static_cast<Index>(i));
  }
  if (static_cast<Index>(train_rows.size()) < std::max<Index>(2, 2 * cfg.k))
    throw ConfigError("train_dcca: train split has " + std::to_string(train_rows.size()) + " rows, need >= 2k = " +
                      std::to_string(2 * cfg.k));
  const bool have_val = val_rows.size() >= 2;

  DccaModel m;
  m.k = cfg.k;
  m.config = cfg;
  const Matrix raw1 = detail::rows_of(v1, train_rows);
  const Matrix raw2 = detail::rows_of(v2, train_rows);
  m.scaler_1 = cfg.standardize ? InputScaler::fit(raw1) : InputScaler::identity(v1.cols());
  m.scaler_2 = cfg.standardize ? InputScaler::fit(raw2) : InputScaler::identity(v2.cols());
  const Matrix x1 = m.scaler_1.apply(raw1);
  const Matrix x2 = m.scaler_2.apply(raw2);
  const Matrix xv1 = have_val ? m.scaler_1.apply(detail::rows_of(v1, val_rows)) : Matrix();
  const Matrix xv2 = have_val ? m.scaler_2.apply(detail::rows_of(v2, val_rows)) : Matrix();

  auto dims_for = [&](Index d_in) {
    std::vector<Index> dims{d_in};
    dims.insert(dims.end(), cfg.hidden.begin(), cfg.hidden.end());
    dims.push_back(out_dim);
    return dims;
  };
  m.net_1 = EncoderNetwork(dims_for(v1.cols()), cfg.activation, derive_seed(cfg.seed, "dcca.net_1"), cfg.init);
  m.net_2 = EncoderNetwork(dims_for(v2.cols()), cfg.activation, derive_seed(cfg.seed, "dcca.net_2"), cfg.init);

  struct Step {
    ForwardTrace t1, t2;
    CorrLossResult obj;
    double val = 0.0;
  };
  auto evaluate = [&](int epoch) {
    Step s;
    s.t1 = forward_trace(m.net_1, x1);
    s.t2 = forward_trace(m.net_2, x2);
    s.obj = corr_loss_and_grad(s.t1.activations.back(), s.t2.activations.back(), cfg.k, cfg.r1, cfg.r2);
    if (!std::isfinite(s.obj.loss) || !s.obj.grad_1.allFinite() || !s.obj.grad_2.allFinite())
      throw NumericError("train_dcca: non-finite objective at epoch " + std::to_string(epoch) + " (loss " +
                         format_real(s.obj.loss) + ")");
    s.val = have_val ? total_correlation(forward(m.net_1, xv1), forward(m.net_2, xv2), cfg.k, cfg.r1, cfg.r2)
                     : -s.obj.loss;
    if (!std::isfinite(s.val))
      throw NumericError("train_dcca: non-finite validation correlation at epoch " + std::to_string(epoch));
    return s;
  };

  Step cur = evaluate(0);
  m.history.train_corr.push_back(-cur.obj.loss);
  m.history.val_corr.push_back(cur.val);

  const bool early_stop = have_val && cfg.early_stop_patience > 0;
  EncoderNetwork best_1 = m.net_1, best_2 = m.net_2;
  double best_val = cur.val;
  int since_best = 0;

  auto state_1 = RmsPropState::zeros_like(m.net_1);
  auto state_2 = RmsPropState::zeros_like(m.net_2);
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const NetGradients g1 = backprop(m.net_1, cur.t1, cur.obj.grad_1);
    const NetGradients g2 = backprop(m.net_2, cur.t2, cur.obj.grad_2);
    rmsprop_update(m.net_1, g1, state_1, cfg.learning_rate, cfg.rmsprop_decay, cfg.rmsprop_eps);
    rmsprop_update(m.net_2, g2, state_2, cfg.learning_rate, cfg.rmsprop_decay, cfg.rmsprop_eps);
    if (!m.net_1.parameters_finite() || !m.net_2.parameters_finite())
      throw NumericError("train_dcca: non-finite parameters after epoch " + std::to_string(epoch));

    cur = evaluate(epoch);
    m.history.train_corr.push_back(-cur.obj.loss);
    m.history.val_corr.push_back(cur.val);

    if (cur.val > best_val) {
      best_val = cur.val;
      m.history.best_epoch = epoch;
      if (early_stop) {
        best_1 = m.net_1;
        best_2 = m.net_2;
      }
      since_best = 0;
    } else if (early_stop && ++since_best >= cfg.early_stop_patience) {
      break;
    }
  }
  if (early_stop) {
    m.net_1 = std::move(best_1);
    m.net_2 = std::move(best_2);
  } else {
    m.history.best_epoch = static_cast<int>(m.history.train_corr.size()) - 1;
  }

  m.terminal_cca = cca_fit(forward(m.net_1, x1), forward(m.net_2, x2), cfg.k, cfg.r1, cfg.r2);
  return m;
}

inline DccaModel train_dcca(const FeatureMatrix& v1, const FeatureMatrix& v2, const std::vector<Split>& splits,
                            const TrainConfig& cfg) {
  if (v1.ids() != v2.ids()) throw AlignmentError("train_dcca: views are not aligned");
  return train_dcca(v1.data(), v2.data(), splits, cfg);
}

/// The correlated k-dim representations of both views.
inline std::pair<Matrix, Matrix> dcca_transform(const DccaModel& m, const Matrix& x1, const Matrix& x2) {
  if (x1.cols() != m.net_1.input_dim() || x2.cols() != m.net_2.input_dim())
    throw DimensionError("dcca_transform: input widths do not match the trained encoders");
  return {cca_transform(m.terminal_cca, forward(m.net_1, m.scaler_1.apply(x1)), 1),
          cca_transform(m.terminal_cca, forward(m.net_2, m.scaler_2.apply(x2)), 2)};
}

/// Output of one encoder side, before the terminal projection.
inline Matrix dcca_encode(const DccaModel& m, const Matrix& x, int side) {
  return side == 1 ? forward(m.net_1, m.scaler_1.apply(x)) : forward(m.net_2, m.scaler_2.apply(x));
}

struct GridSearchResult {
  TrainConfig config;
  DccaModel model;
  std::vector<double> candidate_scores;  // best validation correlation per grid entry
};

/// Trains one model per hidden-size candidate (seed + candidate index) and
/// keeps the best validation correlation; ties within 1e-9 go to the model
/// with fewer parameters, then to the earlier candidate.
inline GridSearchResult grid_search_dcca(const Matrix& v1, const Matrix& v2, const std::vector<Split>& splits,
                                         const TrainConfig& cfg) {
  const auto grid = cfg.grid.empty() ? std::vector<std::vector<Index>>{cfg.hidden} : cfg.grid;
  std::optional<GridSearchResult> best;
  std::vector<double> scores;
  Index best_params = 0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    TrainConfig c = cfg;
    c.hidden = grid[i];
    c.grid.clear();
    c.seed = cfg.seed + i;
    DccaModel m = train_dcca(v1, v2, splits, c);
    const double score = m.best_val_corr();
    const Index params = m.net_1.parameter_count() + m.net_2.parameter_count();
    scores.push_back(score);
    const bool better = !best || score > best->model.best_val_corr() + 1e-9 ||
                        (std::abs(score - best->model.best_val_corr()) <= 1e-9 && params < best_params);
    if (better) {
      best = GridSearchResult{c, std::move(m), {}};
      best_params = params;
    }
  }
  best->candidate_scores = std::move(scores);
  return std::move(*best);
}

// ---------------------------------------------------------------------------
// Persistence: magic "DCCA1" followed by two encoders, the input scalers and
// an embedded CCA1 block.

namespace detail {

inline void write_encoder(std::ostream& out, const std::string& tag, const EncoderNetwork& net) {
  out << tag << ' ' << net.layer_dims().size();
  for (Index d : net.layer_dims()) out << ' ' << d;
  out << " activation " << to_string(net.activation()) << " seed " << net.seed() << '\n';
  for (std::size_t l = 0; l < net.layers().size(); ++l) {
    io::write_matrix(out, "W" + std::to_string(l), net.layers()[l].weight);
    io::write_vector(out, "b" + std::to_string(l), net.layers()[l].bias);
  }
}

inline EncoderNetwork read_encoder(std::istream& in, const std::string& tag) {
  io::expect_key(in, tag);
  const Index count = io::read_index(in);
  std::vector<Index> dims;
  for (Index i = 0; i < count; ++i) dims.push_back(io::read_index(in));
  io::expect_key(in, "activation");
  std::string act;
  in >> act;
  auto a = parse_activation(act);
  if (!a) throw ParseError("model", 0, "unknown activation '" + act + "'");
  io::expect_key(in, "seed");
  std::uint64_t seed = 0;
  in >> seed;
  EncoderNetwork net(dims, *a, seed);
  for (std::size_t l = 0; l < net.layers().size(); ++l) {
    Matrix w = io::read_matrix(in, "W" + std::to_string(l));
    Vector b = io::read_vector(in, "b" + std::to_string(l));
    if (w.rows() != net.layers()[l].weight.rows() || w.cols() != net.layers()[l].weight.cols() ||
        b.size() != net.layers()[l].bias.size())
      throw ParseError("model", 0, "encoder layer shape mismatch");
    net.layers()[l].weight = std::move(w);
    net.layers()[l].bias = std::move(b);
  }
  return net;
}

}  // namespace detail

inline void write_dcca(std::ostream& out, const DccaModel& m) {
  io::write_magic(out, "DCCA1");
  out << "k " << m.k << '\n';
  out << "config " << m.config.canonical() << '\n';
  out << "best_epoch " << m.history.best_epoch << '\n';
  detail::write_encoder(out, "net_1", m.net_1);
  detail::write_encoder(out, "net_2", m.net_2);
  io::write_vector(out, "scale_mean_1", m.scaler_1.mean.transpose());
  io::write_vector(out, "scale_inv_std_1", m.scaler_1.inv_std.transpose());
  io::write_vector(out, "scale_mean_2", m.scaler_2.mean.transpose());
  io::write_vector(out, "scale_inv_std_2", m.scaler_2.inv_std.transpose());
  write_cca(out, m.terminal_cca);
}

/// Restores everything needed for dcca_transform plus the training config.
/// The per-epoch history is not part of the model file.
inline DccaModel read_dcca(std::istream& in) {
  io::expect_magic(in, "DCCA1");
  DccaModel m;
  io::expect_key(in, "k");
  m.k = io::read_index(in);
  io::expect_key(in, "config");
  std::string canon;
  in >> canon;
  io::expect_key(in, "best_epoch");
  in >> m.history.best_epoch;
  m.net_1 = detail::read_encoder(in, "net_1");
  m.net_2 = detail::read_encoder(in, "net_2");
  m.scaler_1.mean = io::read_vector(in, "scale_mean_1").transpose();
  m.scaler_1.inv_std = io::read_vector(in, "scale_inv_std_1").transpose();
  m.scaler_2.mean = io::read_vector(in, "scale_mean_2").transpose();
  m.scaler_2.inv_std = io::read_vector(in, "scale_inv_std_2").transpose();
  m.terminal_cca = read_cca(in);
  m.config = TrainConfig::from_canonical(canon);
  if (m.config.k != m.k) throw ParseError("model", 0, "DCCA1 config k disagrees with header");
  return m;
}

/// epoch,train_corr,val_corr
inline void write_history_csv(std::ostream& out, const TrainHistory& h) {
  out << "epoch,train_corr,val_corr\n";
  for (std::size_t e = 0; e < h.train_corr.size(); ++e)
    out << e << ',' << format_real(h.train_corr[e]) << ',' << format_real(h.val_corr[e]) << '\n';
}

}  // namespace mmfuse
