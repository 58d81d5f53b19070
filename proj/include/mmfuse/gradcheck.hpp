#pragma once

// Central finite-difference verification of the correlation objective and of
// end-to-end encoder gradients.

#include "mmfuse/dcca.hpp"

#include <cmath>
#include <functional>
#include <random>
#include <string>
#include <vector>

namespace mmfuse {

using ObjectiveFn = std::function<CorrLossResult(const Matrix&, const Matrix&, Index, double, double)>;

inline CorrLossResult default_objective(const Matrix& h1, const Matrix& h2, Index k, double r1, double r2) {
  return corr_loss_and_grad(h1, h2, k, r1, r2);
}

struct GradCheckCase {
  std::string name;
  double max_rel_error = 0.0;
  Index checked = 0;
  Index skipped_kinks = 0;  ///< parameters whose +-step probe crossed a ReLU kink
};

struct GradCheckReport {
  std::vector<GradCheckCase> cases;
  double tolerance = 1e-4;

  double max_rel_error() const {
    double m = 0.0;
    for (const auto& c : cases) m = std::max(m, c.max_rel_error);
    return m;
  }
  bool passed() const { return !cases.empty() && max_rel_error() < tolerance; }
};

/// |a - b| / max(|a|, |b|, floor). Central differences at step 1e-5 carry
/// ~1e-10 of round-off, so entries below the floor (e.g. output biases, whose
/// true gradient is zero under centering) are compared in absolute terms.
inline double relative_error(double analytic, double numeric, double floor = 1e-5) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
}

inline Matrix gaussian_matrix(Index rows, Index cols, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix m(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) m(i, j) = normal(rng);
  return m;
}

/// Checks dLoss/dH1 and dLoss/dH2 entry by entry.
inline GradCheckCase check_objective_gradient(const Matrix& h1, const Matrix& h2, Index k, double r1, double r2,
                                              const ObjectiveFn& objective, double step = 1e-5) {
  GradCheckCase c;
  const CorrLossResult analytic = objective(h1, h2, k, r1, r2);
  auto probe = [&](const Matrix& a, const Matrix& b) { return corr_loss_and_grad(a, b, k, r1, r2).loss; };
  for (int side = 1; side <= 2; ++side) {
    const Matrix& base = side == 1 ? h1 : h2;
    const Matrix& grad = side == 1 ? analytic.grad_1 : analytic.grad_2;
    for (Index j = 0; j < base.cols(); ++j)
      for (Index i = 0; i < base.rows(); ++i) {
        Matrix plus = base, minus = base;
        plus(i, j) += step;
        minus(i, j) -= step;
        const double fp = side == 1 ? probe(plus, h2) : probe(h1, plus);
        const double fm = side == 1 ? probe(minus, h2) : probe(h1, minus);
        const double numeric = (fp - fm) / (2.0 * step);
        c.max_rel_error = std::max(c.max_rel_error, relative_error(grad(i, j), numeric));
        ++c.checked;
      }
  }
  return c;
}

namespace detail {

inline std::vector<Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>> relu_masks(const EncoderNetwork& net,
                                                                                  const Matrix& x) {
  const auto t = forward_trace(net, x);
  std::vector<Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>> masks;
  for (std::size_t l = 0; l < net.layers().size(); ++l)
    if (net.rectifies(l)) masks.push_back(t.activations[l + 1].array() > 0.0);
  return masks;
}

}  // namespace detail

/// Perturbs every weight and bias of both encoders and compares the central
/// difference of the full loss (forward, then objective) with backprop.
inline GradCheckCase check_network_gradient(EncoderNetwork net_1, EncoderNetwork net_2, const Matrix& x1,
                                            const Matrix& x2, Index k, double r1, double r2,
                                            const ObjectiveFn& objective, double step = 1e-5) {
  GradCheckCase c;
  const auto t1 = forward_trace(net_1, x1);
  const auto t2 = forward_trace(net_2, x2);
  const CorrLossResult top = objective(t1.activations.back(), t2.activations.back(), k, r1, r2);
  const NetGradients g1 = backprop(net_1, t1, top.grad_1);
  const NetGradients g2 = backprop(net_2, t2, top.grad_2);

  auto loss = [&] { return corr_loss_and_grad(forward(net_1, x1), forward(net_2, x2), k, r1, r2).loss; };
  const auto masks_1 = detail::relu_masks(net_1, x1);
  const auto masks_2 = detail::relu_masks(net_2, x2);
  auto masks_changed = [&] {
    const auto m1 = detail::relu_masks(net_1, x1);
    const auto m2 = detail::relu_masks(net_2, x2);
    for (std::size_t i = 0; i < m1.size(); ++i)
      if ((m1[i] != masks_1[i]).any()) return true;
    for (std::size_t i = 0; i < m2.size(); ++i)
      if ((m2[i] != masks_2[i]).any()) return true;
    return false;
  };

  auto check_param = [&](double& p, double analytic) {
    const double saved = p;
    p = saved + step;
    const double fp = loss();
    bool kink = masks_changed();
    p = saved - step;
    const double fm = loss();
    kink = kink || masks_changed();
    p = saved;
    if (kink) {
      ++c.skipped_kinks;
      return;
    }
    c.max_rel_error = std::max(c.max_rel_error, relative_error(analytic, (fp - fm) / (2.0 * step)));
    ++c.checked;
  };

  for (int side = 1; side <= 2; ++side) {
    EncoderNetwork& net = side == 1 ? net_1 : net_2;
    const NetGradients& g = side == 1 ? g1 : g2;
    for (std::size_t l = 0; l < net.layers().size(); ++l) {
      auto& layer = net.layers()[l];
      for (Index j = 0; j < layer.weight.cols(); ++j)
        for (Index i = 0; i < layer.weight.rows(); ++i) check_param(layer.weight(i, j), g.weight[l](i, j));
      for (Index i = 0; i < layer.bias.size(); ++i) check_param(layer.bias(i), g.bias[l](i));
    }
  }
  return c;
}

/// Default suite: six objective shapes and five encoder-pair shapes, all
/// drawn from `seed`.
inline GradCheckReport run_gradcheck(std::uint64_t seed, const ObjectiveFn& objective = default_objective,
                                     double step = 1e-5, double tolerance = 1e-4) {
  GradCheckReport report;
  report.tolerance = tolerance;
  const double r = kDefaultRegularizer;

  struct ObjShape {
    Index n, d1, d2, k;
  };
  const ObjShape obj_shapes[] = {{20, 3, 2, 2}, {12, 2, 2, 1}, {30, 4, 3, 3}, {25, 5, 5, 2}, {40, 3, 4, 3}, {16, 1, 1, 1}};
  for (const auto& s : obj_shapes) {
    const std::string name = "objective n=" + std::to_string(s.n) + " d1=" + std::to_string(s.d1) +
                             " d2=" + std::to_string(s.d2) + " k=" + std::to_string(s.k);
    std::mt19937_64 rng(derive_seed(seed, "gradcheck." + name));
    const Matrix h1 = gaussian_matrix(s.n, s.d1, rng);
    Matrix h2 = gaussian_matrix(s.n, s.d2, rng);
    h2.leftCols(std::min(s.d1, s.d2)) += 0.7 * h1.leftCols(std::min(s.d1, s.d2));
    auto c = check_objective_gradient(h1, h2, s.k, r, r, objective, step);
    c.name = name;
    report.cases.push_back(std::move(c));
  }

  struct NetShape {
    Index n, d1, d2;
    std::vector<Index> hidden;
    Index out, k;
    Activation act;
  };
  const NetShape net_shapes[] = {
      {20, 5, 4, {6, 6}, 3, 2, Activation::ReluHiddenLinearOut},
      {16, 3, 3, {4, 5}, 2, 2, Activation::ReluHiddenLinearOut},
      {25, 6, 2, {5, 4}, 3, 1, Activation::ReluHiddenLinearOut},
      {30, 4, 5, {8, 3}, 3, 3, Activation::ReluHiddenLinearOut},
      {24, 4, 4, {6, 6}, 3, 2, Activation::ReluAll},
  };
  for (const auto& s : net_shapes) {
    std::string name = "network n=" + std::to_string(s.n) + " d1=" + std::to_string(s.d1) +
                       " d2=" + std::to_string(s.d2) + " hidden=";
    for (Index h : s.hidden) name += std::to_string(h) + "x";
    name.pop_back();
    name += " out=" + std::to_string(s.out) + " k=" + std::to_string(s.k) + " " + std::string(to_string(s.act));
    std::mt19937_64 rng(derive_seed(seed, "gradcheck." + name));
    const Matrix x1 = gaussian_matrix(s.n, s.d1, rng);
    const Matrix x2 = gaussian_matrix(s.n, s.d2, rng);
    auto dims = [&](Index d_in) {
      std::vector<Index> d{d_in};
      d.insert(d.end(), s.hidden.begin(), s.hidden.end());
      d.push_back(s.out);
      return d;
    };
    EncoderNetwork n1(dims(s.d1), s.act, derive_seed(seed, name + ".net_1"));
    EncoderNetwork n2(dims(s.d2), s.act, derive_seed(seed, name + ".net_2"));
    if (s.act == Activation::ReluAll) {
      // Lift output biases so the rectified outputs are not mostly dead.
      n1.layers().back().bias.setConstant(1.0);
      n2.layers().back().bias.setConstant(1.0);
    }
    auto c = check_network_gradient(std::move(n1), std::move(n2), x1, x2, s.k, r, r, objective, step);
    c.name = name;
    report.cases.push_back(std::move(c));
  }
  return report;
}

}  // namespace mmfuse
