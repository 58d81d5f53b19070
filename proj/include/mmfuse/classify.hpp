#pragma once

// L2-regularized logistic regression, binary metrics, and validation-based
// selection of the penalty.

#include "mmfuse/common.hpp"
#include "mmfuse/error.hpp"

#include <array>
#include <cmath>
#include <optional>
#include <span>
#include <vector>

namespace mmfuse {

struct LogRegModel {
  Vector weights;
  double bias = 0.0;
  double l2 = 0.0;
  int iterations = 0;
  bool converged = false;
  std::vector<double> loss_trace;  // objective after each accepted step, index 0 = start
};

struct LogRegOptions {
  double l2 = 1e-3;
  int max_iter = 2000;
  double tol = 1e-6;
};

namespace detail {

inline double log1pexp(double z) { return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

inline double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

inline Vector labels_to_vector(std::span<const int> y) {
  Vector v(static_cast<Index>(y.size()));
  for (std::size_t i = 0; i < y.size(); ++i) v(static_cast<Index>(i)) = y[i];
  return v;
}

}  // namespace detail

/// Mean logistic loss plus (l2/2)|w|^2; the bias is not penalized.
inline double logreg_objective(const Matrix& x, const Vector& y, const Vector& w, double b, double l2) {
  const Vector z = (x * w).array() + b;
  double loss = 0.0;
  for (Index i = 0; i < z.size(); ++i) loss += detail::log1pexp(z(i)) - y(i) * z(i);
  return loss / static_cast<double>(x.rows()) + 0.5 * l2 * w.squaredNorm();
}

/// Gradient of logreg_objective; the last entry is the bias component.
inline Vector logreg_gradient(const Matrix& x, const Vector& y, const Vector& w, double b, double l2) {
  const Vector z = (x * w).array() + b;
  Vector resid(z.size());
  for (Index i = 0; i < z.size(); ++i) resid(i) = detail::sigmoid(z(i)) - y(i);
  const double inv_n = 1.0 / static_cast<double>(x.rows());
  Vector g(x.cols() + 1);
  g.head(x.cols()) = inv_n * (x.transpose() * resid) + l2 * w;
  g(x.cols()) = inv_n * resid.sum();
  return g;
}

/// Full-batch gradient descent with Armijo backtracking. Trial steps start at
/// the Barzilai-Borwein length and are halved until the objective decreases
/// sufficiently, so the accepted objective sequence is strictly monotone.
inline LogRegModel logreg_fit(const Matrix& x, std::span<const int> labels, const LogRegOptions& opt = {}) {
  if (static_cast<Index>(labels.size()) != x.rows()) throw DimensionError("logreg_fit: label count mismatch");
  if (x.rows() < 2) throw ConfigError("logreg_fit: need at least 2 samples");
  if (opt.l2 < 0.0 || opt.max_iter < 0 || !(opt.tol > 0.0)) throw ConfigError("logreg_fit: invalid options");
  int positives = 0;
  for (int v : labels) {
    if (v != 0 && v != 1) throw RangeError("logreg_fit: labels must be 0 or 1");
    positives += v;
  }
  if (positives == 0 || positives == static_cast<int>(labels.size()))
    throw ConfigError("logreg_fit: training labels contain a single class");
  if (!x.allFinite()) throw NumericError("logreg_fit: non-finite features");

  const Vector y = detail::labels_to_vector(labels);
  const Index d = x.cols();
  Vector theta = Vector::Zero(d + 1);
  auto objective = [&](const Vector& t) { return logreg_objective(x, y, t.head(d), t(d), opt.l2); };
  auto gradient = [&](const Vector& t) { return logreg_gradient(x, y, t.head(d), t(d), opt.l2); };

  LogRegModel m;
  m.l2 = opt.l2;
  double f = objective(theta);
  Vector g = gradient(theta);
  m.loss_trace.push_back(f);
  double step = 1.0;
  Vector prev_theta, prev_g;
  for (int it = 0; it < opt.max_iter; ++it) {
    if (g.cwiseAbs().maxCoeff() < opt.tol) {
      m.converged = true;
      break;
    }
    if (it > 0) {
      const Vector s = theta - prev_theta;
      const Vector dg = g - prev_g;
      const double sy = s.dot(dg);
      step = sy > 0.0 ? s.squaredNorm() / sy : 1.0;
    }
    const double gg = g.squaredNorm();
    bool accepted = false;
    for (int halvings = 0; halvings < 60; ++halvings, step *= 0.5) {
      const Vector trial = theta - step * g;
      const double ft = objective(trial);
      if (ft <= f - 1e-4 * step * gg && ft < f) {
        prev_theta = std::move(theta);
        prev_g = g;
        theta = trial;
        f = ft;
        accepted = true;
        break;
      }
    }
    if (!accepted) break;  // no further decrease representable
    g = gradient(theta);
    m.loss_trace.push_back(f);
    m.iterations = it + 1;
  }
  if (!m.converged && g.cwiseAbs().maxCoeff() < opt.tol) m.converged = true;
  m.weights = theta.head(d);
  m.bias = theta(d);
  if (!m.weights.allFinite() || !std::isfinite(m.bias)) throw NumericError("logreg_fit: non-finite parameters");
  return m;
}

struct Predictions {
  std::vector<int> labels;
  Vector probabilities;
};

/// probability = sigmoid(x.w + b); label 1 iff probability >= 0.5.
inline Predictions logreg_predict(const LogRegModel& m, const Matrix& x) {
  if (x.cols() != m.weights.size())
    throw DimensionError("logreg_predict: expected " + std::to_string(m.weights.size()) + " features, got " +
                         std::to_string(x.cols()));
  Predictions p;
  const Vector z = (x * m.weights).array() + m.bias;
  p.probabilities.resize(z.size());
  p.labels.resize(static_cast<std::size_t>(z.size()));
  for (Index i = 0; i < z.size(); ++i) {
    p.probabilities(i) = detail::sigmoid(z(i));
    p.labels[static_cast<std::size_t>(i)] = p.probabilities(i) >= 0.5 ? 1 : 0;
  }
  return p;
}

struct Metrics {
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f_score = 0.0;
  // confusion[actual][predicted] with index 1 = positive class
  std::array<std::array<long, 2>, 2> confusion{};

  long tp() const { return confusion[1][1]; }
  long tn() const { return confusion[0][0]; }
  long fp() const { return confusion[0][1]; }
  long fn() const { return confusion[1][0]; }
};

inline Metrics compute_metrics(std::span<const int> y_true, std::span<const int> y_pred, int positive_label = 1) {
  if (y_true.size() != y_pred.size()) throw DimensionError("compute_metrics: length mismatch");
  if (y_true.empty()) throw DimensionError("compute_metrics: empty input");
  Metrics m;
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    const int actual = y_true[i] == positive_label ? 1 : 0;
    const int predicted = y_pred[i] == positive_label ? 1 : 0;
    ++m.confusion[static_cast<std::size_t>(actual)][static_cast<std::size_t>(predicted)];
  }
  const double n = static_cast<double>(y_true.size());
  m.accuracy = static_cast<double>(m.tp() + m.tn()) / n;
  m.precision = m.tp() + m.fp() > 0 ? static_cast<double>(m.tp()) / static_cast<double>(m.tp() + m.fp()) : 0.0;
  m.recall = m.tp() + m.fn() > 0 ? static_cast<double>(m.tp()) / static_cast<double>(m.tp() + m.fn()) : 0.0;
  m.f_score = m.precision + m.recall > 0.0 ? 2.0 * m.precision * m.recall / (m.precision + m.recall) : 0.0;
  return m;
}

inline const std::vector<double>& default_l2_grid() {
  static const std::vector<double> grid{1e-4, 1e-3, 1e-2, 1e-1, 1.0};
  return grid;
}

struct ClassifierSelection {
  LogRegModel model;
  std::vector<double> val_accuracy;  // per grid entry, grid order
};

/// Fits one model per penalty and keeps the best validation accuracy;
/// exact ties go to the larger penalty.
inline ClassifierSelection grid_search_classifier(const Matrix& x_train, std::span<const int> y_train,
                                                  const Matrix& x_val, std::span<const int> y_val,
                                                  const std::vector<double>& l2_grid, LogRegOptions base = {}) {
  if (l2_grid.empty()) throw ConfigError("grid_search_classifier: empty l2 grid");
  ClassifierSelection out;
  std::optional<LogRegModel> best;
  double best_acc = -1.0;
  for (double l2 : l2_grid) {
    base.l2 = l2;
    LogRegModel m = logreg_fit(x_train, y_train, base);
    const double acc = compute_metrics(y_val, logreg_predict(m, x_val).labels).accuracy;
    out.val_accuracy.push_back(acc);
    if (!best || acc > best_acc || (acc == best_acc && l2 > best->l2)) {
      best = std::move(m);
      best_acc = acc;
    }
  }
  out.model = std::move(*best);
  return out;
}

}  // namespace mmfuse
