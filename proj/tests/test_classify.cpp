#include "mmfuse/classify.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <random>

using namespace mmfuse;

namespace {

// Points on a line; label 1 beyond `cut`.
struct LineData {
  Matrix x;
  std::vector<int> y;
};

LineData line(int n, double cut, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  LineData d{Matrix(n, 1), {}};
  for (int i = 0; i < n; ++i) {
    double v = u(rng);
    if (std::abs(v - cut) < 0.2) v += v > cut ? 0.2 : -0.2;  // margin
    d.x(i, 0) = v;
    d.y.push_back(v > cut ? 1 : 0);
  }
  return d;
}

}  // namespace

TEST(LogRegFit, SeparableTwoPoints) {
  Matrix x(2, 1);
  x << -1, 1;
  const std::vector<int> y{0, 1};
  const auto m = logreg_fit(x, y, {.l2 = 1e-4});
  EXPECT_EQ(logreg_predict(m, x).labels, y);
  EXPECT_GT(m.weights(0), 0.0);
}

TEST(LogRegFit, HeavyPenaltyLeavesOnlyBias) {
  const auto d = line(200, 1.0, 1);
  const auto m = logreg_fit(d.x, d.y, {.l2 = 1e6});
  EXPECT_LT(std::abs(m.weights(0)), 1e-4);
  const double prior = std::count(d.y.begin(), d.y.end(), 1) / 200.0;
  EXPECT_NEAR(m.bias, std::log(prior / (1 - prior)), 1e-3);
  const auto p = logreg_predict(m, d.x).labels;
  EXPECT_TRUE(std::all_of(p.begin(), p.end(), [](int v) { return v == 0; }));
}

TEST(LogRegFit, GradientVanishesAtOptimum) {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> normal;
  Matrix x(150, 4);
  std::vector<int> y;
  for (Index i = 0; i < 150; ++i) {
    for (Index j = 0; j < 4; ++j) x(i, j) = normal(rng);
    y.push_back(x(i, 0) - 0.5 * x(i, 2) + normal(rng) > 0 ? 1 : 0);
  }
  LogRegOptions opt{.l2 = 1e-2, .max_iter = 5000, .tol = 1e-8};
  const auto m = logreg_fit(x, y, opt);
  EXPECT_TRUE(m.converged);
  Vector yv(150);
  for (Index i = 0; i < 150; ++i) yv(i) = y[static_cast<std::size_t>(i)];
  EXPECT_LT(logreg_gradient(x, yv, m.weights, m.bias, opt.l2).cwiseAbs().maxCoeff(), opt.tol);

  // Independent finite-difference check of the analytic gradient.
  const Vector w = Vector::Constant(4, 0.3);
  const Vector g = logreg_gradient(x, yv, w, 0.1, opt.l2);
  for (Index j = 0; j < 4; ++j) {
    Vector wp = w, wm = w;
    wp(j) += 1e-6;
    wm(j) -= 1e-6;
    const double fd = (logreg_objective(x, yv, wp, 0.1, opt.l2) - logreg_objective(x, yv, wm, 0.1, opt.l2)) / 2e-6;
    EXPECT_NEAR(g(j), fd, 1e-7);
  }
}

TEST(LogRegFit, LossTraceIsMonotone) {
  const auto d = line(100, 0.3, 3);
  const auto m = logreg_fit(d.x, d.y, {.l2 = 1e-3});
  ASSERT_GE(m.loss_trace.size(), 2u);
  for (std::size_t i = 1; i < m.loss_trace.size(); ++i) EXPECT_LT(m.loss_trace[i], m.loss_trace[i - 1]);
}

TEST(LogRegFit, Errors) {
  Matrix x = Matrix::Ones(3, 1);
  EXPECT_THROW(logreg_fit(x, std::vector<int>{1, 1, 1}), ConfigError);
  EXPECT_THROW(logreg_fit(x, std::vector<int>{1, 0}), DimensionError);
  EXPECT_THROW(logreg_fit(x, std::vector<int>{1, 0, 2}), RangeError);
}

TEST(LogRegPredict, ThresholdAndMonotonicity) {
  LogRegModel zero{Vector::Zero(2), 0.0, 0.0, 0, true, {}};
  const auto p = logreg_predict(zero, Matrix::Random(5, 2));
  for (Index i = 0; i < 5; ++i) EXPECT_EQ(p.probabilities(i), 0.5);
  EXPECT_TRUE(std::all_of(p.labels.begin(), p.labels.end(), [](int v) { return v == 1; }));

  LogRegModel pos{Vector::Constant(1, 2.0), -1.0, 0.0, 0, true, {}};
  Matrix grid(50, 1);
  for (Index i = 0; i < 50; ++i) grid(i, 0) = -5.0 + 0.2 * static_cast<double>(i);
  const auto q = logreg_predict(pos, grid);
  for (Index i = 1; i < 50; ++i) EXPECT_GE(q.probabilities(i), q.probabilities(i - 1));
  EXPECT_THROW(logreg_predict(pos, Matrix::Zero(1, 2)), DimensionError);
}

TEST(ComputeMetrics, HandExample) {
  const std::vector<int> t{1, 0, 1, 0}, p{1, 0, 0, 0};
  const auto m = compute_metrics(t, p);
  EXPECT_EQ(m.accuracy, 0.75);
  EXPECT_EQ(m.precision, 1.0);
  EXPECT_EQ(m.recall, 0.5);
  EXPECT_EQ(m.f_score, 2.0 / 3.0);
  EXPECT_EQ(m.tp(), 1);
  EXPECT_EQ(m.tn(), 2);
  EXPECT_EQ(m.fn(), 1);
  EXPECT_EQ(m.fp(), 0);
}

TEST(ComputeMetrics, EdgeCases) {
  const std::vector<int> t{1, 0, 1, 1};
  const auto perfect = compute_metrics(t, t);
  EXPECT_EQ(perfect.accuracy, 1.0);
  EXPECT_EQ(perfect.f_score, 1.0);
  const auto none = compute_metrics(t, std::vector<int>{0, 0, 0, 0});
  EXPECT_EQ(none.recall, 0.0);
  EXPECT_EQ(none.f_score, 0.0);
  EXPECT_THROW(compute_metrics(t, std::vector<int>{0}), DimensionError);
  EXPECT_THROW(compute_metrics(std::vector<int>{}, std::vector<int>{}), DimensionError);
}

TEST(ComputeMetrics, PermutationAndComplement) {
  std::mt19937_64 rng(4);
  std::bernoulli_distribution coin;
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<int> t(30), p(30);
    for (int i = 0; i < 30; ++i) {
      t[i] = coin(rng);
      p[i] = coin(rng);
    }
    const auto m = compute_metrics(t, p);
    std::vector<std::size_t> order(30);
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<int> ts, ps, flipped;
    for (auto i : order) {
      ts.push_back(t[i]);
      ps.push_back(p[i]);
    }
    for (int v : p) flipped.push_back(1 - v);
    const auto s = compute_metrics(ts, ps);
    EXPECT_EQ(s.accuracy, m.accuracy);
    EXPECT_EQ(s.f_score, m.f_score);
    EXPECT_NEAR(compute_metrics(t, flipped).accuracy, 1.0 - m.accuracy, 1e-15);
  }
}

TEST(GridSearchClassifier, SelectionRules) {
  const auto train = line(200, 1.0, 5), val = line(100, 1.0, 6);
  const auto single = grid_search_classifier(train.x, train.y, val.x, val.y, {0.1});
  EXPECT_EQ(single.model.l2, 0.1);
  EXPECT_EQ(single.val_accuracy.size(), 1u);

  const auto pick = grid_search_classifier(train.x, train.y, val.x, val.y, {1e-4, 1e3});
  EXPECT_EQ(pick.model.l2, 1e-4);
  EXPECT_GT(pick.val_accuracy[0], pick.val_accuracy[1]);

  // Well-separated data: both small penalties classify validation perfectly.
  const auto tie = grid_search_classifier(train.x, train.y, val.x, val.y, {1e-4, 1e-3});
  ASSERT_EQ(tie.val_accuracy[0], tie.val_accuracy[1]);
  EXPECT_EQ(tie.model.l2, 1e-3);

  EXPECT_THROW(grid_search_classifier(train.x, train.y, val.x, val.y, {}), ConfigError);
}
