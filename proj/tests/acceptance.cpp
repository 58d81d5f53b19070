// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any
// failure.

#include "mmfuse/experiment.hpp"

#include "oracles.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <thread>

using namespace mmfuse;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string num(double v, int digits = 3) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

Outcome gradient_oracle() {
  const auto t0 = std::chrono::steady_clock::now();
  const GradCheckReport r = run_gradcheck(0);
  const double secs = seconds_since(t0);
  Index networks = 0;
  for (const auto& c : r.cases) networks += c.name.rfind("network", 0) == 0;
  const bool ok = r.passed() && r.cases.size() >= 5 && networks >= 1 && secs < 10.0;
  return {ok, "cases=" + std::to_string(r.cases.size()) + " max_rel_error=" + num(r.max_rel_error()) +
                  " tol=1e-4 runtime=" + num(secs) + "s"};
}

Outcome cca_oracle() {
  std::mt19937_64 rng(101);
  std::uniform_int_distribution<Index> dim(1, 4), rows(20, 50);
  double worst = 0.0;
  for (int trial = 0; trial < 10; ++trial) {
    const Index n = rows(rng), d1 = dim(rng), d2 = dim(rng);
    const Matrix x1 = oracle::random_gaussian(n, d1, rng);
    Matrix x2 = oracle::random_gaussian(n, d2, rng);
    const Index shared = std::min(d1, d2);
    x2.leftCols(shared) += 0.8 * x1.leftCols(shared);
    const auto truth = oracle::canonical_correlations(x1, x2);
    const auto fit = cca_fit(x1, x2, shared, 0.0, 0.0);
    worst = std::max(worst, (fit.correlations - truth).cwiseAbs().maxCoeff());
  }
  return {worst <= 1e-8, "instances=10 max_abs_diff=" + num(worst) + " tol=1e-8"};
}

Outcome linear_reduction() {
  std::mt19937_64 rng(102);
  double worst = 0.0;
  for (int trial = 0; trial < 5; ++trial) {
    const Matrix x1 = oracle::random_gaussian(80, 4, rng);
    const Matrix x2 = oracle::random_gaussian(80, 4, rng) + 0.5 * x1;
    TrainConfig cfg;
    cfg.k = 4;
    cfg.epochs = 0;
    cfg.hidden.clear();
    cfg.init = Init::Identity;
    const auto m = train_dcca(x1, x2, std::vector<Split>(80, Split::Train), cfg);
    const auto c = cca_fit(x1, x2, 4);
    worst = std::max(worst, (m.terminal_cca.correlations - c.correlations).cwiseAbs().maxCoeff());
  }
  return {worst <= 1e-6, "instances=5 max_abs_diff=" + num(worst) + " tol=1e-6"};
}

Outcome affine_invariance() {
  std::mt19937_64 rng(103);
  double worst = 0.0;
  for (int trial = 0; trial < 10; ++trial) {
    const Matrix x1 = oracle::random_gaussian(60, 3, rng);
    const Matrix x2 = oracle::random_gaussian(60, 4, rng) + 0.6 * x1 * oracle::random_gaussian(3, 4, rng);
    const auto base = cca_fit(x1, x2, 3, 0.0, 0.0);
    for (int side = 1; side <= 2; ++side) {
      const Matrix& x = side == 1 ? x1 : x2;
      const Matrix a = oracle::random_gaussian(x.cols(), x.cols(), rng) + 2.0 * Matrix::Identity(x.cols(), x.cols());
      const RowVector b = 5.0 * oracle::random_gaussian(1, x.cols(), rng);
      const Matrix moved = (x * a).rowwise() + b;
      const auto p = side == 1 ? cca_fit(moved, x2, 3, 0.0, 0.0) : cca_fit(x1, moved, 3, 0.0, 0.0);
      worst = std::max(worst, (p.correlations - base.correlations).cwiseAbs().maxCoeff());
    }
  }
  return {worst <= 1e-6, "transforms=20 max_abs_diff=" + num(worst) + " tol=1e-6"};
}

ViewBundle random_bundle(Index n, Index dt, Index da, Index dv, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<std::string> ids;
  IdLabels labels;
  IdSplits splits;
  for (Index i = 0; i < n; ++i) {
    ids.push_back("s" + std::to_string(i));
    labels.labels.push_back(static_cast<int>(i % 2));
    splits.splits.push_back(i % 5 == 3 ? Split::Val : i % 5 == 4 ? Split::Test : Split::Train);
  }
  labels.ids = splits.ids = ids;
  auto view = [&](const std::string& name, Index d) { return FeatureMatrix(name, oracle::random_gaussian(n, d, rng), ids); };
  return bundle_views({view(kText, dt), view(kAudio, da), view(kVideo, dv)}, labels, splits);
}

Outcome dimension_laws() {
  TrainConfig quick;
  quick.hidden = {4};
  quick.epochs = 1;
  std::vector<std::string> failures;
  auto check = [&](bool ok, const std::string& what) {
    if (!ok) failures.push_back(what);
  };

  const auto reported = random_bundle(100, 768, 74, 35, 1);
  quick.k = 30;
  const Index one = one_step_fuse(reported, quick).embedding.width();
  const Index two = two_step_fuse(reported, parse_two_step_order("av-t"), quick).embedding.width();
  check(one == 937, "one-step 768/74/35 k=30 gave " + std::to_string(one));
  check(two == 888, "two-step av-t 768/74/35 k=30 gave " + std::to_string(two));

  std::mt19937_64 rng(104);
  std::uniform_int_distribution<Index> dim(1, 12);
  int tuples = 0;
  while (tuples < 20) {
    const Index dt = dim(rng), da = dim(rng), dv = dim(rng);
    const auto b = random_bundle(60, dt, da, dv, 200 + static_cast<std::uint64_t>(tuples));
    std::uniform_int_distribution<Index> kd(1, std::min<Index>(3, std::min(dt, da + dv)));
    quick.k = kd(rng);
    const auto r1 = one_step_fuse(b, quick);
    check(r1.embedding.width() == 2 * quick.k + dt + da + dv, "one-step tuple " + std::to_string(tuples));
    check(r1.step.model.k <= std::min(dt, da + dv), "one-step bottleneck tuple " + std::to_string(tuples));

    const auto order = two_step_orders()[static_cast<std::size_t>(tuples % 3)];
    const Index d_a = b.view(order.first_a).cols(), d_b = b.view(order.first_b).cols();
    const Index d_third = b.view(order.third).cols();
    const Index k1 = std::uniform_int_distribution<Index>(1, std::min<Index>(3, std::min(d_a, d_b)))(rng);
    const Index k2 = std::uniform_int_distribution<Index>(1, std::min<Index>(3, std::min(2 * k1, d_third)))(rng);
    const auto r2 = two_step_fuse(b, order, quick, k1, k2);
    check(r2.embedding.width() == 2 * k1 + 2 * k2 + d_third, "two-step tuple " + std::to_string(tuples));
    check(r2.step1.model.k <= std::min(d_a, d_b) && r2.step2.model.k <= std::min(2 * k1, d_third),
          "two-step bottleneck tuple " + std::to_string(tuples));

    // A k above the branch minimum must be rejected.
    bool rejected = false;
    try {
      two_step_fuse(b, order, quick, std::min(d_a, d_b) + 1, 1);
    } catch (const ConfigError&) {
      rejected = true;
    }
    check(rejected, "oversized k accepted tuple " + std::to_string(tuples));
    ++tuples;
  }
  std::string detail = "one-step=" + std::to_string(one) + " two-step=" + std::to_string(two) + " random_tuples=20";
  if (!failures.empty()) detail += " first_failure=" + failures.front();
  return {failures.empty(), detail};
}

struct TrendRun {
  AblationTable table;
  double seconds = 0.0;
};

TrendRun synthetic_ablation() {
  ExperimentConfig cfg;
  cfg.use_synth = true;  // n=500, latent 4, dims 20/10/8, noise 0.5/1.0/1.5
  cfg.repeats = 5;
  cfg.train.k = 4;
  cfg.train.grid = expand_hidden_grid({64, 128, 256}, 2);
  cfg.train.hidden = cfg.train.grid.front();
  cfg.jobs = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  const auto t0 = std::chrono::steady_clock::now();
  TrendRun r{run_ablation(cfg), 0.0};
  r.seconds = seconds_since(t0);
  return r;
}

Outcome one_step_trend(const TrendRun& run) {
  const auto& t = run.table;
  const double one = 100.0 * t.row(kRowOneStep).mean_accuracy();
  const double concat = 100.0 * t.row(kRowConcat).mean_accuracy();
  double best_uni = 0.0;
  std::string best_uni_label;
  for (const auto& r : t.main_rows)
    if (r.method == "unimodal" && 100.0 * r.mean_accuracy() > best_uni) {
      best_uni = 100.0 * r.mean_accuracy();
      best_uni_label = r.label;
    }
  const bool ok = one >= best_uni - 1.0 && one >= concat - 1.0 && run.seconds < 300.0;
  return {ok, "one-step=" + percent(one / 100.0) + " best_unimodal=" + percent(best_uni / 100.0) + " (" +
                  best_uni_label + ") concat=" + percent(concat / 100.0) + " seeds=5 runtime=" + num(run.seconds, 4) +
                  "s"};
}

Outcome two_step_trend(const TrendRun& run) {
  const auto& t = run.table;
  const double one = 100.0 * t.row(kRowOneStep).mean_accuracy();
  double best = 0.0;
  std::string label;
  for (const auto& r : t.two_step_rows)
    if (100.0 * r.mean_accuracy() > best) {
      best = 100.0 * r.mean_accuracy();
      label = r.label;
    }
  return {std::abs(best - one) <= 3.0, "best_two_step=" + percent(best / 100.0) + " (" + label +
                                            ") one-step=" + percent(one / 100.0) + " gap=" + num(std::abs(best - one)) +
                                            " tol=3.0"};
}

Outcome metrics_truth() {
  const std::vector<int> t{1, 0, 1, 0}, p{1, 0, 0, 0};
  const auto m = compute_metrics(t, p);
  const bool ok = m.accuracy == 0.75 && m.precision == 1.0 && m.recall == 0.5 && m.f_score == 2.0 / 3.0;
  return {ok, "accuracy=" + num(m.accuracy, 17) + " f_score=" + num(m.f_score, 17)};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Outcome determinism() {
  const fs::path root = fs::temp_directory_path() / "mmfuse_acceptance_determinism";
  fs::remove_all(root);
  ExperimentConfig cfg;
  cfg.use_synth = true;
  cfg.synth.n = 200;
  cfg.repeats = 2;
  cfg.train.k = 3;
  cfg.train.grid = {{16}, {32}};
  cfg.train.hidden = {16};
  cfg.train.epochs = 30;
  cfg.jobs = 4;
  std::ostringstream sink;
  cfg.out_dir = (root / "a").string();
  cmd_ablate(cfg, sink);
  cfg.out_dir = (root / "b").string();
  cmd_ablate(cfg, sink);
  int files = 0, same = 0;
  for (const auto& entry : fs::directory_iterator(root / "a")) {
    ++files;
    same += slurp(entry.path()) == slurp(root / "b" / entry.path().filename());
  }
  fs::remove_all(root);
  return {files >= 4 && same == files, "files=" + std::to_string(files) + " identical=" + std::to_string(same)};
}

Outcome gcca_recovery() {
  SynthSpec s;
  s.n = 300;
  s.noise_levels = {0.0, 0.0, 0.0};
  s.seed = 105;
  const auto planted = synth_bundle_with_latent(s);
  std::vector<Matrix> views;
  for (const auto& name : default_view_names(3)) views.push_back(planted.bundle.view(name).data());
  const auto m = gcca_fit(views, s.latent_dim, 1e-8);
  const auto parts = gcca_project(m, views);
  double worst_latent = 1.0, worst_pair = 1.0;
  for (std::size_t v = 0; v < parts.size(); ++v)
    for (Index j = 0; j < m.k; ++j) {
      worst_latent = std::min(worst_latent, oracle::multiple_correlation(parts[v].col(j), planted.latent));
      for (std::size_t w = v + 1; w < parts.size(); ++w)
        worst_pair = std::min(worst_pair, oracle::pearson(parts[v].col(j), parts[w].col(j)));
    }
  return {worst_latent > 0.99 && worst_pair > 0.99,
          "min_corr_with_latent=" + num(worst_latent, 10) + " min_cross_view_corr=" + num(worst_pair, 10)};
}

}  // namespace

int main() {
  int failed = 0;
  auto report = [&](int id, const std::string& name, const std::function<Outcome()>& fn) {
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::cout << "criterion " << id << " [" << name << "]: " << (o.pass ? "PASS" : "FAIL") << "  " << o.detail
              << std::endl;
  };

  report(1, "gradient oracle", gradient_oracle);
  report(2, "cca oracle equivalence", cca_oracle);
  report(3, "linear reduction", linear_reduction);
  report(4, "affine invariance", affine_invariance);
  report(5, "dimension laws", dimension_laws);

  std::optional<TrendRun> trend;
  std::string trend_error;
  try {
    trend = synthetic_ablation();
  } catch (const std::exception& e) {
    trend_error = e.what();
  }
  auto with_trend = [&](Outcome (*fn)(const TrendRun&)) {
    return [&, fn]() -> Outcome {
      if (!trend) return {false, "ablation failed: " + trend_error};
      return fn(*trend);
    };
  };
  report(6, "one-step trend", with_trend(one_step_trend));
  report(7, "two-step trend", with_trend(two_step_trend));
  report(8, "metrics truth", metrics_truth);
  report(9, "ablation determinism", determinism);
  report(10, "gcca recovery", gcca_recovery);

  std::cout << (failed == 0 ? "ALL PASS" : std::to_string(failed) + " FAILED") << std::endl;
  return failed == 0 ? 0 : 1;
}
