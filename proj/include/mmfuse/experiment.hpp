#pragma once

// Experiment orchestration behind the command-line tool: bundle loading,
// embedding evaluation, the view-ablation harness and the five commands.

#include "mmfuse/classify.hpp"
#include "mmfuse/fusion.hpp"
#include "mmfuse/gcca.hpp"
#include "mmfuse/gradcheck.hpp"

#include <filesystem>
#include <fstream>
#include <functional>
#include <future>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace mmfuse {

struct ExperimentConfig {
  // File inputs.
  std::string text_path, audio_path, video_path;
  std::string labels_path, splits_path;
  LabelRule label_rule = LabelRule::GeqZeroPositive;
  std::string embedding_path;  // eval only

  // Synthetic inputs.
  bool use_synth = false;
  SynthSpec synth;

  FusionAlgorithm algorithm = FusionAlgorithm::OneStep;
  std::string order = "av-t";
  std::optional<Index> k1, k2;
  TrainConfig train;

  std::vector<double> l2_grid = default_l2_grid();
  LogRegOptions logreg;

  std::string out_dir = "out";
  std::uint64_t seed = 0;
  int jobs = 1;
  int repeats = 1;

  bool has_file_inputs() const {
    return !text_path.empty() || !audio_path.empty() || !video_path.empty() || !labels_path.empty() ||
           !splits_path.empty();
  }

  /// Exactly one of {file inputs, synthetic spec} must be present.
  void validate_inputs() const {
    if (use_synth && has_file_inputs()) throw ConfigError("give either feature files or --synth, not both");
    if (!use_synth && !has_file_inputs()) throw ConfigError("no inputs: give feature files or --synth");
    if (!use_synth && (labels_path.empty() || splits_path.empty()))
      throw ConfigError("file inputs need --labels and --splits");
  }

  /// The training config with its seed derived from the top-level seed.
  TrainConfig seeded_train(std::uint64_t top_seed) const {
    TrainConfig t = train;
    t.seed = derive_seed(top_seed, "train");
    return t;
  }
};

// ---------------------------------------------------------------------------
// Inputs

inline ViewBundle load_bundle(const ExperimentConfig& cfg) {
  std::vector<FeatureMatrix> views;
  const std::pair<const std::string*, const std::string*> paths[] = {
      {&kText, &cfg.text_path}, {&kAudio, &cfg.audio_path}, {&kVideo, &cfg.video_path}};
  for (const auto& [name, path] : paths)
    if (!path->empty()) views.push_back(load_view_matrix(*path, std::nullopt, *name));
  if (views.empty()) throw ConfigError("no feature files given");

  IdSplits splits = load_splits(cfg.splits_path);
  LabelFile lf = load_labels(cfg.labels_path);
  IdLabels labels;
  if (lf.labels) {
    labels = std::move(*lf.labels);
  } else {
    const auto bin = binarize_labels({lf.scores->scores, cfg.label_rule});
    for (std::size_t i = 0; i < bin.kept.size(); ++i) {
      labels.ids.push_back(lf.scores->ids[static_cast<std::size_t>(bin.kept[i])]);
      labels.labels.push_back(bin.labels[i]);
    }
    // Samples dropped by the rule leave every view as well.
    std::unordered_set<std::string> kept(labels.ids.begin(), labels.ids.end());
    for (auto& v : views) {
      std::vector<Index> rows;
      for (std::size_t i = 0; i < v.ids().size(); ++i)
        if (kept.count(v.ids()[i])) rows.push_back(static_cast<Index>(i));
      if (rows.empty()) throw InputError("view '" + v.name() + "': every sample was dropped by the label rule");
      v = v.select_rows(rows);
    }
  }
  return bundle_views(views, labels, splits);
}

inline ViewBundle bundle_for(const ExperimentConfig& cfg, std::uint64_t top_seed) {
  cfg.validate_inputs();
  if (cfg.use_synth) {
    SynthSpec s = cfg.synth;
    s.seed = top_seed;
    return synth_bundle(s);
  }
  return load_bundle(cfg);
}

// ---------------------------------------------------------------------------
// Evaluation

struct EvalResult {
  Metrics test;
  double chosen_l2 = 0.0;
  double val_accuracy = 0.0;
  std::uint64_t train_input_hash = 0;  ///< hash of every value seen before test scoring
};

namespace detail {

inline std::uint64_t hash_rows(const Matrix& x, const std::vector<int>& y, const std::vector<Index>& rows,
                               std::uint64_t h) {
  for (Index r : rows) {
    for (Index j = 0; j < x.cols(); ++j) {
      const double v = x(r, j);
      h = fnv1a_bytes(&v, sizeof v, h);
    }
    const int label = y[static_cast<std::size_t>(r)];
    h = fnv1a_bytes(&label, sizeof label, h);
  }
  return h;
}

template <typename T>
std::vector<T> pick(const std::vector<T>& v, const std::vector<Index>& rows) {
  std::vector<T> out;
  out.reserve(rows.size());
  for (Index r : rows) out.push_back(v[static_cast<std::size_t>(r)]);
  return out;
}

}  // namespace detail

/// Standardizes with train statistics, selects the penalty on validation
/// accuracy, and scores the test rows once at the end.
inline EvalResult evaluate_embedding(const Matrix& x, const std::vector<int>& labels, const std::vector<Split>& splits,
                                     const std::vector<double>& l2_grid, const LogRegOptions& opts = {}) {
  if (static_cast<std::size_t>(x.rows()) != labels.size() || labels.size() != splits.size())
    throw AlignmentError("evaluate_embedding: embedding, labels and splits differ in length");
  std::vector<Index> train, val, test;
  for (std::size_t i = 0; i < splits.size(); ++i)
    (splits[i] == Split::Train ? train : splits[i] == Split::Val ? val : test).push_back(static_cast<Index>(i));
  if (train.empty() || val.empty() || test.empty()) throw ConfigError("evaluation needs train, val and test rows");

  EvalResult r;
  r.train_input_hash = detail::hash_rows(x, labels, val, detail::hash_rows(x, labels, train, kFnvOffset));

  const Matrix x_train = detail::rows_of(x, train);
  const InputScaler scaler = InputScaler::fit(x_train);
  const auto y_train = detail::pick(labels, train);
  const auto y_val = detail::pick(labels, val);
  auto sel = grid_search_classifier(scaler.apply(x_train), y_train, scaler.apply(detail::rows_of(x, val)), y_val,
                                    l2_grid, opts);
  r.chosen_l2 = sel.model.l2;
  for (std::size_t i = 0; i < l2_grid.size(); ++i)
    if (l2_grid[i] == r.chosen_l2) r.val_accuracy = sel.val_accuracy[i];

  const auto pred = logreg_predict(sel.model, scaler.apply(detail::rows_of(x, test)));
  r.test = compute_metrics(detail::pick(labels, test), pred.labels);
  return r;
}

inline std::string percent(double v) { return format_fixed(100.0 * v, 2); }

// ---------------------------------------------------------------------------
// Ablation

struct AblationRow {
  std::string label;
  std::string method;
  std::vector<std::string> views;
  Index width = 0;
  std::vector<Metrics> runs;  // one per repeat

  double mean_accuracy() const {
    double s = 0.0;
    for (const auto& m : runs) s += m.accuracy;
    return runs.empty() ? 0.0 : s / static_cast<double>(runs.size());
  }
  double mean_f_score() const {
    double s = 0.0;
    for (const auto& m : runs) s += m.f_score;
    return runs.empty() ? 0.0 : s / static_cast<double>(runs.size());
  }
};

struct AblationTable {
  std::vector<AblationRow> main_rows;      // nine rows
  std::vector<AblationRow> two_step_rows;  // three orders
  std::vector<std::uint64_t> seeds;

  const AblationRow& row(const std::string& label) const {
    for (const auto* rows : {&main_rows, &two_step_rows})
      for (const auto& r : *rows)
        if (r.label == label) return r;
    throw ConfigError("no ablation row '" + label + "'");
  }
};

inline const std::string kRowOneStep = "Audio+Video+Text (One-Step DCCA)";
inline const std::string kRowGcca = "Audio+Video+Text (GCCA)";
inline const std::string kRowConcat = "Audio+Video+Text (Logistic Reg)";

namespace detail {

struct RowSpec {
  std::string label;
  std::string method;
  std::vector<std::string> views;
  std::function<FusedEmbedding(const ViewBundle&, const TrainConfig&)> build;
};

inline FusedEmbedding fit_gcca_embedding(const ViewBundle& b, const TrainConfig& cfg) {
  const auto train_rows = b.rows_in(Split::Train);
  std::vector<Matrix> fit_views;
  std::vector<FeatureMatrix> all;
  for (const auto& name : {kText, kAudio, kVideo}) {
    fit_views.push_back(rows_of(b.view(name).data(), train_rows));
    all.push_back(b.view(name));
  }
  const GccaModel m = gcca_fit(fit_views, cfg.k, cfg.r1);
  return gcca_transform(m, all, hex64(fnv1a("gcca|" + std::to_string(cfg.k) + "|" + format_real(cfg.r1))));
}

inline std::vector<RowSpec> main_row_specs() {
  auto concat = [](std::vector<std::string> views) {
    return [views](const ViewBundle& b, const TrainConfig&) {
      return baseline_fuse(b, views, views.size() == 1 ? FusionAlgorithm::Unimodal : FusionAlgorithm::Concat);
    };
  };
  return {
      {"Audio", "unimodal", {kAudio}, concat({kAudio})},
      {"Video", "unimodal", {kVideo}, concat({kVideo})},
      {"Text", "unimodal", {kText}, concat({kText})},
      {"Audio+Video", "concat", {kAudio, kVideo}, concat({kAudio, kVideo})},
      {"Audio+Text", "concat", {kAudio, kText}, concat({kAudio, kText})},
      {"Video+Text", "concat", {kVideo, kText}, concat({kVideo, kText})},
      {kRowOneStep, "one-step", {kText, kAudio, kVideo},
       [](const ViewBundle& b, const TrainConfig& c) { return one_step_fuse(b, c).embedding; }},
      {kRowGcca, "gcca", {kText, kAudio, kVideo}, fit_gcca_embedding},
      {kRowConcat, "concat", {kAudio, kVideo, kText}, concat({kAudio, kVideo, kText})},
  };
}

inline std::vector<RowSpec> two_step_row_specs(std::optional<Index> k1, std::optional<Index> k2) {
  std::vector<RowSpec> out;
  for (const auto& o : two_step_orders()) {
    const std::string label = "v1=" + std::string(1, o.first_a.front()) + ",v2=" + std::string(1, o.first_b.front()) +
                              ",v2'=" + std::string(1, o.third.front()) + " (" + o.code() + ")";
    out.push_back({label, "two-step", {o.first_a, o.first_b, o.third},
                   [o, k1, k2](const ViewBundle& b, const TrainConfig& c) {
                     return two_step_fuse(b, o, c, k1, k2).embedding;
                   }});
  }
  return out;
}

/// Runs `tasks` with at most `jobs` in flight; results keep task order.
template <typename T>
std::vector<T> run_bounded(std::vector<std::function<T()>> tasks, int jobs) {
  std::vector<T> out;
  out.reserve(tasks.size());
  if (jobs <= 1) {
    for (auto& t : tasks) out.push_back(t());
    return out;
  }
  for (std::size_t start = 0; start < tasks.size(); start += static_cast<std::size_t>(jobs)) {
    std::vector<std::future<T>> batch;
    for (std::size_t i = start; i < std::min(tasks.size(), start + static_cast<std::size_t>(jobs)); ++i)
      batch.push_back(std::async(std::launch::async, tasks[i]));
    for (auto& f : batch) out.push_back(f.get());
  }
  return out;
}

}  // namespace detail

/// Runs every view-ablation row and the three two-step orders for each seed.
/// Repeat r uses top-level seed `seed + r` for both data synthesis (when
/// synthetic) and DCCA initialization.
inline AblationTable run_ablation(const ExperimentConfig& cfg) {
  if (cfg.repeats < 1) throw ConfigError("repeats must be at least 1");
  auto main_specs = detail::main_row_specs();
  auto two_specs = detail::two_step_row_specs(cfg.k1, cfg.k2);

  AblationTable table;
  auto init_rows = [](const std::vector<detail::RowSpec>& specs, std::vector<AblationRow>& rows) {
    for (const auto& s : specs) rows.push_back({s.label, s.method, s.views, 0, {}});
  };
  init_rows(main_specs, table.main_rows);
  init_rows(two_specs, table.two_step_rows);

  struct Outcome {
    Index width;
    Metrics metrics;
  };
  for (int rep = 0; rep < cfg.repeats; ++rep) {
    const std::uint64_t seed = cfg.seed + static_cast<std::uint64_t>(rep);
    table.seeds.push_back(seed);
    const ViewBundle bundle = bundle_for(cfg, seed);
    bundle.require_all_splits();
    const TrainConfig train = cfg.seeded_train(seed);

    std::vector<std::function<Outcome()>> tasks;
    for (const auto* specs : {&main_specs, &two_specs})
      for (const auto& spec : *specs)
        tasks.push_back([&bundle, &train, &cfg, build = spec.build] {
          const FusedEmbedding e = build(bundle, train);
          const EvalResult r = evaluate_embedding(e.data(), bundle.labels(), bundle.splits(), cfg.l2_grid, cfg.logreg);
          return Outcome{e.width(), r.test};
        });
    const auto outcomes = detail::run_bounded(std::move(tasks), cfg.jobs);
    std::size_t i = 0;
    for (auto* rows : {&table.main_rows, &table.two_step_rows})
      for (auto& row : *rows) {
        row.width = outcomes[i].width;
        row.runs.push_back(outcomes[i].metrics);
        ++i;
      }
  }
  return table;
}

namespace detail {

inline std::size_t best_row(const std::vector<AblationRow>& rows) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < rows.size(); ++i)
    if (rows[i].mean_accuracy() > rows[best].mean_accuracy()) best = i;
  return best;
}

inline void write_table_text(std::ostream& out, const std::string& title, const std::vector<AblationRow>& rows) {
  std::size_t w = 10;
  for (const auto& r : rows) w = std::max(w, r.label.size() + 2);
  const std::size_t best = best_row(rows);
  out << title << '\n';
  out << std::string(w, ' ') << "     Acc  F-score  width\n";
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    std::string label = (i == best ? "*" : " ") + r.label;
    label.resize(w, ' ');
    std::string acc = percent(r.mean_accuracy()), f1 = percent(r.mean_f_score()), width = std::to_string(r.width);
    out << label << std::string(8 - std::min<std::size_t>(8, acc.size()), ' ') << acc
        << std::string(9 - std::min<std::size_t>(9, f1.size()), ' ') << f1
        << std::string(7 - std::min<std::size_t>(7, width.size()), ' ') << width << '\n';
  }
}

inline void write_table_csv(std::ostream& out, const std::vector<AblationRow>& rows) {
  const std::size_t best = best_row(rows);
  out << "row,label,method,views,width,accuracy,f_score,best\n";
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    out << i << ",\"" << r.label << "\"," << r.method << ',' << join(r.views) << ',' << r.width << ','
        << percent(r.mean_accuracy()) << ',' << percent(r.mean_f_score()) << ',' << (i == best ? 1 : 0) << '\n';
  }
}

}  // namespace detail

inline void write_ablation_text(std::ostream& out, const AblationTable& t) {
  out << "seeds:";
  for (auto s : t.seeds) out << ' ' << s;
  out << "\n\n";
  detail::write_table_text(out, "View ablation (mean test accuracy / F-score, %; * = best)", t.main_rows);
  out << '\n';
  detail::write_table_text(out, "Two-Step DCCA orders", t.two_step_rows);
}

inline void write_ablation_files(const std::string& dir, const AblationTable& t) {
  std::filesystem::create_directories(dir);
  auto open = [&](const std::string& name) {
    std::ofstream f(std::filesystem::path(dir) / name);
    if (!f) throw IoError("cannot write '" + dir + "/" + name + "'");
    return f;
  };
  {
    auto f = open("ablation.txt");
    write_ablation_text(f, t);
  }
  {
    auto f = open("ablation.csv");
    detail::write_table_csv(f, t.main_rows);
  }
  {
    auto f = open("two_step.csv");
    detail::write_table_csv(f, t.two_step_rows);
  }
  {
    auto f = open("ablation_runs.csv");
    f << "seed,table,label,accuracy,f_score\n";
    for (std::size_t s = 0; s < t.seeds.size(); ++s)
      for (const auto* rows : {&t.main_rows, &t.two_step_rows})
        for (const auto& r : *rows)
          f << t.seeds[s] << ',' << (rows == &t.main_rows ? "main" : "two-step") << ",\"" << r.label << "\","
            << percent(r.runs[s].accuracy) << ',' << percent(r.runs[s].f_score) << '\n';
  }
}

// ---------------------------------------------------------------------------
// Commands. Each writes into cfg.out_dir and reports on `log`.

inline int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const InputError*>(&e)) return 2;
  if (dynamic_cast<const ConfigError*>(&e)) return 3;
  if (dynamic_cast<const NumericError*>(&e)) return 4;
  return 1;
}

namespace detail {

inline std::ofstream open_out(const std::string& dir, const std::string& name) {
  std::filesystem::create_directories(dir);
  std::ofstream f(std::filesystem::path(dir) / name);
  if (!f) throw IoError("cannot write '" + dir + "/" + name + "'");
  return f;
}

inline void save_step(const std::string& dir, const std::string& stem, const DccaStep& s) {
  auto m = open_out(dir, stem + ".model");
  write_dcca(m, s.model);
  auto h = open_out(dir, stem + "_history.csv");
  write_history_csv(h, s.model.history);
}

}  // namespace detail

inline void cmd_synth(const ExperimentConfig& cfg, std::ostream& log) {
  SynthSpec s = cfg.synth;
  s.seed = cfg.seed;
  const ViewBundle b = synth_bundle(s);
  std::filesystem::create_directories(cfg.out_dir);
  for (const auto& [name, m] : b.views()) {
    save_view_matrix((std::filesystem::path(cfg.out_dir) / (name + ".csv")).string(), m);
  }
  {
    auto f = detail::open_out(cfg.out_dir, "labels.csv");
    f << "id,label\n";
    for (std::size_t i = 0; i < b.ids().size(); ++i) f << b.ids()[i] << ',' << b.labels()[i] << '\n';
  }
  {
    auto f = detail::open_out(cfg.out_dir, "splits.csv");
    f << "id,split\n";
    for (std::size_t i = 0; i < b.ids().size(); ++i) f << b.ids()[i] << ',' << to_string(b.splits()[i]) << '\n';
  }
  long pos = 0;
  for (int y : b.labels()) pos += y;
  log << "samples=" << b.size() << '\n';
  for (std::size_t v = 0; v < s.view_dims.size(); ++v) {
    const auto names = s.view_names.empty() ? default_view_names(s.view_dims.size()) : s.view_names;
    log << "dim." << names[v] << '=' << s.view_dims[v] << '\n';
  }
  log << "positive_fraction=" << format_fixed(static_cast<double>(pos) / static_cast<double>(b.size()), 4) << '\n';
}

inline void cmd_fuse(const ExperimentConfig& cfg, std::ostream& log) {
  const ViewBundle b = bundle_for(cfg, cfg.seed);
  const TrainConfig train = cfg.seeded_train(cfg.seed);
  std::optional<FusedEmbedding> e;
  switch (cfg.algorithm) {
    case FusionAlgorithm::OneStep: {
      auto r = one_step_fuse(b, train);
      detail::save_step(cfg.out_dir, "dcca", r.step);
      e.emplace(std::move(r.embedding));
      break;
    }
    case FusionAlgorithm::TwoStep: {
      auto r = two_step_fuse(b, parse_two_step_order(cfg.order), train, cfg.k1, cfg.k2);
      detail::save_step(cfg.out_dir, "dcca_step1", r.step1);
      detail::save_step(cfg.out_dir, "dcca_step2", r.step2);
      e.emplace(std::move(r.embedding));
      break;
    }
    case FusionAlgorithm::Gcca: {
      if (!b.has_view(kText) || !b.has_view(kAudio) || !b.has_view(kVideo))
        throw ConfigError("gcca needs text, audio and video views");
      const auto train_rows = b.rows_in(Split::Train);
      std::vector<Matrix> fit;
      std::vector<FeatureMatrix> all;
      for (const auto& name : {kText, kAudio, kVideo}) {
        fit.push_back(detail::rows_of(b.view(name).data(), train_rows));
        all.push_back(b.view(name));
      }
      const GccaModel m = gcca_fit(fit, train.k, train.r1);
      auto f = detail::open_out(cfg.out_dir, "gcca.model");
      write_gcca(f, m);
      e.emplace(gcca_transform(m, all, hex64(fnv1a("gcca|" + std::to_string(train.k) + "|" + format_real(train.r1)))));
      break;
    }
    case FusionAlgorithm::Concat:
    case FusionAlgorithm::Unimodal: {
      std::vector<std::string> names;
      for (const auto& [name, m] : b.views()) names.push_back(name);
      e.emplace(baseline_fuse(b, names, names.size() == 1 ? FusionAlgorithm::Unimodal : FusionAlgorithm::Concat));
      break;
    }
  }
  std::filesystem::create_directories(cfg.out_dir);
  const auto dir = std::filesystem::path(cfg.out_dir);
  save_embedding((dir / "embedding.csv").string(), (dir / "embedding.meta").string(), *e);
  {
    auto f = detail::open_out(cfg.out_dir, "labels.csv");
    f << "id,label\n";
    for (std::size_t i = 0; i < b.ids().size(); ++i) f << b.ids()[i] << ',' << b.labels()[i] << '\n';
  }
  {
    auto f = detail::open_out(cfg.out_dir, "splits.csv");
    f << "id,split\n";
    for (std::size_t i = 0; i < b.ids().size(); ++i) f << b.ids()[i] << ',' << to_string(b.splits()[i]) << '\n';
  }
  write_provenance(log, *e);
}

inline EvalResult cmd_eval(const ExperimentConfig& cfg, std::ostream& log) {
  if (cfg.embedding_path.empty() || cfg.labels_path.empty() || cfg.splits_path.empty())
    throw ConfigError("eval needs --embedding, --labels and --splits");
  const FeatureMatrix emb = load_view_matrix(cfg.embedding_path, std::nullopt, "embedding");
  LabelFile lf = load_labels(cfg.labels_path);
  if (!lf.labels) throw ConfigError("eval needs binary labels ('id,label'); binarize scores with fuse first");
  const ViewBundle b = bundle_views({emb}, *lf.labels, load_splits(cfg.splits_path));
  const EvalResult r = evaluate_embedding(b.view("embedding").data(), b.labels(), b.splits(), cfg.l2_grid, cfg.logreg);

  std::ostringstream report;
  report << "accuracy=" << percent(r.test.accuracy) << '\n'
         << "f_score=" << percent(r.test.f_score) << '\n'
         << "precision=" << percent(r.test.precision) << '\n'
         << "recall=" << percent(r.test.recall) << '\n'
         << "tp=" << r.test.tp() << "\ntn=" << r.test.tn() << "\nfp=" << r.test.fp() << "\nfn=" << r.test.fn() << '\n'
         << "chosen_l2=" << format_real(r.chosen_l2) << '\n'
         << "val_accuracy=" << percent(r.val_accuracy) << '\n'
         << "train_input_hash=" << hex64(r.train_input_hash) << '\n';
  auto f = detail::open_out(cfg.out_dir, "metrics.txt");
  f << report.str();
  auto c = detail::open_out(cfg.out_dir, "metrics.csv");
  c << "accuracy,f_score,precision,recall,chosen_l2\n"
    << percent(r.test.accuracy) << ',' << percent(r.test.f_score) << ',' << percent(r.test.precision) << ','
    << percent(r.test.recall) << ',' << format_real(r.chosen_l2) << '\n';
  log << report.str();
  return r;
}

inline AblationTable cmd_ablate(const ExperimentConfig& cfg, std::ostream& log) {
  const AblationTable t = run_ablation(cfg);
  write_ablation_files(cfg.out_dir, t);
  write_ablation_text(log, t);
  return t;
}

inline GradCheckReport cmd_gradcheck(const ExperimentConfig& cfg, std::ostream& log,
                                     const ObjectiveFn& objective = default_objective) {
  const GradCheckReport r = run_gradcheck(cfg.seed, objective);
  for (const auto& c : r.cases)
    log << c.name << ": max_rel_error=" << format_real(c.max_rel_error) << " checked=" << c.checked
        << " skipped_kinks=" << c.skipped_kinks << '\n';
  log << "max_rel_error=" << format_real(r.max_rel_error()) << " tolerance=" << format_real(r.tolerance) << ' '
      << (r.passed() ? "PASS" : "FAIL") << '\n';
  return r;
}

}  // namespace mmfuse
