// mmfuse: multi-view DCCA fusion, evaluation and ablation from the command line.

#include "mmfuse/experiment.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <string>
#include <vector>

int main(int argc, char** argv) {
  using namespace mmfuse;

  CLI::App app{"Multi-view feature fusion with deep CCA"};
  app.require_subcommand(1);
  app.set_config("--config", "", "Key-value experiment file; command-line flags override it");

  ExperimentConfig cfg;
  std::string algo = "one-step";
  std::string label_rule = "geq-zero";
  std::string activation = "relu-hidden";
  std::vector<Index> hidden;
  std::vector<Index> hidden_grid{64, 128, 256};
  Index hidden_layers = 2;
  Index k1 = 0, k2 = 0;
  std::vector<Index> dims = cfg.synth.view_dims;
  std::vector<double> noise = cfg.synth.noise_levels;

  // Common flags.
  app.add_option("--seed", cfg.seed, "Top-level seed");
  app.add_option("--out", cfg.out_dir, "Output directory");
  app.add_option("--jobs", cfg.jobs, "Concurrent ablation rows")->check(CLI::PositiveNumber);
  app.add_option("--repeats", cfg.repeats, "Ablation repeats (seeds seed..seed+repeats-1)")->check(CLI::PositiveNumber);
  app.add_option("--k", cfg.train.k, "Correlated components per DCCA step");
  app.add_option("--k1", k1, "Two-step: components of the first step (default --k)");
  app.add_option("--k2", k2, "Two-step: components of the second step (default --k)");
  app.add_option("--order", cfg.order, "Two-step order")->check(CLI::IsMember({"tv-a", "av-t", "ta-v"}));
  app.add_option("--algo", algo, "Fusion algorithm")->check(CLI::IsMember({"one-step", "two-step", "gcca", "concat"}));

  // Inputs.
  app.add_option("--text", cfg.text_path, "Text feature file");
  app.add_option("--audio", cfg.audio_path, "Audio feature file");
  app.add_option("--video", cfg.video_path, "Video feature file");
  app.add_option("--labels", cfg.labels_path, "Labels file (id,label or id,score)");
  app.add_option("--splits", cfg.splits_path, "Splits file (id,split)");
  app.add_option("--label-rule", label_rule, "Score binarization")->check(CLI::IsMember({"geq-zero", "zero-excluded"}));
  app.add_option("--embedding", cfg.embedding_path, "Embedding file to evaluate");
  app.add_flag("--synth", cfg.use_synth, "Use a synthetic planted-latent bundle instead of files");
  app.add_option("--n", cfg.synth.n, "Synthetic sample count");
  app.add_option("--latent-dim", cfg.synth.latent_dim, "Synthetic latent dimension");
  app.add_option("--dims", dims, "Synthetic view dimensions (text audio video)");
  app.add_option("--noise", noise, "Synthetic per-view noise levels");

  // DCCA training.
  app.add_option("--epochs", cfg.train.epochs, "Full-batch training epochs");
  app.add_option("--lr", cfg.train.learning_rate, "RMSProp learning rate");
  app.add_option("--decay", cfg.train.rmsprop_decay, "RMSProp decay");
  app.add_option("--rms-eps", cfg.train.rmsprop_eps, "RMSProp epsilon");
  app.add_option("--r1", cfg.train.r1, "Covariance ridge, first view");
  app.add_option("--r2", cfg.train.r2, "Covariance ridge, second view");
  app.add_option("--out-dim", cfg.train.out_dim, "Encoder output width (default k)");
  app.add_option("--hidden", hidden, "Fixed hidden layer sizes; disables the grid");
  app.add_option("--hidden-grid", hidden_grid, "Candidate sizes per hidden layer");
  app.add_option("--hidden-layers", hidden_layers, "Hidden layers searched by --hidden-grid");
  app.add_option("--patience", cfg.train.early_stop_patience, "Early-stopping patience (0 disables)");
  app.add_option("--activation", activation, "Encoder nonlinearity")->check(CLI::IsMember({"relu-hidden", "relu-all"}));
  app.add_flag("--standardize", cfg.train.standardize, "Z-score encoder inputs with train statistics");

  // Classifier.
  app.add_option("--l2-grid", cfg.l2_grid, "Logistic-regression penalties");
  app.add_option("--max-iter", cfg.logreg.max_iter, "Logistic-regression iteration cap");
  app.add_option("--tol", cfg.logreg.tol, "Logistic-regression gradient tolerance");

  auto* synth = app.add_subcommand("synth", "Write a synthetic bundle")->fallthrough();
  auto* fuse = app.add_subcommand("fuse", "Fuse views into an embedding")->fallthrough();
  auto* eval = app.add_subcommand("eval", "Score an embedding with logistic regression")->fallthrough();
  auto* ablate = app.add_subcommand("ablate", "Run the view-ablation tables")->fallthrough();
  auto* gradcheck = app.add_subcommand("gradcheck", "Finite-difference check of the DCCA gradients")->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 3;
  }

  try {
    cfg.algorithm = *parse_algorithm(algo);
    cfg.label_rule = label_rule == "zero-excluded" ? LabelRule::ZeroExcluded : LabelRule::GeqZeroPositive;
    cfg.train.activation = *parse_activation(activation);
    if (k1 > 0) cfg.k1 = k1;
    if (k2 > 0) cfg.k2 = k2;
    cfg.synth.view_dims = dims;
    cfg.synth.noise_levels = noise;
    if (!hidden.empty()) {
      cfg.train.hidden = hidden;
      cfg.train.grid.clear();
    } else {
      if (hidden_layers < 1) throw ConfigError("--hidden-layers must be positive");
      cfg.train.grid = expand_hidden_grid(hidden_grid, static_cast<std::size_t>(hidden_layers));
      cfg.train.hidden = cfg.train.grid.front();
    }

    if (synth->parsed()) {
      cmd_synth(cfg, std::cout);
    } else if (fuse->parsed()) {
      cmd_fuse(cfg, std::cout);
    } else if (eval->parsed()) {
      cmd_eval(cfg, std::cout);
    } else if (ablate->parsed()) {
      cmd_ablate(cfg, std::cout);
    } else if (gradcheck->parsed()) {
      if (!cmd_gradcheck(cfg, std::cout).passed()) return 4;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code_for(e);
  }
  return 0;
}
