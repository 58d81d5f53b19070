#include "mmfuse/experiment.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#ifndef MMFUSE_CLI
#error "MMFUSE_CLI must name the command-line binary"
#endif

using namespace mmfuse;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("mmfuse_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(MMFUSE_CLI) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

ExperimentConfig small_synth_config(const fs::path& out) {
  ExperimentConfig c;
  c.use_synth = true;
  c.synth.n = 150;
  c.out_dir = out.string();
  c.train.k = 2;
  c.train.hidden = {6};
  c.train.epochs = 5;
  c.l2_grid = {1e-2, 1.0};
  return c;
}

}  // namespace

TEST(ExitCodes, MapErrorKinds) {
  EXPECT_EQ(exit_code_for(ParseError("f", 3, "bad")), 2);
  EXPECT_EQ(exit_code_for(AlignmentError("x")), 2);
  EXPECT_EQ(exit_code_for(ConfigError("x")), 3);
  EXPECT_EQ(exit_code_for(NumericError("x")), 4);
  EXPECT_EQ(exit_code_for(std::runtime_error("x")), 1);
}

TEST(ExperimentConfig, InputsAreExclusive) {
  ExperimentConfig c;
  EXPECT_THROW(c.validate_inputs(), ConfigError);
  c.use_synth = true;
  EXPECT_NO_THROW(c.validate_inputs());
  c.text_path = "t.csv";
  EXPECT_THROW(c.validate_inputs(), ConfigError);
}

TEST(EvaluateEmbedding, PerfectFeatureScoresFullMarks) {
  const Index n = 60;
  Matrix x(n, 2);
  std::vector<int> y;
  std::vector<Split> s;
  for (Index i = 0; i < n; ++i) {
    const int label = static_cast<int>(i % 2);
    y.push_back(label);
    x(i, 0) = label ? 2.0 + 0.01 * i : -2.0 - 0.01 * i;
    x(i, 1) = 0.5 * std::sin(static_cast<double>(i));
    s.push_back(i < 36 ? Split::Train : i < 48 ? Split::Val : Split::Test);
  }
  const auto r = evaluate_embedding(x, y, s, default_l2_grid());
  EXPECT_EQ(percent(r.test.accuracy), "100.00");
  EXPECT_EQ(r.test.f_score, 1.0);

  // The audit hash ignores test rows.
  Matrix moved = x;
  for (Index i = 48; i < n; ++i) moved(i, 0) = -moved(i, 0);
  const auto m = evaluate_embedding(moved, y, s, default_l2_grid());
  EXPECT_EQ(m.train_input_hash, r.train_input_hash);
  EXPECT_EQ(m.test.accuracy, 0.0);
  moved(0, 1) += 1.0;
  EXPECT_NE(evaluate_embedding(moved, y, s, default_l2_grid()).train_input_hash, r.train_input_hash);
}

TEST(CmdSynth, RerunIsByteIdentical) {
  const auto a = scratch("synth_a"), b = scratch("synth_b");
  auto cfg = small_synth_config(a);
  std::ostringstream log;
  cmd_synth(cfg, log);
  cfg.out_dir = b.string();
  cmd_synth(cfg, log);
  for (const auto* name : {"text.csv", "audio.csv", "video.csv", "labels.csv", "splits.csv"})
    EXPECT_EQ(slurp(a / name), slurp(b / name)) << name;
}

TEST(CmdFuseEval, FilesRoundTripThroughTheCli) {
  const auto dir = scratch("fuse");
  auto cfg = small_synth_config(dir / "data");
  std::ostringstream log;
  cmd_synth(cfg, log);

  ExperimentConfig f = small_synth_config(dir / "fused");
  f.use_synth = false;
  f.text_path = (dir / "data" / "text.csv").string();
  f.audio_path = (dir / "data" / "audio.csv").string();
  f.video_path = (dir / "data" / "video.csv").string();
  f.labels_path = (dir / "data" / "labels.csv").string();
  f.splits_path = (dir / "data" / "splits.csv").string();
  f.algorithm = FusionAlgorithm::TwoStep;
  f.order = "av-t";
  std::ostringstream fuse_log;
  cmd_fuse(f, fuse_log);
  EXPECT_NE(fuse_log.str().find("width=28"), std::string::npos) << fuse_log.str();  // 2*2 + 2*2 + 20
  EXPECT_TRUE(fs::exists(dir / "fused" / "dcca_step1.model"));
  EXPECT_TRUE(fs::exists(dir / "fused" / "dcca_step2_history.csv"));

  ExperimentConfig e;
  e.embedding_path = (dir / "fused" / "embedding.csv").string();
  e.labels_path = (dir / "fused" / "labels.csv").string();
  e.splits_path = (dir / "fused" / "splits.csv").string();
  e.out_dir = (dir / "eval").string();
  std::ostringstream eval_log;
  cmd_eval(e, eval_log);
  const std::string metrics = slurp(dir / "eval" / "metrics.txt");
  EXPECT_NE(metrics.find("accuracy="), std::string::npos);
  EXPECT_NE(metrics.find("train_input_hash="), std::string::npos);
}

TEST(CmdAblate, RowsAndDeterminism) {
  const auto a = scratch("ablate_a"), b = scratch("ablate_b");
  auto cfg = small_synth_config(a);
  cfg.repeats = 2;
  cfg.jobs = 3;
  std::ostringstream log;
  const auto t = cmd_ablate(cfg, log);
  ASSERT_EQ(t.main_rows.size(), 9u);
  ASSERT_EQ(t.two_step_rows.size(), 3u);
  EXPECT_EQ(t.main_rows.front().label, "Audio");
  EXPECT_EQ(t.main_rows.back().label, kRowConcat);
  EXPECT_EQ(t.seeds, (std::vector<std::uint64_t>{0, 1}));
  for (const auto& r : t.main_rows) EXPECT_EQ(r.runs.size(), 2u);

  cfg.out_dir = b.string();
  cfg.jobs = 1;
  cmd_ablate(cfg, log);
  for (const auto* name : {"ablation.txt", "ablation.csv", "two_step.csv", "ablation_runs.csv"})
    EXPECT_EQ(slurp(a / name), slurp(b / name)) << name;
}

TEST(CmdGradcheck, ReportsPassAndFail) {
  ExperimentConfig cfg;
  std::ostringstream ok, bad;
  EXPECT_TRUE(cmd_gradcheck(cfg, ok).passed());
  EXPECT_NE(ok.str().find("PASS"), std::string::npos);
  const ObjectiveFn corrupted = [](const Matrix& h1, const Matrix& h2, Index k, double r1, double r2) {
    auto r = corr_loss_and_grad(h1, h2, k, r1, r2);
    r.grad_2.array() += 1e-3;
    return r;
  };
  EXPECT_FALSE(cmd_gradcheck(cfg, bad, corrupted).passed());
  EXPECT_NE(bad.str().find("FAIL"), std::string::npos);
}

TEST(Cli, ExitCodesAndConfigFile) {
  const auto dir = scratch("cli");
  const std::string data = (dir / "data").string();
  ASSERT_EQ(run_cli("synth --n 120 --out " + data), 0);

  const std::string files = " --text " + data + "/text.csv --video " + data + "/video.csv --labels " + data +
                            "/labels.csv --splits " + data + "/splits.csv";
  EXPECT_EQ(run_cli("fuse" + files + " --audio " + data + "/missing.csv --out " + (dir / "o").string()), 2);
  EXPECT_EQ(run_cli("fuse --synth --k 0 --out " + (dir / "o").string()), 3);
  EXPECT_EQ(run_cli("fuse --synth --order xy-z"), 3);
  EXPECT_EQ(run_cli("fuse --bogus-flag"), 3);

  {
    std::ofstream ini(dir / "run.ini");
    ini << "synth=true\nn=120\nk=2\nhidden=6\nepochs=3\nalgo=two-step\norder=tv-a\nout=" << (dir / "ini").string()
        << "\n";
  }
  EXPECT_EQ(run_cli("fuse --config " + (dir / "run.ini").string()), 0);
  const std::string meta = slurp(dir / "ini" / "embedding.meta");
  EXPECT_NE(meta.find("algorithm=two-step"), std::string::npos) << meta;
  EXPECT_NE(meta.find("view_order=text,video,audio"), std::string::npos) << meta;

  EXPECT_EQ(run_cli("gradcheck"), 0);
}
