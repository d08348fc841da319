#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "sarc/errors.hpp"
#include "sarc/experiment.hpp"
#include "support/helpers.hpp"

using namespace sarc;
using testutil::TempDir;
using testutil::read_file;
using testutil::write_file;

TEST_SUITE_BEGIN("experiment");

namespace {

void write_marker_csv(const std::string& path, int n, std::uint64_t seed,
                      bool with_rephrases = false) {
  auto records = testutil::marker_corpus(n, seed, with_rephrases);
  std::ofstream out(path, std::ios::binary);
  out << "tweet,sarcastic,rephrase\n";
  for (const auto& rec : records)
    out << rec.text << "," << *rec.label << ","
        << rec.rephrase.value_or("") << "\n";
}

std::string toy_config_text(const std::string& data, const std::string& out) {
  return "task = A\n"
         "data = " + data + "\n"
         "data.format = csv\n"
         "out = " + out + "\n"
         "model_kind = m1\n"
         "encoder = reference\n"
         "encoder.dim = 16\n"
         "encoder.ffn_dim = 32\n"
         "max_len = 16\n"
         "epochs = 3\n"
         "learning_rate = 0.003\n"
         "seed = 5\n";
}

}  // namespace

TEST_CASE("train config defaults match the published recipe") {
  TrainConfig config;
  CHECK(config.learning_rate == 1e-5);
  CHECK(config.epochs == 10);
  CHECK(config.batch_size == 16);
  CHECK(config.validation_ratio == 0.2);
  CHECK(config.max_len == 128);
  CHECK(config.loss.gamma == 2.0);
  CHECK(config.loss.alpha_neg == 0.8);
  CHECK(config.loss.alpha_pos() == doctest::Approx(0.2));
  CHECK(config.loss.epsilon == 1e-8);
}

TEST_CASE("config files parse and overrides apply in order") {
  TempDir dir("config");
  write_file(dir.file("exp.cfg"),
             "# comment line\n"
             "task = A\n"
             "data = train.csv\n"
             "model_kind = m2\n"
             "encoder = reference-ar\n"
             "preprocess.dialect.egypt = مصر\n"
             "loss.kind = wce\n"
             "epochs = 4\n");
  ExperimentConfig config = load_experiment_config(dir.file("exp.cfg"));
  CHECK(config.task == Task::A);
  CHECK(config.train.model_kind == ModelKind::m2);
  CHECK(config.train.encoder == "reference-ar");
  CHECK(config.train.use_dialect);
  CHECK(config.train.preprocess.mention_token == "user");
  CHECK(config.train.preprocess.dialect_map.at("egypt") == "مصر");
  CHECK(config.train.loss.kind == LossKind::wce);
  CHECK(config.train.epochs == 4);

  apply_setting_expr(config, "loss.kind=fl");
  apply_setting_expr(config, "seed=11");
  CHECK(config.train.loss.kind == LossKind::fl);
  CHECK(config.train.seed == 11);

  CHECK_THROWS_AS(apply_setting_expr(config, "no_such_key=1"), SarcError);
  CHECK_THROWS_AS(apply_setting_expr(config, "malformed"), SarcError);
}

TEST_CASE("cmd_train writes checkpoint, history, reports and manifest") {
  TempDir dir("train");
  write_marker_csv(dir.file("train.csv"), 32, 3);
  ExperimentConfig config;
  std::istringstream lines(toy_config_text(dir.file("train.csv"),
                                           dir.file("run")));
  std::string line;
  while (std::getline(lines, line)) {
    auto eq = line.find('=');
    apply_setting(config, line.substr(0, eq - 1),
                  line.substr(eq + 2));
  }
  apply_setting_expr(config, "loss.kind=fl");
  TrainOutputs outputs = cmd_train(config);

  auto manifest = load_manifest(outputs.checkpoint_dir + "/manifest.txt");
  CHECK(manifest.at("loss.kind") == "fl");
  CHECK(manifest.at("loss.gamma") == "2");
  CHECK(manifest.at("loss.alpha_neg") ==
        format_double(0.8));
  CHECK(manifest.at("model_kind") == "m1");

  CHECK(read_file(outputs.history_path).find("train_loss") !=
        std::string::npos);
  CHECK(read_file(outputs.report_path).find("F-1 sarcastic") !=
        std::string::npos);
  auto run_manifest =
      load_manifest(dir.file("run") + "/run_manifest.txt");
  CHECK(run_manifest.at("seed") == "5");
  CHECK(run_manifest.at("version") == kToolVersion);

  // The checkpoint reloads into a usable model.
  TrainedModel model = load_checkpoint(outputs.checkpoint_dir);
  CHECK(model.model_kind == ModelKind::m1);
  CHECK(predict_proba(model, std::vector<std::string>{"coffee zonk"})[0] >=
        0.0);
}

TEST_CASE("checkpoints round trip bit-for-bit") {
  TempDir dir("roundtrip");
  write_marker_csv(dir.file("train.csv"), 32, 9);
  ExperimentConfig config;
  config.task = Task::A;
  config.data_path = dir.file("train.csv");
  config.out_dir = dir.file("run");
  config.train.model_kind = ModelKind::m2;
  config.train.encoder_config.dim = 16;
  config.train.encoder_config.ffn_dim = 32;
  config.train.max_len = 16;
  config.train.epochs = 2;
  config.train.learning_rate = 1e-3;
  config.train.loss.kind = LossKind::ce;
  TrainOutputs outputs = cmd_train(config);

  TrainedModel a = load_checkpoint(outputs.checkpoint_dir);
  TrainedModel b = load_checkpoint(outputs.checkpoint_dir);
  std::vector<std::string> texts = {"rain zonk", "coffee monday"};
  std::vector<double> pa = predict_proba(a, texts);
  std::vector<double> pb = predict_proba(b, texts);
  CHECK(pa == pb);

  // Saving the loaded model again reproduces the identical blob.
  TempDir dir2("resave");
  save_checkpoint(a, dir2.file("ckpt"));
  CHECK(read_file(outputs.checkpoint_dir + "/params.bin") ==
        read_file(dir2.file("ckpt") + "/params.bin"));
}

TEST_CASE("repeated training runs are bitwise identical") {
  TempDir dir("determinism");
  write_marker_csv(dir.file("train.csv"), 32, 7);
  for (ModelKind kind : {ModelKind::m1, ModelKind::m3}) {
    ExperimentConfig config;
    config.data_path = dir.file("train.csv");
    config.train.model_kind = kind;
    config.train.encoder_config.dim = 16;
    config.train.encoder_config.ffn_dim = 32;
    config.train.max_len = 16;
    config.train.epochs = 2;
    config.train.learning_rate = 1e-3;
    if (kind == ModelKind::m3) config.train.loss.kind = LossKind::ce;
    config.out_dir = dir.file(std::string("run1_") + model_kind_name(kind));
    cmd_train(config);
    config.out_dir = dir.file(std::string("run2_") + model_kind_name(kind));
    cmd_train(config);
    CHECK(read_file(dir.file(std::string("run1_") + model_kind_name(kind)) +
                    "/history.jsonl") ==
          read_file(dir.file(std::string("run2_") + model_kind_name(kind)) +
                    "/history.jsonl"));
  }
}

TEST_CASE("evaluate reports single models and ensembles") {
  TempDir dir("evaluate");
  write_marker_csv(dir.file("train.csv"), 32, 5);
  write_marker_csv(dir.file("test.csv"), 16, 99);

  std::vector<std::string> checkpoints;
  for (int i = 0; i < 3; ++i) {
    ExperimentConfig config;
    config.data_path = dir.file("train.csv");
    config.out_dir = dir.file("run" + std::to_string(i));
    config.train.model_kind = i == 2 ? ModelKind::m2 : ModelKind::m1;
    config.train.encoder_config.dim = 16;
    config.train.encoder_config.ffn_dim = 32;
    config.train.max_len = 16;
    config.train.epochs = 30;
    config.train.learning_rate = 3e-3;
    config.train.seed = 20 + static_cast<std::uint64_t>(i);
    if (config.train.model_kind == ModelKind::m2)
      config.train.loss.kind = LossKind::ce;
    checkpoints.push_back(cmd_train(config).checkpoint_dir);
  }

  MetricReport single = cmd_evaluate({checkpoints[0]}, dir.file("test.csv"),
                                     FileFormat::csv, Task::A,
                                     dir.file("report_single"));
  CHECK(single.ensemble_members == 1);
  CHECK(single.accuracy >= 0.9);  // separable marker corpus

  MetricReport triple = cmd_evaluate(checkpoints, dir.file("test.csv"),
                                     FileFormat::csv, Task::A,
                                     dir.file("report_triple"));
  CHECK(triple.ensemble_members == 3);
  CHECK(read_file(dir.file("report_triple") + "/report.json")
            .find("\"ensemble_members\": 3") != std::string::npos);

  // Task C pair evaluation from the same task-A checkpoints.
  std::ofstream pairs(dir.file("pairs.csv"), std::ios::binary);
  pairs << "text_0,text_1,sarcastic_id\n";
  Rng rng(3);
  for (int i = 0; i < 20; ++i) {
    std::string plain = "coffee rain monday";
    std::string marked = plain + " zonk";
    if (rng.bernoulli(0.5))
      pairs << marked << "," << plain << ",0\n";
    else
      pairs << plain << "," << marked << ",1\n";
  }
  pairs.close();
  MetricReport pair_report = cmd_evaluate(
      {checkpoints[0]}, dir.file("pairs.csv"), FileFormat::csv, Task::C,
      dir.file("report_pairs"));
  CHECK(pair_report.accuracy == 1.0);
}

TEST_CASE("predict writes one line per input") {
  TempDir dir("predict");
  write_marker_csv(dir.file("train.csv"), 32, 6);
  ExperimentConfig config;
  config.data_path = dir.file("train.csv");
  config.out_dir = dir.file("run");
  config.train.model_kind = ModelKind::m1;
  config.train.encoder_config.dim = 16;
  config.train.encoder_config.ffn_dim = 32;
  config.train.max_len = 16;
  config.train.epochs = 2;
  config.train.learning_rate = 1e-3;
  TrainOutputs outputs = cmd_train(config);

  write_file(dir.file("inputs.txt"),
             "coffee zonk\nrain monday\nlunch phone\ngame zonk\nnews train\n");
  cmd_predict({outputs.checkpoint_dir}, dir.file("inputs.txt"),
              PredictFormat::text, Task::A, dir.file("preds.txt"));
  std::string preds = read_file(dir.file("preds.txt"));
  std::size_t lines = 0, pos = 0;
  while ((pos = preds.find('\n', pos)) != std::string::npos) {
    ++lines;
    ++pos;
  }
  CHECK(lines == 5);

  cmd_predict({outputs.checkpoint_dir}, dir.file("inputs.txt"),
              PredictFormat::text, Task::A, dir.file("preds2.txt"));
  CHECK(read_file(dir.file("preds2.txt")) == preds);

  write_file(dir.file("pairs.csv"),
             "text_0,text_1\na zonk,b plain\nc plain,d zonk\n");
  cmd_predict({outputs.checkpoint_dir}, dir.file("pairs.csv"),
              PredictFormat::csv, Task::C, dir.file("pair_preds.txt"));
  std::string pair_preds = read_file(dir.file("pair_preds.txt"));
  lines = 0;
  pos = 0;
  while ((pos = pair_preds.find('\n', pos)) != std::string::npos) {
    ++lines;
    ++pos;
  }
  CHECK(lines == 2);

  write_file(dir.file("empty.txt"), "");
  try {
    cmd_predict({outputs.checkpoint_dir}, dir.file("empty.txt"),
                PredictFormat::text, Task::A, dir.file("nope.txt"));
    FAIL("expected EmptyInput");
  } catch (const SarcError& e) {
    CHECK(e.kind() == ErrorKind::EmptyInput);
  }
}

TEST_CASE("missing dataset paths fail with exit code 2 through the cli") {
  TempDir dir("cli");
  write_file(dir.file("exp.cfg"),
             toy_config_text(dir.file("missing.csv"), dir.file("run")));
  std::string cmd = std::string(SARC_CLI_PATH) + " train --config " +
                    dir.file("exp.cfg") + " 2>" + dir.file("stderr.txt");
  int status = std::system(cmd.c_str());
  REQUIRE(WIFEXITED(status));
  CHECK(WEXITSTATUS(status) == 2);
  CHECK(read_file(dir.file("stderr.txt")).find("missing.csv") !=
        std::string::npos);
}

TEST_CASE("the cli trains, evaluates and predicts end to end") {
  TempDir dir("cli_e2e");
  write_marker_csv(dir.file("train.csv"), 32, 8);
  write_marker_csv(dir.file("test.csv"), 12, 21);
  write_file(dir.file("exp.cfg"),
             toy_config_text(dir.file("train.csv"), dir.file("run")));
  std::string base(SARC_CLI_PATH);
  CHECK(std::system((base + " train --config " + dir.file("exp.cfg") +
                     " --set epochs=2 >/dev/null")
                        .c_str()) == 0);
  CHECK(std::system((base + " evaluate --checkpoint " + dir.file("run") +
                     "/checkpoint --data " + dir.file("test.csv") +
                     " --task A --out " + dir.file("eval") + " >/dev/null")
                        .c_str()) == 0);
  CHECK(read_file(dir.file("eval") + "/report.txt").find("Accuracy") !=
        std::string::npos);
  write_file(dir.file("in.txt"), "rain zonk\nlunch phone\n");
  CHECK(std::system((base + " predict --checkpoint " + dir.file("run") +
                     "/checkpoint --input " + dir.file("in.txt") +
                     " --task A --out " + dir.file("out.txt") + " >/dev/null")
                        .c_str()) == 0);
  CHECK(read_file(dir.file("out.txt")).size() == 4);  // two "0/1\n" lines
}

TEST_CASE("encoder cache directory comes from the environment") {
  unsetenv("SARC_ENCODER_CACHE");
  CHECK_FALSE(encoder_cache_dir().has_value());
  setenv("SARC_ENCODER_CACHE", "/tmp/cache", 1);
  CHECK(encoder_cache_dir() == std::optional<std::string>("/tmp/cache"));
  unsetenv("SARC_ENCODER_CACHE");
}

TEST_SUITE_END();
