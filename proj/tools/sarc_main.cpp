// sarc — train, evaluate and predict with the sarcasm-detection toolkit.
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "sarc/errors.hpp"
#include "sarc/experiment.hpp"

namespace {

int exit_code_for(const sarc::SarcError& e) {
  switch (e.kind()) {
    case sarc::ErrorKind::IoError:
    case sarc::ErrorKind::BadConfig:
    case sarc::ErrorKind::MissingColumn:
    case sarc::ErrorKind::EmptyInput:
      return 2;
    default:
      return 1;
  }
}

sarc::FileFormat parse_format_flag(const std::string& s) {
  if (s == "csv") return sarc::FileFormat::csv;
  if (s == "jsonl") return sarc::FileFormat::jsonl;
  throw sarc::SarcError(sarc::ErrorKind::BadConfig,
                        "--format must be csv or jsonl");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"intended-sarcasm detection toolkit"};
  app.require_subcommand(1);

  // train
  auto* train = app.add_subcommand("train", "train a model from a config file");
  std::string config_path;
  std::vector<std::string> overrides;
  std::string train_task, train_lang, train_out, train_data;
  std::optional<std::uint64_t> train_seed;
  train->add_option("--config", config_path, "experiment config file")
      ->required();
  train->add_option("--set", overrides,
                    "override a config key, e.g. --set loss.kind=fl");
  train->add_option("--task", train_task, "task selector (A|B|C)");
  train->add_option("--lang", train_lang, "language tag (ar|en)");
  train->add_option("--out", train_out, "output directory");
  train->add_option("--data", train_data, "training data path");
  train->add_option("--seed", train_seed, "random seed");

  // evaluate
  auto* evaluate =
      app.add_subcommand("evaluate", "evaluate checkpoints on a labeled set");
  std::vector<std::string> eval_checkpoints;
  std::string eval_data, eval_task = "A", eval_out, eval_format = "csv";
  evaluate->add_option("--checkpoint", eval_checkpoints,
                       "checkpoint directory (repeat for an ensemble)")
      ->required();
  evaluate->add_option("--data", eval_data, "labeled dataset")->required();
  evaluate->add_option("--task", eval_task, "task (A|B|C)");
  evaluate->add_option("--format", eval_format, "data format (csv|jsonl)");
  evaluate->add_option("--out", eval_out, "report output directory");

  // predict
  auto* predict = app.add_subcommand("predict", "write predictions for inputs");
  std::vector<std::string> pred_checkpoints;
  std::string pred_input, pred_task = "A", pred_out, pred_format = "text";
  predict->add_option("--checkpoint", pred_checkpoints,
                      "checkpoint directory (repeat for an ensemble)")
      ->required();
  predict->add_option("--input", pred_input, "input file")->required();
  predict->add_option("--task", pred_task, "task (A|B|C)");
  predict->add_option("--format", pred_format,
                      "input format (text|csv|jsonl)");
  predict->add_option("--out", pred_out, "predictions output file")
      ->required();

  auto* version = app.add_subcommand("version", "print the tool version");

  CLI11_PARSE(app, argc, argv);

  try {
    if (version->parsed()) {
      std::cout << "sarc " << sarc::kToolVersion << "\n";
      return 0;
    }
    if (train->parsed()) {
      sarc::ExperimentConfig config =
          sarc::load_experiment_config(config_path);
      if (!train_task.empty()) config.task = sarc::parse_task(train_task);
      if (!train_lang.empty()) config.lang = sarc::parse_language(train_lang);
      if (!train_out.empty()) config.out_dir = train_out;
      if (!train_data.empty()) config.data_path = train_data;
      if (train_seed.has_value()) config.train.seed = *train_seed;
      for (const auto& expr : overrides)
        sarc::apply_setting_expr(config, expr);
      sarc::TrainOutputs outputs = sarc::cmd_train(config);
      std::cout << "checkpoint: " << outputs.checkpoint_dir << "\n"
                << "history:    " << outputs.history_path << "\n"
                << "report:     " << outputs.report_path << "\n";
      return 0;
    }
    if (evaluate->parsed()) {
      sarc::MetricReport report = sarc::cmd_evaluate(
          eval_checkpoints, eval_data, parse_format_flag(eval_format),
          sarc::parse_task(eval_task), eval_out);
      std::cout << sarc::report_table(report, sarc::parse_task(eval_task));
      return 0;
    }
    if (predict->parsed()) {
      sarc::cmd_predict(pred_checkpoints, pred_input,
                        sarc::parse_predict_format(pred_format),
                        sarc::parse_task(pred_task), pred_out);
      std::cout << "predictions: " << pred_out << "\n";
      return 0;
    }
  } catch (const sarc::SarcError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
