#ifndef SARC_EXPERIMENT_HPP_
#define SARC_EXPERIMENT_HPP_

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sarc/data.hpp"
#include "sarc/evaluation.hpp"
#include "sarc/training.hpp"

namespace sarc {

struct ExperimentConfig {
  TrainConfig train;
  Task task = Task::A;
  std::optional<Language> lang;
  std::string data_path;
  FileFormat data_format = FileFormat::csv;
  std::string out_dir = "run";
};

// Declarative key = value file; '#' lines are comments. Settings apply in
// file order; `encoder = <preset>` pulls in that preset's preprocessing
// defaults, so place preprocess.* overrides after it.
ExperimentConfig load_experiment_config(const std::string& path);
void apply_setting(ExperimentConfig& config, const std::string& key,
                   const std::string& value);
// "key=value" as passed to --set.
void apply_setting_expr(ExperimentConfig& config, const std::string& expr);
std::map<std::string, std::string> experiment_manifest(
    const ExperimentConfig& config);

struct TrainOutputs {
  std::string checkpoint_dir;
  std::string history_path;
  std::string report_path;
};

// Trains per config.model_kind (task B routes through the GAN model over
// sarcastic records only) and writes checkpoint/, history.jsonl,
// validation_report.{txt,json} and run_manifest.txt under config.out_dir.
TrainOutputs cmd_train(const ExperimentConfig& config);

// Evaluates one checkpoint directly or several as a hard-vote ensemble;
// task C evaluates task-A checkpoints over pair files with gold
// sarcastic_id. Writes report.txt / report.json under out_dir.
MetricReport cmd_evaluate(const std::vector<std::string>& checkpoint_dirs,
                          const std::string& data_path, FileFormat format,
                          Task task, const std::string& out_dir);

enum class PredictFormat { text, csv, jsonl };
PredictFormat parse_predict_format(const std::string& s);

// One prediction per input line (task A: 0/1, task B: six comma-joined
// flags, task C: pair index), written to out_path.
void cmd_predict(const std::vector<std::string>& checkpoint_dirs,
                 const std::string& input_path, PredictFormat format,
                 Task task, const std::string& out_path);

// Cache directory for external encoder adapters (SARC_ENCODER_CACHE).
std::optional<std::string> encoder_cache_dir();

}  // namespace sarc

#endif  // SARC_EXPERIMENT_HPP_
