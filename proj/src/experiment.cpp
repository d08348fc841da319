#include "sarc/experiment.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "sarc/errors.hpp"

namespace sarc {

namespace fs = std::filesystem;

namespace {

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

double to_double(const std::string& s) {
  try {
    std::size_t pos = 0;
    double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw SarcError(ErrorKind::BadConfig, "bad number '" + s + "'");
  }
}

int to_int(const std::string& s) {
  try {
    std::size_t pos = 0;
    int v = std::stoi(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw SarcError(ErrorKind::BadConfig, "bad integer '" + s + "'");
  }
}

bool to_bool(const std::string& s) {
  if (s == "1" || s == "true" || s == "on") return true;
  if (s == "0" || s == "false" || s == "off") return false;
  throw SarcError(ErrorKind::BadConfig, "bad flag '" + s + "'");
}

FileFormat parse_file_format(const std::string& s) {
  if (s == "csv") return FileFormat::csv;
  if (s == "jsonl") return FileFormat::jsonl;
  throw SarcError(ErrorKind::BadConfig, "format must be csv or jsonl");
}

void require_file(const std::string& path) {
  if (!fs::exists(path))
    throw SarcError(ErrorKind::IoError, "no such file: " + path);
}

std::vector<int> gold_labels(const std::vector<TweetRecord>& records) {
  std::vector<int> gold;
  gold.reserve(records.size());
  for (const auto& rec : records) {
    if (!rec.label.has_value())
      throw SarcError(ErrorKind::BadRecord,
                      "record " + rec.id + " has no gold label");
    gold.push_back(*rec.label);
  }
  return gold;
}

std::vector<std::array<int, 6>> gold_categories(
    const std::vector<TweetRecord>& records) {
  std::vector<std::array<int, 6>> gold;
  gold.reserve(records.size());
  for (const auto& rec : records) {
    if (!rec.categories.has_value())
      throw SarcError(ErrorKind::BadRecord,
                      "record " + rec.id + " has no category labels");
    gold.push_back(*rec.categories);
  }
  return gold;
}

EnsembleBundle load_bundle(const std::vector<std::string>& checkpoint_dirs) {
  if (checkpoint_dirs.empty())
    throw SarcError(ErrorKind::EmptyEnsemble, "no checkpoints given");
  EnsembleBundle bundle;
  for (const auto& dir : checkpoint_dirs)
    bundle.members.push_back(load_checkpoint(dir));
  return bundle;
}

void write_text(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw SarcError(ErrorKind::IoError, "cannot write " + path);
  out << content;
}

std::vector<TweetRecord> load_predict_records(const std::string& path,
                                              PredictFormat format,
                                              Task task) {
  require_file(path);
  if (format == PredictFormat::text) {
    if (task == Task::C)
      throw SarcError(ErrorKind::BadConfig,
                      "task C input must be a csv/jsonl pair file");
    std::ifstream in(path, std::ios::binary);
    std::vector<TweetRecord> records;
    std::string line;
    std::size_t row = 0;
    while (std::getline(in, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      TweetRecord rec;
      rec.id = std::to_string(row++);
      rec.text = line;
      if (trim(rec.text).empty())
        throw SarcError(ErrorKind::EmptyText, "line " + std::to_string(row));
      records.push_back(std::move(rec));
    }
    if (records.empty())
      throw SarcError(ErrorKind::EmptyInput, path + " is empty");
    return records;
  }
  FileFormat ff = format == PredictFormat::csv ? FileFormat::csv
                                               : FileFormat::jsonl;
  std::vector<TweetRecord> records = load_dataset(path, ff, task);
  if (records.empty())
    throw SarcError(ErrorKind::EmptyInput, path + " is empty");
  return records;
}

}  // namespace

ExperimentConfig load_experiment_config(const std::string& path) {
  require_file(path);
  std::ifstream in(path, std::ios::binary);
  ExperimentConfig config;
  std::string line;
  std::size_t ln = 0;
  while (std::getline(in, line)) {
    ++ln;
    std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    auto eq = t.find('=');
    if (eq == std::string::npos)
      throw SarcError(ErrorKind::BadConfig,
                      path + ":" + std::to_string(ln) + ": expected key = value");
    apply_setting(config, trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
  }
  return config;
}

void apply_setting(ExperimentConfig& config, const std::string& key,
                   const std::string& value) {
  TrainConfig& t = config.train;
  if (key == "task") config.task = parse_task(value);
  else if (key == "lang") config.lang = parse_language(value);
  else if (key == "data" || key == "data.path") config.data_path = value;
  else if (key == "data.format") config.data_format = parse_file_format(value);
  else if (key == "out" || key == "out_dir") config.out_dir = value;
  else if (key == "model_kind" || key == "model")
    t.model_kind = parse_model_kind(value);
  else if (key == "encoder") {
    t.encoder = value;
    apply_encoder_preset(t);
  } else if (key == "learning_rate") t.learning_rate = to_double(value);
  else if (key == "epochs") t.epochs = to_int(value);
  else if (key == "batch_size") t.batch_size = to_int(value);
  else if (key == "validation_ratio") t.validation_ratio = to_double(value);
  else if (key == "seed")
    t.seed = static_cast<std::uint64_t>(std::stoull(value));
  else if (key == "max_len") t.max_len = to_int(value);
  else if (key == "use_rephrase") t.use_rephrase = to_bool(value);
  else if (key == "loss.kind") t.loss.kind = parse_loss_kind(value);
  else if (key == "loss.gamma") t.loss.gamma = to_double(value);
  else if (key == "loss.alpha_neg") t.loss.alpha_neg = to_double(value);
  else if (key == "loss.epsilon") t.loss.epsilon = to_double(value);
  else if (key == "loss.weight_cap") t.loss.weight_cap = to_double(value);
  else if (key == "encoder.dim") t.encoder_config.dim = to_int(value);
  else if (key == "encoder.layers") t.encoder_config.layers = to_int(value);
  else if (key == "encoder.ffn_dim") t.encoder_config.ffn_dim = to_int(value);
  else if (key == "dropout") t.dropout = to_double(value);
  else if (key == "gan.z_dim") t.gan.z_dim = to_int(value);
  else if (key == "gan.category_dim") t.gan.category_dim = to_int(value);
  else if (key == "gan.generator_lr") t.gan.generator_lr = to_double(value);
  else if (key == "preprocess.mention_token")
    t.preprocess.mention_token = value;
  else if (key == "preprocess.url_token") t.preprocess.url_token = value;
  else if (key == "preprocess.separator") t.preprocess.separator_token = value;
  else if (key == "preprocess.use_dialect") t.use_dialect = to_bool(value);
  else if (key.rfind("preprocess.dialect.", 0) == 0)
    t.preprocess.dialect_map[key.substr(std::string(
        "preprocess.dialect.").size())] = value;
  else
    throw SarcError(ErrorKind::BadConfig, "unknown setting '" + key + "'");
}

void apply_setting_expr(ExperimentConfig& config, const std::string& expr) {
  auto eq = expr.find('=');
  if (eq == std::string::npos)
    throw SarcError(ErrorKind::BadConfig,
                    "--set expects key=value, got '" + expr + "'");
  apply_setting(config, trim(expr.substr(0, eq)), trim(expr.substr(eq + 1)));
}

std::map<std::string, std::string> experiment_manifest(
    const ExperimentConfig& config) {
  const TrainConfig& t = config.train;
  std::map<std::string, std::string> m;
  m["version"] = kToolVersion;
  m["task"] = task_name(config.task);
  if (config.lang.has_value()) m["lang"] = language_name(*config.lang);
  m["data"] = config.data_path;
  m["data.format"] = config.data_format == FileFormat::csv ? "csv" : "jsonl";
  m["out"] = config.out_dir;
  m["model_kind"] = model_kind_name(t.model_kind);
  m["encoder"] = t.encoder;
  m["learning_rate"] = format_double(t.learning_rate);
  m["epochs"] = std::to_string(t.epochs);
  m["batch_size"] = std::to_string(t.batch_size);
  m["validation_ratio"] = format_double(t.validation_ratio);
  m["seed"] = std::to_string(t.seed);
  m["max_len"] = std::to_string(t.max_len);
  m["use_rephrase"] = t.use_rephrase ? "1" : "0";
  m["loss.kind"] = loss_kind_name(t.loss.kind);
  m["loss.gamma"] = format_double(t.loss.gamma);
  m["loss.alpha_neg"] = format_double(t.loss.alpha_neg);
  m["loss.epsilon"] = format_double(t.loss.epsilon);
  if (t.loss.weight_cap.has_value())
    m["loss.weight_cap"] = format_double(*t.loss.weight_cap);
  m["encoder.dim"] = std::to_string(t.encoder_config.dim);
  m["encoder.layers"] = std::to_string(t.encoder_config.layers);
  m["encoder.ffn_dim"] = std::to_string(t.encoder_config.ffn_dim);
  m["dropout"] = format_double(t.dropout);
  m["gan.z_dim"] = std::to_string(t.gan.z_dim);
  m["gan.category_dim"] = std::to_string(t.gan.category_dim);
  if (t.gan.generator_lr.has_value())
    m["gan.generator_lr"] = format_double(*t.gan.generator_lr);
  m["preprocess.mention_token"] = t.preprocess.mention_token;
  m["preprocess.url_token"] = t.preprocess.url_token;
  m["preprocess.separator"] = t.preprocess.separator_token;
  m["preprocess.use_dialect"] = t.use_dialect ? "1" : "0";
  for (const auto& [code, name] : t.preprocess.dialect_map)
    m["preprocess.dialect." + code] = name;
  return m;
}

TrainOutputs cmd_train(const ExperimentConfig& config) {
  if (config.data_path.empty())
    throw SarcError(ErrorKind::BadConfig, "no training data path configured");
  require_file(config.data_path);
  config.train.validate();
  if (config.task == Task::C)
    throw SarcError(ErrorKind::BadConfig,
                    "task C evaluates task-A checkpoints; train on task A");
  if (config.task == Task::B && config.train.model_kind != ModelKind::m3)
    throw SarcError(ErrorKind::BadConfig,
                    "task B trains the GAN model only (model_kind = m3)");

  std::vector<TweetRecord> records =
      load_dataset(config.data_path, config.data_format, config.task);
  if (config.task == Task::B) records = filter_sarcastic(records);

  FitResult result =
      config.train.model_kind == ModelKind::m3
          ? fit_gan(records, config.train, config.task)
          : fit(records, config.train, config.task);

  fs::create_directories(config.out_dir);
  TrainOutputs outputs;
  outputs.checkpoint_dir = (fs::path(config.out_dir) / "checkpoint").string();
  outputs.history_path = (fs::path(config.out_dir) / "history.jsonl").string();
  outputs.report_path =
      (fs::path(config.out_dir) / "validation_report.txt").string();

  save_checkpoint(result.model, outputs.checkpoint_dir);
  result.history.save_jsonl(outputs.history_path);
  save_manifest(experiment_manifest(config),
                (fs::path(config.out_dir) / "run_manifest.txt").string());

  const MetricReport& report = result.history.epochs.empty()
                                   ? MetricReport{}
                                   : result.history.epochs.back()
                                         .validation_metrics;
  write_text(outputs.report_path, report_table(report, config.task));
  write_text((fs::path(config.out_dir) / "validation_report.json").string(),
             report_json(report, config.task));
  return outputs;
}

MetricReport cmd_evaluate(const std::vector<std::string>& checkpoint_dirs,
                          const std::string& data_path, FileFormat format,
                          Task task, const std::string& out_dir) {
  require_file(data_path);
  EnsembleBundle bundle = load_bundle(checkpoint_dirs);
  bundle.validate(task);
  std::vector<TweetRecord> records = load_dataset(data_path, format, task);
  if (records.empty())
    throw SarcError(ErrorKind::EmptyInput, data_path + " is empty");

  MetricReport report;
  switch (task) {
    case Task::A: {
      std::vector<int> preds = ensemble_predict_binary(bundle, records);
      report = metrics_binary(preds, gold_labels(records));
      break;
    }
    case Task::B: {
      auto preds = ensemble_predict_multilabel(bundle, records);
      report = metrics_multilabel(preds, gold_categories(records));
      break;
    }
    case Task::C: {
      std::vector<PairRecord> pairs = group_pairs(records);
      std::vector<int> gold;
      for (const auto& pair : pairs) {
        if (!pair.sarcastic_index.has_value())
          throw SarcError(ErrorKind::MissingColumn,
                          "pair " + pair.id + " has no sarcastic_id gold");
        gold.push_back(*pair.sarcastic_index);
      }
      std::vector<int> decisions = ensemble_predict_pairs(bundle, pairs);
      report = metrics_binary(decisions, gold);
      break;
    }
  }
  report.ensemble_members = static_cast<int>(bundle.members.size());

  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    write_text((fs::path(out_dir) / "report.txt").string(),
               report_table(report, task));
    write_text((fs::path(out_dir) / "report.json").string(),
               report_json(report, task));
  }
  return report;
}

PredictFormat parse_predict_format(const std::string& s) {
  if (s == "text") return PredictFormat::text;
  if (s == "csv") return PredictFormat::csv;
  if (s == "jsonl") return PredictFormat::jsonl;
  throw SarcError(ErrorKind::BadConfig,
                  "predict format must be text, csv or jsonl");
}

void cmd_predict(const std::vector<std::string>& checkpoint_dirs,
                 const std::string& input_path, PredictFormat format,
                 Task task, const std::string& out_path) {
  EnsembleBundle bundle = load_bundle(checkpoint_dirs);
  bundle.validate(task);
  std::vector<TweetRecord> records =
      load_predict_records(input_path, format, task);

  std::ostringstream out;
  switch (task) {
    case Task::A: {
      for (int label : ensemble_predict_binary(bundle, records))
        out << label << "\n";
      break;
    }
    case Task::B: {
      for (const auto& row : ensemble_predict_multilabel(bundle, records)) {
        for (std::size_t i = 0; i < row.size(); ++i)
          out << (i ? "," : "") << row[i];
        out << "\n";
      }
      break;
    }
    case Task::C: {
      for (int idx : ensemble_predict_pairs(bundle, group_pairs(records)))
        out << idx << "\n";
      break;
    }
  }
  write_text(out_path, out.str());
}

std::optional<std::string> encoder_cache_dir() {
  const char* env = std::getenv("SARC_ENCODER_CACHE");
  if (env == nullptr || *env == '\0') return std::nullopt;
  return std::string(env);
}

}  // namespace sarc
