#include "sarc/checkpoint.hpp"

#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>

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

void write_u64(std::ofstream& out, std::uint64_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

std::uint64_t read_u64(std::ifstream& in) {
  std::uint64_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof(v));
  return v;
}

const char kParamsMagic[8] = {'S', 'A', 'R', 'C', 'P', 'A', 'R', '1'};

std::string require(const std::map<std::string, std::string>& m,
                    const std::string& key) {
  auto it = m.find(key);
  if (it == m.end())
    throw SarcError(ErrorKind::BadConfig, "manifest missing key '" + key + "'");
  return it->second;
}

double to_double(const std::string& s) {
  try {
    return std::stod(s);
  } catch (const std::exception&) {
    throw SarcError(ErrorKind::BadConfig, "bad number '" + s + "'");
  }
}

int to_int(const std::string& s) {
  try {
    return std::stoi(s);
  } catch (const std::exception&) {
    throw SarcError(ErrorKind::BadConfig, "bad integer '" + s + "'");
  }
}

bool to_bool(const std::string& s) {
  if (s == "1" || s == "true") return true;
  if (s == "0" || s == "false") return false;
  throw SarcError(ErrorKind::BadConfig, "bad flag '" + s + "'");
}

ad::Var pull(std::map<std::string, ad::Matrix>& blob, const std::string& name) {
  auto it = blob.find(name);
  if (it == blob.end())
    throw SarcError(ErrorKind::BadConfig,
                    "checkpoint blob missing tensor '" + name + "'");
  return ad::parameter(it->second);
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void TrainConfig::validate() const {
  if (learning_rate <= 0) throw SarcError(ErrorKind::BadConfig, "learning_rate");
  if (epochs <= 0) throw SarcError(ErrorKind::BadConfig, "epochs");
  if (batch_size <= 0) throw SarcError(ErrorKind::BadConfig, "batch_size");
  if (!(validation_ratio > 0.0 && validation_ratio < 1.0))
    throw SarcError(ErrorKind::BadConfig, "validation_ratio must be in (0,1)");
  if (max_len < 2) throw SarcError(ErrorKind::BadConfig, "max_len");
  if (encoder_config.dim <= 0 || encoder_config.layers <= 0 ||
      encoder_config.ffn_dim <= 0)
    throw SarcError(ErrorKind::BadConfig, "encoder dims");
  if (dropout < 0.0 || dropout >= 1.0)
    throw SarcError(ErrorKind::BadConfig, "dropout");
  if (loss.gamma < 0.0) throw SarcError(ErrorKind::BadConfig, "loss.gamma");
  if (loss.alpha_neg < 0.0 || loss.alpha_neg > 1.0)
    throw SarcError(ErrorKind::BadConfig, "loss.alpha_neg");
  if (loss.epsilon <= 0.0) throw SarcError(ErrorKind::BadConfig, "loss.epsilon");
  if (gan.z_dim <= 0 || gan.category_dim <= 0)
    throw SarcError(ErrorKind::BadConfig, "gan dims");
}

void apply_encoder_preset(TrainConfig& config) {
  EncoderPreset preset = encoder_preset(config.encoder);
  std::map<std::string, std::string> dialects = {};
  // Keep any dialect names the user already configured.
  auto existing = config.preprocess.dialect_map;
  config.preprocess = preset.preprocess;
  config.preprocess.dialect_map = existing;
  config.use_dialect = preset.use_dialect;
}

std::vector<NamedParam> TrainedModel::all_params() const {
  std::vector<NamedParam> params = discriminator_side_params();
  if (generator) generator->collect_params(params);
  return params;
}

std::vector<NamedParam> TrainedModel::discriminator_side_params() const {
  std::vector<NamedParam> params;
  if (encoder) encoder->collect_params(params);
  if (pool) pool->collect_params(params);
  if (head) head->collect_params("head", params);
  if (discriminator) discriminator->collect_params(params);
  return params;
}

std::vector<NamedParam> TrainedModel::generator_side_params() const {
  std::vector<NamedParam> params;
  if (generator) generator->collect_params(params);
  return params;
}

void save_params(const std::vector<NamedParam>& params,
                 const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw SarcError(ErrorKind::IoError, "cannot write " + path);
  out.write(kParamsMagic, sizeof(kParamsMagic));
  write_u64(out, params.size());
  for (const auto& [name, var] : params) {
    write_u64(out, name.size());
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    const ad::Matrix& m = var->value;
    write_u64(out, static_cast<std::uint64_t>(m.rows()));
    write_u64(out, static_cast<std::uint64_t>(m.cols()));
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      for (Eigen::Index c = 0; c < m.cols(); ++c) {
        double v = m(r, c);
        out.write(reinterpret_cast<const char*>(&v), sizeof(v));
      }
  }
}

std::map<std::string, ad::Matrix> load_params(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SarcError(ErrorKind::IoError, "cannot open " + path);
  char magic[8];
  in.read(magic, sizeof(magic));
  if (std::memcmp(magic, kParamsMagic, sizeof(magic)) != 0)
    throw SarcError(ErrorKind::IoError, "bad params blob magic in " + path);
  std::map<std::string, ad::Matrix> blob;
  std::uint64_t count = read_u64(in);
  for (std::uint64_t i = 0; i < count; ++i) {
    std::uint64_t name_len = read_u64(in);
    std::string name(name_len, '\0');
    in.read(name.data(), static_cast<std::streamsize>(name_len));
    auto rows = static_cast<Eigen::Index>(read_u64(in));
    auto cols = static_cast<Eigen::Index>(read_u64(in));
    ad::Matrix m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r)
      for (Eigen::Index c = 0; c < cols; ++c) {
        double v = 0;
        in.read(reinterpret_cast<char*>(&v), sizeof(v));
        m(r, c) = v;
      }
    if (!in)
      throw SarcError(ErrorKind::IoError, "truncated params blob " + path);
    blob.emplace(std::move(name), std::move(m));
  }
  return blob;
}

void save_manifest(const std::map<std::string, std::string>& entries,
                   const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw SarcError(ErrorKind::IoError, "cannot write " + path);
  for (const auto& [k, v] : entries) out << k << " = " << v << "\n";
}

std::map<std::string, std::string> load_manifest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SarcError(ErrorKind::IoError, "cannot open " + path);
  std::map<std::string, std::string> entries;
  std::string line;
  while (std::getline(in, line)) {
    std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    auto eq = t.find('=');
    if (eq == std::string::npos)
      throw SarcError(ErrorKind::BadConfig, "bad manifest line: " + line);
    entries[trim(t.substr(0, eq))] = trim(t.substr(eq + 1));
  }
  return entries;
}

void save_checkpoint(const TrainedModel& model, const std::string& dir) {
  fs::create_directories(dir);
  const TrainConfig& c = model.config;

  std::map<std::string, std::string> m;
  m["format"] = "sarc-checkpoint-1";
  m["version"] = kToolVersion;
  m["model_kind"] = model_kind_name(model.model_kind);
  m["task"] = task_name(model.task);
  m["encoder"] = c.encoder;
  m["encoder.dim"] = std::to_string(c.encoder_config.dim);
  m["encoder.layers"] = std::to_string(c.encoder_config.layers);
  m["encoder.ffn_dim"] = std::to_string(c.encoder_config.ffn_dim);
  m["encoder.max_len"] = std::to_string(c.encoder_config.max_len);
  m["vocab_size"] = std::to_string(model.encoder->vocab().size());
  m["loss.kind"] = loss_kind_name(c.loss.kind);
  m["loss.gamma"] = format_double(c.loss.gamma);
  m["loss.alpha_neg"] = format_double(c.loss.alpha_neg);
  m["loss.epsilon"] = format_double(c.loss.epsilon);
  if (c.loss.weight_cap.has_value())
    m["loss.weight_cap"] = format_double(*c.loss.weight_cap);
  m["train.learning_rate"] = format_double(c.learning_rate);
  m["train.epochs"] = std::to_string(c.epochs);
  m["train.batch_size"] = std::to_string(c.batch_size);
  m["train.validation_ratio"] = format_double(c.validation_ratio);
  m["train.seed"] = std::to_string(c.seed);
  m["train.max_len"] = std::to_string(c.max_len);
  m["train.use_rephrase"] = c.use_rephrase ? "1" : "0";
  m["train.dropout"] = format_double(c.dropout);
  m["preprocess.mention_token"] = c.preprocess.mention_token;
  m["preprocess.url_token"] = c.preprocess.url_token;
  m["preprocess.separator"] = c.preprocess.separator_token;
  m["preprocess.use_dialect"] = c.use_dialect ? "1" : "0";
  for (const auto& [code, name] : c.preprocess.dialect_map)
    m["preprocess.dialect." + code] = name;
  if (model.model_kind == ModelKind::m3) {
    m["gan.z_dim"] = std::to_string(c.gan.z_dim);
    m["gan.category_dim"] = std::to_string(c.gan.category_dim);
    m["gan.category_count"] =
        std::to_string(model.generator->category_count());
    if (c.gan.generator_lr.has_value())
      m["gan.generator_lr"] = format_double(*c.gan.generator_lr);
  }
  save_manifest(m, (fs::path(dir) / "manifest.txt").string());
  model.encoder->vocab().save((fs::path(dir) / "vocab.txt").string());
  save_params(model.all_params(), (fs::path(dir) / "params.bin").string());
}

TrainedModel load_checkpoint(const std::string& dir) {
  auto m = load_manifest((fs::path(dir) / "manifest.txt").string());
  if (require(m, "format") != "sarc-checkpoint-1")
    throw SarcError(ErrorKind::BadConfig, "unknown checkpoint format in " + dir);

  TrainedModel model;
  model.model_kind = parse_model_kind(require(m, "model_kind"));
  model.task = parse_task(require(m, "task"));

  TrainConfig c;
  c.encoder = require(m, "encoder");
  c.encoder_config.dim = to_int(require(m, "encoder.dim"));
  c.encoder_config.layers = to_int(require(m, "encoder.layers"));
  c.encoder_config.ffn_dim = to_int(require(m, "encoder.ffn_dim"));
  c.encoder_config.max_len = to_int(require(m, "encoder.max_len"));
  c.loss.kind = parse_loss_kind(require(m, "loss.kind"));
  c.loss.gamma = to_double(require(m, "loss.gamma"));
  c.loss.alpha_neg = to_double(require(m, "loss.alpha_neg"));
  c.loss.epsilon = to_double(require(m, "loss.epsilon"));
  if (m.count("loss.weight_cap"))
    c.loss.weight_cap = to_double(m.at("loss.weight_cap"));
  c.learning_rate = to_double(require(m, "train.learning_rate"));
  c.epochs = to_int(require(m, "train.epochs"));
  c.batch_size = to_int(require(m, "train.batch_size"));
  c.validation_ratio = to_double(require(m, "train.validation_ratio"));
  c.seed = static_cast<std::uint64_t>(
      std::stoull(require(m, "train.seed")));
  c.max_len = to_int(require(m, "train.max_len"));
  c.use_rephrase = to_bool(require(m, "train.use_rephrase"));
  c.dropout = to_double(require(m, "train.dropout"));
  c.preprocess.mention_token = require(m, "preprocess.mention_token");
  c.preprocess.url_token = require(m, "preprocess.url_token");
  c.preprocess.separator_token = require(m, "preprocess.separator");
  c.use_dialect = to_bool(require(m, "preprocess.use_dialect"));
  for (const auto& [k, v] : m) {
    const std::string prefix = "preprocess.dialect.";
    if (k.rfind(prefix, 0) == 0)
      c.preprocess.dialect_map[k.substr(prefix.size())] = v;
  }
  c.model_kind = model.model_kind;

  Vocabulary vocab = Vocabulary::load((fs::path(dir) / "vocab.txt").string());
  if (vocab.size() != to_int(require(m, "vocab_size")))
    throw SarcError(ErrorKind::BadConfig, "vocab size mismatch in " + dir);
  auto blob = load_params((fs::path(dir) / "params.bin").string());

  // Rebuild the encoder with fresh parameters, then overwrite their values
  // from the blob (structure comes from the manifest, numbers from the blob).
  model.encoder =
      std::make_shared<TinyEncoder>(c.encoder_config, vocab, /*seed=*/0);
  std::vector<NamedParam> enc_params;
  model.encoder->collect_params(enc_params);
  for (auto& [name, var] : enc_params) {
    auto it = blob.find(name);
    if (it == blob.end())
      throw SarcError(ErrorKind::BadConfig, "missing tensor '" + name + "'");
    if (it->second.rows() != var->value.rows() ||
        it->second.cols() != var->value.cols())
      throw SarcError(ErrorKind::BadConfig, "tensor shape mismatch '" + name +
                                                "'");
    var->value = it->second;
  }
  model.pool = std::make_shared<AttentionPool>(
      pull(blob, "attention_pool.weight"), pull(blob, "attention_pool.bias"),
      pull(blob, "attention_pool.context_vector"));

  if (model.model_kind == ModelKind::m3) {
    c.gan.z_dim = to_int(require(m, "gan.z_dim"));
    c.gan.category_dim = to_int(require(m, "gan.category_dim"));
    if (m.count("gan.generator_lr"))
      c.gan.generator_lr = to_double(m.at("gan.generator_lr"));
    model.generator = std::make_shared<Generator>(
        pull(blob, "generator.cat_embedding"), pull(blob, "generator.w1"),
        pull(blob, "generator.b1"), pull(blob, "generator.w2"),
        pull(blob, "generator.b2"), pull(blob, "generator.w3"),
        pull(blob, "generator.b3"), c.dropout);
    model.discriminator = std::make_shared<Discriminator>(
        pull(blob, "discriminator.w1"), pull(blob, "discriminator.b1"),
        pull(blob, "discriminator.w2"), pull(blob, "discriminator.b2"),
        pull(blob, "discriminator.w3"), pull(blob, "discriminator.b3"),
        c.dropout);
  } else {
    model.head = std::make_shared<ClassifierHead>(
        pull(blob, "head.w1"), pull(blob, "head.b1"), pull(blob, "head.w2"),
        pull(blob, "head.b2"), c.dropout);
  }
  model.config = std::move(c);
  return model;
}

}  // namespace sarc
