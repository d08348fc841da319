#ifndef SARC_CHECKPOINT_HPP_
#define SARC_CHECKPOINT_HPP_

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "sarc/data.hpp"
#include "sarc/encoder.hpp"
#include "sarc/losses.hpp"
#include "sarc/models.hpp"
#include "sarc/text.hpp"

namespace sarc {

inline constexpr const char* kToolVersion = "0.1.0";

struct GanConfig {
  int z_dim = 100;
  int category_dim = 50;
  // Generator steps fall back to the main learning rate when unset.
  std::optional<double> generator_lr;
};

struct TrainConfig {
  double learning_rate = 1e-5;
  int epochs = 10;
  int batch_size = 16;
  double validation_ratio = 0.2;
  std::uint64_t seed = 42;
  int max_len = 128;
  LossConfig loss;
  bool use_rephrase = false;
  ModelKind model_kind = ModelKind::m1;
  std::string encoder = "reference";

  // Desk-scale knobs beyond the named hyperparameters.
  EncoderConfig encoder_config;  // max_len is copied from above at build time
  double dropout = 0.1;
  GanConfig gan;
  PreprocessConfig preprocess = multilingual_preprocess();
  bool use_dialect = false;

  void validate() const;
};

// Applies the encoder preset's preprocessing defaults (mention/url tokens,
// dialect switch) to the config.
void apply_encoder_preset(TrainConfig& config);

// A trained model with everything inference needs.
struct TrainedModel {
  ModelKind model_kind = ModelKind::m1;
  Task task = Task::A;
  TrainConfig config;

  std::shared_ptr<TinyEncoder> encoder;
  std::shared_ptr<AttentionPool> pool;
  std::shared_ptr<ClassifierHead> head;           // m1 / m2
  std::shared_ptr<Generator> generator;           // m3
  std::shared_ptr<Discriminator> discriminator;   // m3

  std::vector<NamedParam> all_params() const;
  std::vector<NamedParam> discriminator_side_params() const;  // encoder+pool+head/disc
  std::vector<NamedParam> generator_side_params() const;
};

// Checkpoint layout: <dir>/manifest.txt (key = value lines),
// <dir>/vocab.txt, <dir>/params.bin.
void save_checkpoint(const TrainedModel& model, const std::string& dir);
TrainedModel load_checkpoint(const std::string& dir);

// Raw parameter blob io, exposed for tests.
void save_params(const std::vector<NamedParam>& params,
                 const std::string& path);
std::map<std::string, ad::Matrix> load_params(const std::string& path);

// Plain key = value manifest io.
void save_manifest(const std::map<std::string, std::string>& entries,
                   const std::string& path);
std::map<std::string, std::string> load_manifest(const std::string& path);

std::string format_double(double v);

}  // namespace sarc

#endif  // SARC_CHECKPOINT_HPP_
