#ifndef SARC_TRAINING_HPP_
#define SARC_TRAINING_HPP_

#include <optional>
#include <string>
#include <vector>

#include "sarc/checkpoint.hpp"
#include "sarc/data.hpp"
#include "sarc/evaluation.hpp"

namespace sarc {

// lr(step) = base * (1 - step/total); lr(0) = base, lr(total) = 0.
double linear_schedule(long step, long total_steps, double base_lr);

class AdamOptimizer {
 public:
  AdamOptimizer(std::vector<NamedParam> params, double beta1 = 0.9,
                double beta2 = 0.999, double epsilon = 1e-8);

  void zero_grad();
  void step(double lr);

  const std::vector<NamedParam>& params() const { return params_; }

 private:
  std::vector<NamedParam> params_;
  std::vector<ad::Matrix> m_, v_;
  double beta1_, beta2_, epsilon_;
  long t_ = 0;
};

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  double validation_loss = 0.0;
  MetricReport validation_metrics;
  // GAN-only extras; unset for the classifier heads.
  std::optional<double> discriminator_loss;
  std::optional<double> generator_loss;
  std::optional<double> feature_matching;
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;

  void save_jsonl(const std::string& path) const;
};

struct FitResult {
  TrainedModel model;
  TrainHistory history;
};

// Fits model 1 or model 2: stratified split, optional rephrase augmentation
// of the train side, Adam with the linear schedule, per-batch stats for the
// weighted losses, final-epoch checkpoint. Deterministic under config.seed.
FitResult fit(const std::vector<TweetRecord>& records,
              const TrainConfig& config, Task task = Task::A);

// Fits model 3: per batch, a discriminator update on real+fake features
// followed by a generator update with the discriminator frozen.
FitResult fit_gan(const std::vector<TweetRecord>& records,
                  const TrainConfig& config, Task task = Task::A);

}  // namespace sarc

#endif  // SARC_TRAINING_HPP_
