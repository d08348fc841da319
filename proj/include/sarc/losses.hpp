#ifndef SARC_LOSSES_HPP_
#define SARC_LOSSES_HPP_

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "sarc/ad.hpp"

namespace sarc {

enum class LossKind { bce, wbce, bfl, ce, wce, fl };

LossKind parse_loss_kind(const std::string& s);
const char* loss_kind_name(LossKind kind);

struct LossConfig {
  LossKind kind = LossKind::bce;
  double gamma = 2.0;
  double alpha_neg = 0.8;  // weight of the negative class
  double epsilon = 1e-8;
  // Weight cap; falls back to the batch size when unset.
  std::optional<double> weight_cap;

  double alpha_pos() const { return 1.0 - alpha_neg; }
  double effective_cap(std::size_t batch_size) const {
    return weight_cap.value_or(static_cast<double>(batch_size));
  }
};

struct BatchStats {
  std::size_t batch_size = 0;
  std::size_t positive_count = 0;
  std::size_t negative_count = 0;

  static BatchStats from_targets(const std::vector<int>& targets);
  // Stats of one label column of a [n x 6] target matrix.
  static BatchStats from_label_column(const ad::Matrix& targets,
                                      Eigen::Index col);
};

struct ClassWeights {
  double pos_weight = 1.0;
  double neg_weight = 1.0;
};

// pos = min(cap, (batch - positives) / (positives + eps)), and symmetrically
// for the negative class.
ClassWeights class_weights(const BatchStats& stats, double epsilon, double cap);
ClassWeights class_weights(const BatchStats& stats, const LossConfig& config);

// --- binary losses (logits [n x 1], targets in {0,1}) ------------------------
ad::Var bce(const ad::Var& logits, const std::vector<int>& targets);
// Positive terms scaled by pos_weight; negatives unweighted.
ad::Var weighted_bce(const ad::Var& logits, const std::vector<int>& targets,
                     double pos_weight);
ad::Var weighted_bce(const ad::Var& logits, const std::vector<int>& targets,
                     const BatchStats& stats, const LossConfig& config);
ad::Var binary_focal(const ad::Var& logits, const std::vector<int>& targets,
                     const LossConfig& config);

// --- multi-class losses (logits [n x k], targets are class indices) ----------
ad::Var ce(const ad::Var& logits, const std::vector<int>& targets);
// Binary-task weighting: class 1 terms scaled by pos_weight, class 0 terms
// by neg_weight.
ad::Var weighted_ce(const ad::Var& logits, const std::vector<int>& targets,
                    double pos_weight, double neg_weight);
ad::Var weighted_ce(const ad::Var& logits, const std::vector<int>& targets,
                    const BatchStats& stats, const LossConfig& config);
ad::Var focal(const ad::Var& logits, const std::vector<int>& targets,
              const LossConfig& config);

// Dispatch on config.kind. Binary variants require 1-logit input; the CE
// family requires [n x k]; for the CE family the binary kinds map to their
// multi-class counterparts (bce -> ce, wbce -> wce, bfl -> fl).
ad::Var supervised_binary_loss(const ad::Var& logits,
                               const std::vector<int>& targets,
                               const LossConfig& config);
ad::Var supervised_multiclass_loss(const ad::Var& logits,
                                   const std::vector<int>& targets,
                                   const LossConfig& config);

// --- multi-label loss (logits [n x 6], targets 0/1 matrix) -------------------
// Per-label binary loss (bce, bfl or wbce with per-label stats), averaged
// over labels and samples.
ad::Var multilabel_loss(const ad::Var& logits, const ad::Matrix& targets,
                        const LossConfig& config);

// --- GAN objectives (k+1 softmax scheme) --------------------------------------
struct DiscriminatorLoss {
  ad::Var total;
  ad::Var supervised;
  ad::Var unsupervised;
};
// Supervised: cross-entropy over the k real classes (the k+1 softmax
// restricted to real classes renormalizes to exactly this), in the variant
// selected by config. Unsupervised: -log(1 - p_fake) on real samples plus
// -log p_fake on fakes.
DiscriminatorLoss discriminator_loss(const ad::Var& real_logits,
                                     const std::vector<int>& real_targets,
                                     const ad::Var& fake_logits,
                                     const LossConfig& config);

struct GeneratorLoss {
  ad::Var total;
  ad::Var fooling;           // -mean log(1 - p_fake) on fakes
  ad::Var feature_matching;  // || mean(real) - mean(fake) ||^2
};
GeneratorLoss generator_loss(const ad::Var& fake_logits,
                             const ad::Var& real_features,
                             const ad::Var& fake_features);

// --- GAN objectives, multi-label discriminator (sigmoid fake logit) ----------
DiscriminatorLoss multilabel_discriminator_loss(
    const ad::Var& real_category_logits, const ad::Matrix& real_targets,
    const ad::Var& real_fake_logit, const ad::Var& fake_fake_logit,
    const LossConfig& config);
GeneratorLoss multilabel_generator_loss(const ad::Var& fake_fake_logit,
                                        const ad::Var& real_features,
                                        const ad::Var& fake_features);

}  // namespace sarc

#endif  // SARC_LOSSES_HPP_
