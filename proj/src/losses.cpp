#include "sarc/losses.hpp"

#include <algorithm>

#include "sarc/errors.hpp"

namespace sarc {

namespace {

void check_binary_shape(const ad::Var& logits,
                        const std::vector<int>& targets) {
  if (logits->value.cols() != 1)
    throw SarcError(ErrorKind::ShapeMismatch, "binary loss expects [n x 1]");
  if (logits->value.rows() != static_cast<Eigen::Index>(targets.size()))
    throw SarcError(ErrorKind::LengthMismatch, "logits vs targets");
}

void check_class_shape(const ad::Var& logits, const std::vector<int>& targets) {
  if (logits->value.cols() < 2)
    throw SarcError(ErrorKind::ShapeMismatch, "CE loss expects [n x k], k >= 2");
  if (logits->value.rows() != static_cast<Eigen::Index>(targets.size()))
    throw SarcError(ErrorKind::LengthMismatch, "logits vs targets");
  for (int t : targets)
    if (t < 0 || t >= logits->value.cols())
      throw SarcError(ErrorKind::BadLabel, "target class out of range");
}

// sign_i = -1 for positives, +1 for negatives: softplus(sign * logit) is the
// per-sample binary cross-entropy in its stable form.
ad::Matrix target_signs(const std::vector<int>& targets) {
  ad::Matrix s(static_cast<Eigen::Index>(targets.size()), 1);
  for (std::size_t i = 0; i < targets.size(); ++i)
    s(static_cast<Eigen::Index>(i), 0) = targets[i] == 1 ? -1.0 : 1.0;
  return s;
}

ad::Matrix per_sample(const std::vector<int>& targets, double if_pos,
                      double if_neg) {
  ad::Matrix w(static_cast<Eigen::Index>(targets.size()), 1);
  for (std::size_t i = 0; i < targets.size(); ++i)
    w(static_cast<Eigen::Index>(i), 0) = targets[i] == 1 ? if_pos : if_neg;
  return w;
}

// -log p(target) per row, [n x 1].
ad::Var neg_log_prob(const ad::Var& logits, const std::vector<int>& targets) {
  std::vector<Eigen::Index> cols(targets.begin(), targets.end());
  ad::Var lp = ad::gather_col_per_row(ad::log_softmax_rows(logits), cols);
  return ad::affine(lp, -1.0, 0.0);
}

// -log(1 - p_fake) per row for a k+1 softmax: lse(all) - lse(real columns).
ad::Var neg_log_not_fake(const ad::Var& logits) {
  Eigen::Index k = logits->value.cols() - 1;
  return ad::sub(ad::logsumexp_rows(logits),
                 ad::logsumexp_rows(ad::slice_cols(logits, 0, k)));
}

// -log p_fake per row: lse(all) - fake logit.
ad::Var neg_log_fake(const ad::Var& logits) {
  Eigen::Index k = logits->value.cols() - 1;
  std::vector<Eigen::Index> fake_col(
      static_cast<std::size_t>(logits->value.rows()), k);
  return ad::sub(ad::logsumexp_rows(logits),
                 ad::gather_col_per_row(logits, fake_col));
}

}  // namespace

LossKind parse_loss_kind(const std::string& s) {
  if (s == "bce") return LossKind::bce;
  if (s == "wbce") return LossKind::wbce;
  if (s == "bfl") return LossKind::bfl;
  if (s == "ce") return LossKind::ce;
  if (s == "wce") return LossKind::wce;
  if (s == "fl") return LossKind::fl;
  throw SarcError(ErrorKind::BadConfig, "unknown loss kind '" + s + "'");
}

const char* loss_kind_name(LossKind kind) {
  switch (kind) {
    case LossKind::bce: return "bce";
    case LossKind::wbce: return "wbce";
    case LossKind::bfl: return "bfl";
    case LossKind::ce: return "ce";
    case LossKind::wce: return "wce";
    case LossKind::fl: return "fl";
  }
  return "?";
}

BatchStats BatchStats::from_targets(const std::vector<int>& targets) {
  BatchStats s;
  s.batch_size = targets.size();
  for (int t : targets) {
    if (t == 1)
      ++s.positive_count;
    else
      ++s.negative_count;
  }
  return s;
}

BatchStats BatchStats::from_label_column(const ad::Matrix& targets,
                                         Eigen::Index col) {
  BatchStats s;
  s.batch_size = static_cast<std::size_t>(targets.rows());
  for (Eigen::Index r = 0; r < targets.rows(); ++r) {
    if (targets(r, col) == 1.0)
      ++s.positive_count;
    else
      ++s.negative_count;
  }
  return s;
}

ClassWeights class_weights(const BatchStats& stats, double epsilon,
                           double cap) {
  auto b = static_cast<double>(stats.batch_size);
  auto p = static_cast<double>(stats.positive_count);
  auto n = static_cast<double>(stats.negative_count);
  ClassWeights w;
  w.pos_weight = std::min(cap, (b - p) / (p + epsilon));
  w.neg_weight = std::min(cap, (b - n) / (n + epsilon));
  return w;
}

ClassWeights class_weights(const BatchStats& stats, const LossConfig& config) {
  return class_weights(stats, config.epsilon,
                       config.effective_cap(stats.batch_size));
}

ad::Var bce(const ad::Var& logits, const std::vector<int>& targets) {
  check_binary_shape(logits, targets);
  return ad::mean_all(ad::softplus(ad::cmul(logits, target_signs(targets))));
}

ad::Var weighted_bce(const ad::Var& logits, const std::vector<int>& targets,
                     double pos_weight) {
  check_binary_shape(logits, targets);
  ad::Var per = ad::softplus(ad::cmul(logits, target_signs(targets)));
  return ad::mean_all(ad::cmul(per, per_sample(targets, pos_weight, 1.0)));
}

ad::Var weighted_bce(const ad::Var& logits, const std::vector<int>& targets,
                     const BatchStats& stats, const LossConfig& config) {
  return weighted_bce(logits, targets, class_weights(stats, config).pos_weight);
}

ad::Var binary_focal(const ad::Var& logits, const std::vector<int>& targets,
                     const LossConfig& config) {
  check_binary_shape(logits, targets);
  if (config.gamma < 0.0)
    throw SarcError(ErrorKind::BadConfig, "focal gamma must be >= 0");
  // t = sign * logit; p_t = sigmoid(-t); loss = alpha * (1-p_t)^g * -log p_t
  //                                            = alpha * sigmoid(t)^g * softplus(t).
  ad::Var t = ad::cmul(logits, target_signs(targets));
  ad::Var modulation = ad::pow_(ad::sigmoid(t), config.gamma);
  ad::Var entropy = ad::softplus(t);
  ad::Var per = ad::hadamard(modulation, entropy);
  return ad::mean_all(
      ad::cmul(per, per_sample(targets, config.alpha_pos(), config.alpha_neg)));
}

ad::Var ce(const ad::Var& logits, const std::vector<int>& targets) {
  check_class_shape(logits, targets);
  return ad::mean_all(neg_log_prob(logits, targets));
}

ad::Var weighted_ce(const ad::Var& logits, const std::vector<int>& targets,
                    double pos_weight, double neg_weight) {
  check_class_shape(logits, targets);
  return ad::mean_all(ad::cmul(neg_log_prob(logits, targets),
                               per_sample(targets, pos_weight, neg_weight)));
}

ad::Var weighted_ce(const ad::Var& logits, const std::vector<int>& targets,
                    const BatchStats& stats, const LossConfig& config) {
  ClassWeights w = class_weights(stats, config);
  return weighted_ce(logits, targets, w.pos_weight, w.neg_weight);
}

ad::Var focal(const ad::Var& logits, const std::vector<int>& targets,
              const LossConfig& config) {
  check_class_shape(logits, targets);
  if (config.gamma < 0.0)
    throw SarcError(ErrorKind::BadConfig, "focal gamma must be >= 0");
  std::vector<Eigen::Index> cols(targets.begin(), targets.end());
  ad::Var lp = ad::gather_col_per_row(ad::log_softmax_rows(logits), cols);
  ad::Var p = ad::exp_(lp);
  ad::Var modulation = ad::pow_(ad::affine(p, -1.0, 1.0), config.gamma);
  ad::Var per = ad::hadamard(modulation, ad::affine(lp, -1.0, 0.0));
  return ad::mean_all(
      ad::cmul(per, per_sample(targets, config.alpha_pos(), config.alpha_neg)));
}

ad::Var supervised_binary_loss(const ad::Var& logits,
                               const std::vector<int>& targets,
                               const LossConfig& config) {
  switch (config.kind) {
    case LossKind::bce:
    case LossKind::ce:
      return bce(logits, targets);
    case LossKind::wbce:
    case LossKind::wce:
      return weighted_bce(logits, targets, BatchStats::from_targets(targets),
                          config);
    case LossKind::bfl:
    case LossKind::fl:
      return binary_focal(logits, targets, config);
  }
  throw SarcError(ErrorKind::BadConfig, "unreachable loss kind");
}

ad::Var supervised_multiclass_loss(const ad::Var& logits,
                                   const std::vector<int>& targets,
                                   const LossConfig& config) {
  switch (config.kind) {
    case LossKind::ce:
    case LossKind::bce:
      return ce(logits, targets);
    case LossKind::wce:
    case LossKind::wbce:
      return weighted_ce(logits, targets, BatchStats::from_targets(targets),
                         config);
    case LossKind::fl:
    case LossKind::bfl:
      return focal(logits, targets, config);
  }
  throw SarcError(ErrorKind::BadConfig, "unreachable loss kind");
}

ad::Var multilabel_loss(const ad::Var& logits, const ad::Matrix& targets,
                        const LossConfig& config) {
  if (logits->value.rows() != targets.rows() ||
      logits->value.cols() != targets.cols())
    throw SarcError(ErrorKind::ShapeMismatch, "multilabel_loss");
  const Eigen::Index n = targets.rows();
  const Eigen::Index labels = targets.cols();

  ad::Matrix signs(n, labels);
  for (Eigen::Index r = 0; r < n; ++r)
    for (Eigen::Index c = 0; c < labels; ++c)
      signs(r, c) = targets(r, c) == 1.0 ? -1.0 : 1.0;
  ad::Var t = ad::cmul(logits, signs);

  switch (config.kind) {
    case LossKind::bce:
    case LossKind::ce:
      return ad::mean_all(ad::softplus(t));
    case LossKind::bfl:
    case LossKind::fl: {
      ad::Matrix alpha(n, labels);
      for (Eigen::Index r = 0; r < n; ++r)
        for (Eigen::Index c = 0; c < labels; ++c)
          alpha(r, c) = targets(r, c) == 1.0 ? config.alpha_pos()
                                             : config.alpha_neg;
      ad::Var per = ad::hadamard(ad::pow_(ad::sigmoid(t), config.gamma),
                                 ad::softplus(t));
      return ad::mean_all(ad::cmul(per, alpha));
    }
    case LossKind::wbce:
    case LossKind::wce: {
      ad::Matrix w(n, labels);
      for (Eigen::Index c = 0; c < labels; ++c) {
        BatchStats stats = BatchStats::from_label_column(targets, c);
        double pos_w = class_weights(stats, config).pos_weight;
        for (Eigen::Index r = 0; r < n; ++r)
          w(r, c) = targets(r, c) == 1.0 ? pos_w : 1.0;
      }
      return ad::mean_all(ad::cmul(ad::softplus(t), w));
    }
  }
  throw SarcError(ErrorKind::BadConfig, "unreachable loss kind");
}

DiscriminatorLoss discriminator_loss(const ad::Var& real_logits,
                                     const std::vector<int>& real_targets,
                                     const ad::Var& fake_logits,
                                     const LossConfig& config) {
  if (real_logits->value.cols() != fake_logits->value.cols())
    throw SarcError(ErrorKind::ShapeMismatch,
                    "real and fake logits disagree on k+1");
  Eigen::Index k = real_logits->value.cols() - 1;
  if (k < 2) throw SarcError(ErrorKind::ShapeMismatch, "need k >= 2 classes");

  ad::Var real_class_logits = ad::slice_cols(real_logits, 0, k);
  ad::Var supervised =
      supervised_multiclass_loss(real_class_logits, real_targets, config);
  ad::Var unsupervised = ad::add(ad::mean_all(neg_log_not_fake(real_logits)),
                                 ad::mean_all(neg_log_fake(fake_logits)));
  return {ad::add(supervised, unsupervised), supervised, unsupervised};
}

GeneratorLoss generator_loss(const ad::Var& fake_logits,
                             const ad::Var& real_features,
                             const ad::Var& fake_features) {
  if (real_features->value.cols() != fake_features->value.cols())
    throw SarcError(ErrorKind::ShapeMismatch, "feature widths disagree");
  ad::Var fooling = ad::mean_all(neg_log_not_fake(fake_logits));
  ad::Var matching = ad::sum_squares(
      ad::sub(ad::mean_rows(real_features), ad::mean_rows(fake_features)));
  return {ad::add(fooling, matching), fooling, matching};
}

DiscriminatorLoss multilabel_discriminator_loss(
    const ad::Var& real_category_logits, const ad::Matrix& real_targets,
    const ad::Var& real_fake_logit, const ad::Var& fake_fake_logit,
    const LossConfig& config) {
  ad::Var supervised = multilabel_loss(real_category_logits, real_targets,
                                       config);
  // -log(1 - sigmoid(f)) = softplus(f) on reals, -log sigmoid(f) =
  // softplus(-f) on fakes.
  ad::Var unsupervised =
      ad::add(ad::mean_all(ad::softplus(real_fake_logit)),
              ad::mean_all(ad::softplus(ad::affine(fake_fake_logit, -1.0, 0.0))));
  return {ad::add(supervised, unsupervised), supervised, unsupervised};
}

GeneratorLoss multilabel_generator_loss(const ad::Var& fake_fake_logit,
                                        const ad::Var& real_features,
                                        const ad::Var& fake_features) {
  if (real_features->value.cols() != fake_features->value.cols())
    throw SarcError(ErrorKind::ShapeMismatch, "feature widths disagree");
  ad::Var fooling = ad::mean_all(ad::softplus(fake_fake_logit));
  ad::Var matching = ad::sum_squares(
      ad::sub(ad::mean_rows(real_features), ad::mean_rows(fake_features)));
  return {ad::add(fooling, matching), fooling, matching};
}

}  // namespace sarc
