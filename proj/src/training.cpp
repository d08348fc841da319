#include "sarc/training.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "json.hpp"
#include "sarc/errors.hpp"
#include "sarc/text.hpp"

namespace sarc {

namespace {

struct Example {
  std::string text;           // preprocessed
  int label = 0;              // task A target
  std::array<int, 6> cats{};  // task B target
};

std::string prepare(const TweetRecord& rec, const TrainConfig& config) {
  std::string text = normalize(rec.text, config.preprocess);
  if (config.use_dialect)
    text = inject_dialect(text, rec.dialect, config.preprocess);
  return text;
}

std::vector<Example> to_examples(const std::vector<TweetRecord>& records,
                                 const TrainConfig& config, Task task) {
  std::vector<Example> out;
  out.reserve(records.size());
  for (const auto& rec : records) {
    Example ex;
    ex.text = prepare(rec, config);
    if (task == Task::A) {
      if (!rec.label.has_value())
        throw SarcError(ErrorKind::BadRecord,
                        "record " + rec.id + " has no label");
      ex.label = *rec.label;
    } else {
      if (!rec.categories.has_value())
        throw SarcError(ErrorKind::BadRecord,
                        "record " + rec.id + " has no category labels");
      ex.cats = *rec.categories;
    }
    out.push_back(std::move(ex));
  }
  return out;
}

ad::Matrix category_matrix(const std::vector<Example>& batch) {
  ad::Matrix m(static_cast<Eigen::Index>(batch.size()), 6);
  for (std::size_t r = 0; r < batch.size(); ++r)
    for (std::size_t c = 0; c < 6; ++c)
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
          batch[r].cats[c];
  return m;
}

void check_finite(const ad::Var& loss, int epoch, std::size_t batch) {
  double v = loss->value(0, 0);
  if (!std::isfinite(v))
    throw SarcError(ErrorKind::NonFiniteLoss,
                    "loss " + std::to_string(v) + " at epoch " +
                        std::to_string(epoch + 1) + ", batch " +
                        std::to_string(batch));
}

// Fused features for a batch (graph mode).
ad::Var forward_features(const TrainedModel& model,
                         const std::vector<Example>& batch) {
  std::vector<std::string> texts;
  texts.reserve(batch.size());
  for (const auto& ex : batch) texts.push_back(ex.text);
  TokenBatch tb = model.encoder->tokenize(texts);
  EncodedVars enc = model.encoder->forward(tb);
  AttentionPool::Pooled pooled =
      model.pool->forward(enc.token_states, enc.mask, enc.batch, enc.len);
  return fuse(enc.pooled, pooled.context);
}

std::vector<int> labels_of(const std::vector<Example>& batch) {
  std::vector<int> labels;
  labels.reserve(batch.size());
  for (const auto& ex : batch) labels.push_back(ex.label);
  return labels;
}

std::vector<std::vector<Example>> make_batches(const std::vector<Example>& data,
                                               const std::vector<std::size_t>& order,
                                               std::size_t batch_size) {
  std::vector<std::vector<Example>> batches;
  for (std::size_t start = 0; start < order.size(); start += batch_size) {
    std::vector<Example> batch;
    for (std::size_t i = start; i < std::min(order.size(), start + batch_size);
         ++i)
      batch.push_back(data[order[i]]);
    batches.push_back(std::move(batch));
  }
  return batches;
}

// Validation pass for the classifier heads; eval mode throughout.
std::pair<double, MetricReport> validate_classifier(
    const TrainedModel& model, const std::vector<Example>& val,
    const TrainConfig& config) {
  if (val.empty()) return {0.0, MetricReport{}};
  double loss_sum = 0.0;
  std::vector<int> preds, gold;
  std::vector<std::size_t> order(val.size());
  std::iota(order.begin(), order.end(), 0);
  for (const auto& batch :
       make_batches(val, order, static_cast<std::size_t>(config.batch_size))) {
    ad::Var fused = forward_features(model, batch);
    ad::Var logits = model.head->forward(fused);
    std::vector<int> labels = labels_of(batch);
    ad::Var loss = model.model_kind == ModelKind::m1
                       ? supervised_binary_loss(logits, labels, config.loss)
                       : supervised_multiclass_loss(logits, labels, config.loss);
    loss_sum += loss->value(0, 0) * static_cast<double>(batch.size());
    for (std::size_t i = 0; i < batch.size(); ++i) {
      auto r = static_cast<Eigen::Index>(i);
      int p;
      if (model.model_kind == ModelKind::m1)
        p = logits->value(r, 0) >= 0.0 ? 1 : 0;  // sigmoid(x) >= 0.5 iff x >= 0
      else
        p = logits->value(r, 1) >= logits->value(r, 0) ? 1 : 0;
      preds.push_back(p);
      gold.push_back(labels[i]);
    }
  }
  return {loss_sum / static_cast<double>(val.size()),
          metrics_binary(preds, gold)};
}

// Validation pass for the GAN discriminator.
std::pair<double, MetricReport> validate_gan(const TrainedModel& model,
                                             const std::vector<Example>& val,
                                             const TrainConfig& config,
                                             Task task) {
  if (val.empty()) return {0.0, MetricReport{}};
  double loss_sum = 0.0;
  std::vector<int> preds, gold;
  std::vector<std::array<int, 6>> cat_preds, cat_gold;
  std::vector<std::size_t> order(val.size());
  std::iota(order.begin(), order.end(), 0);
  for (const auto& batch :
       make_batches(val, order, static_cast<std::size_t>(config.batch_size))) {
    ad::Var fused = forward_features(model, batch);
    if (task == Task::A) {
      ad::Var logits = model.discriminator->forward(fused);
      std::vector<int> labels = labels_of(batch);
      ad::Var sup = supervised_multiclass_loss(
          ad::slice_cols(logits, 0, 2), labels, config.loss);
      loss_sum += sup->value(0, 0) * static_cast<double>(batch.size());
      for (std::size_t i = 0; i < batch.size(); ++i) {
        auto r = static_cast<Eigen::Index>(i);
        preds.push_back(logits->value(r, 1) >= logits->value(r, 0) ? 1 : 0);
        gold.push_back(labels[i]);
      }
    } else {
      TaskBLogits tb = taskB_discriminator_forward(fused,
                                                   *model.discriminator);
      ad::Matrix targets = category_matrix(batch);
      ad::Var sup = multilabel_loss(tb.category_logits, targets, config.loss);
      loss_sum += sup->value(0, 0) * static_cast<double>(batch.size());
      for (std::size_t i = 0; i < batch.size(); ++i) {
        auto r = static_cast<Eigen::Index>(i);
        std::array<int, 6> p{};
        for (Eigen::Index c = 0; c < 6; ++c)
          p[static_cast<std::size_t>(c)] =
              tb.category_logits->value(r, c) >= 0.0 ? 1 : 0;
        cat_preds.push_back(p);
        cat_gold.push_back(batch[i].cats);
      }
    }
  }
  MetricReport report = task == Task::A
                            ? metrics_binary(preds, gold)
                            : metrics_multilabel(cat_preds, cat_gold);
  return {loss_sum / static_cast<double>(val.size()), report};
}

struct PreparedFit {
  std::vector<Example> train;
  std::vector<Example> validation;
};

PreparedFit prepare_fit(const std::vector<TweetRecord>& records,
                        const TrainConfig& config, Task task) {
  DatasetSplit split =
      stratified_split(records, config.validation_ratio, config.seed);
  std::vector<TweetRecord> train = split.train;
  // Augmentation strictly after the split, train side only; task B trains
  // on category-labeled records, which rephrases do not carry.
  if (config.use_rephrase && task == Task::A)
    train = augment_with_rephrases(train);
  PreparedFit out;
  out.train = to_examples(train, config, task);
  out.validation = to_examples(split.validation, config, task);
  return out;
}

Vocabulary build_vocab(const std::vector<Example>& train) {
  std::vector<std::string> texts;
  texts.reserve(train.size());
  for (const auto& ex : train) texts.push_back(ex.text);
  return Vocabulary::build(texts);
}

}  // namespace

double linear_schedule(long step, long total_steps, double base_lr) {
  if (total_steps <= 0 || step < 0 || step > total_steps)
    throw SarcError(ErrorKind::BadConfig, "linear_schedule step range");
  return base_lr *
         (1.0 - static_cast<double>(step) / static_cast<double>(total_steps));
}

AdamOptimizer::AdamOptimizer(std::vector<NamedParam> params, double beta1,
                             double beta2, double epsilon)
    : params_(std::move(params)),
      beta1_(beta1),
      beta2_(beta2),
      epsilon_(epsilon) {
  for (const auto& [name, var] : params_) {
    m_.push_back(ad::Matrix::Zero(var->value.rows(), var->value.cols()));
    v_.push_back(ad::Matrix::Zero(var->value.rows(), var->value.cols()));
  }
}

void AdamOptimizer::zero_grad() {
  for (auto& [name, var] : params_) var->zero_grad();
}

void AdamOptimizer::step(double lr) {
  ++t_;
  double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t i = 0; i < params_.size(); ++i) {
    ad::Var& var = params_[i].second;
    var->ensure_grad();
    m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * var->grad;
    v_[i] = beta2_ * v_[i] +
            (1.0 - beta2_) * var->grad.cwiseProduct(var->grad);
    ad::Matrix mhat = m_[i] / bc1;
    ad::Matrix vhat = v_[i] / bc2;
    var->value -=
        lr * mhat.cwiseQuotient((vhat.cwiseSqrt().array() + epsilon_).matrix());
  }
}

void TrainHistory::save_jsonl(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw SarcError(ErrorKind::IoError, "cannot write " + path);
  for (const auto& e : epochs) {
    nlohmann::json j;
    j["epoch"] = e.epoch;
    j["train_loss"] = e.train_loss;
    j["validation_loss"] = e.validation_loss;
    j["accuracy"] = e.validation_metrics.accuracy;
    j["macro_precision"] = e.validation_metrics.macro_precision;
    j["macro_recall"] = e.validation_metrics.macro_recall;
    j["macro_f1"] = e.validation_metrics.macro_f1;
    j["f1_sarcastic"] = e.validation_metrics.f1_sarcastic;
    if (e.validation_metrics.per_category_f1.has_value()) {
      nlohmann::json per;
      for (std::size_t i = 0; i < 6; ++i)
        per[kCategoryNames[i]] = (*e.validation_metrics.per_category_f1)[i];
      j["per_category_f1"] = per;
    }
    if (e.discriminator_loss.has_value())
      j["discriminator_loss"] = *e.discriminator_loss;
    if (e.generator_loss.has_value()) j["generator_loss"] = *e.generator_loss;
    if (e.feature_matching.has_value())
      j["feature_matching"] = *e.feature_matching;
    out << j.dump() << "\n";
  }
}

FitResult fit(const std::vector<TweetRecord>& records,
              const TrainConfig& config, Task task) {
  config.validate();
  if (config.model_kind == ModelKind::m3)
    throw SarcError(ErrorKind::BadConfig, "fit handles m1/m2; use fit_gan");
  if (task != Task::A)
    throw SarcError(ErrorKind::BadConfig,
                    "classifier heads are task-A models");

  PreparedFit data = prepare_fit(records, config, task);
  const std::size_t n = data.train.size();

  TrainedModel model;
  model.model_kind = config.model_kind;
  model.task = task;
  model.config = config;
  model.config.encoder_config.max_len = config.max_len;
  Vocabulary vocab = build_vocab(data.train);
  model.encoder = std::make_shared<TinyEncoder>(model.config.encoder_config,
                                                vocab, config.seed);
  model.pool = std::make_shared<AttentionPool>(config.encoder_config.dim,
                                               config.seed);
  const int fused_dim = 2 * config.encoder_config.dim;
  model.head = std::make_shared<ClassifierHead>(
      fused_dim, fused_dim, config.model_kind == ModelKind::m1 ? 1 : 2,
      config.dropout, config.seed);

  AdamOptimizer opt(model.discriminator_side_params());
  const auto batch_size = static_cast<std::size_t>(config.batch_size);
  const long batches_per_epoch =
      static_cast<long>((n + batch_size - 1) / batch_size);
  const long total_steps = config.epochs * batches_per_epoch;
  Rng shuffle_rng(derive_seed(config.seed, "shuffle"));
  Rng dropout_rng(derive_seed(config.seed, "dropout"));

  TrainHistory history;
  long step = 0;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    shuffle_rng.shuffle(order);

    double loss_sum = 0.0;
    std::size_t batch_index = 0;
    for (const auto& batch : make_batches(data.train, order, batch_size)) {
      ad::Var fused = forward_features(model, batch);
      ad::Var logits = model.head->forward(fused, &dropout_rng);
      std::vector<int> labels = labels_of(batch);
      ad::Var loss =
          config.model_kind == ModelKind::m1
              ? supervised_binary_loss(logits, labels, config.loss)
              : supervised_multiclass_loss(logits, labels, config.loss);
      check_finite(loss, epoch, batch_index);
      opt.zero_grad();
      ad::backward(loss);
      opt.step(linear_schedule(step, total_steps, config.learning_rate));
      ++step;
      loss_sum += loss->value(0, 0) * static_cast<double>(batch.size());
      ++batch_index;
    }

    auto [val_loss, report] =
        validate_classifier(model, data.validation, config);
    EpochRecord rec;
    rec.epoch = epoch + 1;
    rec.train_loss = loss_sum / static_cast<double>(n);
    rec.validation_loss = val_loss;
    rec.validation_metrics = report;
    history.epochs.push_back(rec);
  }
  return {std::move(model), std::move(history)};
}

FitResult fit_gan(const std::vector<TweetRecord>& records,
                  const TrainConfig& config, Task task) {
  config.validate();
  if (config.model_kind != ModelKind::m3)
    throw SarcError(ErrorKind::BadConfig, "fit_gan requires model_kind m3");
  if (task == Task::C)
    throw SarcError(ErrorKind::BadConfig, "task C has no trained model");

  PreparedFit data = prepare_fit(records, config, task);
  const std::size_t n = data.train.size();
  const int k = task == Task::A ? 2 : 6;

  TrainedModel model;
  model.model_kind = ModelKind::m3;
  model.task = task;
  model.config = config;
  model.config.encoder_config.max_len = config.max_len;
  Vocabulary vocab = build_vocab(data.train);
  model.encoder = std::make_shared<TinyEncoder>(model.config.encoder_config,
                                                vocab, config.seed);
  model.pool = std::make_shared<AttentionPool>(config.encoder_config.dim,
                                               config.seed);
  const int fused_dim = 2 * config.encoder_config.dim;
  model.discriminator = std::make_shared<Discriminator>(
      fused_dim, fused_dim, k + 1, config.dropout, config.seed);
  model.generator = std::make_shared<Generator>(
      config.gan.z_dim, k, config.gan.category_dim, fused_dim, fused_dim,
      config.dropout, config.seed);

  AdamOptimizer d_opt(model.discriminator_side_params());
  AdamOptimizer g_opt(model.generator_side_params());
  const double generator_lr =
      config.gan.generator_lr.value_or(config.learning_rate);

  const auto batch_size = static_cast<std::size_t>(config.batch_size);
  const long batches_per_epoch =
      static_cast<long>((n + batch_size - 1) / batch_size);
  const long total_steps = config.epochs * batches_per_epoch;
  Rng shuffle_rng(derive_seed(config.seed, "shuffle"));
  Rng dropout_rng(derive_seed(config.seed, "dropout"));
  Rng noise_rng(derive_seed(config.seed, "gan:noise"));
  Rng category_rng(derive_seed(config.seed, "gan:categories"));

  TrainHistory history;
  long step = 0;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    shuffle_rng.shuffle(order);

    double d_sum = 0.0, g_sum = 0.0, fm_sum = 0.0;
    std::size_t batch_index = 0;
    long epoch_batches = 0;
    for (const auto& batch : make_batches(data.train, order, batch_size)) {
      const auto m = static_cast<int>(batch.size());
      ad::Var real_features = forward_features(model, batch);

      ad::Matrix noise(m, config.gan.z_dim);
      for (Eigen::Index r = 0; r < noise.rows(); ++r)
        for (Eigen::Index c = 0; c < noise.cols(); ++c)
          noise(r, c) = noise_rng.normal();
      std::vector<int> categories(static_cast<std::size_t>(m));
      for (auto& c : categories)
        c = static_cast<int>(category_rng.uniform_int(
            static_cast<std::uint64_t>(k)));

      // Discriminator update; the generator side is untouched because only
      // d_opt's parameters step.
      ad::Var fakes = model.generator->forward(noise, categories,
                                               &dropout_rng);
      DiscriminatorLoss d_loss;
      if (task == Task::A) {
        ad::Var d_real =
            model.discriminator->forward(real_features, &dropout_rng);
        ad::Var d_fake = model.discriminator->forward(fakes, &dropout_rng);
        d_loss = discriminator_loss(d_real, labels_of(batch), d_fake,
                                    config.loss);
      } else {
        TaskBLogits d_real = taskB_discriminator_forward(
            real_features, *model.discriminator, &dropout_rng);
        TaskBLogits d_fake = taskB_discriminator_forward(
            fakes, *model.discriminator, &dropout_rng);
        d_loss = multilabel_discriminator_loss(
            d_real.category_logits, category_matrix(batch), d_real.fake_logit,
            d_fake.fake_logit, config.loss);
      }
      check_finite(d_loss.total, epoch, batch_index);
      d_opt.zero_grad();
      ad::backward(d_loss.total);
      double lr = linear_schedule(step, total_steps, config.learning_rate);
      d_opt.step(lr);

      // Generator update against the just-updated discriminator; the real
      // features enter the matching term as data.
      ad::Var real_const = ad::constant(real_features->value);
      ad::Var fakes_g = model.generator->forward(noise, categories,
                                                 &dropout_rng);
      GeneratorLoss g_loss;
      if (task == Task::A) {
        ad::Var g_logits = model.discriminator->forward(fakes_g, &dropout_rng);
        g_loss = generator_loss(g_logits, real_const, fakes_g);
      } else {
        TaskBLogits g_logits = taskB_discriminator_forward(
            fakes_g, *model.discriminator, &dropout_rng);
        g_loss = multilabel_generator_loss(g_logits.fake_logit, real_const,
                                           fakes_g);
      }
      check_finite(g_loss.total, epoch, batch_index);
      g_opt.zero_grad();
      ad::backward(g_loss.total);
      g_opt.step(linear_schedule(step, total_steps, generator_lr));
      ++step;

      d_sum += d_loss.total->value(0, 0);
      g_sum += g_loss.total->value(0, 0);
      fm_sum += g_loss.feature_matching->value(0, 0);
      ++epoch_batches;
      ++batch_index;
    }

    auto [val_loss, report] = validate_gan(model, data.validation, config,
                                           task);
    EpochRecord rec;
    rec.epoch = epoch + 1;
    auto denom = static_cast<double>(epoch_batches);
    rec.train_loss = d_sum / denom;
    rec.validation_loss = val_loss;
    rec.validation_metrics = report;
    rec.discriminator_loss = d_sum / denom;
    rec.generator_loss = g_sum / denom;
    rec.feature_matching = fm_sum / denom;
    history.epochs.push_back(rec);
  }
  return {std::move(model), std::move(history)};
}

}  // namespace sarc
