#ifndef SARC_MODELS_HPP_
#define SARC_MODELS_HPP_

#include <string>
#include <vector>

#include "sarc/ad.hpp"
#include "sarc/encoder.hpp"

namespace sarc {

enum class ModelKind { m1, m2, m3 };
ModelKind parse_model_kind(const std::string& s);
const char* model_kind_name(ModelKind kind);

struct ModelOutput {
  ad::Matrix logits;
  ad::Matrix probabilities;
};

ModelOutput sigmoid_output(const ad::Matrix& logits);
ModelOutput softmax_output(const ad::Matrix& logits);

// Hidden affine + nonlinearity + dropout, then the classification affine.
class ClassifierHead {
 public:
  ClassifierHead(int in_dim, int hidden_dim, int out_units, double dropout_rate,
                 std::uint64_t seed);
  ClassifierHead(ad::Var w1, ad::Var b1, ad::Var w2, ad::Var b2,
                 double dropout_rate);

  // Dropout fires only when a stream is supplied (training mode).
  ad::Var forward(const ad::Var& fused, Rng* dropout_rng = nullptr) const;

  int out_units() const { return static_cast<int>(w2_->value.cols()); }
  int in_dim() const { return static_cast<int>(w1_->value.rows()); }
  void collect_params(const std::string& prefix,
                      std::vector<NamedParam>& out) const;

 private:
  ad::Var w1_, b1_, w2_, b2_;
  double dropout_rate_;
};

// Binary head (1 logit): probability = sigmoid(logit).
ModelOutput model1_forward(const ad::Var& fused, const ClassifierHead& head);
// Two-unit head: probabilities = softmax(logits).
ModelOutput model2_forward(const ad::Var& fused, const ClassifierHead& head);

// i.i.d. standard normal noise, deterministic under seed.
ad::Matrix sample_noise(int n, int z_dim, std::uint64_t seed);

// Conditional generator: noise ++ category embedding -> two hidden blocks
// (affine, dropout, relu) -> affine to the fused-feature width.
class Generator {
 public:
  Generator(int z_dim, int category_count, int category_dim, int hidden_dim,
            int out_dim, double dropout_rate, std::uint64_t seed);
  Generator(ad::Var cat_embedding, ad::Var w1, ad::Var b1, ad::Var w2,
            ad::Var b2, ad::Var w3, ad::Var b3, double dropout_rate);

  ad::Var forward(const ad::Matrix& noise, const std::vector<int>& categories,
                  Rng* dropout_rng = nullptr) const;

  int z_dim() const;
  int category_count() const {
    return static_cast<int>(cat_embedding_->value.rows());
  }
  int out_dim() const { return static_cast<int>(w3_->value.cols()); }
  void collect_params(std::vector<NamedParam>& out) const;
  const ad::Var& category_embedding() const { return cat_embedding_; }

 private:
  ad::Var cat_embedding_;  // [category_count x category_dim]
  ad::Var w1_, b1_, w2_, b2_, w3_, b3_;
  double dropout_rate_;
};

// Two hidden blocks (affine, dropout, relu) and a classification affine to
// k+1 logits; column k is the fake logit.
class Discriminator {
 public:
  Discriminator(int in_dim, int hidden_dim, int out_units, double dropout_rate,
                std::uint64_t seed);
  Discriminator(ad::Var w1, ad::Var b1, ad::Var w2, ad::Var b2, ad::Var w3,
                ad::Var b3, double dropout_rate);

  ad::Var forward(const ad::Var& features, Rng* dropout_rng = nullptr) const;

  int in_dim() const { return static_cast<int>(w1_->value.rows()); }
  int out_units() const { return static_cast<int>(w3_->value.cols()); }
  void collect_params(std::vector<NamedParam>& out) const;

 private:
  ad::Var w1_, b1_, w2_, b2_, w3_, b3_;
  double dropout_rate_;
};

ad::Var discriminator_forward(const ad::Var& features,
                              const Discriminator& disc,
                              Rng* dropout_rng = nullptr);

// Multi-label head split of a 7-unit discriminator: six per-category logits
// plus one fake logit, each read through a sigmoid.
struct TaskBLogits {
  ad::Var category_logits;  // [n x 6]
  ad::Var fake_logit;       // [n x 1]
};
TaskBLogits taskB_discriminator_forward(const ad::Var& features,
                                        const Discriminator& disc,
                                        Rng* dropout_rng = nullptr);

}  // namespace sarc

#endif  // SARC_MODELS_HPP_
