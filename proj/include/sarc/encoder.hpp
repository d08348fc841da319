#ifndef SARC_ENCODER_HPP_
#define SARC_ENCODER_HPP_

#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "sarc/ad.hpp"
#include "sarc/text.hpp"
#include "sarc/tokenizer.hpp"

namespace sarc {

using NamedParam = std::pair<std::string, ad::Var>;

struct EncoderConfig {
  int dim = 32;
  int layers = 2;
  int ffn_dim = 64;
  int max_len = 128;
};

// Graph-side view of an encoded batch. token_states is laid out sample-major
// as [(batch*len) x d]; row b*len+l is sample b, position l.
struct EncodedVars {
  ad::Var pooled;        // [batch x d], hidden state at the [CLS] position
  ad::Var token_states;  // [(batch*len) x d]
  Eigen::MatrixXi mask;  // [batch x len]
  Eigen::Index batch = 0;
  Eigen::Index len = 0;
};

// Value-side view (the adapter contract).
struct EncodedBatch {
  ad::Matrix pooled;        // [batch x d]
  ad::Matrix token_states;  // [(batch*len) x d]
  Eigen::MatrixXi mask;     // [batch x len]
  Eigen::Index batch = 0;
  Eigen::Index len = 0;
};

// Two-layer pre-norm self-attention encoder over a whitespace+character
// vocabulary; small enough to train from scratch on a desk.
class TinyEncoder {
 public:
  TinyEncoder(EncoderConfig config, Vocabulary vocab, std::uint64_t seed);

  EncodedVars forward(const TokenBatch& batch) const;
  // Inference-mode encode; checks ids against the vocabulary and output
  // finiteness.
  EncodedBatch encode(const TokenBatch& batch) const;

  TokenBatch tokenize(const std::vector<std::string>& texts) const;

  const EncoderConfig& config() const { return config_; }
  const Vocabulary& vocab() const { return vocab_; }
  int dim() const { return config_.dim; }

  void collect_params(std::vector<NamedParam>& out) const;

 private:
  struct Layer {
    ad::Var ln1_gain, ln1_bias;
    ad::Var wq, bq, wk, bk, wv, bv, wo, bo;
    ad::Var ln2_gain, ln2_bias;
    ad::Var w1, b1, w2, b2;
  };

  EncoderConfig config_;
  Vocabulary vocab_;
  ad::Var token_embedding_;  // [vocab x d]
  ad::Var pos_embedding_;    // [max_len x d]
  std::vector<Layer> layers_;
  ad::Var final_gain_, final_bias_;
};

// Additive attention pooling: score_l = v . tanh(W h_l + b), masked softmax
// over real positions, context = sum_l weight_l h_l. The stored weight
// right-multiplies row-vector states, i.e. it is the transpose of the
// left-multiplying W above.
class AttentionPool {
 public:
  AttentionPool(int dim, std::uint64_t seed);
  // Wraps existing parameters (checkpoint restore).
  AttentionPool(ad::Var weight, ad::Var bias, ad::Var context_vector);

  struct Pooled {
    ad::Var context;  // [batch x d]
    ad::Var weights;  // [batch x len]
  };
  Pooled forward(const ad::Var& token_states, const Eigen::MatrixXi& mask,
                 Eigen::Index batch, Eigen::Index len) const;

  void collect_params(std::vector<NamedParam>& out) const;

  const ad::Var& weight() const { return weight_; }
  const ad::Var& bias() const { return bias_; }
  const ad::Var& context_vector() const { return context_vector_; }

 private:
  ad::Var weight_;          // [d x d]
  ad::Var bias_;            // [1 x d]
  ad::Var context_vector_;  // [d x 1]
};

// Concatenates the pooled sentence vector with the attention context:
// fused[:, :d] = pooled, fused[:, d:] = context.
ad::Var fuse(const ad::Var& pooled, const ad::Var& context);

// Registry of encoder presets. The preset fixes the preprocessing tokens
// and whether the dialect template is applied.
struct EncoderPreset {
  std::string name;
  PreprocessConfig preprocess;
  bool use_dialect = false;
};
EncoderPreset encoder_preset(const std::string& name);
std::vector<std::string> encoder_preset_names();

}  // namespace sarc

#endif  // SARC_ENCODER_HPP_
