#include "sarc/encoder.hpp"

#include <cmath>

#include "sarc/errors.hpp"

namespace sarc {

namespace {

ad::Matrix normal_init(Eigen::Index rows, Eigen::Index cols, Rng& rng,
                       double std_dev = 0.02) {
  ad::Matrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = rng.normal() * std_dev;
  return m;
}

// Key mask for self-attention: row (b*len + i) allows the keys of sample b.
ad::Matrix attention_key_mask(const Eigen::MatrixXi& mask, Eigen::Index batch,
                              Eigen::Index len) {
  ad::Matrix m(batch * len, len);
  for (Eigen::Index b = 0; b < batch; ++b) {
    for (Eigen::Index i = 0; i < len; ++i)
      for (Eigen::Index j = 0; j < len; ++j)
        m(b * len + i, j) = mask(b, j) != 0 ? 1.0 : 0.0;
  }
  return m;
}

}  // namespace

TinyEncoder::TinyEncoder(EncoderConfig config, Vocabulary vocab,
                         std::uint64_t seed)
    : config_(config), vocab_(std::move(vocab)) {
  Rng rng(derive_seed(seed, "encoder:init"));
  const int d = config_.dim;
  token_embedding_ = ad::parameter(normal_init(vocab_.size(), d, rng));
  pos_embedding_ = ad::parameter(normal_init(config_.max_len, d, rng));
  for (int l = 0; l < config_.layers; ++l) {
    Layer layer;
    layer.ln1_gain = ad::parameter(ad::Matrix::Ones(1, d));
    layer.ln1_bias = ad::parameter(ad::Matrix::Zero(1, d));
    layer.wq = ad::parameter(normal_init(d, d, rng));
    layer.bq = ad::parameter(ad::Matrix::Zero(1, d));
    layer.wk = ad::parameter(normal_init(d, d, rng));
    layer.bk = ad::parameter(ad::Matrix::Zero(1, d));
    layer.wv = ad::parameter(normal_init(d, d, rng));
    layer.bv = ad::parameter(ad::Matrix::Zero(1, d));
    layer.wo = ad::parameter(normal_init(d, d, rng));
    layer.bo = ad::parameter(ad::Matrix::Zero(1, d));
    layer.ln2_gain = ad::parameter(ad::Matrix::Ones(1, d));
    layer.ln2_bias = ad::parameter(ad::Matrix::Zero(1, d));
    layer.w1 = ad::parameter(normal_init(d, config_.ffn_dim, rng));
    layer.b1 = ad::parameter(ad::Matrix::Zero(1, config_.ffn_dim));
    layer.w2 = ad::parameter(normal_init(config_.ffn_dim, d, rng));
    layer.b2 = ad::parameter(ad::Matrix::Zero(1, d));
    layers_.push_back(std::move(layer));
  }
  final_gain_ = ad::parameter(ad::Matrix::Ones(1, d));
  final_bias_ = ad::parameter(ad::Matrix::Zero(1, d));
}

EncodedVars TinyEncoder::forward(const TokenBatch& batch) const {
  const Eigen::Index b = batch.ids.rows();
  const Eigen::Index len = batch.ids.cols();
  if (len > config_.max_len)
    throw SarcError(ErrorKind::ShapeMismatch,
                    "batch length exceeds encoder max_len");
  for (Eigen::Index r = 0; r < b; ++r) {
    if (batch.mask(r, 0) == 0)
      throw SarcError(ErrorKind::AllMasked,
                      "row " + std::to_string(r) + " has no real token");
  }

  std::vector<int> flat_ids;
  flat_ids.reserve(static_cast<std::size_t>(b * len));
  std::vector<Eigen::Index> pos_rows;
  pos_rows.reserve(static_cast<std::size_t>(b * len));
  for (Eigen::Index r = 0; r < b; ++r) {
    for (Eigen::Index c = 0; c < len; ++c) {
      int id = batch.ids(r, c);
      if (id < 0 || id >= vocab_.size())
        throw SarcError(ErrorKind::VocabOverflow,
                        "token id " + std::to_string(id));
      flat_ids.push_back(id);
      pos_rows.push_back(c);
    }
  }

  ad::Var x = ad::add(ad::embedding_gather(token_embedding_, flat_ids),
                      ad::gather_rows(pos_embedding_, pos_rows));
  const double scale = 1.0 / std::sqrt(static_cast<double>(config_.dim));
  const ad::Matrix key_mask = attention_key_mask(batch.mask, b, len);

  for (const Layer& layer : layers_) {
    ad::Var h = ad::layernorm_rows(x, layer.ln1_gain, layer.ln1_bias);
    ad::Var q = ad::add_rowvec(ad::matmul(h, layer.wq), layer.bq);
    ad::Var k = ad::add_rowvec(ad::matmul(h, layer.wk), layer.bk);
    ad::Var v = ad::add_rowvec(ad::matmul(h, layer.wv), layer.bv);
    ad::Var scores = ad::batch_qkt(q, k, b, len, scale);
    ad::Var attn = ad::masked_softmax_rows(scores, key_mask);
    ad::Var ctx = ad::batch_av(attn, v, b, len);
    ad::Var o = ad::add_rowvec(ad::matmul(ctx, layer.wo), layer.bo);
    x = ad::add(x, o);

    ad::Var h2 = ad::layernorm_rows(x, layer.ln2_gain, layer.ln2_bias);
    ad::Var f1 = ad::relu(ad::add_rowvec(ad::matmul(h2, layer.w1), layer.b1));
    ad::Var f2 = ad::add_rowvec(ad::matmul(f1, layer.w2), layer.b2);
    x = ad::add(x, f2);
  }
  x = ad::layernorm_rows(x, final_gain_, final_bias_);

  std::vector<Eigen::Index> cls_rows;
  cls_rows.reserve(static_cast<std::size_t>(b));
  for (Eigen::Index r = 0; r < b; ++r) cls_rows.push_back(r * len);

  EncodedVars out;
  out.token_states = x;
  out.pooled = ad::gather_rows(x, cls_rows);
  out.mask = batch.mask;
  out.batch = b;
  out.len = len;
  return out;
}

EncodedBatch TinyEncoder::encode(const TokenBatch& batch) const {
  EncodedVars vars = forward(batch);
  if (!vars.pooled->value.allFinite() || !vars.token_states->value.allFinite())
    throw SarcError(ErrorKind::NonFiniteLoss, "encoder produced non-finite values");
  EncodedBatch out;
  out.pooled = vars.pooled->value;
  out.token_states = vars.token_states->value;
  out.mask = vars.mask;
  out.batch = vars.batch;
  out.len = vars.len;
  return out;
}

TokenBatch TinyEncoder::tokenize(const std::vector<std::string>& texts) const {
  return sarc::tokenize(texts, vocab_, config_.max_len);
}

void TinyEncoder::collect_params(std::vector<NamedParam>& out) const {
  out.emplace_back("encoder.token_embedding", token_embedding_);
  out.emplace_back("encoder.pos_embedding", pos_embedding_);
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const Layer& layer = layers_[l];
    std::string p = "encoder.layer" + std::to_string(l) + ".";
    out.emplace_back(p + "ln1_gain", layer.ln1_gain);
    out.emplace_back(p + "ln1_bias", layer.ln1_bias);
    out.emplace_back(p + "wq", layer.wq);
    out.emplace_back(p + "bq", layer.bq);
    out.emplace_back(p + "wk", layer.wk);
    out.emplace_back(p + "bk", layer.bk);
    out.emplace_back(p + "wv", layer.wv);
    out.emplace_back(p + "bv", layer.bv);
    out.emplace_back(p + "wo", layer.wo);
    out.emplace_back(p + "bo", layer.bo);
    out.emplace_back(p + "ln2_gain", layer.ln2_gain);
    out.emplace_back(p + "ln2_bias", layer.ln2_bias);
    out.emplace_back(p + "w1", layer.w1);
    out.emplace_back(p + "b1", layer.b1);
    out.emplace_back(p + "w2", layer.w2);
    out.emplace_back(p + "b2", layer.b2);
  }
  out.emplace_back("encoder.final_gain", final_gain_);
  out.emplace_back("encoder.final_bias", final_bias_);
}

AttentionPool::AttentionPool(int dim, std::uint64_t seed) {
  Rng rng(derive_seed(seed, "attention_pool:init"));
  weight_ = ad::parameter(normal_init(dim, dim, rng));
  bias_ = ad::parameter(ad::Matrix::Zero(1, dim));
  context_vector_ = ad::parameter(normal_init(dim, 1, rng));
}

AttentionPool::AttentionPool(ad::Var weight, ad::Var bias,
                             ad::Var context_vector)
    : weight_(std::move(weight)),
      bias_(std::move(bias)),
      context_vector_(std::move(context_vector)) {}

AttentionPool::Pooled AttentionPool::forward(const ad::Var& token_states,
                                             const Eigen::MatrixXi& mask,
                                             Eigen::Index batch,
                                             Eigen::Index len) const {
  if (token_states->value.rows() != batch * len ||
      token_states->value.cols() != weight_->value.rows())
    throw SarcError(ErrorKind::ShapeMismatch, "attention_pool");
  ad::Var hidden = ad::tanh_(
      ad::add_rowvec(ad::matmul(token_states, weight_), bias_));
  ad::Var scores_col = ad::matmul(hidden, context_vector_);  // [(b*len) x 1]
  ad::Var scores = ad::reshape_col_to_matrix(scores_col, batch, len);
  ad::Var weights = ad::masked_softmax_rows(scores, mask.cast<double>());
  ad::Var context = ad::weighted_pool(weights, token_states, batch, len);
  return {context, weights};
}

void AttentionPool::collect_params(std::vector<NamedParam>& out) const {
  out.emplace_back("attention_pool.weight", weight_);
  out.emplace_back("attention_pool.bias", bias_);
  out.emplace_back("attention_pool.context_vector", context_vector_);
}

ad::Var fuse(const ad::Var& pooled, const ad::Var& context) {
  if (pooled->value.rows() != context->value.rows() ||
      pooled->value.cols() != context->value.cols())
    throw SarcError(ErrorKind::ShapeMismatch, "fuse");
  return ad::concat_cols(pooled, context);
}

EncoderPreset encoder_preset(const std::string& name) {
  if (name == "reference" || name == "reference-en") {
    return {"reference", multilingual_preprocess(), false};
  }
  if (name == "reference-ar") {
    return {"reference-ar", arabic_preprocess(), true};
  }
  std::string known;
  for (const auto& n : encoder_preset_names()) {
    if (!known.empty()) known += ", ";
    known += n;
  }
  throw SarcError(ErrorKind::BadConfig,
                  "unknown encoder '" + name + "' (known: " + known + ")");
}

std::vector<std::string> encoder_preset_names() {
  return {"reference", "reference-ar"};
}

}  // namespace sarc
