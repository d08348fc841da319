#include "sarc/models.hpp"

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

ad::Matrix softmax_rows_value(const ad::Matrix& logits) {
  ad::Matrix p = logits;
  for (Eigen::Index r = 0; r < p.rows(); ++r) {
    double m = p.row(r).maxCoeff();
    p.row(r) = (p.row(r).array() - m).exp();
    p.row(r) /= p.row(r).sum();
  }
  return p;
}

ad::Matrix sigmoid_value(const ad::Matrix& logits) {
  return logits.unaryExpr([](double x) {
    return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x))
                    : std::exp(x) / (1.0 + std::exp(x));
  });
}

}  // namespace

ModelKind parse_model_kind(const std::string& s) {
  if (s == "m1") return ModelKind::m1;
  if (s == "m2") return ModelKind::m2;
  if (s == "m3") return ModelKind::m3;
  throw SarcError(ErrorKind::BadConfig, "model must be m1, m2 or m3, got " + s);
}

const char* model_kind_name(ModelKind kind) {
  switch (kind) {
    case ModelKind::m1: return "m1";
    case ModelKind::m2: return "m2";
    case ModelKind::m3: return "m3";
  }
  return "?";
}

ModelOutput sigmoid_output(const ad::Matrix& logits) {
  return {logits, sigmoid_value(logits)};
}

ModelOutput softmax_output(const ad::Matrix& logits) {
  return {logits, softmax_rows_value(logits)};
}

ClassifierHead::ClassifierHead(int in_dim, int hidden_dim, int out_units,
                               double dropout_rate, std::uint64_t seed)
    : dropout_rate_(dropout_rate) {
  Rng rng(derive_seed(seed, "classifier:init"));
  w1_ = ad::parameter(normal_init(in_dim, hidden_dim, rng));
  b1_ = ad::parameter(ad::Matrix::Zero(1, hidden_dim));
  w2_ = ad::parameter(normal_init(hidden_dim, out_units, rng));
  b2_ = ad::parameter(ad::Matrix::Zero(1, out_units));
}

ClassifierHead::ClassifierHead(ad::Var w1, ad::Var b1, ad::Var w2, ad::Var b2,
                               double dropout_rate)
    : w1_(std::move(w1)),
      b1_(std::move(b1)),
      w2_(std::move(w2)),
      b2_(std::move(b2)),
      dropout_rate_(dropout_rate) {}

ad::Var ClassifierHead::forward(const ad::Var& fused, Rng* dropout_rng) const {
  if (fused->value.cols() != w1_->value.rows())
    throw SarcError(ErrorKind::ShapeMismatch,
                    "classifier expects width " +
                        std::to_string(w1_->value.rows()));
  ad::Var h = ad::relu(ad::add_rowvec(ad::matmul(fused, w1_), b1_));
  if (dropout_rng != nullptr)
    h = ad::dropout(h, dropout_rate_, *dropout_rng, true);
  return ad::add_rowvec(ad::matmul(h, w2_), b2_);
}

void ClassifierHead::collect_params(const std::string& prefix,
                                    std::vector<NamedParam>& out) const {
  out.emplace_back(prefix + ".w1", w1_);
  out.emplace_back(prefix + ".b1", b1_);
  out.emplace_back(prefix + ".w2", w2_);
  out.emplace_back(prefix + ".b2", b2_);
}

ModelOutput model1_forward(const ad::Var& fused, const ClassifierHead& head) {
  if (head.out_units() != 1)
    throw SarcError(ErrorKind::ShapeMismatch, "model 1 head must have 1 unit");
  return sigmoid_output(head.forward(fused)->value);
}

ModelOutput model2_forward(const ad::Var& fused, const ClassifierHead& head) {
  if (head.out_units() != 2)
    throw SarcError(ErrorKind::ShapeMismatch, "model 2 head must have 2 units");
  return softmax_output(head.forward(fused)->value);
}

ad::Matrix sample_noise(int n, int z_dim, std::uint64_t seed) {
  if (n < 1) throw SarcError(ErrorKind::BadConfig, "noise batch must be >= 1");
  Rng rng(derive_seed(seed, "noise"));
  ad::Matrix z(n, z_dim);
  for (Eigen::Index r = 0; r < n; ++r)
    for (Eigen::Index c = 0; c < z_dim; ++c) z(r, c) = rng.normal();
  return z;
}

Generator::Generator(int z_dim, int category_count, int category_dim,
                     int hidden_dim, int out_dim, double dropout_rate,
                     std::uint64_t seed)
    : dropout_rate_(dropout_rate) {
  Rng rng(derive_seed(seed, "generator:init"));
  cat_embedding_ = ad::parameter(normal_init(category_count, category_dim, rng));
  w1_ = ad::parameter(normal_init(z_dim + category_dim, hidden_dim, rng));
  b1_ = ad::parameter(ad::Matrix::Zero(1, hidden_dim));
  w2_ = ad::parameter(normal_init(hidden_dim, hidden_dim, rng));
  b2_ = ad::parameter(ad::Matrix::Zero(1, hidden_dim));
  w3_ = ad::parameter(normal_init(hidden_dim, out_dim, rng));
  b3_ = ad::parameter(ad::Matrix::Zero(1, out_dim));
}

Generator::Generator(ad::Var cat_embedding, ad::Var w1, ad::Var b1, ad::Var w2,
                     ad::Var b2, ad::Var w3, ad::Var b3, double dropout_rate)
    : cat_embedding_(std::move(cat_embedding)),
      w1_(std::move(w1)),
      b1_(std::move(b1)),
      w2_(std::move(w2)),
      b2_(std::move(b2)),
      w3_(std::move(w3)),
      b3_(std::move(b3)),
      dropout_rate_(dropout_rate) {}

int Generator::z_dim() const {
  return static_cast<int>(w1_->value.rows() - cat_embedding_->value.cols());
}

ad::Var Generator::forward(const ad::Matrix& noise,
                           const std::vector<int>& categories,
                           Rng* dropout_rng) const {
  if (noise.rows() != static_cast<Eigen::Index>(categories.size()))
    throw SarcError(ErrorKind::LengthMismatch, "noise vs categories");
  if (noise.cols() != z_dim())
    throw SarcError(ErrorKind::ShapeMismatch, "noise width");
  for (int c : categories)
    if (c < 0 || c >= category_count())
      throw SarcError(ErrorKind::BadCategory,
                      "category " + std::to_string(c) + " outside [0, " +
                          std::to_string(category_count()) + ")");
  ad::Var cond = ad::embedding_gather(cat_embedding_, categories);
  ad::Var x = ad::concat_cols(ad::constant(noise), cond);
  // Hidden blocks in affine -> dropout -> relu order.
  ad::Var h1 = ad::add_rowvec(ad::matmul(x, w1_), b1_);
  if (dropout_rng != nullptr)
    h1 = ad::dropout(h1, dropout_rate_, *dropout_rng, true);
  h1 = ad::relu(h1);
  ad::Var h2 = ad::add_rowvec(ad::matmul(h1, w2_), b2_);
  if (dropout_rng != nullptr)
    h2 = ad::dropout(h2, dropout_rate_, *dropout_rng, true);
  h2 = ad::relu(h2);
  return ad::add_rowvec(ad::matmul(h2, w3_), b3_);
}

void Generator::collect_params(std::vector<NamedParam>& out) const {
  out.emplace_back("generator.cat_embedding", cat_embedding_);
  out.emplace_back("generator.w1", w1_);
  out.emplace_back("generator.b1", b1_);
  out.emplace_back("generator.w2", w2_);
  out.emplace_back("generator.b2", b2_);
  out.emplace_back("generator.w3", w3_);
  out.emplace_back("generator.b3", b3_);
}

Discriminator::Discriminator(int in_dim, int hidden_dim, int out_units,
                             double dropout_rate, std::uint64_t seed)
    : dropout_rate_(dropout_rate) {
  Rng rng(derive_seed(seed, "discriminator:init"));
  w1_ = ad::parameter(normal_init(in_dim, hidden_dim, rng));
  b1_ = ad::parameter(ad::Matrix::Zero(1, hidden_dim));
  w2_ = ad::parameter(normal_init(hidden_dim, hidden_dim, rng));
  b2_ = ad::parameter(ad::Matrix::Zero(1, hidden_dim));
  w3_ = ad::parameter(normal_init(hidden_dim, out_units, rng));
  b3_ = ad::parameter(ad::Matrix::Zero(1, out_units));
}

Discriminator::Discriminator(ad::Var w1, ad::Var b1, ad::Var w2, ad::Var b2,
                             ad::Var w3, ad::Var b3, double dropout_rate)
    : w1_(std::move(w1)),
      b1_(std::move(b1)),
      w2_(std::move(w2)),
      b2_(std::move(b2)),
      w3_(std::move(w3)),
      b3_(std::move(b3)),
      dropout_rate_(dropout_rate) {}

ad::Var Discriminator::forward(const ad::Var& features,
                               Rng* dropout_rng) const {
  if (features->value.cols() != w1_->value.rows())
    throw SarcError(ErrorKind::ShapeMismatch,
                    "discriminator expects width " +
                        std::to_string(w1_->value.rows()));
  ad::Var h1 = ad::add_rowvec(ad::matmul(features, w1_), b1_);
  if (dropout_rng != nullptr)
    h1 = ad::dropout(h1, dropout_rate_, *dropout_rng, true);
  h1 = ad::relu(h1);
  ad::Var h2 = ad::add_rowvec(ad::matmul(h1, w2_), b2_);
  if (dropout_rng != nullptr)
    h2 = ad::dropout(h2, dropout_rate_, *dropout_rng, true);
  h2 = ad::relu(h2);
  return ad::add_rowvec(ad::matmul(h2, w3_), b3_);
}

void Discriminator::collect_params(std::vector<NamedParam>& out) const {
  out.emplace_back("discriminator.w1", w1_);
  out.emplace_back("discriminator.b1", b1_);
  out.emplace_back("discriminator.w2", w2_);
  out.emplace_back("discriminator.b2", b2_);
  out.emplace_back("discriminator.w3", w3_);
  out.emplace_back("discriminator.b3", b3_);
}

ad::Var discriminator_forward(const ad::Var& features,
                              const Discriminator& disc, Rng* dropout_rng) {
  return disc.forward(features, dropout_rng);
}

TaskBLogits taskB_discriminator_forward(const ad::Var& features,
                                        const Discriminator& disc,
                                        Rng* dropout_rng) {
  if (disc.out_units() != 7)
    throw SarcError(ErrorKind::ShapeMismatch,
                    "task B discriminator needs 6 category units + 1 fake");
  ad::Var logits = disc.forward(features, dropout_rng);
  return {ad::slice_cols(logits, 0, 6), ad::slice_cols(logits, 6, 1)};
}

}  // namespace sarc
