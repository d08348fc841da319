#include <cmath>

#include "doctest.h"
#include "sarc/errors.hpp"
#include "sarc/losses.hpp"
#include "sarc/models.hpp"
#include "support/helpers.hpp"

using namespace sarc;

TEST_SUITE_BEGIN("models");

namespace {

ClassifierHead zero_head(int in_dim, int out_units) {
  return ClassifierHead(ad::parameter(ad::Matrix::Zero(in_dim, in_dim)),
                        ad::parameter(ad::Matrix::Zero(1, in_dim)),
                        ad::parameter(ad::Matrix::Zero(in_dim, out_units)),
                        ad::parameter(ad::Matrix::Zero(1, out_units)), 0.1);
}

// Head whose logits equal the given bias row regardless of input.
ClassifierHead bias_head(int in_dim, const ad::Matrix& bias_row) {
  return ClassifierHead(
      ad::parameter(ad::Matrix::Zero(in_dim, in_dim)),
      ad::parameter(ad::Matrix::Zero(1, in_dim)),
      ad::parameter(ad::Matrix::Zero(in_dim, bias_row.cols())),
      ad::parameter(bias_row), 0.1);
}

}  // namespace

TEST_CASE("model 1 with zero weights outputs probability one half") {
  Rng rng(3);
  ClassifierHead head = zero_head(8, 1);
  ad::Var fused = ad::constant(testutil::random_matrix(4, 8, rng));
  ModelOutput out = model1_forward(fused, head);
  CHECK(out.logits.rows() == 4);
  CHECK(out.logits.cols() == 1);
  for (int r = 0; r < 4; ++r) {
    CHECK(out.logits(r, 0) == 0.0);
    CHECK(out.probabilities(r, 0) == 0.5);
  }
}

TEST_CASE("model 1 logit shape follows the batch") {
  Rng rng(5);
  ClassifierHead head(64, 64, 1, 0.1, 9);
  ad::Var fused = ad::constant(testutil::random_matrix(16, 64, rng));
  ModelOutput out = model1_forward(fused, head);
  CHECK(out.logits.rows() == 16);
  CHECK(out.logits.cols() == 1);
}

TEST_CASE("model 1 rejects a two-unit head") {
  Rng rng(7);
  ClassifierHead head(8, 8, 2, 0.1, 1);
  ad::Var fused = ad::constant(testutil::random_matrix(2, 8, rng));
  CHECK_THROWS_AS(model1_forward(fused, head), SarcError);
}

TEST_CASE("model 2 equal logits split the probability") {
  Rng rng(11);
  ad::Matrix bias(1, 2);
  bias << 0.7, 0.7;
  ClassifierHead head = bias_head(8, bias);
  ad::Var fused = ad::constant(testutil::random_matrix(3, 8, rng));
  ModelOutput out = model2_forward(fused, head);
  for (int r = 0; r < 3; ++r) {
    CHECK(out.probabilities(r, 0) == doctest::Approx(0.5));
    CHECK(out.probabilities(r, 1) == doctest::Approx(0.5));
  }
}

TEST_CASE("model 2 logits (0, ln 3) give probabilities (0.25, 0.75)") {
  ad::Matrix bias(1, 2);
  bias << 0.0, std::log(3.0);
  ClassifierHead head = bias_head(4, bias);
  ad::Var fused = ad::constant(ad::Matrix::Zero(1, 4));
  ModelOutput out = model2_forward(fused, head);
  CHECK(out.probabilities(0, 0) == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(out.probabilities(0, 1) == doctest::Approx(0.75).epsilon(1e-12));
}

TEST_CASE("model 2 probabilities are shift invariant") {
  // Dyadic logits and shift keep the arithmetic exact.
  ad::Matrix bias(1, 2);
  bias << 0.5, -0.25;
  ad::Matrix shifted(1, 2);
  shifted << 0.5 + 2.0, -0.25 + 2.0;
  ModelOutput a = model2_forward(ad::constant(ad::Matrix::Zero(1, 4)),
                                 bias_head(4, bias));
  ModelOutput b = model2_forward(ad::constant(ad::Matrix::Zero(1, 4)),
                                 bias_head(4, shifted));
  CHECK(a.probabilities(0, 0) == b.probabilities(0, 0));
  CHECK(a.probabilities(0, 1) == b.probabilities(0, 1));
}

TEST_CASE("sample_noise is deterministic and shaped") {
  ad::Matrix a = sample_noise(4, 100, 0);
  ad::Matrix b = sample_noise(4, 100, 0);
  CHECK(a == b);
  CHECK(a.rows() == 4);
  CHECK(a.cols() == 100);
  CHECK(sample_noise(7, 3, 1) != sample_noise(7, 3, 2));
}

TEST_CASE("sample_noise means obey the law of large numbers") {
  ad::Matrix z = sample_noise(1000, 8, 99);
  for (int c = 0; c < 8; ++c)
    CHECK(std::abs(z.col(c).mean()) < 0.15);
}

TEST_CASE("generator output is [batch x 2d]") {
  Generator gen(100, 2, 50, 64, 64, 0.1, 21);
  ad::Matrix noise = sample_noise(8, 100, 4);
  ad::Var fake = gen.forward(noise, std::vector<int>(8, 1));
  CHECK(fake->value.rows() == 8);
  CHECK(fake->value.cols() == 64);
  CHECK(fake->value.allFinite());
}

TEST_CASE("generator is deterministic without dropout") {
  Generator gen(10, 2, 5, 16, 12, 0.1, 23);
  ad::Matrix noise = sample_noise(4, 10, 8);
  std::vector<int> cats = {0, 1, 1, 0};
  CHECK(gen.forward(noise, cats)->value == gen.forward(noise, cats)->value);
}

TEST_CASE("zero output layer forces all-zero features") {
  Rng rng(29);
  Generator gen(ad::parameter(testutil::random_matrix(2, 5, rng)),
                ad::parameter(testutil::random_matrix(15, 16, rng)),
                ad::parameter(testutil::random_matrix(1, 16, rng)),
                ad::parameter(testutil::random_matrix(16, 16, rng)),
                ad::parameter(testutil::random_matrix(1, 16, rng)),
                ad::parameter(ad::Matrix::Zero(16, 12)),
                ad::parameter(ad::Matrix::Zero(1, 12)), 0.1);
  ad::Var fake = gen.forward(sample_noise(3, 10, 1), {0, 1, 0});
  CHECK(fake->value.isZero());
}

TEST_CASE("bad category indexes are rejected") {
  Generator gen(10, 2, 5, 16, 12, 0.1, 31);
  ad::Matrix noise = sample_noise(2, 10, 5);
  try {
    gen.forward(noise, {0, 2});
    FAIL("expected BadCategory");
  } catch (const SarcError& e) {
    CHECK(e.kind() == ErrorKind::BadCategory);
  }
}

TEST_CASE("the conditioning path carries gradient") {
  Generator gen(10, 3, 5, 16, 12, 0.1, 33);
  ad::Matrix noise = sample_noise(6, 10, 9);
  std::vector<int> cats = {0, 1, 2, 0, 1, 2};
  auto fwd = [&] { return ad::sum_squares(gen.forward(noise, cats)); };
  gen.category_embedding()->zero_grad();
  ad::Var loss = fwd();
  ad::backward(loss);
  CHECK(gen.category_embedding()->grad.cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("discriminator emits k+1 logits") {
  Rng rng(37);
  Discriminator disc(64, 64, 3, 0.1, 35);
  ad::Var features = ad::constant(testutil::random_matrix(5, 64, rng));
  ad::Var logits = discriminator_forward(features, disc);
  CHECK(logits->value.rows() == 5);
  CHECK(logits->value.cols() == 3);
}

TEST_CASE("equal discriminator logits give p_fake one third") {
  ad::Matrix logits(1, 3);
  logits << 1.0, 1.0, 1.0;
  ModelOutput out = softmax_output(logits);
  CHECK(out.probabilities(0, 2) == doctest::Approx(1.0 / 3.0));
  // Renormalizing over the real classes sums to one.
  double real_mass = out.probabilities(0, 0) + out.probabilities(0, 1);
  double renorm0 = out.probabilities(0, 0) / real_mass;
  double renorm1 = out.probabilities(0, 1) / real_mass;
  CHECK(renorm0 + renorm1 == doctest::Approx(1.0));
}

TEST_CASE("feature width mismatch raises ShapeMismatch") {
  Rng rng(41);
  Discriminator disc(64, 64, 3, 0.1, 39);
  ad::Var narrow = ad::constant(testutil::random_matrix(2, 32, rng));
  CHECK_THROWS_AS(disc.forward(narrow), SarcError);
}

TEST_CASE("task B discriminator splits category and fake logits") {
  Rng rng(43);
  Discriminator disc(16, 16, 7, 0.1, 41);
  ad::Var features = ad::constant(testutil::random_matrix(4, 16, rng));
  TaskBLogits split = taskB_discriminator_forward(features, disc);
  CHECK(split.category_logits->value.rows() == 4);
  CHECK(split.category_logits->value.cols() == 6);
  CHECK(split.fake_logit->value.cols() == 1);

  ModelOutput categories = sigmoid_output(split.category_logits->value);
  CHECK(categories.probabilities.minCoeff() >= 0.0);
  CHECK(categories.probabilities.maxCoeff() <= 1.0);

  Discriminator wrong(16, 16, 3, 0.1, 43);
  CHECK_THROWS_AS(taskB_discriminator_forward(features, wrong), SarcError);
}

TEST_CASE("zero category logits mean six even probabilities") {
  ModelOutput out = sigmoid_output(ad::Matrix::Zero(2, 6));
  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < 6; ++c) CHECK(out.probabilities(r, c) == 0.5);
}

TEST_CASE("saturated category logits predict every category") {
  ad::Matrix logits = ad::Matrix::Constant(1, 6, 40.0);
  ModelOutput out = sigmoid_output(logits);
  for (int c = 0; c < 6; ++c) CHECK(out.probabilities(0, c) > 0.999999);
}

TEST_CASE("head and GAN gradients match finite differences") {
  // Unit-scale parameters keep relu pre-activations away from zero, where
  // central differences straddle the kink; verified below.
  Rng rng(47);
  ad::Var fused = ad::parameter(testutil::random_matrix(4, 12, rng));
  ad::Var hw1 = ad::parameter(testutil::random_matrix(12, 12, rng));
  ad::Var hb1 = ad::parameter(testutil::random_matrix(1, 12, rng));
  ad::Var hw2 = ad::parameter(testutil::random_matrix(12, 2, rng));
  ad::Var hb2 = ad::parameter(testutil::random_matrix(1, 2, rng));
  REQUIRE(testutil::min_prerelu_two_layer(fused->value, hw1->value, hb1->value,
                                          hw2->value, hb2->value) > 1e-3);
  ClassifierHead head(hw1, hb1, hw2, hb2, 0.1);
  std::vector<int> targets = {0, 1, 1, 0};
  auto head_loss = [&] { return ce(head.forward(fused), targets); };
  CHECK(testutil::max_grad_rel_error(fused, head_loss) < 1e-3);
  CHECK(testutil::max_grad_rel_error(hw1, head_loss) < 1e-3);
  CHECK(testutil::max_grad_rel_error(hb2, head_loss) < 1e-3);

  Generator gen(ad::parameter(testutil::random_matrix(2, 4, rng)),
                ad::parameter(testutil::random_matrix(10, 12, rng)),
                ad::parameter(testutil::random_matrix(1, 12, rng)),
                ad::parameter(testutil::random_matrix(12, 12, rng)),
                ad::parameter(testutil::random_matrix(1, 12, rng)),
                ad::parameter(testutil::random_matrix(12, 12, rng)),
                ad::parameter(testutil::random_matrix(1, 12, rng)), 0.1);
  Discriminator disc(ad::parameter(testutil::random_matrix(12, 12, rng)),
                     ad::parameter(testutil::random_matrix(1, 12, rng)),
                     ad::parameter(testutil::random_matrix(12, 12, rng)),
                     ad::parameter(testutil::random_matrix(1, 12, rng)),
                     ad::parameter(testutil::random_matrix(12, 3, rng)),
                     ad::parameter(testutil::random_matrix(1, 3, rng)), 0.1);
  ad::Matrix noise = sample_noise(4, 6, 7);
  std::vector<int> cats = {0, 1, 0, 1};
  LossConfig cfg;
  cfg.kind = LossKind::ce;

  auto d_loss = [&] {
    ad::Var real_logits = disc.forward(fused);
    ad::Var fake_logits = disc.forward(gen.forward(noise, cats));
    return discriminator_loss(real_logits, targets, fake_logits, cfg).total;
  };
  auto g_loss = [&] {
    ad::Var fakes = gen.forward(noise, cats);
    return generator_loss(disc.forward(fakes), fused, fakes).total;
  };
  std::vector<NamedParam> params;
  gen.collect_params(params);
  disc.collect_params(params);
  for (auto& [name, param] : params) {
    INFO("parameter ", name);
    CHECK(testutil::max_grad_rel_error(param, d_loss) < 1e-3);
    CHECK(testutil::max_grad_rel_error(param, g_loss) < 1e-3);
  }
}

TEST_SUITE_END();
