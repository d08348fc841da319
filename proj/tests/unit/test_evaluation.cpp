#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "sarc/errors.hpp"
#include "sarc/evaluation.hpp"
#include "sarc/training.hpp"
#include "support/helpers.hpp"
#include "support/oracles.hpp"

using namespace sarc;

TEST_SUITE_BEGIN("evaluation");

namespace {

// A checkpoint-shaped model whose head emits fixed logits (bias-only).
TrainedModel fixed_logit_model(ModelKind kind, const ad::Matrix& bias) {
  TrainConfig config;
  config.model_kind = kind;
  config.encoder_config.dim = 8;
  config.encoder_config.ffn_dim = 16;
  config.encoder_config.max_len = 16;
  config.max_len = 16;

  TrainedModel model;
  model.model_kind = kind;
  model.task = Task::A;
  model.config = config;
  Vocabulary vocab = Vocabulary::build({"a b c"});
  model.encoder = std::make_shared<TinyEncoder>(config.encoder_config, vocab, 1);
  model.pool = std::make_shared<AttentionPool>(8, 1);
  const int fused = 16;
  if (kind == ModelKind::m3) {
    model.discriminator = std::make_shared<Discriminator>(
        ad::parameter(ad::Matrix::Zero(fused, fused)),
        ad::parameter(ad::Matrix::Zero(1, fused)),
        ad::parameter(ad::Matrix::Zero(fused, fused)),
        ad::parameter(ad::Matrix::Zero(1, fused)),
        ad::parameter(ad::Matrix::Zero(fused, bias.cols())),
        ad::parameter(bias), 0.1);
    model.generator = std::make_shared<Generator>(
        10, static_cast<int>(bias.cols()) - 1, 4, fused, fused, 0.1, 1);
  } else {
    model.head = std::make_shared<ClassifierHead>(
        ad::parameter(ad::Matrix::Zero(fused, fused)),
        ad::parameter(ad::Matrix::Zero(1, fused)),
        ad::parameter(ad::Matrix::Zero(fused, bias.cols())),
        ad::parameter(bias), 0.1);
  }
  return model;
}

}  // namespace

TEST_CASE("perfect predictions score one everywhere") {
  std::vector<int> gold = {1, 0, 1, 1, 0};
  MetricReport r = metrics_binary(gold, gold);
  CHECK(r.accuracy == 1.0);
  CHECK(r.macro_precision == 1.0);
  CHECK(r.macro_recall == 1.0);
  CHECK(r.macro_f1 == 1.0);
  CHECK(r.f1_sarcastic == 1.0);
}

TEST_CASE("never predicting the sarcastic class zeroes its F1") {
  MetricReport r = metrics_binary({0, 0, 0, 0}, {1, 0, 1, 0});
  CHECK(r.f1_sarcastic == 0.0);
  CHECK(r.accuracy == 0.5);
}

TEST_CASE("hand confusion matrix case") {
  MetricReport r = metrics_binary({1, 1, 0, 0}, {1, 0, 1, 0});
  CHECK(r.accuracy == doctest::Approx(0.5));
  CHECK(r.f1_sarcastic == doctest::Approx(0.5));
  CHECK(r.macro_f1 == doctest::Approx(0.5));
}

TEST_CASE("metrics match the brute-force oracle on random cases") {
  Rng rng(3);
  for (int trial = 0; trial < 500; ++trial) {
    int n = 1 + static_cast<int>(rng.uniform_int(30));
    std::vector<int> pred(n), gold(n);
    for (int i = 0; i < n; ++i) {
      pred[i] = static_cast<int>(rng.uniform_int(2));
      gold[i] = static_cast<int>(rng.uniform_int(2));
    }
    MetricReport r = metrics_binary(pred, gold);
    oracle::BinaryMetrics o = oracle::binary_metrics(pred, gold);
    CHECK(std::abs(r.accuracy - o.accuracy) < 1e-9);
    CHECK(std::abs(r.macro_precision - o.macro_precision) < 1e-9);
    CHECK(std::abs(r.macro_recall - o.macro_recall) < 1e-9);
    CHECK(std::abs(r.macro_f1 - o.macro_f1) < 1e-9);
    CHECK(std::abs(r.f1_sarcastic - o.f1_sarcastic) < 1e-9);
  }
}

TEST_CASE("length mismatch is rejected") {
  CHECK_THROWS_AS(metrics_binary({1, 0}, {1}), SarcError);
}

TEST_CASE("perfect multilabel predictions score macro one") {
  std::vector<std::array<int, 6>> gold = {{1, 0, 0, 1, 0, 1},
                                          {1, 1, 0, 0, 1, 0},
                                          {0, 0, 1, 0, 0, 0}};
  MetricReport perfect = metrics_multilabel(gold, gold);
  CHECK(perfect.macro_f1 == 1.0);
  CHECK(perfect.accuracy == 1.0);
}

TEST_CASE("multilabel metrics use the 0/0 to 0 convention") {
  // understatement and overstatement never occur and are never predicted:
  // their F1 is 0 and drags the macro mean down even when every other
  // category is spot on.
  std::vector<std::array<int, 6>> gold = {{1, 0, 0, 0, 0, 1},
                                          {1, 1, 0, 0, 0, 0},
                                          {0, 0, 1, 0, 0, 0}};
  MetricReport r = metrics_multilabel(gold, gold);
  REQUIRE(r.per_category_f1.has_value());
  CHECK((*r.per_category_f1)[3] == 0.0);
  CHECK((*r.per_category_f1)[4] == 0.0);
  CHECK(r.macro_f1 == doctest::Approx(4.0 / 6.0));
}

TEST_CASE("multilabel macro is the unweighted mean of six category F1s") {
  std::vector<std::array<int, 6>> pred = {{1, 0, 0, 0, 0, 0},
                                          {1, 1, 0, 0, 0, 0},
                                          {0, 1, 0, 0, 0, 1}};
  std::vector<std::array<int, 6>> gold = {{1, 0, 0, 0, 0, 1},
                                          {0, 1, 0, 0, 0, 0},
                                          {0, 0, 1, 0, 0, 1}};
  MetricReport r = metrics_multilabel(pred, gold);
  REQUIRE(r.per_category_f1.has_value());
  const auto& per = *r.per_category_f1;
  // Per-category confusion by hand:
  CHECK(per[0] == doctest::Approx(2.0 / 3.0));  // tp 1, fp 1, fn 0
  CHECK(per[1] == doctest::Approx(2.0 / 3.0));  // tp 1, fp 1, fn 0
  CHECK(per[2] == doctest::Approx(0.0));        // never predicted, one actual
  CHECK(per[3] == doctest::Approx(0.0));
  CHECK(per[4] == doctest::Approx(0.0));
  CHECK(per[5] == doctest::Approx(2.0 / 3.0));  // tp 1, fp 0, fn 1
  double mean = 0.0;
  for (double f : per) mean += f;
  CHECK(r.macro_f1 == doctest::Approx(mean / 6.0));
}

TEST_CASE("hard vote takes the majority") {
  CHECK(hard_vote({{1}, {1}, {0}}, {{0.9}, {0.8}, {0.1}},
                  TieRule::mean_probability) == std::vector<int>{1});
  CHECK(hard_vote({{0}, {0}, {0}, {0}}, {{0.1}, {0.2}, {0.3}, {0.4}},
                  TieRule::mean_probability) == std::vector<int>{0});
}

TEST_CASE("ties fall back to the mean probability") {
  CHECK(hard_vote({{1}, {0}}, {{0.9}, {0.2}}, TieRule::mean_probability) ==
        std::vector<int>{1});  // mean 0.55
  CHECK(hard_vote({{1}, {0}}, {{0.6}, {0.2}}, TieRule::mean_probability) ==
        std::vector<int>{0});  // mean 0.4
}

TEST_CASE("a single member reproduces its own labels") {
  Rng rng(7);
  std::vector<int> labels(50);
  std::vector<double> probs(50);
  for (int i = 0; i < 50; ++i) {
    labels[i] = static_cast<int>(rng.uniform_int(2));
    probs[i] = labels[i] == 1 ? 0.6 + 0.4 * rng.uniform01()
                              : 0.4 * rng.uniform01();
  }
  CHECK(hard_vote({labels}, {probs}, TieRule::mean_probability) == labels);
}

TEST_CASE("hard vote is invariant to member order") {
  Rng rng(11);
  std::vector<std::vector<int>> votes(5, std::vector<int>(20));
  std::vector<std::vector<double>> probs(5, std::vector<double>(20));
  for (int m = 0; m < 5; ++m)
    for (int i = 0; i < 20; ++i) {
      votes[m][i] = static_cast<int>(rng.uniform_int(2));
      probs[m][i] = rng.uniform01();
    }
  auto base = hard_vote(votes, probs, TieRule::mean_probability);
  std::vector<int> perm = {4, 2, 0, 3, 1};
  std::vector<std::vector<int>> votes2;
  std::vector<std::vector<double>> probs2;
  for (int m : perm) {
    votes2.push_back(votes[m]);
    probs2.push_back(probs[m]);
  }
  CHECK(hard_vote(votes2, probs2, TieRule::mean_probability) == base);
}

TEST_CASE("an empty ensemble is rejected") {
  CHECK_THROWS_AS(hard_vote({}, {}, TieRule::mean_probability), SarcError);
  EnsembleBundle bundle;
  try {
    bundle.validate(Task::A);
    FAIL("expected EmptyEnsemble");
  } catch (const SarcError& e) {
    CHECK(e.kind() == ErrorKind::EmptyEnsemble);
  }
}

TEST_CASE("predict_proba per model kind") {
  // m1 with zero weights: logit 0, probability one half.
  TrainedModel m1 = fixed_logit_model(ModelKind::m1, ad::Matrix::Zero(1, 1));
  std::vector<double> p1 = predict_proba(m1, std::vector<std::string>{"a b"});
  CHECK(p1[0] == 0.5);

  // m2 with logits (0, ln 3): p(class 1) = 0.75.
  ad::Matrix bias(1, 2);
  bias << 0.0, std::log(3.0);
  TrainedModel m2 = fixed_logit_model(ModelKind::m2, bias);
  std::vector<double> p2 = predict_proba(m2, std::vector<std::string>{"a"});
  CHECK(p2[0] == doctest::Approx(0.75).epsilon(1e-12));

  // m3 with equal logits over (real0, real1, fake): renormalized p = 0.5.
  ad::Matrix three(1, 3);
  three << 1.0, 1.0, 1.0;
  TrainedModel m3 = fixed_logit_model(ModelKind::m3, three);
  std::vector<double> p3 = predict_proba(m3, std::vector<std::string>{"a"});
  CHECK(p3[0] == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("m2 probability is invariant to a logit shift") {
  ad::Matrix bias(1, 2), shifted(1, 2);
  bias << 0.25, 1.5;
  shifted << 0.25 + 4.0, 1.5 + 4.0;
  TrainedModel a = fixed_logit_model(ModelKind::m2, bias);
  TrainedModel b = fixed_logit_model(ModelKind::m2, shifted);
  CHECK(predict_proba(a, std::vector<std::string>{"a"})[0] ==
        predict_proba(b, std::vector<std::string>{"a"})[0]);
}

TEST_CASE("pairwise decisions compare mean probabilities") {
  ad::Matrix hi(1, 1), lo(1, 1);
  hi << 2.0;
  lo << -1.0;
  EnsembleBundle high;
  high.members.push_back(fixed_logit_model(ModelKind::m1, hi));
  // Fixed logits make p0 == p1, the documented tie: index 0.
  CHECK(pairwise_decide(high, "alpha", "beta") == 0);
}

TEST_CASE("pairwise decisions with a trained marker model") {
  auto corpus = testutil::marker_corpus(32, 5);
  TrainConfig config;
  config.model_kind = ModelKind::m1;
  config.encoder_config.dim = 16;
  config.encoder_config.ffn_dim = 32;
  config.epochs = 60;
  config.learning_rate = 3e-3;
  config.batch_size = 16;
  config.max_len = 16;
  config.seed = 9;
  FitResult result = fit(corpus, config);

  EnsembleBundle bundle;
  bundle.members.push_back(result.model);
  int correct = 0;
  Rng rng(13);
  for (int i = 0; i < 40; ++i) {
    std::string plain = "coffee train news";
    std::string marked = plain + " zonk";
    bool marked_first = rng.bernoulli(0.5);
    int got = marked_first ? pairwise_decide(bundle, marked, plain)
                           : pairwise_decide(bundle, plain, marked);
    int want = marked_first ? 0 : 1;
    if (got == want) ++correct;
    // Antisymmetry: swapping the texts flips the answer when not tied.
    double pm = predict_proba(result.model,
                              std::vector<std::string>{marked})[0];
    double pp = predict_proba(result.model,
                              std::vector<std::string>{plain})[0];
    if (pm != pp) {
      CHECK(pairwise_decide(bundle, marked, plain) !=
            pairwise_decide(bundle, plain, marked));
    }
  }
  CHECK(correct == 40);
}

TEST_CASE("task mismatch is caught") {
  TrainedModel wrong = fixed_logit_model(ModelKind::m1, ad::Matrix::Zero(1, 1));
  wrong.task = Task::B;
  EnsembleBundle bundle;
  bundle.members.push_back(wrong);
  try {
    bundle.validate(Task::A);
    FAIL("expected TaskMismatch");
  } catch (const SarcError& e) {
    CHECK(e.kind() == ErrorKind::TaskMismatch);
  }
}

TEST_CASE("task C accepts task-A members") {
  EnsembleBundle bundle;
  bundle.members.push_back(
      fixed_logit_model(ModelKind::m1, ad::Matrix::Zero(1, 1)));
  bundle.validate(Task::C);
}

TEST_CASE("report tables carry the task's column layout") {
  MetricReport r;
  r.accuracy = 0.805;
  r.macro_f1 = 0.7188;
  r.f1_sarcastic = 0.5632;
  std::string a = report_table(r, Task::A);
  CHECK(a.find("F-1 sarcastic") != std::string::npos);
  CHECK(a.find("Accuracy") != std::string::npos);
  r.per_category_f1 = std::array<double, 6>{0.2, 0.1, 0.0, 0.0, 0.0, 0.1};
  std::string b = report_table(r, Task::B);
  CHECK(b.find("F-1 rhetorical question") != std::string::npos);
  std::string c = report_table(r, Task::C);
  CHECK(c.find("F-1 Score") != std::string::npos);
  CHECK(report_json(r, Task::B).find("per_category_f1") != std::string::npos);
}

TEST_SUITE_END();
