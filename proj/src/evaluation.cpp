#include "sarc/evaluation.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <sstream>

#include "json.hpp"
#include "sarc/errors.hpp"
#include "sarc/text.hpp"

namespace sarc {

namespace {

struct BinaryCounts {
  long tp = 0, fp = 0, fn = 0, tn = 0;
};

double safe_div(double num, double den) { return den == 0.0 ? 0.0 : num / den; }

double f1_from(double precision, double recall) {
  return safe_div(2.0 * precision * recall, precision + recall);
}

// Preprocess a record with the model's stored configuration.
std::string prepare_text(const TrainedModel& model, const TweetRecord& rec) {
  const PreprocessConfig& pc = model.config.preprocess;
  std::string text = normalize(rec.text, pc);
  if (model.config.use_dialect)
    text = inject_dialect(text, rec.dialect, pc);
  return text;
}

// Fused features for a batch of already-prepared texts (eval mode).
ad::Matrix fused_features(const TrainedModel& model,
                          const std::vector<std::string>& prepared) {
  TokenBatch batch = model.encoder->tokenize(prepared);
  EncodedVars enc = model.encoder->forward(batch);
  AttentionPool::Pooled pooled =
      model.pool->forward(enc.token_states, enc.mask, enc.batch, enc.len);
  return fuse(enc.pooled, pooled.context)->value;
}

constexpr std::size_t kInferenceChunk = 64;

std::vector<double> model_proba_chunk(const TrainedModel& model,
                                      const std::vector<std::string>& prepared) {
  ad::Var features = ad::constant(fused_features(model, prepared));
  std::vector<double> out;
  out.reserve(prepared.size());
  switch (model.model_kind) {
    case ModelKind::m1: {
      ModelOutput mo = model1_forward(features, *model.head);
      for (Eigen::Index r = 0; r < mo.probabilities.rows(); ++r)
        out.push_back(mo.probabilities(r, 0));
      break;
    }
    case ModelKind::m2: {
      ModelOutput mo = model2_forward(features, *model.head);
      for (Eigen::Index r = 0; r < mo.probabilities.rows(); ++r)
        out.push_back(mo.probabilities(r, 1));
      break;
    }
    case ModelKind::m3: {
      ad::Var logits = model.discriminator->forward(features);
      ModelOutput mo = softmax_output(logits->value);
      Eigen::Index k = mo.probabilities.cols() - 1;
      for (Eigen::Index r = 0; r < mo.probabilities.rows(); ++r) {
        double real_mass = 0.0;
        for (Eigen::Index c = 0; c < k; ++c) real_mass += mo.probabilities(r, c);
        out.push_back(safe_div(mo.probabilities(r, 1), real_mass));
      }
      break;
    }
  }
  return out;
}

}  // namespace

MetricReport metrics_binary(const std::vector<int>& predictions,
                            const std::vector<int>& gold) {
  if (predictions.size() != gold.size())
    throw SarcError(ErrorKind::LengthMismatch,
                    std::to_string(predictions.size()) + " predictions vs " +
                        std::to_string(gold.size()) + " gold labels");
  if (predictions.empty())
    throw SarcError(ErrorKind::EmptyInput, "metrics on empty input");

  BinaryCounts c;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    int p = predictions[i], g = gold[i];
    if (p == 1 && g == 1) ++c.tp;
    else if (p == 1 && g == 0) ++c.fp;
    else if (p == 0 && g == 1) ++c.fn;
    else ++c.tn;
  }
  auto n = static_cast<double>(predictions.size());

  double prec_pos = safe_div(c.tp, c.tp + c.fp);
  double rec_pos = safe_div(c.tp, c.tp + c.fn);
  double prec_neg = safe_div(c.tn, c.tn + c.fn);
  double rec_neg = safe_div(c.tn, c.tn + c.fp);

  MetricReport r;
  r.accuracy = (static_cast<double>(c.tp) + c.tn) / n;
  r.macro_precision = 0.5 * (prec_pos + prec_neg);
  r.macro_recall = 0.5 * (rec_pos + rec_neg);
  r.f1_sarcastic = f1_from(prec_pos, rec_pos);
  r.macro_f1 = 0.5 * (r.f1_sarcastic + f1_from(prec_neg, rec_neg));
  return r;
}

MetricReport metrics_multilabel(
    const std::vector<std::array<int, 6>>& predictions,
    const std::vector<std::array<int, 6>>& gold) {
  if (predictions.size() != gold.size())
    throw SarcError(ErrorKind::LengthMismatch, "predictions vs gold");
  if (predictions.empty())
    throw SarcError(ErrorKind::EmptyInput, "metrics on empty input");

  MetricReport r;
  std::array<double, 6> per{};
  long exact = 0;
  for (std::size_t cat = 0; cat < 6; ++cat) {
    long tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
      int p = predictions[i][cat], g = gold[i][cat];
      if (p == 1 && g == 1) ++tp;
      else if (p == 1 && g == 0) ++fp;
      else if (p == 0 && g == 1) ++fn;
    }
    per[cat] = f1_from(safe_div(tp, tp + fp), safe_div(tp, tp + fn));
  }
  for (std::size_t i = 0; i < predictions.size(); ++i)
    if (predictions[i] == gold[i]) ++exact;

  r.per_category_f1 = per;
  double sum = 0.0;
  for (double f : per) sum += f;
  r.macro_f1 = sum / 6.0;
  r.accuracy = static_cast<double>(exact) / static_cast<double>(predictions.size());
  return r;
}

std::vector<double> predict_proba(const TrainedModel& model,
                                  const std::vector<TweetRecord>& records) {
  if (model.task == Task::B)
    throw SarcError(ErrorKind::TaskMismatch,
                    "task-B checkpoint has no sarcastic probability");
  std::vector<double> out;
  out.reserve(records.size());
  for (std::size_t start = 0; start < records.size();
       start += kInferenceChunk) {
    std::vector<std::string> prepared;
    for (std::size_t i = start;
         i < std::min(records.size(), start + kInferenceChunk); ++i)
      prepared.push_back(prepare_text(model, records[i]));
    for (double p : model_proba_chunk(model, prepared)) out.push_back(p);
  }
  return out;
}

std::vector<double> predict_proba(const TrainedModel& model,
                                  const std::vector<std::string>& texts) {
  std::vector<TweetRecord> records;
  records.reserve(texts.size());
  for (std::size_t i = 0; i < texts.size(); ++i) {
    TweetRecord rec;
    rec.id = std::to_string(i);
    rec.text = texts[i];
    records.push_back(std::move(rec));
  }
  return predict_proba(model, records);
}

std::vector<std::array<double, 6>> predict_category_proba(
    const TrainedModel& model, const std::vector<TweetRecord>& records) {
  if (model.task != Task::B || model.model_kind != ModelKind::m3)
    throw SarcError(ErrorKind::TaskMismatch,
                    "category probabilities need a task-B GAN checkpoint");
  std::vector<std::array<double, 6>> out;
  out.reserve(records.size());
  for (std::size_t start = 0; start < records.size();
       start += kInferenceChunk) {
    std::vector<std::string> prepared;
    for (std::size_t i = start;
         i < std::min(records.size(), start + kInferenceChunk); ++i)
      prepared.push_back(prepare_text(model, records[i]));
    ad::Var features = ad::constant(fused_features(model, prepared));
    TaskBLogits logits = taskB_discriminator_forward(features,
                                                     *model.discriminator);
    ModelOutput mo = sigmoid_output(logits.category_logits->value);
    for (Eigen::Index r = 0; r < mo.probabilities.rows(); ++r) {
      std::array<double, 6> row{};
      for (Eigen::Index c = 0; c < 6; ++c) row[static_cast<std::size_t>(c)] =
          mo.probabilities(r, c);
      out.push_back(row);
    }
  }
  return out;
}

void EnsembleBundle::validate(Task task) const {
  if (members.empty())
    throw SarcError(ErrorKind::EmptyEnsemble, "no ensemble members");
  Task wanted = task == Task::C ? Task::A : task;
  for (const auto& m : members) {
    if (m.task != wanted)
      throw SarcError(ErrorKind::TaskMismatch,
                      std::string("checkpoint trained for task ") +
                          task_name(m.task) + " used for task " +
                          task_name(task));
  }
}

std::vector<int> hard_vote(const std::vector<std::vector<int>>& label_votes,
                           const std::vector<std::vector<double>>& probabilities,
                           TieRule tie_rule) {
  (void)tie_rule;  // single documented rule
  if (label_votes.empty())
    throw SarcError(ErrorKind::EmptyEnsemble, "no votes");
  if (probabilities.size() != label_votes.size())
    throw SarcError(ErrorKind::LengthMismatch, "votes vs probabilities");
  const std::size_t n = label_votes[0].size();
  for (std::size_t m = 0; m < label_votes.size(); ++m)
    if (label_votes[m].size() != n || probabilities[m].size() != n)
      throw SarcError(ErrorKind::LengthMismatch,
                      "member " + std::to_string(m) + " sample count");

  std::vector<int> out(n, 0);
  auto members = static_cast<double>(label_votes.size());
  for (std::size_t i = 0; i < n; ++i) {
    int ones = 0;
    double prob_sum = 0.0;
    for (std::size_t m = 0; m < label_votes.size(); ++m) {
      ones += label_votes[m][i];
      prob_sum += probabilities[m][i];
    }
    double zeros = members - ones;
    if (ones > zeros)
      out[i] = 1;
    else if (ones < zeros)
      out[i] = 0;
    else
      out[i] = prob_sum / members >= 0.5 ? 1 : 0;
  }
  return out;
}

int pairwise_decide(const EnsembleBundle& bundle, const TweetRecord& text0,
                    const TweetRecord& text1) {
  bundle.validate(Task::C);
  double p0 = 0.0, p1 = 0.0;
  for (const auto& member : bundle.members) {
    std::vector<double> p = predict_proba(member, std::vector<TweetRecord>{
                                                      text0, text1});
    p0 += p[0];
    p1 += p[1];
  }
  return p0 >= p1 ? 0 : 1;
}

int pairwise_decide(const EnsembleBundle& bundle, const std::string& text0,
                    const std::string& text1) {
  TweetRecord a, b;
  a.id = "0";
  a.text = text0;
  b.id = "1";
  b.text = text1;
  return pairwise_decide(bundle, a, b);
}

std::vector<int> ensemble_predict_binary(
    const EnsembleBundle& bundle, const std::vector<TweetRecord>& records) {
  bundle.validate(Task::A);
  std::vector<std::vector<int>> votes;
  std::vector<std::vector<double>> probs;
  for (const auto& member : bundle.members) {
    std::vector<double> p = predict_proba(member, records);
    std::vector<int> v(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) v[i] = p[i] >= 0.5 ? 1 : 0;
    probs.push_back(std::move(p));
    votes.push_back(std::move(v));
  }
  return hard_vote(votes, probs, bundle.tie_rule);
}

std::vector<std::array<int, 6>> ensemble_predict_multilabel(
    const EnsembleBundle& bundle, const std::vector<TweetRecord>& records) {
  bundle.validate(Task::B);
  std::vector<std::vector<std::array<double, 6>>> member_probs;
  for (const auto& member : bundle.members)
    member_probs.push_back(predict_category_proba(member, records));

  std::vector<std::array<int, 6>> out(records.size());
  for (std::size_t cat = 0; cat < 6; ++cat) {
    std::vector<std::vector<int>> votes;
    std::vector<std::vector<double>> probs;
    for (const auto& mp : member_probs) {
      std::vector<int> v(records.size());
      std::vector<double> p(records.size());
      for (std::size_t i = 0; i < records.size(); ++i) {
        p[i] = mp[i][cat];
        v[i] = p[i] >= 0.5 ? 1 : 0;
      }
      votes.push_back(std::move(v));
      probs.push_back(std::move(p));
    }
    std::vector<int> decided = hard_vote(votes, probs, bundle.tie_rule);
    for (std::size_t i = 0; i < records.size(); ++i) out[i][cat] = decided[i];
  }
  return out;
}

std::vector<int> ensemble_predict_pairs(const EnsembleBundle& bundle,
                                        const std::vector<PairRecord>& pairs) {
  bundle.validate(Task::C);
  std::vector<int> out;
  out.reserve(pairs.size());
  for (const auto& pair : pairs)
    out.push_back(pairwise_decide(bundle, pair.first, pair.second));
  return out;
}

std::string report_table(const MetricReport& report, Task task) {
  std::ostringstream os;
  auto row = [&os](const std::vector<std::pair<std::string, double>>& cells) {
    std::string header, values;
    char buf[32];
    for (const auto& [name, value] : cells) {
      std::snprintf(buf, sizeof(buf), "%.4f", value);
      std::size_t width = std::max(name.size(), std::strlen(buf));
      header += name + std::string(width - name.size(), ' ') + "  ";
      std::string v(buf);
      values += v + std::string(width - v.size(), ' ') + "  ";
    }
    os << header << "\n" << values << "\n";
  };
  switch (task) {
    case Task::A:
      row({{"F-1 sarcastic", report.f1_sarcastic},
           {"F-score", report.macro_f1},
           {"Precision", report.macro_precision},
           {"Recall", report.macro_recall},
           {"Accuracy", report.accuracy}});
      break;
    case Task::B: {
      std::vector<std::pair<std::string, double>> cells = {
          {"F-1 Macro", report.macro_f1}};
      const auto& per = report.per_category_f1.value_or(
          std::array<double, 6>{});
      const char* names[6] = {"F-1 sarcasm",       "F-1 irony",
                              "F-1 satire",        "F-1 understatement",
                              "F-1 overstatement", "F-1 rhetorical question"};
      for (std::size_t i = 0; i < 6; ++i) cells.emplace_back(names[i], per[i]);
      row(cells);
      break;
    }
    case Task::C:
      row({{"Accuracy", report.accuracy}, {"F-1 Score", report.macro_f1}});
      break;
  }
  os << "members: " << report.ensemble_members << "\n";
  return os.str();
}

std::string report_json(const MetricReport& report, Task task) {
  nlohmann::json j;
  j["task"] = task_name(task);
  j["accuracy"] = report.accuracy;
  j["macro_precision"] = report.macro_precision;
  j["macro_recall"] = report.macro_recall;
  j["macro_f1"] = report.macro_f1;
  j["f1_sarcastic"] = report.f1_sarcastic;
  if (report.per_category_f1.has_value()) {
    nlohmann::json per;
    for (std::size_t i = 0; i < 6; ++i)
      per[kCategoryNames[i]] = (*report.per_category_f1)[i];
    j["per_category_f1"] = per;
  }
  j["ensemble_members"] = report.ensemble_members;
  return j.dump(2);
}

}  // namespace sarc
