#ifndef SARC_EVALUATION_HPP_
#define SARC_EVALUATION_HPP_

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "sarc/checkpoint.hpp"
#include "sarc/data.hpp"

namespace sarc {

struct MetricReport {
  double accuracy = 0.0;
  double macro_precision = 0.0;
  double macro_recall = 0.0;
  double macro_f1 = 0.0;
  double f1_sarcastic = 0.0;
  std::optional<std::array<double, 6>> per_category_f1;  // task B
  int ensemble_members = 1;
};

// --- metrics ------------------------------------------------------------------
// Macro scores are unweighted means over the two classes; an undefined
// precision/recall/F1 (0/0) counts as 0.
MetricReport metrics_binary(const std::vector<int>& predictions,
                            const std::vector<int>& gold);
// Per-category positive-class F1; macro F1 is their unweighted mean.
// The accuracy field holds the exact-match ratio.
MetricReport metrics_multilabel(
    const std::vector<std::array<int, 6>>& predictions,
    const std::vector<std::array<int, 6>>& gold);

// --- single-model inference ----------------------------------------------------
// Applies the checkpoint's own preprocessing, then:
//   m1 -> sigmoid(logit); m2 -> softmax[1];
//   m3 -> k+1 softmax renormalized over the real classes, component 1.
std::vector<double> predict_proba(const TrainedModel& model,
                                  const std::vector<TweetRecord>& records);
std::vector<double> predict_proba(const TrainedModel& model,
                                  const std::vector<std::string>& texts);

// Task-B per-category probabilities (sigmoid of the category logits).
std::vector<std::array<double, 6>> predict_category_proba(
    const TrainedModel& model, const std::vector<TweetRecord>& records);

// --- ensembling -----------------------------------------------------------------
enum class TieRule { mean_probability };

struct EnsembleBundle {
  std::vector<TrainedModel> members;
  TieRule tie_rule = TieRule::mean_probability;

  // Throws EmptyEnsemble / TaskMismatch. Task C accepts task-A members.
  void validate(Task task) const;
};

// Majority vote per sample; an exact tie resolves to 1 iff the mean
// sarcastic probability is >= 0.5.
std::vector<int> hard_vote(const std::vector<std::vector<int>>& label_votes,
                           const std::vector<std::vector<double>>& probabilities,
                           TieRule tie_rule);

// Index of the sarcastic text by mean member probability; ties go to 0.
int pairwise_decide(const EnsembleBundle& bundle, const TweetRecord& text0,
                    const TweetRecord& text1);
int pairwise_decide(const EnsembleBundle& bundle, const std::string& text0,
                    const std::string& text1);

// --- whole-dataset ensemble paths ------------------------------------------------
std::vector<int> ensemble_predict_binary(const EnsembleBundle& bundle,
                                         const std::vector<TweetRecord>& records);
std::vector<std::array<int, 6>> ensemble_predict_multilabel(
    const EnsembleBundle& bundle, const std::vector<TweetRecord>& records);
std::vector<int> ensemble_predict_pairs(const EnsembleBundle& bundle,
                                        const std::vector<PairRecord>& pairs);

// --- reports ---------------------------------------------------------------------
// One row shaped like the corresponding results table.
std::string report_table(const MetricReport& report, Task task);
std::string report_json(const MetricReport& report, Task task);

}  // namespace sarc

#endif  // SARC_EVALUATION_HPP_
