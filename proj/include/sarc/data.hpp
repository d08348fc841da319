#ifndef SARC_DATA_HPP_
#define SARC_DATA_HPP_

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace sarc {

enum class Task { A, B, C };
enum class Language { ar, en };
enum class FileFormat { csv, jsonl };

Task parse_task(const std::string& s);
const char* task_name(Task t);
Language parse_language(const std::string& s);
const char* language_name(Language l);

// Category order is fixed; indexes are part of the on-disk schema.
inline constexpr std::array<const char*, 6> kCategoryNames = {
    "sarcasm",       "irony",         "satire",
    "understatement", "overstatement", "rhetorical_question"};

struct TweetRecord {
  std::string id;
  std::string text;
  std::optional<int> label;  // 0 = non-sarcastic, 1 = sarcastic
  std::optional<std::array<int, 6>> categories;
  std::optional<std::string> rephrase;
  std::optional<std::string> dialect;
  Language language = Language::en;
};

// Throws on invariant violations (empty text, label outside {0,1},
// rephrase on a non-sarcastic record).
void validate_record(const TweetRecord& rec);

struct DatasetSplit {
  std::vector<TweetRecord> train;
  std::vector<TweetRecord> validation;
  std::uint64_t seed = 0;
};

// Loads the documented schema for the given task. CSV columns:
//   task A: tweet,sarcastic,rephrase[,dialect]
//   task B: tweet,sarcasm,irony,satire,understatement,overstatement,
//           rhetorical_question
//   task C: text_0,text_1[,sarcastic_id]  (flattened to id "<row>-0"/"<row>-1")
// JSONL keys: id,text,label,categories,rephrase,dialect,language.
// Missing ids are synthesized as zero-based row indices.
std::vector<TweetRecord> load_dataset(const std::string& path,
                                      FileFormat format, Task task);

// Serializes records to the canonical JSONL schema.
void save_jsonl(const std::vector<TweetRecord>& records,
                const std::string& path);
std::string record_to_jsonl(const TweetRecord& rec);

// For each record with a non-empty rephrase, appends a non-sarcastic copy
// with text = rephrase and id suffixed "-r". Input records are unchanged
// and keep their position.
std::vector<TweetRecord> augment_with_rephrases(
    const std::vector<TweetRecord>& records);

// Label-stratified split, deterministic under seed. Validation size is
// round(ratio * total) and per-label counts track the overall proportions
// within one record.
DatasetSplit stratified_split(const std::vector<TweetRecord>& records,
                              double ratio, std::uint64_t seed);

// Keeps records with label == 1, preserving order.
std::vector<TweetRecord> filter_sarcastic(
    const std::vector<TweetRecord>& records);

// Groups a task-C flattened record list back into pairs (i-0, i-1).
struct PairRecord {
  std::string id;
  TweetRecord first;
  TweetRecord second;
  std::optional<int> sarcastic_index;  // gold, when known
};
std::vector<PairRecord> group_pairs(const std::vector<TweetRecord>& records);

}  // namespace sarc

#endif  // SARC_DATA_HPP_
