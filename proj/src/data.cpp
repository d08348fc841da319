#include "sarc/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "json.hpp"
#include "sarc/errors.hpp"
#include "sarc/rng.hpp"

namespace sarc {

namespace {

using nlohmann::json;

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r\n\f\v");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r\n\f\v");
  return s.substr(a, b - a + 1);
}

// RFC 4180 style: quoted fields may contain commas, doubled quotes and
// newlines. Returns rows of raw field strings.
std::vector<std::vector<std::string>> parse_csv(const std::string& content) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool in_quotes = false;
  bool row_started = false;
  std::size_t i = 0;
  // Skip a UTF-8 BOM.
  if (content.size() >= 3 && content.compare(0, 3, "\xEF\xBB\xBF") == 0) i = 3;
  auto end_field = [&] {
    row.push_back(field);
    field.clear();
  };
  auto end_row = [&] {
    end_field();
    rows.push_back(row);
    row.clear();
    row_started = false;
  };
  for (; i < content.size(); ++i) {
    char c = content[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < content.size() && content[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        field.push_back(c);
      }
      continue;
    }
    switch (c) {
      case '"':
        in_quotes = true;
        row_started = true;
        break;
      case ',':
        end_field();
        row_started = true;
        break;
      case '\r':
        break;
      case '\n':
        if (row_started || !field.empty() || !row.empty()) end_row();
        break;
      default:
        field.push_back(c);
        row_started = true;
        break;
    }
  }
  if (row_started || !field.empty() || !row.empty()) end_row();
  return rows;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SarcError(ErrorKind::IoError, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int parse_binary_label(const std::string& raw, const std::string& what) {
  std::string t = trim(raw);
  if (t == "0") return 0;
  if (t == "1") return 1;
  throw SarcError(ErrorKind::BadLabel, what + " value '" + raw +
                                           "' not in {0,1}");
}

struct Header {
  std::unordered_map<std::string, std::size_t> index;

  bool has(const std::string& name) const { return index.count(name) > 0; }
  std::size_t require(const std::string& name) const {
    auto it = index.find(name);
    if (it == index.end())
      throw SarcError(ErrorKind::MissingColumn, "column '" + name + "'");
    return it->second;
  }
};

Header parse_header(const std::vector<std::string>& row) {
  Header h;
  for (std::size_t i = 0; i < row.size(); ++i) h.index[trim(row[i])] = i;
  return h;
}

std::string field_at(const std::vector<std::string>& row, std::size_t idx) {
  return idx < row.size() ? row[idx] : std::string();
}

std::optional<std::string> optional_text(const std::string& raw) {
  std::string t = trim(raw);
  if (t.empty()) return std::nullopt;
  return raw;
}

std::vector<TweetRecord> load_csv(const std::string& path, Task task) {
  auto rows = parse_csv(read_file(path));
  if (rows.empty())
    throw SarcError(ErrorKind::MissingColumn, "empty file, no header: " + path);
  Header h = parse_header(rows[0]);
  std::vector<TweetRecord> out;

  if (task == Task::A) {
    std::size_t c_tweet = h.require("tweet");
    std::size_t c_label = h.require("sarcastic");
    bool has_rephrase = h.has("rephrase");
    bool has_dialect = h.has("dialect");
    Language lang = has_dialect ? Language::ar : Language::en;
    for (std::size_t r = 1; r < rows.size(); ++r) {
      TweetRecord rec;
      rec.id = std::to_string(r - 1);
      rec.text = field_at(rows[r], c_tweet);
      if (trim(rec.text).empty())
        throw SarcError(ErrorKind::EmptyText, "row " + std::to_string(r - 1));
      rec.label = parse_binary_label(field_at(rows[r], c_label), "sarcastic");
      if (has_rephrase)
        rec.rephrase = optional_text(field_at(rows[r], h.require("rephrase")));
      if (has_dialect)
        rec.dialect = optional_text(field_at(rows[r], h.require("dialect")));
      rec.language = lang;
      validate_record(rec);
      out.push_back(std::move(rec));
    }
  } else if (task == Task::B) {
    std::size_t c_tweet = h.require("tweet");
    std::array<std::size_t, 6> cols{};
    for (std::size_t k = 0; k < kCategoryNames.size(); ++k)
      cols[k] = h.require(kCategoryNames[k]);
    for (std::size_t r = 1; r < rows.size(); ++r) {
      TweetRecord rec;
      rec.id = std::to_string(r - 1);
      rec.text = field_at(rows[r], c_tweet);
      if (trim(rec.text).empty())
        throw SarcError(ErrorKind::EmptyText, "row " + std::to_string(r - 1));
      std::array<int, 6> cats{};
      int any = 0;
      for (std::size_t k = 0; k < 6; ++k) {
        cats[k] = parse_binary_label(field_at(rows[r], cols[k]),
                                     kCategoryNames[k]);
        any |= cats[k];
      }
      rec.categories = cats;
      rec.label = any;  // a categorized tweet is a sarcastic tweet
      rec.language = Language::en;
      validate_record(rec);
      out.push_back(std::move(rec));
    }
  } else {  // Task::C
    std::size_t c0 = h.require("text_0");
    std::size_t c1 = h.require("text_1");
    bool has_gold = h.has("sarcastic_id");
    for (std::size_t r = 1; r < rows.size(); ++r) {
      std::optional<int> gold;
      if (has_gold)
        gold = parse_binary_label(field_at(rows[r], h.require("sarcastic_id")),
                                  "sarcastic_id");
      for (int side = 0; side < 2; ++side) {
        TweetRecord rec;
        rec.id = std::to_string(r - 1) + "-" + std::to_string(side);
        rec.text = field_at(rows[r], side == 0 ? c0 : c1);
        if (trim(rec.text).empty())
          throw SarcError(ErrorKind::EmptyText,
                          "row " + std::to_string(r - 1) + " side " +
                              std::to_string(side));
        if (gold.has_value()) rec.label = (*gold == side) ? 1 : 0;
        rec.language = Language::en;
        validate_record(rec);
        out.push_back(std::move(rec));
      }
    }
  }
  return out;
}

std::vector<TweetRecord> load_jsonl(const std::string& path, Task task) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SarcError(ErrorKind::IoError, "cannot open " + path);
  std::vector<TweetRecord> out;
  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw SarcError(ErrorKind::IoError,
                      "bad json on line " + std::to_string(row) + ": " +
                          e.what());
    }
    if (task == Task::C) {
      // Pair layout: text_0, text_1, optional sarcastic_id.
      if (!j.contains("text_0") || !j.contains("text_1"))
        throw SarcError(ErrorKind::MissingColumn,
                        "keys 'text_0'/'text_1' on line " +
                            std::to_string(row));
      std::optional<int> gold;
      if (j.contains("sarcastic_id") && !j["sarcastic_id"].is_null()) {
        int g = j["sarcastic_id"].get<int>();
        if (g != 0 && g != 1)
          throw SarcError(ErrorKind::BadLabel,
                          "sarcastic_id on line " + std::to_string(row));
        gold = g;
      }
      for (int side = 0; side < 2; ++side) {
        TweetRecord rec;
        rec.id = std::to_string(row) + "-" + std::to_string(side);
        rec.text = j[side == 0 ? "text_0" : "text_1"].get<std::string>();
        if (trim(rec.text).empty())
          throw SarcError(ErrorKind::EmptyText,
                          "line " + std::to_string(row));
        if (gold.has_value()) rec.label = (*gold == side) ? 1 : 0;
        rec.language = Language::en;
        out.push_back(std::move(rec));
      }
      ++row;
      continue;
    }
    TweetRecord rec;
    rec.id = j.contains("id") && !j["id"].is_null()
                 ? (j["id"].is_string() ? j["id"].get<std::string>()
                                        : j["id"].dump())
                 : std::to_string(row);
    if (!j.contains("text") || !j["text"].is_string())
      throw SarcError(ErrorKind::MissingColumn,
                      "key 'text' on line " + std::to_string(row));
    rec.text = j["text"].get<std::string>();
    if (trim(rec.text).empty())
      throw SarcError(ErrorKind::EmptyText, "line " + std::to_string(row));
    if (j.contains("label") && !j["label"].is_null()) {
      if (!j["label"].is_number_integer())
        throw SarcError(ErrorKind::BadLabel, "line " + std::to_string(row));
      int l = j["label"].get<int>();
      if (l != 0 && l != 1)
        throw SarcError(ErrorKind::BadLabel, "line " + std::to_string(row));
      rec.label = l;
    }
    if (j.contains("categories") && !j["categories"].is_null()) {
      if (!j["categories"].is_array() || j["categories"].size() != 6)
        throw SarcError(ErrorKind::BadLabel,
                        "categories must be a 6-array, line " +
                            std::to_string(row));
      std::array<int, 6> cats{};
      for (std::size_t k = 0; k < 6; ++k) {
        int v = j["categories"][k].get<int>();
        if (v != 0 && v != 1)
          throw SarcError(ErrorKind::BadLabel,
                          "category flags must be 0/1, line " +
                              std::to_string(row));
        cats[k] = v;
      }
      rec.categories = cats;
    }
    if (j.contains("rephrase") && !j["rephrase"].is_null()) {
      std::string rp = j["rephrase"].get<std::string>();
      if (!trim(rp).empty()) rec.rephrase = rp;
    }
    if (j.contains("dialect") && !j["dialect"].is_null()) {
      std::string d = j["dialect"].get<std::string>();
      if (!trim(d).empty()) rec.dialect = d;
    }
    rec.language = Language::en;
    if (j.contains("language") && !j["language"].is_null())
      rec.language = parse_language(j["language"].get<std::string>());
    if (task == Task::B && !rec.categories.has_value() && !rec.label.has_value())
      throw SarcError(ErrorKind::MissingColumn,
                      "task B record without categories, line " +
                          std::to_string(row));
    validate_record(rec);
    out.push_back(std::move(rec));
    ++row;
  }
  return out;
}

}  // namespace

Task parse_task(const std::string& s) {
  if (s == "A" || s == "a") return Task::A;
  if (s == "B" || s == "b") return Task::B;
  if (s == "C" || s == "c") return Task::C;
  throw SarcError(ErrorKind::BadConfig, "task must be A, B or C, got " + s);
}

const char* task_name(Task t) {
  switch (t) {
    case Task::A: return "A";
    case Task::B: return "B";
    case Task::C: return "C";
  }
  return "?";
}

Language parse_language(const std::string& s) {
  if (s == "ar") return Language::ar;
  if (s == "en") return Language::en;
  throw SarcError(ErrorKind::BadConfig, "language must be ar or en, got " + s);
}

const char* language_name(Language l) {
  return l == Language::ar ? "ar" : "en";
}

void validate_record(const TweetRecord& rec) {
  if (trim(rec.text).empty())
    throw SarcError(ErrorKind::EmptyText, "record " + rec.id);
  if (rec.label.has_value() && *rec.label != 0 && *rec.label != 1)
    throw SarcError(ErrorKind::BadLabel, "record " + rec.id);
  if (rec.label.has_value() && *rec.label == 0 && rec.rephrase.has_value())
    throw SarcError(ErrorKind::BadRecord,
                    "non-sarcastic record " + rec.id + " carries a rephrase");
  if (rec.categories.has_value() && rec.language != Language::en)
    throw SarcError(ErrorKind::BadRecord,
                    "record " + rec.id + ": categories on a non-en record");
}

std::vector<TweetRecord> load_dataset(const std::string& path,
                                      FileFormat format, Task task) {
  return format == FileFormat::csv ? load_csv(path, task)
                                   : load_jsonl(path, task);
}

std::string record_to_jsonl(const TweetRecord& rec) {
  json j;
  j["id"] = rec.id;
  j["text"] = rec.text;
  j["label"] = rec.label.has_value() ? json(*rec.label) : json(nullptr);
  if (rec.categories.has_value()) {
    j["categories"] = json::array();
    for (int v : *rec.categories) j["categories"].push_back(v);
  } else {
    j["categories"] = nullptr;
  }
  j["rephrase"] = rec.rephrase.has_value() ? json(*rec.rephrase) : json(nullptr);
  j["dialect"] = rec.dialect.has_value() ? json(*rec.dialect) : json(nullptr);
  j["language"] = language_name(rec.language);
  return j.dump();
}

void save_jsonl(const std::vector<TweetRecord>& records,
                const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw SarcError(ErrorKind::IoError, "cannot write " + path);
  for (const auto& rec : records) out << record_to_jsonl(rec) << "\n";
}

std::vector<TweetRecord> augment_with_rephrases(
    const std::vector<TweetRecord>& records) {
  std::unordered_set<std::string> ids;
  for (const auto& rec : records) ids.insert(rec.id);
  std::vector<TweetRecord> out = records;
  for (const auto& rec : records) {
    if (!rec.rephrase.has_value()) continue;
    std::string rp = *rec.rephrase;
    if (trim(rp).empty()) continue;
    // Skip records already augmented in a previous pass.
    if (ids.count(rec.id + "-r")) continue;
    TweetRecord extra;
    extra.id = rec.id + "-r";
    extra.text = rp;
    extra.label = 0;
    extra.dialect = rec.dialect;
    extra.language = rec.language;
    out.push_back(std::move(extra));
  }
  return out;
}

DatasetSplit stratified_split(const std::vector<TweetRecord>& records,
                              double ratio, std::uint64_t seed) {
  if (!(ratio > 0.0 && ratio < 1.0))
    throw SarcError(ErrorKind::BadConfig, "split ratio must be in (0,1)");
  // Strata keyed by label value; records without a label form stratum -1.
  std::map<int, std::vector<std::size_t>> strata;
  for (std::size_t i = 0; i < records.size(); ++i)
    strata[records[i].label.value_or(-1)].push_back(i);
  for (const auto& [label, idx] : strata) {
    if (idx.size() < 2)
      throw SarcError(ErrorKind::DegenerateSplit,
                      "label " + std::to_string(label) + " has " +
                          std::to_string(idx.size()) + " record(s)");
  }
  const auto total = static_cast<double>(records.size());
  const auto target =
      static_cast<std::size_t>(std::llround(ratio * total));

  // Largest-remainder apportionment of the validation quota across strata.
  struct Quota {
    int label;
    std::size_t count;
    std::size_t take;
    double frac;
  };
  std::vector<Quota> quotas;
  std::size_t assigned = 0;
  for (const auto& [label, idx] : strata) {
    double q = ratio * static_cast<double>(idx.size());
    auto fl = static_cast<std::size_t>(std::floor(q));
    if (fl > idx.size() - 1) fl = idx.size() - 1;  // keep one in train
    quotas.push_back({label, idx.size(), fl, q - std::floor(q)});
    assigned += fl;
  }
  std::sort(quotas.begin(), quotas.end(), [](const Quota& a, const Quota& b) {
    if (a.frac != b.frac) return a.frac > b.frac;
    return a.count > b.count;
  });
  for (auto& q : quotas) {
    if (assigned >= target) break;
    if (q.take + 1 <= q.count - 1) {
      ++q.take;
      ++assigned;
    }
  }

  Rng rng(derive_seed(seed, "stratified_split"));
  std::unordered_set<std::string> val_ids;
  std::sort(quotas.begin(), quotas.end(),
            [](const Quota& a, const Quota& b) { return a.label < b.label; });
  for (const auto& q : quotas) {
    auto idx = strata[q.label];
    rng.shuffle(idx);
    for (std::size_t k = 0; k < q.take; ++k)
      val_ids.insert(records[idx[k]].id);
  }

  DatasetSplit split;
  split.seed = seed;
  for (const auto& rec : records) {
    if (val_ids.count(rec.id))
      split.validation.push_back(rec);
    else
      split.train.push_back(rec);
  }
  return split;
}

std::vector<TweetRecord> filter_sarcastic(
    const std::vector<TweetRecord>& records) {
  std::vector<TweetRecord> out;
  for (const auto& rec : records)
    if (rec.label.has_value() && *rec.label == 1) out.push_back(rec);
  return out;
}

std::vector<PairRecord> group_pairs(const std::vector<TweetRecord>& records) {
  if (records.size() % 2 != 0)
    throw SarcError(ErrorKind::BadRecord,
                    "pair file has an odd number of records");
  std::vector<PairRecord> out;
  for (std::size_t i = 0; i + 1 < records.size(); i += 2) {
    PairRecord p;
    const std::string& id0 = records[i].id;
    auto dash = id0.rfind('-');
    p.id = dash == std::string::npos ? id0 : id0.substr(0, dash);
    p.first = records[i];
    p.second = records[i + 1];
    if (p.first.label.has_value() && p.second.label.has_value()) {
      if (*p.first.label == 1)
        p.sarcastic_index = 0;
      else if (*p.second.label == 1)
        p.sarcastic_index = 1;
    }
    out.push_back(std::move(p));
  }
  return out;
}

}  // namespace sarc
