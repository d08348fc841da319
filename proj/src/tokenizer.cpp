#include "sarc/tokenizer.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "sarc/errors.hpp"
#include "sarc/text.hpp"

namespace sarc {

namespace {

const char* kSpecials[] = {"[PAD]", "[CLS]", "[SEP]", "[UNK]"};

std::vector<std::string> split_words(const std::string& text) {
  std::vector<std::string> words;
  std::string cur;
  for (char c : text) {
    if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' ||
        c == '\v') {
      if (!cur.empty()) {
        words.push_back(cur);
        cur.clear();
      }
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) words.push_back(cur);
  return words;
}

}  // namespace

Vocabulary Vocabulary::build(const std::vector<std::string>& texts) {
  std::set<std::string> entries;  // sorted for id determinism
  for (const auto& text : texts) {
    for (const auto& word : split_words(text)) {
      entries.insert(word);
      for (char32_t cp : utf8_decode(word))
        entries.insert(utf8_encode_one(cp));
    }
  }
  std::vector<std::string> tokens;
  tokens.reserve(entries.size() + 4);
  for (const char* s : kSpecials) tokens.emplace_back(s);
  for (const auto& e : entries) {
    if (std::find(std::begin(kSpecials), std::end(kSpecials), e) ==
        std::end(kSpecials))
      tokens.push_back(e);
  }
  return from_tokens(tokens);
}

Vocabulary Vocabulary::from_tokens(const std::vector<std::string>& tokens) {
  Vocabulary v;
  v.id_to_token_ = tokens;
  for (std::size_t i = 0; i < tokens.size(); ++i)
    v.token_to_id_[tokens[i]] = static_cast<int>(i);
  for (int s = 0; s < 4; ++s) {
    if (v.id_to_token_.size() <= static_cast<std::size_t>(s) ||
        v.id_to_token_[s] != kSpecials[s])
      throw SarcError(ErrorKind::BadConfig,
                      "vocabulary must start with the four special tokens");
  }
  return v;
}

int Vocabulary::token_id(const std::string& token) const {
  auto it = token_to_id_.find(token);
  return it == token_to_id_.end() ? kUnk : it->second;
}

std::vector<int> Vocabulary::encode_text(const std::string& text) const {
  std::vector<int> ids;
  for (const auto& word : split_words(text)) {
    auto it = token_to_id_.find(word);
    if (it != token_to_id_.end()) {
      ids.push_back(it->second);
      continue;
    }
    for (char32_t cp : utf8_decode(word)) {
      auto cit = token_to_id_.find(utf8_encode_one(cp));
      ids.push_back(cit == token_to_id_.end() ? kUnk : cit->second);
    }
  }
  return ids;
}

void Vocabulary::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw SarcError(ErrorKind::IoError, "cannot write " + path);
  for (const auto& t : id_to_token_) out << t << "\n";
}

Vocabulary Vocabulary::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SarcError(ErrorKind::IoError, "cannot open " + path);
  std::vector<std::string> tokens;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    tokens.push_back(line);
  }
  while (!tokens.empty() && tokens.back().empty()) tokens.pop_back();
  return from_tokens(tokens);
}

TokenBatch tokenize(const std::vector<std::string>& texts,
                    const Vocabulary& vocab, int max_len) {
  if (texts.empty())
    throw SarcError(ErrorKind::EmptyInput, "tokenize: no texts");
  if (max_len < 2)
    throw SarcError(ErrorKind::BadConfig, "max_len must be >= 2");

  std::vector<std::vector<int>> rows;
  rows.reserve(texts.size());
  int longest = 2;
  for (const auto& text : texts) {
    std::vector<int> ids = vocab.encode_text(text);
    // [CLS] + body + [SEP], truncating the body to fit max_len.
    if (static_cast<int>(ids.size()) > max_len - 2)
      ids.resize(static_cast<std::size_t>(max_len - 2));
    std::vector<int> row;
    row.reserve(ids.size() + 2);
    row.push_back(Vocabulary::kCls);
    row.insert(row.end(), ids.begin(), ids.end());
    row.push_back(Vocabulary::kSep);
    longest = std::max(longest, static_cast<int>(row.size()));
    rows.push_back(std::move(row));
  }

  TokenBatch batch;
  auto n = static_cast<Eigen::Index>(texts.size());
  batch.ids = Eigen::MatrixXi::Constant(n, longest, Vocabulary::kPad);
  batch.mask = Eigen::MatrixXi::Zero(n, longest);
  for (Eigen::Index r = 0; r < n; ++r) {
    const auto& row = rows[static_cast<std::size_t>(r)];
    for (std::size_t c = 0; c < row.size(); ++c) {
      batch.ids(r, static_cast<Eigen::Index>(c)) = row[c];
      batch.mask(r, static_cast<Eigen::Index>(c)) = 1;
    }
  }
  return batch;
}

}  // namespace sarc
