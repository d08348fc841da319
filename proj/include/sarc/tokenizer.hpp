#ifndef SARC_TOKENIZER_HPP_
#define SARC_TOKENIZER_HPP_

#include <Eigen/Dense>
#include <string>
#include <unordered_map>
#include <vector>

namespace sarc {

struct TokenBatch {
  Eigen::MatrixXi ids;   // [batch x max_len]
  Eigen::MatrixXi mask;  // [batch x max_len], 1 on a prefix of each row
};

// Whitespace tokenizer with character fallback: a word outside the
// vocabulary decomposes into its codepoints; unknown codepoints map to
// [UNK]. Vocabulary entries are sorted so ids are independent of build
// order.
class Vocabulary {
 public:
  static constexpr int kPad = 0;
  static constexpr int kCls = 1;
  static constexpr int kSep = 2;
  static constexpr int kUnk = 3;

  Vocabulary() = default;

  static Vocabulary build(const std::vector<std::string>& texts);
  static Vocabulary from_tokens(const std::vector<std::string>& tokens);

  int size() const { return static_cast<int>(id_to_token_.size()); }
  int token_id(const std::string& token) const;
  const std::string& token(int id) const { return id_to_token_.at(id); }
  const std::vector<std::string>& tokens() const { return id_to_token_; }

  // Word ids with character fallback; no specials, no padding.
  std::vector<int> encode_text(const std::string& text) const;

  void save(const std::string& path) const;
  static Vocabulary load(const std::string& path);

 private:
  std::vector<std::string> id_to_token_;
  std::unordered_map<std::string, int> token_to_id_;
};

// [CLS] tokens... [SEP], truncated to max_len (specials included), then
// right-padded. The batch is trimmed to the longest row, never beyond
// max_len.
TokenBatch tokenize(const std::vector<std::string>& texts,
                    const Vocabulary& vocab, int max_len);

}  // namespace sarc

#endif  // SARC_TOKENIZER_HPP_
