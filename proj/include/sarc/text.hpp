#ifndef SARC_TEXT_HPP_
#define SARC_TEXT_HPP_

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace sarc {

// --- minimal utf-8 ----------------------------------------------------------
std::vector<char32_t> utf8_decode(const std::string& s);
std::string utf8_encode(const std::vector<char32_t>& cps);
std::string utf8_encode_one(char32_t cp);

bool is_emoji_base(char32_t cp);
bool is_emoji_modifier(char32_t cp);  // skin tones, variation selector
bool is_emoji_codepoint(char32_t cp); // base or modifier or ZWJ inside a run

// --- preprocessing ----------------------------------------------------------
struct PreprocessConfig {
  std::string mention_token = "@user";
  std::string url_token = "http";
  std::map<std::string, std::string> dialect_map;
  std::string separator_token = "[SEP]";
};

// Tokens matching the multilingual-encoder convention.
PreprocessConfig multilingual_preprocess();
// Tokens matching the Arabic-encoder convention ('user' for mentions,
// 'url' for URLs); pair with dialect injection.
PreprocessConfig arabic_preprocess();

// Replaces @-mentions and URLs with the configured tokens, spaces out emoji
// (skin-tone modifiers, variation selectors, ZWJ sequences and flag pairs
// stay attached to their base), collapses runs of whitespace and trims.
std::string normalize(const std::string& text, const PreprocessConfig& config);

// Wraps normalized text in the dialect template
//   <sep> <dialect name> <sep> <text> <sep>
// using dialect_map when the code is mapped, the raw code otherwise.
// Absent dialect returns the text unchanged.
std::string inject_dialect(const std::string& text,
                           const std::optional<std::string>& dialect,
                           const PreprocessConfig& config);

// Number of emoji codepoints in the string (modifiers included).
std::size_t count_emoji(const std::string& text);

}  // namespace sarc

#endif  // SARC_TEXT_HPP_
