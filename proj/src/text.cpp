#include "sarc/text.hpp"

#include <cctype>
#include <sstream>

namespace sarc {

namespace {

constexpr char32_t kZwj = 0x200D;

bool is_ascii_space(char32_t c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' ||
         c == '\v';
}

bool is_word_char(char32_t c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
         (c >= '0' && c <= '9') || c == '_';
}

bool starts_with(const std::vector<char32_t>& cps, std::size_t i,
                 const char* ascii) {
  for (std::size_t k = 0; ascii[k] != '\0'; ++k) {
    if (i + k >= cps.size() || cps[i + k] != static_cast<char32_t>(ascii[k]))
      return false;
  }
  return true;
}

bool is_regional_indicator(char32_t cp) {
  return cp >= 0x1F1E6 && cp <= 0x1F1FF;
}

}  // namespace

std::vector<char32_t> utf8_decode(const std::string& s) {
  std::vector<char32_t> out;
  out.reserve(s.size());
  std::size_t i = 0;
  while (i < s.size()) {
    unsigned char b = static_cast<unsigned char>(s[i]);
    char32_t cp = 0;
    std::size_t len = 1;
    if (b < 0x80) {
      cp = b;
    } else if ((b >> 5) == 0x6 && i + 1 < s.size()) {
      cp = (b & 0x1F) << 6 | (s[i + 1] & 0x3F);
      len = 2;
    } else if ((b >> 4) == 0xE && i + 2 < s.size()) {
      cp = (b & 0x0F) << 12 | (s[i + 1] & 0x3F) << 6 | (s[i + 2] & 0x3F);
      len = 3;
    } else if ((b >> 3) == 0x1E && i + 3 < s.size()) {
      cp = (b & 0x07) << 18 | (s[i + 1] & 0x3F) << 12 | (s[i + 2] & 0x3F) << 6 |
           (s[i + 3] & 0x3F);
      len = 4;
    } else {
      cp = 0xFFFD;  // lone continuation / truncated sequence
    }
    out.push_back(cp);
    i += len;
  }
  return out;
}

std::string utf8_encode_one(char32_t cp) {
  std::string out;
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
  return out;
}

std::string utf8_encode(const std::vector<char32_t>& cps) {
  std::string out;
  for (char32_t cp : cps) out += utf8_encode_one(cp);
  return out;
}

bool is_emoji_base(char32_t cp) {
  return (cp >= 0x1F300 && cp <= 0x1F5FF) ||  // symbols & pictographs
         (cp >= 0x1F600 && cp <= 0x1F64F) ||  // emoticons
         (cp >= 0x1F680 && cp <= 0x1F6FF) ||  // transport & map
         (cp >= 0x1F900 && cp <= 0x1F9FF) ||  // supplemental
         (cp >= 0x1FA70 && cp <= 0x1FAFF) ||  // extended-A
         (cp >= 0x2600 && cp <= 0x26FF) ||    // misc symbols
         (cp >= 0x2700 && cp <= 0x27BF) ||    // dingbats
         (cp >= 0x1F1E6 && cp <= 0x1F1FF) ||  // regional indicators
         cp == 0x2B50 || cp == 0x2B55 ||      // stars/circle
         cp == 0x203C || cp == 0x2049 ||      // !!/!?
         (cp >= 0x2B05 && cp <= 0x2B07);      // arrows used as emoji
}

bool is_emoji_modifier(char32_t cp) {
  return (cp >= 0x1F3FB && cp <= 0x1F3FF) ||  // skin tones
         cp == 0xFE0F || cp == 0xFE0E;        // variation selectors
}

bool is_emoji_codepoint(char32_t cp) {
  return is_emoji_base(cp) || is_emoji_modifier(cp) || cp == kZwj;
}

PreprocessConfig multilingual_preprocess() {
  PreprocessConfig c;
  c.mention_token = "@user";
  c.url_token = "http";
  c.separator_token = "[SEP]";
  return c;
}

PreprocessConfig arabic_preprocess() {
  PreprocessConfig c;
  c.mention_token = "user";
  c.url_token = "url";
  c.separator_token = "[SEP]";
  return c;
}

std::size_t count_emoji(const std::string& text) {
  std::size_t n = 0;
  for (char32_t cp : utf8_decode(text))
    if (is_emoji_base(cp) || is_emoji_modifier(cp)) ++n;
  return n;
}

std::string normalize(const std::string& text, const PreprocessConfig& config) {
  std::vector<char32_t> cps = utf8_decode(text);
  std::string out;
  out.reserve(text.size() + 16);
  std::size_t i = 0;
  bool pending_space = false;

  auto emit_sep = [&] {
    if (!out.empty()) out.push_back(' ');
    pending_space = false;
  };
  auto append_cp = [&](char32_t cp) {
    if (pending_space) emit_sep();
    out += utf8_encode_one(cp);
  };

  while (i < cps.size()) {
    char32_t cp = cps[i];
    if (is_ascii_space(cp)) {
      pending_space = !out.empty();
      ++i;
      continue;
    }
    // URL: http(s)://... or t.co/... up to whitespace.
    bool url = starts_with(cps, i, "http://") || starts_with(cps, i, "https://");
    bool tco = !url && starts_with(cps, i, "t.co/") &&
               (i == 0 || is_ascii_space(cps[i - 1]));
    if (url || tco) {
      std::size_t j = i;
      while (j < cps.size() && !is_ascii_space(cps[j])) ++j;
      if (pending_space) emit_sep();
      out += config.url_token;
      i = j;
      pending_space = false;
      continue;
    }
    // Mention: '@' followed by at least one word character.
    if (cp == '@' && i + 1 < cps.size() && is_word_char(cps[i + 1])) {
      std::size_t j = i + 1;
      while (j < cps.size() && is_word_char(cps[j])) ++j;
      if (pending_space) emit_sep();
      out += config.mention_token;
      i = j;
      pending_space = false;
      continue;
    }
    // Emoji cluster: base + modifiers, ZWJ-joined pieces, flag pairs.
    if (is_emoji_base(cp)) {
      std::size_t j = i + 1;
      if (is_regional_indicator(cp) && j < cps.size() &&
          is_regional_indicator(cps[j])) {
        ++j;  // flag = exactly two regional indicators
      } else {
        while (j < cps.size()) {
          if (is_emoji_modifier(cps[j])) {
            ++j;
          } else if (cps[j] == kZwj && j + 1 < cps.size() &&
                     is_emoji_base(cps[j + 1])) {
            j += 2;
          } else {
            break;
          }
        }
      }
      emit_sep();
      for (std::size_t k = i; k < j; ++k) out += utf8_encode_one(cps[k]);
      i = j;
      pending_space = true;  // force a space after the cluster
      continue;
    }
    append_cp(cp);
    ++i;
  }
  return out;
}

std::string inject_dialect(const std::string& text,
                           const std::optional<std::string>& dialect,
                           const PreprocessConfig& config) {
  if (!dialect.has_value()) return text;
  auto it = config.dialect_map.find(*dialect);
  const std::string& name = it != config.dialect_map.end() ? it->second
                                                           : *dialect;
  const std::string& sep = config.separator_token;
  return sep + " " + name + " " + sep + " " + text + " " + sep;
}

}  // namespace sarc
