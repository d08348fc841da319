#include <map>

#include "doctest.h"
#include "sarc/text.hpp"
#include "support/helpers.hpp"

using namespace sarc;

TEST_SUITE_BEGIN("preprocess");

namespace {

// Random tweet-ish text without mentions or URLs, for the invariants that
// compare codepoint multisets.
std::string random_plain_text(Rng& rng) {
  static const char* pieces[] = {"lol",  "يوم",  "😂", "ok",   "🤔",
                                 "great", "جدا", "!!", "#tag", "👍🏽"};
  std::string out;
  int n = 1 + static_cast<int>(rng.uniform_int(8));
  for (int i = 0; i < n; ++i) {
    if (i) out += rng.bernoulli(0.3) ? "  " : " ";
    out += pieces[rng.uniform_int(10)];
  }
  return out;
}

}  // namespace

TEST_CASE("mentions, urls and emoji runs normalize per the rules") {
  PreprocessConfig cfg = multilingual_preprocess();
  CHECK(normalize("@john lol 😂😂 https://t.co/x", cfg) ==
        "@user lol 😂 😂 http");
}

TEST_CASE("text without entities is untouched") {
  PreprocessConfig cfg = multilingual_preprocess();
  CHECK(normalize("no entities here", cfg) == "no entities here");
}

TEST_CASE("mention token without the at-sign") {
  PreprocessConfig cfg;
  cfg.mention_token = "user";
  CHECK(normalize("@a @b", cfg) == "user user");
}

TEST_CASE("empty input yields empty output") {
  CHECK(normalize("", multilingual_preprocess()).empty());
}

TEST_CASE("whitespace collapses and trims") {
  PreprocessConfig cfg = multilingual_preprocess();
  CHECK(normalize("  a\t\tb \n c  ", cfg) == "a b c");
}

TEST_CASE("emoji are spaced out of words, modifiers stay attached") {
  PreprocessConfig cfg = multilingual_preprocess();
  CHECK(normalize("hi😂there", cfg) == "hi 😂 there");
  CHECK(normalize("a👍🏽b", cfg) == "a 👍🏽 b");
  CHECK(normalize("👨‍💻 works", cfg) == "👨‍💻 works");
  CHECK(normalize("🇲🇦🇲🇦", cfg) == "🇲🇦 🇲🇦");
}

TEST_CASE("hashtags are left alone") {
  CHECK(normalize("#winning so #much", multilingual_preprocess()) ==
        "#winning so #much");
}

TEST_CASE("arabic preset substitutes user and url") {
  PreprocessConfig cfg = arabic_preprocess();
  CHECK(normalize("@somebody شاهد https://x.co/abc", cfg) == "user شاهد url");
}

TEST_CASE("t.co links without a scheme are urls too") {
  CHECK(normalize("see t.co/xyz now", multilingual_preprocess()) ==
        "see http now");
}

TEST_CASE("normalize is idempotent") {
  for (auto preset : {multilingual_preprocess(), arabic_preprocess()}) {
    Rng rng(13);
    for (int i = 0; i < 200; ++i) {
      std::string text = random_plain_text(rng);
      if (rng.bernoulli(0.4)) text += " @mention";
      if (rng.bernoulli(0.4)) text += " https://t.co/" + std::to_string(i);
      std::string once = normalize(text, preset);
      CHECK(normalize(once, preset) == once);
    }
  }
}

TEST_CASE("normalize never leaks a raw url scheme") {
  Rng rng(29);
  PreprocessConfig cfg = arabic_preprocess();
  for (int i = 0; i < 100; ++i) {
    std::string text = random_plain_text(rng) + " http://a.b/c?d=1";
    std::string out = normalize(text, cfg);
    CHECK(out.find("http://") == std::string::npos);
    CHECK(out.find("https://") == std::string::npos);
  }
}

TEST_CASE("emoji count is preserved") {
  Rng rng(31);
  PreprocessConfig cfg = multilingual_preprocess();
  for (int i = 0; i < 200; ++i) {
    std::string text = random_plain_text(rng);
    CHECK(count_emoji(normalize(text, cfg)) == count_emoji(text));
  }
}

TEST_CASE("dialect injection follows the bracketed template") {
  PreprocessConfig cfg = arabic_preprocess();
  cfg.dialect_map["egypt"] = "مصر";
  CHECK(inject_dialect("ok", std::optional<std::string>("egypt"), cfg) ==
        "[SEP] مصر [SEP] ok [SEP]");
}

TEST_CASE("absent dialect leaves the text unchanged") {
  CHECK(inject_dialect("ok", std::nullopt, arabic_preprocess()) == "ok");
}

TEST_CASE("unmapped dialect codes pass through verbatim") {
  PreprocessConfig cfg = arabic_preprocess();
  CHECK(inject_dialect("ok", std::optional<std::string>("zzz"), cfg) ==
        "[SEP] zzz [SEP] ok [SEP]");
}

TEST_CASE("dialect injection adds exactly three separators") {
  PreprocessConfig cfg = arabic_preprocess();
  cfg.dialect_map["gulf"] = "الخليج";
  Rng rng(37);
  for (int i = 0; i < 50; ++i) {
    std::string text = normalize(random_plain_text(rng), cfg);
    std::string out =
        inject_dialect(text, std::optional<std::string>("gulf"), cfg);
    std::size_t count = 0, pos = 0;
    while ((pos = out.find("[SEP]", pos)) != std::string::npos) {
      ++count;
      pos += 5;
    }
    CHECK(count == 3);
    CHECK(inject_dialect(text, std::nullopt, cfg) == text);
  }
}

TEST_CASE("utf8 helpers round trip") {
  Rng rng(41);
  for (int i = 0; i < 100; ++i) {
    std::string s = random_plain_text(rng);
    CHECK(utf8_encode(utf8_decode(s)) == s);
  }
}

TEST_SUITE_END();
