#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "gazequiz/dictionary.hpp"
#include "gazequiz/error.hpp"
#include "gazequiz/rng.hpp"
#include "gazequiz/unicode.hpp"
#include "fixtures.hpp"

using namespace gazequiz;

namespace {

LoadedDictionary load(const std::string& text) {
  std::istringstream in(text);
  return load_dictionary(in);
}

const BoardLayout& board() {
  static const BoardLayout b = BoardLayout::gojuon();
  return b;
}

}  // namespace

TEST(Unicode, NfcComposesDakuten) {
  EXPECT_EQ(unicode::nfc("\xE3\x81\x8B\xE3\x82\x99"), "が");  // か + combining voiced mark
  EXPECT_EQ(unicode::split_glyphs("さくら").size(), 3u);
  EXPECT_EQ(unicode::split_glyphs("か\xE3\x82\x99").size(), 1u);
  EXPECT_FALSE(unicode::is_valid_utf8("\xFF"));
  EXPECT_THROW(unicode::nfc("\xC3"), Error);
}

TEST(Dictionary, EmptyStreamIsEmpty) {
  const auto d = load("");
  EXPECT_TRUE(d.entries.empty());
  EXPECT_EQ(d.rejected, 0u);
}

TEST(Dictionary, DuplicatesAndBlankLines) {
  const auto d = load("さくらんぼ\n\nさくらんぼ\nひまわり\tflower\teasy\n");
  ASSERT_EQ(d.entries.size(), 2u);
  EXPECT_EQ(d.loaded, 2u);
  EXPECT_EQ(d.rejected, 1u);
  EXPECT_EQ(d.entries[1].text(), "ひまわり");
  EXPECT_EQ(d.entries[1].tags, (std::vector<std::string>{"flower", "easy"}));
  EXPECT_EQ(d.entries[0].length(), 5u);
}

TEST(Dictionary, DecomposedAndComposedFormsAreOneWord) {
  const auto d = load("かがみもち\nか\xE3\x81\x8B\xE3\x82\x99みもち\n");
  EXPECT_EQ(d.entries.size(), 1u);
}

TEST(Dictionary, MalformedUtf8ReportsLine) {
  try {
    load("さくら\n# comment\nab\xC3\n");
    FAIL();
  } catch (const gazequiz::ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
}

TEST(Dictionary, ShippedWordListLoads) {
  const auto d = load_dictionary_file((fixtures::source_dir() / "data" / "words_ja.txt").string());
  EXPECT_GT(d.entries.size(), 40u);
  GameConfig config;
  std::size_t eligible = 0;
  for (const auto& e : d.entries) eligible += is_eligible(e, config, board()) ? 1 : 0;
  EXPECT_GT(eligible, 30u);
}

TEST(SelectQuestion, ForcedChoice) {
  GameConfig config;
  config.min_letters = config.max_letters = 5;
  const auto d = load("さくらんぼ\n");
  const QuestionWord q = select_question(d.entries, config, board(), 7);
  EXPECT_EQ(q.entry.text(), "さくらんぼ");
  EXPECT_EQ(std::count(q.hidden_mask.begin(), q.hidden_mask.end(), true), 3);
}

TEST(SelectQuestion, DiacriticPositionIsNeverHidden) {
  GameConfig config;
  config.min_letters = config.max_letters = 5;
  const auto d = load("さくらんぼ\n");  // ぼ is not on the board
  for (std::uint64_t seed = 0; seed < 500; ++seed) {
    const QuestionWord q = select_question(d.entries, config, board(), seed);
    EXPECT_FALSE(q.hidden_mask[4]);
  }
}

TEST(SelectQuestion, FirstLetterUsedOnlyWhenNeeded) {
  GameConfig config;
  config.min_letters = config.max_letters = 5;
  // only three board glyphs: あ, い, う; the rest carry diacritics
  const auto d = load("あいうがぎ\n");
  const QuestionWord q = select_question(d.entries, config, board(), 3);
  EXPECT_EQ(q.hidden_positions(), (std::vector<std::size_t>{0, 1, 2}));
  EXPECT_EQ(q.first_letter_clue_index, 0u);

  const auto plain = load("さくらもち\n");
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    EXPECT_FALSE(select_question(plain.entries, config, board(), seed).hidden_mask[0]);
  }
}

TEST(SelectQuestion, DeterministicPerSeed) {
  GameConfig config;
  const auto d = load_dictionary_file((fixtures::source_dir() / "data" / "words_ja.txt").string());
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    EXPECT_EQ(select_question(d.entries, config, board(), seed), select_question(d.entries, config, board(), seed));
  }
}

TEST(SelectQuestion, NothingEligibleThrows) {
  GameConfig config;
  const auto d = load("あい\nがぎぐげご\n");
  try {
    select_question(d.entries, config, board(), 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DictionaryExhausted);
  }
}

TEST(SelectQuestion, ExcludedEntriesAvoidedUntilExhausted) {
  GameConfig config;
  const auto d = load("さくらもち\nひまわり\nかたつむり\n");
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    EXPECT_EQ(select_question(d.entries, config, board(), seed, {0}).entry_index, 2u);
    EXPECT_LT(select_question(d.entries, config, board(), seed, {0, 2}).entry_index, 3u);
  }
}

TEST(SelectQuestion, InvariantsHoldOverRandomFixtures) {
  const std::vector<std::string> pool = {"あ", "い", "う", "か", "き", "さ", "し", "た", "な", "ん",
                                         "が", "ぎ", "ぱ", "ぴ", "っ", "ゃ", "を", "ね", "ほ", "も"};
  Rng rng(31);
  for (int trial = 0; trial < 300; ++trial) {
    GameConfig config;
    config.min_letters = 3 + static_cast<int>(rng.uniform_index(3));
    config.max_letters = config.min_letters + static_cast<int>(rng.uniform_index(3));
    config.hidden_count = 1 + static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(config.min_letters - 1)));
    std::string text;
    for (int w = 0; w < 20; ++w) {
      const auto len = 2 + rng.uniform_index(8);
      for (std::uint64_t i = 0; i < len; ++i) text += pool[rng.uniform_index(pool.size())];
      text += "\n";
    }
    const auto d = load(text);
    QuestionWord q;
    try {
      q = select_question(d.entries, config, board(), rng.next());
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::DictionaryExhausted);
      continue;
    }
    EXPECT_TRUE(is_eligible(q.entry, config, board()));
    const auto hidden = q.hidden_positions();
    EXPECT_EQ(hidden.size(), static_cast<std::size_t>(config.hidden_count));
    for (const auto i : hidden) EXPECT_TRUE(board().has_glyph(q.entry.glyphs[i]));
    EXPECT_EQ(q.first_letter_clue_index, hidden.front());
    for (const auto& g : q.entry.glyphs) EXPECT_EQ(unicode::nfc(g), g);
  }
}

TEST(SelectQuestion, UniformOverEligibleWords) {
  GameConfig config;
  std::string text;
  const std::vector<std::string> words = {"さくらもち", "ひまわり", "かたつむり", "あさがお", "ともだち",
                                          "てぬぐい",   "うちわ",   "すいか",     "なつやすみ", "はなみ"};
  for (const auto& w : words) text += w + "\n";
  const auto d = load(text);
  std::vector<int> counts(d.entries.size(), 0);
  std::size_t n_eligible = 0;
  for (const auto& e : d.entries) n_eligible += is_eligible(e, config, board()) ? 1 : 0;
  const int draws = 10000;
  for (int i = 0; i < draws; ++i) ++counts[select_question(d.entries, config, board(), derive_seed(5, "q", i)).entry_index];
  const double p = 1.0 / static_cast<double>(n_eligible);
  const double expected = draws * p;
  const double sd = std::sqrt(draws * p * (1 - p));
  for (std::size_t i = 0; i < d.entries.size(); ++i) {
    if (!is_eligible(d.entries[i], config, board())) {
      EXPECT_EQ(counts[i], 0);
    } else {
      EXPECT_LT(std::abs(counts[i] - expected), 3 * sd) << d.entries[i].text();
    }
  }
}
