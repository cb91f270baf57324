#pragma once

#include <cstdint>
#include <istream>
#include <set>
#include <string>
#include <vector>

#include "gazequiz/board.hpp"
#include "gazequiz/game_config.hpp"

namespace gazequiz {

struct DictionaryEntry {
  std::vector<std::string> glyphs;  // NFC, one letter each
  std::vector<std::string> tags;

  std::size_t length() const { return glyphs.size(); }
  std::string text() const;

  friend bool operator==(const DictionaryEntry&, const DictionaryEntry&) = default;
};

struct LoadedDictionary {
  std::vector<DictionaryEntry> entries;
  std::size_t loaded = 0;
  std::size_t rejected = 0;  // duplicates and lines that are not a single word
};

/// One word per line, optionally followed by tab-separated tags. Blank
/// lines and lines starting with '#' are skipped. Malformed UTF-8 throws
/// ParseError carrying the line number.
LoadedDictionary load_dictionary(std::istream& source);
LoadedDictionary load_dictionary_file(const std::string& path);

struct QuestionWord {
  DictionaryEntry entry;
  std::size_t entry_index = 0;
  std::vector<bool> hidden_mask;
  std::size_t first_letter_clue_index = 0;  // first hidden position, revealed near the time limit

  std::vector<std::size_t> hidden_positions() const;

  friend bool operator==(const QuestionWord&, const QuestionWord&) = default;
};

/// True when the word has the configured length and at least
/// `hidden_count` letters that exist on the board.
bool is_eligible(const DictionaryEntry& entry, const GameConfig& config, const BoardLayout& board);

/// Uniform choice among eligible words not in `exclude` (all eligible words
/// when every one is excluded), then `hidden_count` hidden positions drawn
/// uniformly from board letters other than the first; the first letter is
/// only used when there are not enough others. Glyphs missing from the board
/// are never hidden. Throws DictionaryExhausted when nothing is eligible.
QuestionWord select_question(const std::vector<DictionaryEntry>& dictionary, const GameConfig& config,
                             const BoardLayout& board, std::uint64_t seed,
                             const std::set<std::size_t>& exclude = {});

}  // namespace gazequiz
