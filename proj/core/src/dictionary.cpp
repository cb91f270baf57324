#include "gazequiz/dictionary.hpp"

#include <algorithm>
#include <fstream>
#include <unordered_set>

#include "gazequiz/error.hpp"
#include "gazequiz/rng.hpp"
#include "gazequiz/unicode.hpp"

namespace gazequiz {

std::string DictionaryEntry::text() const {
  std::string out;
  for (const auto& g : glyphs) out += g;
  return out;
}

std::vector<std::size_t> QuestionWord::hidden_positions() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < hidden_mask.size(); ++i)
    if (hidden_mask[i]) out.push_back(i);
  return out;
}

namespace {

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (true) {
    const auto tab = line.find('\t', start);
    parts.push_back(line.substr(start, tab == std::string::npos ? std::string::npos : tab - start));
    if (tab == std::string::npos) break;
    start = tab + 1;
  }
  return parts;
}

bool is_single_word(const std::string& word) {
  return !word.empty() && std::none_of(word.begin(), word.end(), [](unsigned char c) { return c < 0x20 || c == ' ' || c == 0x7f; });
}

}  // namespace

LoadedDictionary load_dictionary(std::istream& source) {
  LoadedDictionary out;
  std::unordered_set<std::string> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(source, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line_no == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
    if (!unicode::is_valid_utf8(line)) throw ParseError(line_no, "malformed UTF-8");
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    if (line.front() == '#') continue;

    auto parts = split_tabs(line);
    const std::string word = unicode::nfc(parts.front());
    if (!is_single_word(word)) {
      ++out.rejected;
      continue;
    }
    if (!seen.insert(word).second) {
      ++out.rejected;
      continue;
    }
    DictionaryEntry entry;
    entry.glyphs = unicode::split_glyphs(word);
    for (std::size_t i = 1; i < parts.size(); ++i)
      if (!parts[i].empty()) entry.tags.push_back(unicode::nfc(parts[i]));
    out.entries.push_back(std::move(entry));
  }
  out.loaded = out.entries.size();
  return out;
}

LoadedDictionary load_dictionary_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::NotFound, "cannot open dictionary " + path);
  return load_dictionary(in);
}

bool is_eligible(const DictionaryEntry& entry, const GameConfig& config, const BoardLayout& board) {
  const auto n = static_cast<int>(entry.length());
  if (n < config.min_letters || n > config.max_letters) return false;
  const auto on_board = std::count_if(entry.glyphs.begin(), entry.glyphs.end(),
                                      [&](const std::string& g) { return board.has_glyph(g); });
  return on_board >= config.hidden_count;
}

QuestionWord select_question(const std::vector<DictionaryEntry>& dictionary, const GameConfig& config,
                             const BoardLayout& board, std::uint64_t seed, const std::set<std::size_t>& exclude) {
  std::vector<std::size_t> eligible;
  for (std::size_t i = 0; i < dictionary.size(); ++i)
    if (is_eligible(dictionary[i], config, board)) eligible.push_back(i);
  if (eligible.empty()) throw Error(ErrorCode::DictionaryExhausted, "no dictionary word satisfies the game settings");

  std::vector<std::size_t> fresh;
  std::copy_if(eligible.begin(), eligible.end(), std::back_inserter(fresh),
               [&](std::size_t i) { return exclude.count(i) == 0; });
  const auto& pool = fresh.empty() ? eligible : fresh;

  Rng rng(seed);
  QuestionWord q;
  q.entry_index = pool[rng.uniform_index(pool.size())];
  q.entry = dictionary[q.entry_index];
  q.hidden_mask.assign(q.entry.length(), false);

  std::vector<std::size_t> candidates;
  for (std::size_t i = 1; i < q.entry.length(); ++i)
    if (board.has_glyph(q.entry.glyphs[i])) candidates.push_back(i);
  const auto hidden = static_cast<std::size_t>(config.hidden_count);
  if (candidates.size() < hidden && board.has_glyph(q.entry.glyphs[0])) candidates.insert(candidates.begin(), 0);

  // Partial Fisher-Yates: the first `hidden` slots become a uniform subset.
  for (std::size_t i = 0; i < hidden; ++i) {
    const auto j = i + rng.uniform_index(candidates.size() - i);
    std::swap(candidates[i], candidates[j]);
    q.hidden_mask[candidates[i]] = true;
  }
  q.first_letter_clue_index = *std::min_element(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(hidden));
  return q;
}

}  // namespace gazequiz
