#include "gazequiz/board.hpp"

#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include "gazequiz/error.hpp"
#include "gazequiz/unicode.hpp"

namespace gazequiz {

namespace {

constexpr std::string_view kHole = ".";

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_ws(std::string_view line) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    const std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r') ++i;
    if (i > start) out.emplace_back(line.substr(start, i - start));
  }
  return out;
}

template <typename T>
T parse_number(std::string_view text, std::size_t line_no, std::string_view key) {
  T value{};
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end) {
    throw ParseError(line_no, "invalid value for '" + std::string(key) + "': " + std::string(text));
  }
  return value;
}

}  // namespace

std::string_view to_string(Side s) { return s == Side::A ? "A" : "B"; }

Side side_from_string(std::string_view s) {
  if (s == "A" || s == "a") return Side::A;
  if (s == "B" || s == "b") return Side::B;
  throw Error(ErrorCode::ConfigError, "unknown board side '" + std::string(s) + "'");
}

BoardLayout::BoardLayout(int rows, int cols, double pitch_mm, const std::vector<std::vector<std::string>>& grid,
                         std::string glyph_set_id)
    : rows_(rows), cols_(cols), pitch_mm_(pitch_mm), glyph_set_id_(std::move(glyph_set_id)) {
  if (rows <= 0 || cols <= 0) throw Error(ErrorCode::ConfigError, "board must have at least one row and column");
  if (!(pitch_mm > 0.0)) throw Error(ErrorCode::ConfigError, "pitch_mm must be positive");
  if (static_cast<int>(grid.size()) != rows) throw Error(ErrorCode::ConfigError, "cell table row count mismatch");

  grid_index_.assign(static_cast<std::size_t>(rows * cols), -1);
  for (int r = 0; r < rows; ++r) {
    if (static_cast<int>(grid[r].size()) != cols) {
      throw Error(ErrorCode::ConfigError, "cell table row " + std::to_string(r) + " has wrong column count");
    }
    for (int c = 0; c < cols; ++c) {
      const std::string& raw = grid[r][c];
      if (raw.empty() || raw == kHole) continue;
      const auto glyphs = unicode::split_glyphs(raw);
      if (glyphs.size() != 1) throw Error(ErrorCode::ConfigError, "cell '" + raw + "' is not a single letter");
      LetterCell cell;
      cell.id = "r" + std::to_string(r) + "c" + std::to_string(c);
      cell.glyph = glyphs.front();
      cell.row = r;
      cell.col = c;
      cell.position_mm = Vec3((c - (cols - 1) / 2.0) * pitch_mm, (r - (rows - 1) / 2.0) * pitch_mm, 0.0);
      if (by_glyph_.count(cell.glyph) != 0) {
        throw Error(ErrorCode::ConfigError, "glyph '" + cell.glyph + "' appears in more than one cell");
      }
      grid_index_[static_cast<std::size_t>(r * cols + c)] = static_cast<int>(cells_.size());
      by_glyph_.emplace(cell.glyph, cells_.size());
      by_id_.emplace(cell.id, cells_.size());
      cells_.push_back(std::move(cell));
    }
  }
}

BoardLayout BoardLayout::gojuon(double pitch_mm) {
  // Rows are vowels, columns consonant groups; holes where the table has none.
  const std::vector<std::vector<std::string>> grid = {
      {"あ", "か", "さ", "た", "な", "は", "ま", "や", "ら", "わ"},
      {"い", "き", "し", "ち", "に", "ひ", "み", "", "り", ""},
      {"う", "く", "す", "つ", "ぬ", "ふ", "む", "ゆ", "る", "ん"},
      {"え", "け", "せ", "て", "ね", "へ", "め", "", "れ", ""},
      {"お", "こ", "そ", "と", "の", "ほ", "も", "よ", "ろ", "を"},
  };
  return BoardLayout(5, 10, pitch_mm, grid, "hiragana-gojuon");
}

const LetterCell& BoardLayout::cell(std::string_view letter_id) const {
  const auto it = by_id_.find(std::string(letter_id));
  if (it == by_id_.end()) throw Error(ErrorCode::NotFound, "unknown letter id '" + std::string(letter_id) + "'");
  return cells_[it->second];
}

const LetterCell* BoardLayout::find_glyph(std::string_view glyph) const {
  const auto it = by_glyph_.find(std::string(glyph));
  return it == by_glyph_.end() ? nullptr : &cells_[it->second];
}

const LetterCell* BoardLayout::cell_at(int row, int col, Side view) const {
  if (row < 0 || row >= rows_ || col < 0 || col >= cols_) return nullptr;
  const int board_col = view == Side::A ? col : cols_ - 1 - col;
  const int index = grid_index_[static_cast<std::size_t>(row * cols_ + board_col)];
  return index < 0 ? nullptr : &cells_[static_cast<std::size_t>(index)];
}

Vec3 BoardLayout::view_position(const LetterCell& cell, Side view) const {
  if (view == Side::A) return cell.position_mm;
  return {-cell.position_mm.x(), cell.position_mm.y(), -cell.position_mm.z()};
}

Vec3 BoardLayout::to_board_frame(const Vec3& view_point, Side view) {
  if (view == Side::A) return view_point;
  return {-view_point.x(), view_point.y(), -view_point.z()};
}

std::uint64_t BoardLayout::content_hash() const {
  const std::string text = format_layout(*this);
  std::uint64_t h = 1469598103934665603ULL;
  for (const unsigned char ch : text) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  return h;
}

Vec3 letter_position(const BoardLayout& layout, std::string_view letter_id) {
  return layout.cell(letter_id).position_mm;
}

Vec3 letter_position_by_glyph(const BoardLayout& layout, std::string_view glyph, Side view) {
  const LetterCell* cell = layout.find_glyph(unicode::nfc(glyph));
  if (cell == nullptr) throw Error(ErrorCode::NotFound, "glyph '" + std::string(glyph) + "' is not on the board");
  return BoardLayout::to_board_frame(layout.view_position(*cell, view), view);
}

BoardLayout parse_layout(std::string_view text) {
  int rows = -1;
  int cols = -1;
  double pitch = -1.0;
  std::string glyph_set = "hiragana-gojuon";
  std::vector<std::vector<std::string>> grid;
  bool in_cells = false;

  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto eol = text.find('\n', pos);
    const std::string_view raw = text.substr(pos, eol == std::string_view::npos ? std::string_view::npos : eol - pos);
    pos = eol == std::string_view::npos ? text.size() + 1 : eol + 1;
    ++line_no;

    std::string line = trim(raw);
    if (const auto hash = line.find('#'); hash != std::string::npos) line = trim(line.substr(0, hash));
    if (line.empty()) continue;

    if (in_cells) {
      grid.push_back(split_ws(line));
      continue;
    }
    if (line == "cells:") {
      in_cells = true;
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError(line_no, "expected 'key = value' or 'cells:'");
    const std::string key = trim(std::string_view(line).substr(0, eq));
    const std::string value = trim(std::string_view(line).substr(eq + 1));
    if (key == "rows") {
      rows = parse_number<int>(value, line_no, key);
    } else if (key == "cols") {
      cols = parse_number<int>(value, line_no, key);
    } else if (key == "pitch_mm") {
      pitch = parse_number<double>(value, line_no, key);
    } else if (key == "glyph_set") {
      glyph_set = value;
    } else {
      throw ParseError(line_no, "unknown key '" + key + "'");
    }
  }
  if (rows <= 0 || cols <= 0 || pitch <= 0.0) {
    throw Error(ErrorCode::ConfigError, "layout must define positive rows, cols and pitch_mm");
  }
  return BoardLayout(rows, cols, pitch, grid, glyph_set);
}

BoardLayout load_layout(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::NotFound, "cannot open layout file " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_layout(buffer.str());
}

std::string format_layout(const BoardLayout& layout) {
  std::ostringstream out;
  out << "rows = " << layout.rows() << "\n";
  out << "cols = " << layout.cols() << "\n";
  char pitch[64];
  const auto res = std::to_chars(pitch, pitch + sizeof(pitch), layout.pitch_mm());
  out << "pitch_mm = " << std::string_view(pitch, static_cast<std::size_t>(res.ptr - pitch)) << "\n";
  out << "glyph_set = " << layout.glyph_set_id() << "\n";
  out << "cells:\n";
  for (int r = 0; r < layout.rows(); ++r) {
    for (int c = 0; c < layout.cols(); ++c) {
      const LetterCell* cell = layout.cell_at(r, c);
      out << (c == 0 ? "" : " ") << (cell != nullptr ? cell->glyph : std::string(kHole));
    }
    out << "\n";
  }
  return out.str();
}

}  // namespace gazequiz
