#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "gazequiz/types.hpp"

namespace gazequiz {

/// Which side of the transparent board a player sits on. The board frame is
/// attached to side A: origin at the board center, x to side A's right,
/// y downward, z toward side A. Side B sees the same glyphs mirrored.
enum class Side { A, B };

inline Side opposite(Side s) { return s == Side::A ? Side::B : Side::A; }
std::string_view to_string(Side s);
Side side_from_string(std::string_view s);

struct LetterCell {
  std::string id;     // "r<row>c<col>", stable across layouts of equal shape
  std::string glyph;  // one NFC-normalized letter
  int row = 0;
  int col = 0;
  Vec3 position_mm = Vec3::Zero();
};

class BoardLayout {
 public:
  /// grid[row][col] holds one glyph per cell; an empty string marks a hole.
  BoardLayout(int rows, int cols, double pitch_mm, const std::vector<std::vector<std::string>>& grid,
              std::string glyph_set_id = "hiragana-gojuon");

  /// 5x10 gojuon table, 46 glyphs, 60 mm pitch.
  static BoardLayout gojuon(double pitch_mm = 60.0);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  double pitch_mm() const { return pitch_mm_; }
  const std::string& glyph_set_id() const { return glyph_set_id_; }
  const std::vector<LetterCell>& cells() const { return cells_; }

  double width_mm() const { return cols_ * pitch_mm_; }
  double height_mm() const { return rows_ * pitch_mm_; }

  const LetterCell& cell(std::string_view letter_id) const;
  const LetterCell* find_glyph(std::string_view glyph) const;
  bool has_glyph(std::string_view glyph) const { return find_glyph(glyph) != nullptr; }

  /// Cell addressed in the grid as printed for `view`: side B sees column
  /// order reversed. Returns nullptr for holes and out-of-range indices.
  const LetterCell* cell_at(int row, int col, Side view = Side::A) const;

  /// Position of a cell in the viewer's own mirrored frame. For side B,
  /// (x, y, z) becomes (-x, y, -z).
  Vec3 view_position(const LetterCell& cell, Side view) const;
  static Vec3 to_board_frame(const Vec3& view_point, Side view);

  /// FNV-1a over the canonical text form; identifies a layout in manifests.
  std::uint64_t content_hash() const;

 private:
  int rows_;
  int cols_;
  double pitch_mm_;
  std::string glyph_set_id_;
  std::vector<LetterCell> cells_;
  std::unordered_map<std::string, std::size_t> by_id_;
  std::unordered_map<std::string, std::size_t> by_glyph_;
  std::vector<int> grid_index_;  // rows*cols, -1 for holes
};

/// Board-frame position of a letter, in millimeters. Throws NotFound.
Vec3 letter_position(const BoardLayout& layout, std::string_view letter_id);

/// Same physical point, addressed by glyph as named from either side.
Vec3 letter_position_by_glyph(const BoardLayout& layout, std::string_view glyph, Side view = Side::A);

BoardLayout parse_layout(std::string_view text);
BoardLayout load_layout(const std::filesystem::path& path);
std::string format_layout(const BoardLayout& layout);

}  // namespace gazequiz
