#pragma once

#include <cstdint>

#include <nlohmann/json_fwd.hpp>

namespace gazequiz {

struct GameConfig {
  int words_per_game = 2;
  int min_letters = 5;
  int max_letters = 6;
  int hidden_count = 3;
  double capture_countdown_s = 3.0;
  double answer_time_limit_s = 60.0;
  double clue_reveal_remaining_s = 30.0;
  int standard_stimuli_count = 50;

  /// Throws ConfigError unless min <= max, 1 <= hidden < min and the clue
  /// is revealed strictly inside the answer window.
  void validate() const;

  std::int64_t countdown_ms() const { return static_cast<std::int64_t>(capture_countdown_s * 1000.0 + 0.5); }
  std::int64_t answer_limit_ms() const { return static_cast<std::int64_t>(answer_time_limit_s * 1000.0 + 0.5); }
  std::int64_t clue_remaining_ms() const { return static_cast<std::int64_t>(clue_reveal_remaining_s * 1000.0 + 0.5); }
};

void to_json(nlohmann::json& j, const GameConfig& c);
void from_json(const nlohmann::json& j, GameConfig& c);

}  // namespace gazequiz
