#include "gazequiz/game_config.hpp"

#include <set>
#include <string>

#include <nlohmann/json.hpp>

#include "gazequiz/error.hpp"

namespace gazequiz {

void GameConfig::validate() const {
  if (words_per_game < 1) throw Error(ErrorCode::ConfigError, "words_per_game must be at least 1");
  if (min_letters < 1 || min_letters > max_letters) throw Error(ErrorCode::ConfigError, "need 1 <= min_letters <= max_letters");
  if (hidden_count < 1 || hidden_count >= min_letters) throw Error(ErrorCode::ConfigError, "need 1 <= hidden_count < min_letters");
  if (!(capture_countdown_s >= 0.0)) throw Error(ErrorCode::ConfigError, "capture_countdown_s must be non-negative");
  if (!(answer_time_limit_s > 0.0)) throw Error(ErrorCode::ConfigError, "answer_time_limit_s must be positive");
  if (!(clue_reveal_remaining_s >= 0.0) || !(clue_reveal_remaining_s < answer_time_limit_s)) {
    throw Error(ErrorCode::ConfigError, "need 0 <= clue_reveal_remaining_s < answer_time_limit_s");
  }
  if (standard_stimuli_count < 1) throw Error(ErrorCode::ConfigError, "standard_stimuli_count must be at least 1");
}

void to_json(nlohmann::json& j, const GameConfig& c) {
  j = nlohmann::json{{"words_per_game", c.words_per_game},
                     {"min_letters", c.min_letters},
                     {"max_letters", c.max_letters},
                     {"hidden_count", c.hidden_count},
                     {"capture_countdown_s", c.capture_countdown_s},
                     {"answer_time_limit_s", c.answer_time_limit_s},
                     {"clue_reveal_remaining_s", c.clue_reveal_remaining_s},
                     {"standard_stimuli_count", c.standard_stimuli_count}};
}

void from_json(const nlohmann::json& j, GameConfig& c) {
  static const std::set<std::string> known{"words_per_game",          "min_letters",         "max_letters",
                                          "hidden_count",            "capture_countdown_s", "answer_time_limit_s",
                                          "clue_reveal_remaining_s", "standard_stimuli_count"};
  for (const auto& [key, value] : j.items()) {
    if (!known.count(key)) throw Error(ErrorCode::ConfigError, "unknown game setting '" + key + "'");
  }
  GameConfig d;
  c.words_per_game = j.value("words_per_game", d.words_per_game);
  c.min_letters = j.value("min_letters", d.min_letters);
  c.max_letters = j.value("max_letters", d.max_letters);
  c.hidden_count = j.value("hidden_count", d.hidden_count);
  c.capture_countdown_s = j.value("capture_countdown_s", d.capture_countdown_s);
  c.answer_time_limit_s = j.value("answer_time_limit_s", d.answer_time_limit_s);
  c.clue_reveal_remaining_s = j.value("clue_reveal_remaining_s", d.clue_reveal_remaining_s);
  c.standard_stimuli_count = j.value("standard_stimuli_count", d.standard_stimuli_count);
}

}  // namespace gazequiz
