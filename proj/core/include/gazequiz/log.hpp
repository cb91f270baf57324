#pragma once

#include <iosfwd>
#include <string_view>

#include <nlohmann/json.hpp>

namespace gazequiz::log {

enum class Level { debug, info, warn, error };

/// Destination for structured log lines; nullptr silences logging.
/// Defaults to std::cout.
void set_sink(std::ostream* sink);
void set_min_level(Level level);

/// One JSON object per line: {"ts":..,"level":..,"event":..,<fields>}.
void write(Level level, std::string_view event, const nlohmann::json& fields = nlohmann::json::object());

inline void info(std::string_view event, const nlohmann::json& fields = nlohmann::json::object()) {
  write(Level::info, event, fields);
}
inline void warn(std::string_view event, const nlohmann::json& fields = nlohmann::json::object()) {
  write(Level::warn, event, fields);
}
inline void error(std::string_view event, const nlohmann::json& fields = nlohmann::json::object()) {
  write(Level::error, event, fields);
}

}  // namespace gazequiz::log
