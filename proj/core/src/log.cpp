#include "gazequiz/log.hpp"

#include <atomic>
#include <chrono>
#include <iostream>
#include <mutex>

namespace gazequiz::log {

namespace {

std::mutex g_mu;
std::ostream* g_sink = &std::cerr;
std::atomic<int> g_min_level{static_cast<int>(Level::info)};

std::string_view name(Level level) {
  switch (level) {
    case Level::debug: return "debug";
    case Level::info: return "info";
    case Level::warn: return "warn";
    case Level::error: return "error";
  }
  return "info";
}

}  // namespace

void set_sink(std::ostream* sink) {
  std::lock_guard lock(g_mu);
  g_sink = sink;
}

void set_min_level(Level level) { g_min_level = static_cast<int>(level); }

void write(Level level, std::string_view event, const nlohmann::json& fields) {
  if (static_cast<int>(level) < g_min_level) return;
  nlohmann::ordered_json line;
  line["ts"] = std::chrono::duration_cast<std::chrono::milliseconds>(
                   std::chrono::system_clock::now().time_since_epoch())
                   .count();
  line["level"] = name(level);
  line["event"] = event;
  if (fields.is_object()) {
    for (const auto& [k, v] : fields.items()) line[k] = v;
  }
  const std::string text = line.dump();
  std::lock_guard lock(g_mu);
  if (g_sink == nullptr) return;
  *g_sink << text << '\n';
  g_sink->flush();
}

}  // namespace gazequiz::log
