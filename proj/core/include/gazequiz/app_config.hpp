#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "gazequiz/camera.hpp"
#include "gazequiz/capture.hpp"
#include "gazequiz/dictionary.hpp"
#include "gazequiz/engine.hpp"
#include "gazequiz/game_config.hpp"
#include "gazequiz/normalization.hpp"
#include "gazequiz/session_host.hpp"

namespace gazequiz {

struct ServerSettings {
  std::string address = "0.0.0.0";
  std::uint16_t port = 8080;
  double grace_s = 120.0;
  int tick_ms = 100;
  std::filesystem::path store_root = "gazequiz-store";
  std::uint64_t seed = 1;
};

/// Capture drivers are looked up by name; only "synthetic" ships.
struct DriverSettings {
  std::string kind = "synthetic";
  SyntheticDriverConfig synthetic;
};

/// Main configuration file. Relative paths resolve against the file's
/// directory. Empty paths select the built-in board and calibration.
struct AppConfig {
  std::filesystem::path board_layout;
  std::filesystem::path calibration;
  std::filesystem::path dictionary;
  GameConfig game;
  NormalizationParams normalization;
  LabelOrigin label_origin = LabelOrigin::face_center;
  int grab_deadline_ms = 1000;
  DriverSettings drivers;
  ServerSettings server;
};

/// Throws ConfigError naming the offending key.
AppConfig parse_app_config(const nlohmann::json& doc, const std::filesystem::path& base_dir);
AppConfig load_app_config(const std::filesystem::path& path);
nlohmann::ordered_json app_config_to_json(const AppConfig& config);

/// Everything the server and the simulators need, loaded once.
struct AppContext {
  std::shared_ptr<const BoardLayout> board;
  Calibration calibration;
  std::shared_ptr<const std::vector<DictionaryEntry>> dictionary;
  std::shared_ptr<const Engine> engine;
  std::shared_ptr<CaptureService> capture;
  CaptureSettings capture_settings;
};

/// Loads board, calibration and dictionary and builds the configured
/// drivers. A dictionary with no word playable under the game settings is
/// a ConfigError.
AppContext build_app_context(const AppConfig& config);

std::string_view to_string(LabelOrigin o);
LabelOrigin label_origin_from_string(std::string_view s);

}  // namespace gazequiz
