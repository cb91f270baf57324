#include "gazequiz/app_config.hpp"

#include <algorithm>
#include <fstream>

#include "gazequiz/error.hpp"
#include "gazequiz/rng.hpp"

namespace gazequiz {

namespace fs = std::filesystem;

namespace {

fs::path resolve(const fs::path& base, const nlohmann::json& doc, const char* key) {
  if (!doc.contains(key) || doc[key].is_null()) return {};
  const fs::path p = doc[key].get<std::string>();
  if (p.empty()) return {};
  return p.is_absolute() || base.empty() ? p : base / p;
}

template <typename T>
void read(const nlohmann::json& block, const char* key, T& out) {
  if (block.contains(key)) out = block[key].get<T>();
}

}  // namespace

std::string_view to_string(LabelOrigin o) { return o == LabelOrigin::face_center ? "face_center" : "camera"; }

LabelOrigin label_origin_from_string(std::string_view s) {
  if (s == "face_center") return LabelOrigin::face_center;
  if (s == "camera") return LabelOrigin::camera;
  throw Error(ErrorCode::ConfigError, "label_origin must be face_center or camera, got '" + std::string(s) + "'");
}

AppConfig parse_app_config(const nlohmann::json& doc, const fs::path& base_dir) {
  if (!doc.is_object()) throw Error(ErrorCode::ConfigError, "config must be a JSON object");
  AppConfig c;
  const char* key = "";
  try {
    key = "board_layout";
    c.board_layout = resolve(base_dir, doc, key);
    key = "calibration";
    c.calibration = resolve(base_dir, doc, key);
    key = "dictionary";
    c.dictionary = resolve(base_dir, doc, key);
    key = "game";
    if (doc.contains(key)) c.game = doc[key].get<GameConfig>();
    key = "normalization";
    if (doc.contains(key)) {
      const auto& n = doc[key];
      read(n, "focal_norm", c.normalization.focal_norm);
      read(n, "distance_norm", c.normalization.distance_norm);
      read(n, "size_norm", c.normalization.size_norm);
    }
    key = "capture";
    if (doc.contains(key)) {
      const auto& cap = doc[key];
      if (cap.contains("label_origin")) c.label_origin = label_origin_from_string(cap["label_origin"].get<std::string>());
      read(cap, "grab_deadline_ms", c.grab_deadline_ms);
    }
    key = "drivers";
    if (doc.contains(key)) {
      const auto& d = doc[key];
      read(d, "kind", c.drivers.kind);
      if (d.contains("synthetic")) {
        const auto& s = d["synthetic"];
        auto& o = c.drivers.synthetic;
        read(s, "estimator_noise_deg", o.estimator_noise_deg);
        read(s, "estimator_outlier_rate", o.estimator_outlier_rate);
        read(s, "blink_rate", o.blink_rate);
        read(s, "absent_rate", o.absent_rate);
        read(s, "head_jitter_mm", o.head_jitter_mm);
        read(s, "fixation_error_deg", o.fixation_error_deg);
      }
    }
    key = "server";
    if (doc.contains(key)) {
      const auto& s = doc[key];
      read(s, "address", c.server.address);
      read(s, "port", c.server.port);
      read(s, "grace_s", c.server.grace_s);
      read(s, "tick_ms", c.server.tick_ms);
      read(s, "seed", c.server.seed);
      if (s.contains("store_root")) c.server.store_root = resolve(base_dir, s, "store_root");
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ConfigError, std::string("config key '") + key + "': " + e.what());
  }
  c.game.validate();
  c.normalization.validate();
  if (c.grab_deadline_ms <= 0) throw Error(ErrorCode::ConfigError, "capture.grab_deadline_ms must be positive");
  if (c.server.tick_ms <= 0) throw Error(ErrorCode::ConfigError, "server.tick_ms must be positive");
  if (!(c.server.grace_s >= 0.0)) throw Error(ErrorCode::ConfigError, "server.grace_s must be non-negative");
  return c;
}

AppConfig load_app_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ConfigError, "cannot open config " + path.string());
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ConfigError, path.string() + ": " + e.what());
  }
  return parse_app_config(doc, path.parent_path());
}

nlohmann::ordered_json app_config_to_json(const AppConfig& c) {
  nlohmann::ordered_json j;
  j["board_layout"] = c.board_layout.string();
  j["calibration"] = c.calibration.string();
  j["dictionary"] = c.dictionary.string();
  j["game"] = nlohmann::json(c.game);
  j["normalization"] = {{"focal_norm", c.normalization.focal_norm},
                        {"distance_norm", c.normalization.distance_norm},
                        {"size_norm", c.normalization.size_norm}};
  j["capture"] = {{"label_origin", to_string(c.label_origin)}, {"grab_deadline_ms", c.grab_deadline_ms}};
  const auto& s = c.drivers.synthetic;
  j["drivers"] = {{"kind", c.drivers.kind},
                  {"synthetic",
                   {{"estimator_noise_deg", s.estimator_noise_deg},
                    {"estimator_outlier_rate", s.estimator_outlier_rate},
                    {"blink_rate", s.blink_rate},
                    {"absent_rate", s.absent_rate},
                    {"head_jitter_mm", s.head_jitter_mm},
                    {"fixation_error_deg", s.fixation_error_deg}}}};
  j["server"] = {{"address", c.server.address},     {"port", c.server.port},
                 {"grace_s", c.server.grace_s},     {"tick_ms", c.server.tick_ms},
                 {"store_root", c.server.store_root.string()}, {"seed", c.server.seed}};
  return j;
}

AppContext build_app_context(const AppConfig& config) {
  AppContext ctx;
  ctx.board = std::make_shared<const BoardLayout>(config.board_layout.empty() ? BoardLayout::gojuon()
                                                                               : load_layout(config.board_layout));
  ctx.calibration = config.calibration.empty() ? default_calibration() : load_calibration(config.calibration);
  for (const Side side : {Side::A, Side::B}) {
    if (!ctx.calibration.count(side)) {
      throw Error(ErrorCode::ConfigError, "calibration lacks side " + std::string(to_string(side)));
    }
  }
  if (config.dictionary.empty()) throw Error(ErrorCode::ConfigError, "dictionary path is required");
  auto dict = load_dictionary_file(config.dictionary.string());
  ctx.dictionary = std::make_shared<const std::vector<DictionaryEntry>>(std::move(dict.entries));
  const bool playable = std::any_of(ctx.dictionary->begin(), ctx.dictionary->end(),
                                    [&](const DictionaryEntry& e) { return is_eligible(e, config.game, *ctx.board); });
  if (!playable) throw Error(ErrorCode::ConfigError, "no dictionary word is playable with the game settings");
  ctx.engine = std::make_shared<const Engine>(config.game, ctx.dictionary, ctx.board);

  ctx.capture_settings.normalization = config.normalization;
  ctx.capture_settings.label_origin = config.label_origin;
  ctx.capture_settings.grab_deadline = std::chrono::milliseconds(config.grab_deadline_ms);
  if (config.drivers.kind == "synthetic") {
    ctx.capture = make_synthetic_capture_service(ctx.board, ctx.calibration, ctx.capture_settings,
                                                 config.drivers.synthetic, derive_seed(config.server.seed, "drivers"));
  } else {
    throw Error(ErrorCode::ConfigError, "unknown driver kind '" + config.drivers.kind + "'");
  }
  return ctx;
}

}  // namespace gazequiz
