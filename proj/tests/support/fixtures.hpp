#pragma once

#include <filesystem>
#include <memory>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "gazequiz/app_config.hpp"
#include "gazequiz/dictionary.hpp"
#include "gazequiz/engine.hpp"

namespace fixtures {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag = "gq") {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            (tag + "-" + std::to_string(rd()) + "-" + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline std::filesystem::path source_dir() { return GAZEQUIZ_SOURCE_DIR; }
inline std::filesystem::path fixture_dir() { return GAZEQUIZ_FIXTURE_DIR; }

/// Config with the shipped word list and default everything else.
inline gazequiz::AppConfig default_config() {
  gazequiz::AppConfig c;
  c.dictionary = source_dir() / "data" / "words_ja.txt";
  return c;
}

inline std::shared_ptr<const std::vector<gazequiz::DictionaryEntry>> dictionary_from(const std::string& text) {
  std::istringstream in(text);
  return std::make_shared<const std::vector<gazequiz::DictionaryEntry>>(gazequiz::load_dictionary(in).entries);
}

inline std::shared_ptr<const gazequiz::Engine> make_engine(const std::string& words,
                                                         gazequiz::GameConfig config = {}) {
  return std::make_shared<const gazequiz::Engine>(config, dictionary_from(words),
                                                  std::make_shared<const gazequiz::BoardLayout>(
                                                      gazequiz::BoardLayout::gojuon()));
}

}  // namespace fixtures
