#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace gazequiz::unicode {

bool is_valid_utf8(std::string_view text);

/// NFC normalization. Throws Error(ParseError) on malformed UTF-8.
std::string nfc(std::string_view text);

/// Splits NFC text into code points, one string per letter.
std::vector<std::string> split_glyphs(std::string_view text);

}  // namespace gazequiz::unicode
