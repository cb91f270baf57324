#include "gazequiz/unicode.hpp"

#include <unicode/normalizer2.h>
#include <unicode/unistr.h>
#include <unicode/utf8.h>

#include "gazequiz/error.hpp"

namespace gazequiz::unicode {

bool is_valid_utf8(std::string_view text) {
  const auto* s = reinterpret_cast<const uint8_t*>(text.data());
  const auto length = static_cast<int32_t>(text.size());
  int32_t i = 0;
  while (i < length) {
    UChar32 c;
    U8_NEXT(s, i, length, c);
    if (c < 0) return false;
  }
  return true;
}

std::string nfc(std::string_view text) {
  if (!is_valid_utf8(text)) throw Error(ErrorCode::ParseError, "malformed UTF-8");
  UErrorCode status = U_ZERO_ERROR;
  const icu::Normalizer2* normalizer = icu::Normalizer2::getNFCInstance(status);
  if (U_FAILURE(status)) throw Error(ErrorCode::ParseError, u_errorName(status));
  icu::UnicodeString source = icu::UnicodeString::fromUTF8(icu::StringPiece(text.data(), static_cast<int32_t>(text.size())));
  icu::UnicodeString normalized = normalizer->normalize(source, status);
  if (U_FAILURE(status)) throw Error(ErrorCode::ParseError, u_errorName(status));
  std::string out;
  normalized.toUTF8String(out);
  return out;
}

std::vector<std::string> split_glyphs(std::string_view text) {
  const std::string normalized = nfc(text);
  std::vector<std::string> glyphs;
  const auto* s = reinterpret_cast<const uint8_t*>(normalized.data());
  const auto length = static_cast<int32_t>(normalized.size());
  int32_t i = 0;
  while (i < length) {
    const int32_t start = i;
    UChar32 c;
    U8_NEXT(s, i, length, c);
    glyphs.emplace_back(normalized.substr(static_cast<std::size_t>(start), static_cast<std::size_t>(i - start)));
  }
  return glyphs;
}

}  // namespace gazequiz::unicode
