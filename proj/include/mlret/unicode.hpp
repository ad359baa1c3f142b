#pragma once

#include <string>
#include <string_view>

namespace mlret::unicode {

// Canonical-composition (NFC) normalization of UTF-8 text. Pure-ASCII input
// is returned unchanged without touching ICU.
std::string nfc(std::string_view text);

// Decodes one UTF-8 codepoint starting at `i`, advancing `i` past it.
// Invalid sequences decode as U+FFFD and advance one byte.
char32_t decode_utf8(std::string_view text, std::size_t& i);

}  // namespace mlret::unicode
