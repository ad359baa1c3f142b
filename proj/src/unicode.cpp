#include "mlret/unicode.hpp"

#include <unicode/bytestream.h>
#include <unicode/normalizer2.h>

#include "mlret/errors.hpp"

namespace mlret::unicode {

namespace {

bool all_ascii(std::string_view s) {
    for (unsigned char c : s)
        if (c >= 0x80) return false;
    return true;
}

}  // namespace

std::string nfc(std::string_view text) {
    if (all_ascii(text)) return std::string(text);

    UErrorCode status = U_ZERO_ERROR;
    const icu::Normalizer2* norm = icu::Normalizer2::getNFCInstance(status);
    if (U_FAILURE(status))
        throw error(std::string("ICU NFC instance unavailable: ") + u_errorName(status));

    std::string out;
    out.reserve(text.size());
    icu::StringByteSink<std::string> sink(&out);
    norm->normalizeUTF8(0, icu::StringPiece(text.data(), static_cast<int32_t>(text.size())),
                        sink, nullptr, status);
    if (U_FAILURE(status))
        throw error(std::string("NFC normalization failed: ") + u_errorName(status));
    return out;
}

char32_t decode_utf8(std::string_view text, std::size_t& i) {
    const auto byte = [&](std::size_t k) { return static_cast<unsigned char>(text[k]); };
    unsigned char b0 = byte(i);
    if (b0 < 0x80) {
        i += 1;
        return b0;
    }

    int len = 0;
    char32_t cp = 0;
    if ((b0 & 0xE0) == 0xC0) {
        len = 2;
        cp = b0 & 0x1F;
    } else if ((b0 & 0xF0) == 0xE0) {
        len = 3;
        cp = b0 & 0x0F;
    } else if ((b0 & 0xF8) == 0xF0) {
        len = 4;
        cp = b0 & 0x07;
    } else {
        i += 1;
        return 0xFFFD;
    }

    if (i + len > text.size()) {
        i += 1;
        return 0xFFFD;
    }
    for (int k = 1; k < len; ++k) {
        unsigned char b = byte(i + k);
        if ((b & 0xC0) != 0x80) {
            i += 1;
            return 0xFFFD;
        }
        cp = (cp << 6) | (b & 0x3F);
    }
    i += len;
    return cp;
}

}  // namespace mlret::unicode
