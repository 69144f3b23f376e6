#include "mdca/text.hpp"

#include <array>

namespace mdca::text {
namespace {

constexpr char32_t kReplacement = 0xFFFD;

struct Decoded {
    char32_t cp;
    std::size_t width;
};

Decoded decode_one(std::string_view s, std::size_t pos) {
    const auto b0 = static_cast<unsigned char>(s[pos]);
    if (b0 < 0x80) return {b0, 1};
    std::size_t need = 0;
    char32_t cp = 0;
    if ((b0 & 0xE0) == 0xC0) {
        need = 1;
        cp = b0 & 0x1F;
    } else if ((b0 & 0xF0) == 0xE0) {
        need = 2;
        cp = b0 & 0x0F;
    } else if ((b0 & 0xF8) == 0xF0) {
        need = 3;
        cp = b0 & 0x07;
    } else {
        return {kReplacement, 1};
    }
    for (std::size_t i = 1; i <= need; ++i) {
        if (pos + i >= s.size()) return {kReplacement, 1};
        const auto b = static_cast<unsigned char>(s[pos + i]);
        if ((b & 0xC0) != 0x80) return {kReplacement, 1};
        cp = (cp << 6) | (b & 0x3F);
    }
    // Overlong forms and surrogates.
    static constexpr std::array<char32_t, 4> kMin{0, 0x80, 0x800, 0x10000};
    if (cp < kMin[need] || (cp >= 0xD800 && cp <= 0xDFFF) || cp > 0x10FFFF) {
        return {kReplacement, need + 1};
    }
    return {cp, need + 1};
}

void append_utf8(std::string& out, char32_t cp) {
    if (cp < 0x80) {
        out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
        out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
        out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
        out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
}

// U+2160..U+216F (upper) and U+2170..U+217F (lower) Roman numerals.
constexpr std::array<std::u32string_view, 16> kRoman{
    U"i",  U"ii",  U"iii", U"iv", U"v", U"vi", U"vii", U"viii",
    U"ix", U"x",   U"xi",  U"xii", U"l", U"c", U"d",  U"m"};

}  // namespace

std::u32string decode_utf8(std::string_view bytes) {
    std::u32string out;
    out.reserve(bytes.size());
    for (std::size_t pos = 0; pos < bytes.size();) {
        const auto d = decode_one(bytes, pos);
        out.push_back(d.cp);
        pos += d.width;
    }
    return out;
}

std::string encode_utf8(std::u32string_view code_points) {
    std::string out;
    out.reserve(code_points.size());
    for (char32_t cp : code_points) append_utf8(out, cp);
    return out;
}

std::size_t utf8_length(std::string_view bytes) {
    std::size_t n = 0;
    for (std::size_t pos = 0; pos < bytes.size(); ++n) pos += decode_one(bytes, pos).width;
    return n;
}

bool is_space(char32_t c) {
    switch (c) {
        case U' ': case U'\t': case U'\n': case U'\r': case U'\v': case U'\f':
        case 0x00A0: case 0x1680: case 0x2028: case 0x2029: case 0x202F:
        case 0x205F: case 0x3000: case 0xFEFF:
            return true;
        default:
            return c >= 0x2000 && c <= 0x200B;
    }
}

bool is_punct(char32_t c) {
    switch (c) {
        case U'.': case U',': case U';': case U':': case U'!': case U'?':
        case U'。':
        case U'，':
        case U'；':
        case U'：':
        case U'！':
        case U'？':
        case U'、':
        case U'．':
        case U'…':
            return true;
        default:
            return false;
    }
}

std::u32string fold(std::u32string_view input) {
    std::u32string out;
    out.reserve(input.size());
    for (char32_t c : input) {
        if (c >= 0xFF01 && c <= 0xFF5E) c = c - 0xFF01 + 0x21;
        if (c == 0x3000) c = U' ';
        if (c >= 0x2160 && c <= 0x217F) {
            out += kRoman[(c - 0x2160) % 16];
            continue;
        }
        if (c >= U'A' && c <= U'Z') c = c - U'A' + U'a';
        if (c >= 0xC0 && c <= 0xDE && c != 0xD7) c += 0x20;
        out.push_back(c);
    }
    return out;
}

std::u32string match_key(std::string_view utf8) {
    const auto folded = fold(decode_utf8(utf8));
    std::u32string out;
    out.reserve(folded.size());
    for (char32_t c : folded) {
        if (!is_space(c)) out.push_back(c);
    }
    return out;
}

std::string_view trim(std::string_view utf8) {
    std::size_t begin = 0;
    while (begin < utf8.size()) {
        const auto d = decode_one(utf8, begin);
        if (!is_space(d.cp)) break;
        begin += d.width;
    }
    std::size_t end = utf8.size();
    while (end > begin) {
        // Step back to the start of the previous code point.
        std::size_t start = end - 1;
        while (start > begin && (static_cast<unsigned char>(utf8[start]) & 0xC0) == 0x80) --start;
        if (!is_space(decode_one(utf8, start).cp)) break;
        end = start;
    }
    return utf8.substr(begin, end - begin);
}

std::string_view strip_trailing_punct(std::string_view utf8) {
    std::string_view s = trim(utf8);
    std::size_t end = s.size();
    while (end > 0) {
        std::size_t start = end - 1;
        while (start > 0 && (static_cast<unsigned char>(s[start]) & 0xC0) == 0x80) --start;
        const char32_t cp = decode_one(s, start).cp;
        if (!is_punct(cp) && !is_space(cp)) break;
        end = start;
    }
    return s.substr(0, end);
}

}  // namespace mdca::text
