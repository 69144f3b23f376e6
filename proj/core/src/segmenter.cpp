#include "mdca/segmenter.hpp"

#include <algorithm>

#include "mdca/error.hpp"
#include "mdca/text.hpp"

namespace mdca {
namespace {

struct Span {
    std::size_t begin;
    std::size_t end;
};

bool is_digit(char32_t c) { return (c >= U'0' && c <= U'9') || (c >= 0xFF10 && c <= 0xFF19); }

bool is_circled_number(char32_t c) { return c >= 0x2460 && c <= 0x2473; }

bool is_boundary(const std::u32string& s, std::size_t pos) {
    if (pos == 0) return true;
    const char32_t prev = s[pos - 1];
    return text::is_space(prev) || text::is_punct(prev) || prev == U')' || prev == U'）' ||
           is_circled_number(prev);
}

// Length of a "12." / "3、" / "4)" marker at pos, 0 if none.
std::size_t numbered_marker(const std::u32string& s, std::size_t pos) {
    std::size_t i = pos;
    while (i < s.size() && i - pos < 2 && is_digit(s[i])) ++i;
    if (i == pos || i >= s.size() || is_digit(s[i])) return 0;
    const char32_t sep = s[i];
    if (sep != U'.' && sep != U'．' && sep != U'、' && sep != U')' && sep != U'）') return 0;
    // "4.2" is a decimal, not an enumeration.
    if (i + 1 < s.size() && is_digit(s[i + 1])) return 0;
    return i + 1 - pos;
}

// Length of a "(1)" / "（1）" marker at pos, 0 if none.
std::size_t parenthesized_marker(const std::u32string& s, std::size_t pos) {
    if (s[pos] != U'(' && s[pos] != U'（') return 0;
    std::size_t i = pos + 1;
    while (i < s.size() && i - pos - 1 < 2 && is_digit(s[i])) ++i;
    if (i == pos + 1 || i >= s.size()) return 0;
    if (s[i] != U')' && s[i] != U'）') return 0;
    return i + 1 - pos;
}

std::vector<Span> find_markers(const std::u32string& s) {
    std::vector<Span> markers;
    for (std::size_t pos = 0; pos < s.size();) {
        std::size_t len = 0;
        if (is_circled_number(s[pos])) {
            len = 1;
        } else {
            // "(n)" is distinctive enough to need no boundary; a bare "n." does
            len = parenthesized_marker(s, pos);
            if (len == 0 && is_digit(s[pos]) && is_boundary(s, pos)) len = numbered_marker(s, pos);
        }
        if (len > 0) {
            markers.push_back({pos, pos + len});
            pos += len;
        } else {
            ++pos;
        }
    }
    return markers;
}

std::string trimmed(const std::u32string& s, std::size_t begin, std::size_t end) {
    return std::string(text::trim(text::encode_utf8(std::u32string_view(s).substr(begin, end - begin))));
}

std::vector<std::string> split_fragments(std::string_view input) {
    const std::u32string s = text::decode_utf8(input);
    const auto markers = find_markers(s);
    std::vector<std::string> fragments;
    if (markers.empty()) {
        std::size_t start = 0;
        for (std::size_t i = 0; i <= s.size(); ++i) {
            if (i == s.size() || s[i] == U'\n' || s[i] == U'\r') {
                auto line = trimmed(s, start, i);
                if (!line.empty()) fragments.push_back(std::move(line));
                start = i + 1;
            }
        }
        return fragments;
    }
    std::string prefix = trimmed(s, 0, markers.front().begin);
    for (std::size_t m = 0; m < markers.size(); ++m) {
        const std::size_t end = m + 1 < markers.size() ? markers[m + 1].begin : s.size();
        auto body = trimmed(s, markers[m].end, end);
        if (body.empty()) continue;
        if (!prefix.empty()) {
            body = prefix + " " + body;
            prefix.clear();
        }
        fragments.push_back(std::move(body));
    }
    if (!prefix.empty()) fragments.push_back(std::move(prefix));
    return fragments;
}

}  // namespace

DiagnosisItem make_item(std::size_t index, std::string_view raw, const Lexicon& lexicon) {
    DiagnosisItem item;
    item.index = index;
    item.raw = std::string(text::trim(raw));
    item.lexicon_version = lexicon.version();
    const std::string_view body = text::strip_trailing_punct(item.raw);
    item.concepts = lexicon.concepts_in(body);
    item.locations = lexicon.locations_in(body);
    for (const auto& id : item.concepts) {
        if (const Concept* c = lexicon.find(id)) {
            if (!item.tier || c->tier < *item.tier) item.tier = c->tier;
        }
    }
    if (item.concepts.empty()) {
        auto key = text::match_key(body);
        if (key.empty()) key = text::match_key(item.raw);
        item.concepts.insert(std::string(kSyntheticConceptPrefix) + text::encode_utf8(key));
    }
    return item;
}

std::vector<DiagnosisItem> segment_conclusion(std::string_view text, const Lexicon& lexicon) {
    const auto fragments = split_fragments(text);
    if (fragments.empty()) throw Error(ErrorCode::kNoItemsFound, "conclusion has no parseable fragment");
    std::vector<DiagnosisItem> items;
    items.reserve(fragments.size());
    for (std::size_t i = 0; i < fragments.size(); ++i) {
        items.push_back(make_item(i + 1, fragments[i], lexicon));
    }
    return items;
}

const DiagnosisItem& primary_item(const std::vector<DiagnosisItem>& items) {
    if (items.empty()) throw Error(ErrorCode::kEmptyList, "no diagnosis items");
    return items.front();
}

std::string serialize_items(const std::vector<std::string>& raws) {
    std::string out;
    for (std::size_t i = 0; i < raws.size(); ++i) {
        if (i > 0) out += '\n';
        out += std::to_string(i + 1);
        out += ". ";
        out += raws[i];
    }
    return out;
}

}  // namespace mdca
