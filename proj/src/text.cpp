#include "selfendorse/text.hpp"

#include <algorithm>
#include <array>
#include <cstdint>

namespace selfendorse {

namespace {

constexpr char32_t kInvalid = 0xFFFFFFFF;

/// Decodes one UTF-8 code point at `pos`, advancing it. Malformed input
/// yields kInvalid and consumes one byte.
char32_t next_code_point(std::string_view s, std::size_t& pos)
{
    const auto lead = static_cast<unsigned char>(s[pos]);
    std::size_t len = 0;
    char32_t cp = 0;
    if (lead < 0x80) {
        ++pos;
        return lead;
    }
    if ((lead & 0xE0) == 0xC0) {
        len = 2;
        cp = lead & 0x1F;
    } else if ((lead & 0xF0) == 0xE0) {
        len = 3;
        cp = lead & 0x0F;
    } else if ((lead & 0xF8) == 0xF0) {
        len = 4;
        cp = lead & 0x07;
    } else {
        ++pos;
        return kInvalid;
    }
    if (pos + len > s.size()) {
        ++pos;
        return kInvalid;
    }
    for (std::size_t i = 1; i < len; ++i) {
        const auto cont = static_cast<unsigned char>(s[pos + i]);
        if ((cont & 0xC0) != 0x80) {
            ++pos;
            return kInvalid;
        }
        cp = (cp << 6) | (cont & 0x3F);
    }
    pos += len;
    return cp;
}

void append_utf8(std::string& out, char32_t cp)
{
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

// Letter/digit classification for the scripts we expect in English-centric
// corpora: ASCII, Latin-1, Latin Extended-A/B, Greek, Cyrillic and CJK ideographs.
bool is_alnum(char32_t cp) noexcept
{
    if (cp < 0x80) {
        return (cp >= '0' && cp <= '9') || (cp >= 'a' && cp <= 'z') || (cp >= 'A' && cp <= 'Z');
    }
    if (cp == 0xAA || cp == 0xB5 || cp == 0xBA) return true;
    if (cp >= 0xC0 && cp <= 0x24F) return cp != 0xD7 && cp != 0xF7;
    if (cp >= 0x370 && cp <= 0x3FF) return cp != 0x37E && cp != 0x387 && cp != 0x375;
    if (cp >= 0x400 && cp <= 0x481) return true;
    if (cp >= 0x48A && cp <= 0x52F) return true;
    if (cp >= 0x3040 && cp <= 0x30FF) return true;
    if (cp >= 0x4E00 && cp <= 0x9FFF) return true;
    return false;
}

char32_t to_lower(char32_t cp) noexcept
{
    if (cp >= 'A' && cp <= 'Z') return cp + 0x20;
    if (cp < 0xC0) return cp;
    if (cp <= 0xDE) return cp == 0xD7 ? cp : cp + 0x20;
    if (cp >= 0x100 && cp <= 0x137) return cp | 1U;
    if (cp >= 0x139 && cp <= 0x148) return (cp & 1U) ? cp + 1 : cp;
    if (cp >= 0x14A && cp <= 0x177) return cp | 1U;
    if (cp >= 0x391 && cp <= 0x3AB && cp != 0x3A2) return cp + 0x20;
    if (cp >= 0x410 && cp <= 0x42F) return cp + 0x20;
    if (cp >= 0x400 && cp <= 0x40F) return cp + 0x50;
    return cp;
}

constexpr std::array<std::string_view, 34> kAbbreviations = {
    "Dr.",  "Mr.",   "Mrs.", "Ms.",  "Prof.", "St.",  "Jr.",  "Sr.",     "vs.",
    "e.g.", "i.e.",  "U.S.", "U.K.", "U.N.",  "Inc.", "Ltd.", "Co.",     "Corp.",
    "No.",  "Mt.",   "Gen.", "Col.", "Lt.",   "Sgt.", "Capt.", "Rev.",   "Hon.",
    "Gov.", "Sen.",  "Rep.", "Ph.D.", "approx.", "ca.", "cf.",
};

bool is_closer(char c) noexcept
{
    return c == '"' || c == '\'' || c == ')' || c == ']';
}

bool is_terminator(char c) noexcept { return c == '.' || c == '!' || c == '?'; }

/// True when the word ending at `end` (exclusive, ends in '.') must not end a sentence.
bool is_abbreviation(std::string_view text, std::size_t end)
{
    std::size_t begin = end;
    while (begin > 0 && !is_space(text[begin - 1])) {
        --begin;
    }
    auto word = text.substr(begin, end - begin);
    while (!word.empty() && (word.front() == '(' || word.front() == '"' || word.front() == '\'')) {
        word.remove_prefix(1);
    }
    if (word.size() == 2 && word[0] >= 'A' && word[0] <= 'Z') {
        return true;  // initial, e.g. "J. Smith"
    }
    return std::find(kAbbreviations.begin(), kAbbreviations.end(), word) != kAbbreviations.end();
}

}  // namespace

bool is_space(char c) noexcept
{
    return c == ' ' || c == '\n' || c == '\t' || c == '\r' || c == '\f' || c == '\v';
}

std::vector<std::string> tokenize(std::string_view text)
{
    std::vector<std::string> tokens;
    std::string current;
    std::size_t pos = 0;
    while (pos < text.size()) {
        const char32_t cp = next_code_point(text, pos);
        if (cp != kInvalid && is_alnum(cp)) {
            append_utf8(current, to_lower(cp));
        } else if (!current.empty()) {
            tokens.push_back(std::move(current));
            current.clear();
        }
    }
    if (!current.empty()) {
        tokens.push_back(std::move(current));
    }
    return tokens;
}

std::vector<std::string> split_sentences(std::string_view text)
{
    std::vector<std::string> sentences;
    std::size_t start = 0;
    std::size_t i = 0;
    auto emit = [&](std::size_t end) {
        auto piece = trim(text.substr(start, end - start));
        if (!piece.empty()) {
            sentences.push_back(std::move(piece));
        }
        start = end;
    };
    while (i < text.size()) {
        if (!is_terminator(text[i])) {
            ++i;
            continue;
        }
        std::size_t end = i;
        bool only_period = true;
        while (end < text.size() && is_terminator(text[end])) {
            only_period = only_period && text[end] == '.';
            ++end;
        }
        const std::size_t punct_end = end;
        while (end < text.size() && is_closer(text[end])) {
            ++end;
        }
        const bool at_boundary = end == text.size() || is_space(text[end]);
        if (at_boundary && !(only_period && punct_end - i == 1 && is_abbreviation(text, punct_end))) {
            emit(end);
        }
        i = end;
    }
    emit(text.size());
    return sentences;
}

std::string trim(std::string_view text)
{
    std::size_t b = 0;
    std::size_t e = text.size();
    while (b < e && is_space(text[b])) ++b;
    while (e > b && is_space(text[e - 1])) --e;
    return std::string(text.substr(b, e - b));
}

std::string normalize_whitespace(std::string_view text)
{
    std::string out;
    out.reserve(text.size());
    bool pending_space = false;
    for (char c : text) {
        if (is_space(c)) {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) {
            out.push_back(' ');
            pending_space = false;
        }
        out.push_back(c);
    }
    return out;
}

std::string to_lower_ascii(std::string_view text)
{
    std::string out(text);
    std::transform(out.begin(), out.end(), out.begin(), [](char c) {
        return (c >= 'A' && c <= 'Z') ? static_cast<char>(c + 0x20) : c;
    });
    return out;
}

bool contains_normalized(std::string_view haystack, std::string_view needle)
{
    const auto h = to_lower_ascii(normalize_whitespace(haystack));
    const auto n = to_lower_ascii(normalize_whitespace(needle));
    return !n.empty() && h.find(n) != std::string::npos;
}

}  // namespace selfendorse
