#include "dualq/unicode.hpp"

#include <unicode/uchar.h>
#include <unicode/utf8.h>

namespace dualq::unicode {

namespace {

template <typename F>
void for_each_cp(std::string_view s, F&& f) {
    const auto* p = reinterpret_cast<const uint8_t*>(s.data());
    const auto n = static_cast<int32_t>(s.size());
    int32_t i = 0;
    while (i < n) {
        const int32_t start = i;
        UChar32 c;
        U8_NEXT(p, i, n, c);
        f(c < 0 ? char32_t{0xFFFD} : static_cast<char32_t>(c), start, i);
    }
}

} // namespace

std::u32string decode(std::string_view utf8) {
    std::u32string out;
    out.reserve(utf8.size());
    for_each_cp(utf8, [&](char32_t c, int32_t, int32_t) { out.push_back(c); });
    return out;
}

void append(std::string& out, char32_t cp) {
    uint8_t buf[U8_MAX_LENGTH];
    int32_t len = 0;
    UBool err = false;
    U8_APPEND(buf, len, U8_MAX_LENGTH, static_cast<UChar32>(cp), err);
    if (err) {
        append(out, 0xFFFD);
        return;
    }
    out.append(reinterpret_cast<const char*>(buf), static_cast<std::size_t>(len));
}

std::string encode(std::u32string_view cps) {
    std::string out;
    out.reserve(cps.size());
    for (char32_t c : cps) append(out, c);
    return out;
}

bool is_valid_utf8(std::string_view s) {
    const auto* p = reinterpret_cast<const uint8_t*>(s.data());
    const auto n = static_cast<int32_t>(s.size());
    int32_t i = 0;
    while (i < n) {
        UChar32 c;
        U8_NEXT(p, i, n, c);
        if (c < 0) return false;
    }
    return true;
}

std::size_t length(std::string_view utf8) {
    std::size_t n = 0;
    for_each_cp(utf8, [&](char32_t, int32_t, int32_t) { ++n; });
    return n;
}

bool is_whitespace(char32_t cp) { return u_isUWhiteSpace(static_cast<UChar32>(cp)); }
bool is_alpha(char32_t cp) { return u_isUAlphabetic(static_cast<UChar32>(cp)); }
bool is_punct(char32_t cp) { return u_ispunct(static_cast<UChar32>(cp)); }

bool is_word_char(char32_t cp) {
    const auto c = static_cast<UChar32>(cp);
    if (u_isalnum(c) || u_isUAlphabetic(c)) return true;
    const auto cat = u_charType(c);
    return cat == U_NON_SPACING_MARK || cat == U_COMBINING_SPACING_MARK || cat == U_ENCLOSING_MARK;
}

char32_t to_lower(char32_t cp) { return static_cast<char32_t>(u_tolower(static_cast<UChar32>(cp))); }
char32_t to_upper(char32_t cp) { return static_cast<char32_t>(u_toupper(static_cast<UChar32>(cp))); }

std::string to_lower(std::string_view utf8) {
    std::string out;
    out.reserve(utf8.size());
    for_each_cp(utf8, [&](char32_t c, int32_t, int32_t) { append(out, to_lower(c)); });
    return out;
}

std::string to_upper(std::string_view utf8) {
    std::string out;
    out.reserve(utf8.size());
    for_each_cp(utf8, [&](char32_t c, int32_t, int32_t) { append(out, to_upper(c)); });
    return out;
}

std::string_view trim(std::string_view utf8) {
    std::size_t first = utf8.size();
    std::size_t last = 0;
    for_each_cp(utf8, [&](char32_t c, int32_t start, int32_t end) {
        if (is_whitespace(c)) return;
        if (first == utf8.size()) first = static_cast<std::size_t>(start);
        last = static_cast<std::size_t>(end);
    });
    if (first == utf8.size()) return {};
    return utf8.substr(first, last - first);
}

std::vector<std::string> split_whitespace(std::string_view utf8) {
    std::vector<std::string> out;
    std::string cur;
    for_each_cp(utf8, [&](char32_t c, int32_t start, int32_t end) {
        if (is_whitespace(c)) {
            if (!cur.empty()) out.push_back(std::move(cur));
            cur.clear();
        } else {
            cur.append(utf8.substr(static_cast<std::size_t>(start), static_cast<std::size_t>(end - start)));
        }
    });
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
}

} // namespace dualq::unicode
