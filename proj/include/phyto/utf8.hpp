#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace phyto::utf8 {

inline constexpr char32_t kReplacement = 0xFFFD;

inline bool is_valid(std::string_view bytes) {
    std::size_t i = 0;
    const std::size_t n = bytes.size();
    while (i < n) {
        const unsigned char b0 = (unsigned char)bytes[i];
        if (b0 < 0x80) { ++i; continue; }
        std::size_t len;
        char32_t min_cp;
        if ((b0 & 0xE0) == 0xC0) { len = 2; min_cp = 0x80; }
        else if ((b0 & 0xF0) == 0xE0) { len = 3; min_cp = 0x800; }
        else if ((b0 & 0xF8) == 0xF0) { len = 4; min_cp = 0x10000; }
        else return false;
        if (i + len > n) return false;
        char32_t cp = b0 & (0x7F >> len);
        for (std::size_t k = 1; k < len; ++k) {
            const unsigned char b = (unsigned char)bytes[i + k];
            if ((b & 0xC0) != 0x80) return false;
            cp = (cp << 6) | (b & 0x3F);
        }
        if (cp < min_cp || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) return false;
        i += len;
    }
    return true;
}

// Decodes assuming valid input; invalid sequences become U+FFFD byte-by-byte.
inline std::u32string decode(std::string_view bytes) {
    std::u32string out;
    out.reserve(bytes.size());
    std::size_t i = 0;
    const std::size_t n = bytes.size();
    while (i < n) {
        const unsigned char b0 = (unsigned char)bytes[i];
        if (b0 < 0x80) { out.push_back(b0); ++i; continue; }
        std::size_t len;
        char32_t min_cp;
        if ((b0 & 0xE0) == 0xC0) { len = 2; min_cp = 0x80; }
        else if ((b0 & 0xF0) == 0xE0) { len = 3; min_cp = 0x800; }
        else if ((b0 & 0xF8) == 0xF0) { len = 4; min_cp = 0x10000; }
        else { out.push_back(kReplacement); ++i; continue; }
        if (i + len > n) { out.push_back(kReplacement); ++i; continue; }
        char32_t cp = b0 & (0x7F >> len);
        bool ok = true;
        for (std::size_t k = 1; k < len; ++k) {
            const unsigned char b = (unsigned char)bytes[i + k];
            if ((b & 0xC0) != 0x80) { ok = false; break; }
            cp = (cp << 6) | (b & 0x3F);
        }
        if (!ok || cp < min_cp || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) {
            out.push_back(kReplacement);
            ++i;
            continue;
        }
        out.push_back(cp);
        i += len;
    }
    return out;
}

inline void append(std::string& out, char32_t cp) {
    if (cp < 0x80) {
        out.push_back(char(cp));
    } else if (cp < 0x800) {
        out.push_back(char(0xC0 | (cp >> 6)));
        out.push_back(char(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
        out.push_back(char(0xE0 | (cp >> 12)));
        out.push_back(char(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(char(0x80 | (cp & 0x3F)));
    } else {
        out.push_back(char(0xF0 | (cp >> 18)));
        out.push_back(char(0x80 | ((cp >> 12) & 0x3F)));
        out.push_back(char(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(char(0x80 | (cp & 0x3F)));
    }
}

inline std::string encode(const std::u32string& cps) {
    std::string out;
    out.reserve(cps.size());
    for (char32_t cp : cps) append(out, cp);
    return out;
}

// Latin-1 bytes reinterpreted as code points U+0000..U+00FF.
inline std::string latin1_to_utf8(std::string_view bytes) {
    std::string out;
    out.reserve(bytes.size());
    for (unsigned char b : bytes) append(out, b);
    return out;
}

inline bool is_ascii_letter(char32_t c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
}

// Letters of the French alphabet plus the Latin-1 / Latin Extended-A range
// that appears in the source corpora.
inline bool is_letter(char32_t c) {
    if (is_ascii_letter(c)) return true;
    if (c >= 0xC0 && c <= 0xFF && c != 0xD7 && c != 0xF7) return true;
    if (c >= 0x100 && c <= 0x17F) return true;
    return false;
}

inline bool is_upper_letter(char32_t c) {
    if (c >= 'A' && c <= 'Z') return true;
    if (c >= 0xC0 && c <= 0xDE && c != 0xD7) return true;
    if (c == 0x152 || c == 0x178) return true;  // Œ Ÿ
    if (c >= 0x100 && c <= 0x137 && (c % 2 == 0)) return true;
    if (c >= 0x139 && c <= 0x148 && (c % 2 == 1)) return true;
    if (c >= 0x14A && c <= 0x177 && (c % 2 == 0)) return true;
    return false;
}

inline char32_t to_lower(char32_t c) {
    if (c >= 'A' && c <= 'Z') return c + 0x20;
    if (c >= 0xC0 && c <= 0xDE && c != 0xD7) return c + 0x20;
    if (c == 0x152) return 0x153;  // Œ → œ
    if (c == 0x178) return 0xFF;   // Ÿ → ÿ
    if (c >= 0x100 && c <= 0x137 && (c % 2 == 0)) return c + 1;
    if (c >= 0x139 && c <= 0x148 && (c % 2 == 1)) return c + 1;
    if (c >= 0x14A && c <= 0x177 && (c % 2 == 0)) return c + 1;
    return c;
}

// Composes base letter + combining mark pairs into the precomposed forms used
// in French (NFC for the subset this corpus needs; other marks pass through).
inline char32_t compose_pair(char32_t base, char32_t mark) {
    struct Entry { char32_t base; char32_t mark; char32_t composed; };
    static constexpr Entry table[] = {
        {'a', 0x300, 0xE0}, {'a', 0x301, 0xE1}, {'a', 0x302, 0xE2}, {'a', 0x303, 0xE3}, {'a', 0x308, 0xE4},
        {'e', 0x300, 0xE8}, {'e', 0x301, 0xE9}, {'e', 0x302, 0xEA}, {'e', 0x308, 0xEB},
        {'i', 0x300, 0xEC}, {'i', 0x301, 0xED}, {'i', 0x302, 0xEE}, {'i', 0x308, 0xEF},
        {'o', 0x300, 0xF2}, {'o', 0x301, 0xF3}, {'o', 0x302, 0xF4}, {'o', 0x303, 0xF5}, {'o', 0x308, 0xF6},
        {'u', 0x300, 0xF9}, {'u', 0x301, 0xFA}, {'u', 0x302, 0xFB}, {'u', 0x308, 0xFC},
        {'y', 0x308, 0xFF}, {'c', 0x327, 0xE7}, {'n', 0x303, 0xF1},
        {'A', 0x300, 0xC0}, {'A', 0x301, 0xC1}, {'A', 0x302, 0xC2}, {'A', 0x303, 0xC3}, {'A', 0x308, 0xC4},
        {'E', 0x300, 0xC8}, {'E', 0x301, 0xC9}, {'E', 0x302, 0xCA}, {'E', 0x308, 0xCB},
        {'I', 0x300, 0xCC}, {'I', 0x301, 0xCD}, {'I', 0x302, 0xCE}, {'I', 0x308, 0xCF},
        {'O', 0x300, 0xD2}, {'O', 0x301, 0xD3}, {'O', 0x302, 0xD4}, {'O', 0x303, 0xD5}, {'O', 0x308, 0xD6},
        {'U', 0x300, 0xD9}, {'U', 0x301, 0xDA}, {'U', 0x302, 0xDB}, {'U', 0x308, 0xDC},
        {'Y', 0x308, 0x178}, {'C', 0x327, 0xC7}, {'N', 0x303, 0xD1},
    };
    for (const auto& e : table) {
        if (e.base == base && e.mark == mark) return e.composed;
    }
    return 0;
}

inline void compose_in_place(std::u32string& cps) {
    std::size_t w = 0;
    for (std::size_t r = 0; r < cps.size(); ++r) {
        if (w > 0 && cps[r] >= 0x300 && cps[r] <= 0x36F) {
            if (const char32_t composed = compose_pair(cps[w - 1], cps[r])) {
                cps[w - 1] = composed;
                continue;
            }
        }
        cps[w++] = cps[r];
    }
    cps.resize(w);
}

inline bool is_space(char32_t c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v' ||
           c == 0xA0 || c == 0x2028 || c == 0x2029;
}

// Canonical form shared by tags, thesaurus concepts, stopwords and filter
// keywords: composed accents, lowercase, trimmed, inner whitespace collapsed.
inline std::string canonical(std::string_view raw) {
    std::u32string cps = decode(raw);
    compose_in_place(cps);
    std::u32string out;
    out.reserve(cps.size());
    bool pending_space = false;
    for (char32_t c : cps) {
        if (is_space(c)) {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) {
            out.push_back(' ');
            pending_space = false;
        }
        out.push_back(to_lower(c));
    }
    return encode(out);
}

}  // namespace phyto::utf8
