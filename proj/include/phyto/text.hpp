#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace phyto::text {

// Whitespace at the byte level: ASCII blanks plus NBSP (C2 A0) and the
// Unicode line separators (E2 80 A8 / E2 80 A9), which OCR dumps contain.
inline std::size_t space_len_at(std::string_view s, std::size_t i) {
    const unsigned char b = (unsigned char)s[i];
    if (b == ' ' || b == '\t' || b == '\n' || b == '\r' || b == '\f' || b == '\v') return 1;
    if (b == 0xC2 && i + 1 < s.size() && (unsigned char)s[i + 1] == 0xA0) return 2;
    if (b == 0xE2 && i + 2 < s.size() && (unsigned char)s[i + 1] == 0x80 &&
        ((unsigned char)s[i + 2] == 0xA8 || (unsigned char)s[i + 2] == 0xA9))
        return 3;
    return 0;
}

inline bool is_line_break_at(std::string_view s, std::size_t i) {
    const unsigned char b = (unsigned char)s[i];
    if (b == '\n' || b == '\r') return true;
    if (b == 0xE2 && i + 2 < s.size() && (unsigned char)s[i + 1] == 0x80 &&
        ((unsigned char)s[i + 2] == 0xA8 || (unsigned char)s[i + 2] == 0xA9))
        return true;
    return false;
}

// Maximal runs of non-whitespace bytes.
inline std::vector<std::string_view> words(std::string_view s) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < s.size()) {
        if (const std::size_t sl = space_len_at(s, i)) {
            i += sl;
            continue;
        }
        const std::size_t begin = i;
        while (i < s.size() && space_len_at(s, i) == 0) ++i;
        out.push_back(s.substr(begin, i - begin));
    }
    return out;
}

inline std::size_t count_words(std::string_view s) {
    std::size_t n = 0, i = 0;
    while (i < s.size()) {
        if (const std::size_t sl = space_len_at(s, i)) {
            i += sl;
            continue;
        }
        ++n;
        while (i < s.size() && space_len_at(s, i) == 0) ++i;
    }
    return n;
}

inline std::vector<std::string_view> split_lines(std::string_view s) {
    std::vector<std::string_view> out;
    std::size_t begin = 0;
    for (std::size_t i = 0; i <= s.size(); ++i) {
        if (i == s.size() || s[i] == '\n') {
            out.push_back(s.substr(begin, i - begin));
            begin = i + 1;
        }
    }
    if (s.empty()) out.clear();
    return out;
}

// Collapses every whitespace run to a single separator: "\n" when the run
// crossed a line break, " " otherwise. Edge whitespace is dropped. Idempotent.
inline std::string normalize_whitespace(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    bool pending = false;
    bool pending_break = false;
    std::size_t i = 0;
    while (i < s.size()) {
        const std::size_t sl = space_len_at(s, i);
        if (sl) {
            pending = true;
            pending_break = pending_break || is_line_break_at(s, i);
            i += sl;
            continue;
        }
        if (pending && !out.empty()) out.push_back(pending_break ? '\n' : ' ');
        pending = false;
        pending_break = false;
        out.push_back(s[i++]);
    }
    return out;
}

inline std::string join(const std::vector<std::string_view>& parts, std::string_view sep) {
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i) out.append(sep);
        out.append(parts[i]);
    }
    return out;
}

inline std::string join(const std::vector<std::string>& parts, std::string_view sep) {
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i) out.append(sep);
        out.append(parts[i]);
    }
    return out;
}

inline std::string trim(std::string_view s) {
    std::size_t begin = 0;
    while (begin < s.size()) {
        const std::size_t sl = space_len_at(s, begin);
        if (!sl) break;
        begin += sl;
    }
    std::size_t end = s.size();
    while (end > begin) {
        // Walk back one whitespace char; multibyte spaces need a forward probe.
        std::size_t step = 0;
        for (std::size_t back = 1; back <= 3 && back <= end - begin; ++back) {
            const std::size_t sl = space_len_at(s, end - back);
            if (sl == back) {
                step = back;
                break;
            }
        }
        if (!step) break;
        end -= step;
    }
    return std::string(s.substr(begin, end - begin));
}

}  // namespace phyto::text
