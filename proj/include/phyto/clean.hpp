#pragma once

#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "phyto/document.hpp"
#include "phyto/errors.hpp"
#include "phyto/io.hpp"
#include "phyto/text.hpp"
#include "phyto/utf8.hpp"

namespace phyto {

inline const std::set<std::string>& default_french_stopwords() {
    static const std::set<std::string> list = {
        "a", "à", "afin", "ai", "ainsi", "alors", "après", "au", "aucun", "aucune",
        "aujourd", "auprès", "aura", "auront", "aussi", "autre", "autres", "aux", "avaient",
        "avait", "avant", "avec", "avoir", "c", "car", "ce", "ceci", "cela", "celle",
        "celles", "celui", "cependant", "ces", "cet", "cette", "ceux", "chaque", "chez",
        "ci", "comme", "comment", "d", "dans", "de", "dehors", "déjà", "depuis", "des",
        "deux", "devant", "doit", "donc", "dont", "du", "durant", "elle", "elles", "en",
        "encore", "enfin", "entre", "envers", "est", "et", "étaient", "était", "étant",
        "été", "êtes", "étions", "être", "eu", "eux", "fois", "font", "fut", "hors",
        "ici", "il", "ils", "j", "je", "jusqu", "jusque", "l", "la", "là", "le", "les",
        "leur", "leurs", "lors", "lui", "m", "ma", "mais", "malgré", "me", "même",
        "mêmes", "mes", "moi", "moins", "mon", "n", "ne", "ni", "non", "nos", "notre",
        "nous", "on", "ont", "ou", "où", "par", "parce", "parmi", "pas", "pendant",
        "peu", "peut", "plus", "plusieurs", "pour", "pourquoi", "qu", "quand", "que",
        "quel", "quelle", "quelles", "quels", "qui", "quoi", "s", "sa", "sans", "se",
        "selon", "sera", "seraient", "serait", "seront", "ses", "si", "sinon", "soi",
        "soit", "son", "sont", "sous", "suis", "sur", "t", "ta", "tandis", "te", "tes",
        "toi", "ton", "tous", "tout", "toute", "toutes", "très", "tu", "un", "une",
        "vers", "via", "vos", "votre", "vous", "y",
    };
    return list;
}

inline constexpr std::string_view kStopwordListVersion = "fr-v1";

// One word per line; '#' lines are comments. Entries are canonicalized.
inline std::set<std::string> load_stopword_file(const fs::path& path) {
    std::set<std::string> words;
    const std::string content = io::read_file(path);
    std::size_t begin = 0;
    while (begin <= content.size()) {
        std::size_t end = content.find('\n', begin);
        if (end == std::string::npos) end = content.size();
        std::string line = content.substr(begin, end - begin);
        begin = end + 1;
        if (!line.empty() && line[0] == '#') continue;
        const std::string canonical = utf8::canonical(line);
        if (!canonical.empty()) words.insert(canonical);
    }
    return words;
}

struct CleaningConfig {
    std::set<std::string> stopword_list = default_french_stopwords();
    std::size_t min_line_words = 3;
    bool remove_stopwords = true;
    bool remove_urls_phones = true;
    bool remove_spaced_runs = true;
    bool collapse_repeats = true;
    bool strip_punctuation = true;

    // Rule identifiers recorded in manifests so outputs stay traceable when a
    // pattern evolves.
    std::string url_pattern = "url-scheme-www-v1";
    std::string phone_pattern = "phone-fr-pairs-v1";
    std::string spaced_letters_pattern = "spaced-upper-run4-v1";

    // Bulletin text headed for the topic/risk classifiers.
    static CleaningConfig classification() { return {}; }

    // Raw-text corpus for language-model adaptation keeps its stopwords.
    static CleaningConfig lm_corpus() {
        CleaningConfig cfg;
        cfg.remove_stopwords = false;
        return cfg;
    }

    // Tweets are single-line; only URL/phone removal and whitespace collapse.
    static CleaningConfig tweet() {
        CleaningConfig cfg;
        cfg.min_line_words = 1;
        cfg.remove_stopwords = false;
        cfg.remove_spaced_runs = false;
        cfg.collapse_repeats = false;
        cfg.strip_punctuation = false;
        return cfg;
    }

    void validate() const {
        if (min_line_words < 1) throw ConfigError("schema", "min_line_words must be >= 1");
    }

    json to_json() const {
        json j;
        j["min_line_words"] = min_line_words;
        j["remove_stopwords"] = remove_stopwords;
        j["remove_urls_phones"] = remove_urls_phones;
        j["remove_spaced_runs"] = remove_spaced_runs;
        j["collapse_repeats"] = collapse_repeats;
        j["strip_punctuation"] = strip_punctuation;
        j["url_pattern"] = url_pattern;
        j["phone_pattern"] = phone_pattern;
        j["spaced_letters_pattern"] = spaced_letters_pattern;
        j["stopword_list_version"] = std::string(kStopwordListVersion);
        j["stopwords"] = stopword_list;
        return j;
    }

    static CleaningConfig from_json(const json& j) {
        CleaningConfig cfg;
        cfg.min_line_words = j.value("min_line_words", std::size_t(3));
        cfg.remove_stopwords = j.value("remove_stopwords", true);
        cfg.remove_urls_phones = j.value("remove_urls_phones", true);
        cfg.remove_spaced_runs = j.value("remove_spaced_runs", true);
        cfg.collapse_repeats = j.value("collapse_repeats", true);
        cfg.strip_punctuation = j.value("strip_punctuation", true);
        cfg.url_pattern = j.value("url_pattern", cfg.url_pattern);
        cfg.phone_pattern = j.value("phone_pattern", cfg.phone_pattern);
        cfg.spaced_letters_pattern = j.value("spaced_letters_pattern", cfg.spaced_letters_pattern);
        if (j.contains("stopwords")) {
            cfg.stopword_list.clear();
            for (const auto& w : j.at("stopwords")) {
                const std::string canonical = utf8::canonical(w.get<std::string>());
                if (!canonical.empty()) cfg.stopword_list.insert(canonical);
            }
        }
        cfg.validate();
        return cfg;
    }
};

namespace cleanrule {

namespace detail {

inline bool is_phone_separator(char c) { return c == ' ' || c == '.' || c == '-'; }
inline bool is_digit(char c) { return c >= '0' && c <= '9'; }

inline bool is_digit_pair(std::string_view s, std::size_t i) {
    return i + 1 < s.size() && is_digit(s[i]) && is_digit(s[i + 1]);
}

// French phone shapes: five 2-digit groups with one separator from
// {space, '.', '-'} between groups, or the compact 10-digit 0-leading form,
// both with an optional +33 prefix. Matches are delimited by non-digits.
inline std::size_t match_phone_at(std::string_view s, std::size_t i) {
    std::size_t p = i;
    if (p + 2 < s.size() && s[p] == '+' && s[p + 1] == '3' && s[p + 2] == '3') {
        p += 3;
        if (p < s.size() && is_phone_separator(s[p])) ++p;
    }
    const std::size_t digits_begin = p;
    if (is_digit_pair(s, p)) {
        std::size_t q = p + 2;
        bool paired = true;
        for (int group = 1; group < 5; ++group) {
            if (q < s.size() && is_phone_separator(s[q]) && is_digit_pair(s, q + 1)) {
                q += 3;
            } else {
                paired = false;
                break;
            }
        }
        if (paired && (q >= s.size() || !is_digit(s[q]))) return q - i;
    }
    // compact national form
    if (digits_begin < s.size() && s[digits_begin] == '0') {
        std::size_t q = digits_begin;
        while (q < s.size() && is_digit(s[q])) ++q;
        if (q - digits_begin == 10) return q - i;
    }
    return 0;
}

inline bool starts_with_ci(std::string_view word, std::string_view prefix) {
    if (word.size() < prefix.size()) return false;
    for (std::size_t i = 0; i < prefix.size(); ++i) {
        char c = word[i];
        if (c >= 'A' && c <= 'Z') c = char(c + 0x20);
        if (c != prefix[i]) return false;
    }
    return true;
}

inline bool is_url_token(std::string_view word) {
    return starts_with_ci(word, "http://") || starts_with_ci(word, "https://") ||
           starts_with_ci(word, "ftp://") || starts_with_ci(word, "www.");
}

}  // namespace detail

inline std::string strip_urls_phones(std::string_view input, RemovedStats* stats = nullptr) {
    std::string pass1;
    pass1.reserve(input.size());
    // phones first: they span several whitespace-delimited tokens
    std::size_t i = 0;
    while (i < input.size()) {
        const bool at_boundary = i == 0 || !detail::is_digit(input[i - 1]);
        if (at_boundary && (detail::is_digit(input[i]) || input[i] == '+')) {
            if (const std::size_t len = detail::match_phone_at(input, i)) {
                if (stats) ++stats->phones;
                pass1.push_back(' ');
                i += len;
                continue;
            }
        }
        pass1.push_back(input[i++]);
    }
    std::string pass2;
    pass2.reserve(pass1.size());
    i = 0;
    while (i < pass1.size()) {
        if (const std::size_t sl = text::space_len_at(pass1, i)) {
            pass2.append(pass1, i, sl);
            i += sl;
            continue;
        }
        std::size_t end = i;
        while (end < pass1.size() && text::space_len_at(pass1, end) == 0) ++end;
        const std::string_view word = std::string_view(pass1).substr(i, end - i);
        if (detail::is_url_token(word)) {
            if (stats) ++stats->urls;
            pass2.push_back(' ');
        } else {
            pass2.append(word);
        }
        i = end;
    }
    return text::normalize_whitespace(pass2);
}

// Removes maximal runs of >= 4 whitespace-separated single uppercase letters,
// the vertically printed headers OCR leaves behind. Lowercase singles are
// legitimate French words ("a", "y") and break a run.
inline std::string remove_spaced_letter_runs(std::string_view input,
                                             RemovedStats* stats = nullptr,
                                             std::size_t min_run = 4) {
    struct Word {
        std::size_t begin, end;
        bool single_upper;
    };
    std::vector<Word> tokens;
    std::size_t i = 0;
    while (i < input.size()) {
        if (const std::size_t sl = text::space_len_at(input, i)) {
            i += sl;
            continue;
        }
        std::size_t end = i;
        while (end < input.size() && text::space_len_at(input, end) == 0) ++end;
        const std::u32string cps = utf8::decode(input.substr(i, end - i));
        tokens.push_back({i, end, cps.size() == 1 && utf8::is_upper_letter(cps[0])});
        i = end;
    }
    std::vector<bool> drop(tokens.size(), false);
    std::size_t run_begin = 0;
    while (run_begin < tokens.size()) {
        if (!tokens[run_begin].single_upper) {
            ++run_begin;
            continue;
        }
        std::size_t run_end = run_begin;
        while (run_end < tokens.size() && tokens[run_end].single_upper) ++run_end;
        if (run_end - run_begin >= min_run) {
            for (std::size_t k = run_begin; k < run_end; ++k) drop[k] = true;
            if (stats) ++stats->spaced_runs;
        }
        run_begin = run_end;
    }
    std::string out;
    out.reserve(input.size());
    std::size_t cursor = 0;
    for (std::size_t t = 0; t < tokens.size(); ++t) {
        out.append(input, cursor, tokens[t].begin - cursor);
        if (!drop[t]) out.append(input, tokens[t].begin, tokens[t].end - tokens[t].begin);
        cursor = tokens[t].end;
    }
    out.append(input, cursor, input.size() - cursor);
    return text::normalize_whitespace(out);
}

// Collapses same-character runs of '.', '?', '!' and normalizes whitespace
// (runs crossing a line break become a single newline).
inline std::string collapse_repeats(std::string_view input) {
    std::string out;
    out.reserve(input.size());
    std::size_t i = 0;
    while (i < input.size()) {
        const char c = input[i];
        if (c == '.' || c == '?' || c == '!') {
            out.push_back(c);
            while (i < input.size() && input[i] == c) ++i;
        } else {
            out.push_back(c);
            ++i;
        }
    }
    return text::normalize_whitespace(out);
}

namespace detail {

inline bool is_word_char(char32_t c) {
    return utf8::is_letter(c) || (c >= '0' && c <= '9');
}

// Punctuation closed set: ASCII punctuation plus the French/typographic marks
// the corpora contain. Hyphens between word characters survive; apostrophes
// always act as token boundaries so clitics split off ("l'apparition").
inline bool is_punct(char32_t c) {
    switch (c) {
        case '!': case '"': case '#': case '$': case '%': case '&': case '(': case ')':
        case '*': case '+': case ',': case '.': case '/': case ':': case ';': case '<':
        case '=': case '>': case '?': case '@': case '[': case '\\': case ']': case '^':
        case '_': case '`': case '{': case '|': case '}': case '~':
            return true;
        case 0xA1: case 0xAB: case 0xB7: case 0xBB: case 0xBF:            // ¡ « · » ¿
        case 0x2012: case 0x2013: case 0x2014: case 0x2015:               // dashes
        case 0x2018: case 0x201A: case 0x201C: case 0x201D: case 0x201E:  // quotes
        case 0x2022: case 0x2026: case 0x2039: case 0x203A:               // • … ‹ ›
            return true;
        default:
            return false;
    }
}

inline bool is_apostrophe(char32_t c) { return c == '\'' || c == 0x2019; }
inline bool is_hyphen(char32_t c) { return c == '-' || c == 0x2010 || c == 0x2011; }

}  // namespace detail

inline std::string strip_punctuation(std::string_view input) {
    const std::u32string cps = utf8::decode(input);
    std::u32string kept;
    kept.reserve(cps.size());
    for (std::size_t i = 0; i < cps.size(); ++i) {
        const char32_t c = cps[i];
        if (detail::is_hyphen(c)) {
            const bool intra_word = i > 0 && i + 1 < cps.size() && detail::is_word_char(cps[i - 1]) &&
                                    detail::is_word_char(cps[i + 1]);
            kept.push_back(intra_word ? c : U' ');
        } else if (detail::is_apostrophe(c) || detail::is_punct(c)) {
            kept.push_back(U' ');
        } else {
            kept.push_back(c);
        }
    }
    return text::normalize_whitespace(utf8::encode(kept));
}

inline std::string remove_stopwords(std::string_view input,
                                    const std::set<std::string>& stopwords,
                                    RemovedStats* stats = nullptr) {
    if (stopwords.empty()) return std::string(input);
    std::string out;
    out.reserve(input.size());
    std::size_t i = 0;
    while (i < input.size()) {
        if (const std::size_t sl = text::space_len_at(input, i)) {
            out.append(input, i, sl);
            i += sl;
            continue;
        }
        std::size_t end = i;
        while (end < input.size() && text::space_len_at(input, end) == 0) ++end;
        const std::string_view word = input.substr(i, end - i);
        if (stopwords.contains(utf8::canonical(word))) {
            if (stats) ++stats->stopwords;
        } else {
            out.append(word);
        }
        i = end;
    }
    return text::normalize_whitespace(out);
}

inline std::string drop_short_lines(std::string_view input, std::size_t min_line_words,
                                    RemovedStats* stats = nullptr) {
    std::vector<std::string_view> kept;
    for (const auto& line : text::split_lines(input)) {
        if (text::count_words(line) >= min_line_words) {
            kept.push_back(line);
        } else if (stats) {
            ++stats->short_lines;
        }
    }
    return text::join(kept, "\n");
}

}  // namespace cleanrule

// Ordered rule pipeline, iterated to a fixed point so that a deletion made by
// a late rule cannot expose a match for an early rule in the final text.
inline std::string clean_text(std::string_view input, const CleaningConfig& cfg,
                              RemovedStats* stats = nullptr) {
    cfg.validate();
    std::string current = text::normalize_whitespace(input);
    for (int iteration = 0; iteration < 16; ++iteration) {
        std::string next = current;
        if (cfg.remove_urls_phones) next = cleanrule::strip_urls_phones(next, stats);
        if (cfg.remove_spaced_runs) next = cleanrule::remove_spaced_letter_runs(next, stats);
        if (cfg.collapse_repeats) next = cleanrule::collapse_repeats(next);
        if (cfg.strip_punctuation) next = cleanrule::strip_punctuation(next);
        if (cfg.remove_stopwords) next = cleanrule::remove_stopwords(next, cfg.stopword_list, stats);
        next = cleanrule::drop_short_lines(next, cfg.min_line_words, stats);
        next = text::normalize_whitespace(next);
        if (next == current) break;
        current = std::move(next);
    }
    return current;
}

inline CleanedDocument clean_document(const RawDocument& doc, const CleaningConfig& cfg) {
    CleanedDocument cleaned;
    cleaned.id = doc.id;
    cleaned.source_kind = doc.source_kind;
    cleaned.tags = doc.tags;
    cleaned.text = clean_text(doc.text, cfg, &cleaned.removed_stats);
    cleaned.word_count = text::count_words(cleaned.text);
    return cleaned;
}

}  // namespace phyto
