#pragma once

#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "phyto/clean.hpp"
#include "phyto/document.hpp"
#include "phyto/errors.hpp"
#include "phyto/io.hpp"
#include "phyto/train.hpp"
#include "phyto/utf8.hpp"

namespace phyto {

// Whole-word keyword gazetteer over canonical text, with a light French
// plural fold: a trailing 's' or 'x' is stripped from both sides before
// comparison, so "pyrales" matches "pyrale" while "oubliée" cannot match
// "blé" (word boundaries).
struct KeywordFilter {
    std::set<std::string> keywords;  // canonical form

    static std::string fold_plural(std::string_view canonical_word) {
        std::u32string cps = utf8::decode(canonical_word);
        if (cps.size() >= 2 && (cps.back() == U's' || cps.back() == U'x')) cps.pop_back();
        return utf8::encode(cps);
    }
};

inline KeywordFilter build_keyword_filter(const Thesaurus& thesaurus, const TagCatalog& catalog) {
    KeywordFilter filter;
    for (const auto& label : thesaurus.concepts) filter.keywords.insert(label);
    for (const auto& [doc_id, tags] : catalog) {
        for (const auto& tag : tags) filter.keywords.insert(tag.name);
    }
    if (filter.keywords.empty())
        throw FilterError("empty", "no keywords from thesaurus and tag catalog");
    return filter;
}

namespace detail {

// Word tokens for matching: maximal letter/digit runs of the canonical text,
// so punctuation and apostrophes act as boundaries.
inline std::vector<std::string> match_tokens(std::string_view canonical_text) {
    std::vector<std::string> tokens;
    const std::u32string cps = utf8::decode(canonical_text);
    std::u32string current;
    for (char32_t c : cps) {
        if (utf8::is_letter(c) || (c >= '0' && c <= '9')) {
            current.push_back(c);
        } else if (!current.empty()) {
            tokens.push_back(utf8::encode(current));
            current.clear();
        }
    }
    if (!current.empty()) tokens.push_back(utf8::encode(current));
    return tokens;
}

}  // namespace detail

// Keywords found in a text as whole words (after the plural fold). Multi-word
// keywords match as consecutive token sequences.
inline std::set<std::string> matched_keywords(std::string_view text, const KeywordFilter& filter) {
    const std::vector<std::string> tokens = detail::match_tokens(utf8::canonical(text));
    std::vector<std::string> folded;
    folded.reserve(tokens.size());
    for (const auto& token : tokens) folded.push_back(KeywordFilter::fold_plural(token));

    std::set<std::string> matched;
    for (const auto& keyword : filter.keywords) {
        const std::vector<std::string> key_tokens = detail::match_tokens(keyword);
        if (key_tokens.empty()) continue;
        std::vector<std::string> key_folded;
        key_folded.reserve(key_tokens.size());
        for (const auto& token : key_tokens) key_folded.push_back(KeywordFilter::fold_plural(token));

        for (std::size_t i = 0; i + key_folded.size() <= folded.size(); ++i) {
            bool all = true;
            for (std::size_t k = 0; k < key_folded.size(); ++k) {
                if (folded[i + k] != key_folded[k]) {
                    all = false;
                    break;
                }
            }
            if (all) {
                matched.insert(keyword);
                break;
            }
        }
    }
    return matched;
}

// Retains records containing at least one keyword; matched_keywords is
// populated and input order preserved.
inline std::vector<TweetRecord> filter_tweets(const std::vector<TweetRecord>& records,
                                              const KeywordFilter& filter) {
    std::vector<TweetRecord> retained;
    for (const auto& record : records) {
        std::set<std::string> matched = matched_keywords(record.text, filter);
        if (matched.empty()) continue;
        TweetRecord kept = record;
        kept.matched_keywords = std::move(matched);
        retained.push_back(std::move(kept));
    }
    return retained;
}

// Record acquisition is abstracted so a live client can plug in later; only
// the file-backed reader ships.
class TweetSource {
public:
    virtual ~TweetSource() = default;
    virtual std::vector<TweetRecord> fetch(const std::vector<std::string>& query_terms) = 0;
};

class FileTweetSource final : public TweetSource {
public:
    explicit FileTweetSource(fs::path path) : path_(std::move(path)) {}

    std::vector<TweetRecord> fetch(const std::vector<std::string>& query_terms) override {
        std::vector<TweetRecord> records;
        io::for_each_jsonl(path_, [&](const json& j, std::size_t) {
            records.push_back(TweetRecord::from_json(j));
        });
        if (query_terms.empty()) return records;
        KeywordFilter filter;
        for (const auto& term : query_terms) {
            const std::string canonical = utf8::canonical(term);
            if (!canonical.empty()) filter.keywords.insert(canonical);
        }
        if (filter.keywords.empty()) return records;
        return filter_tweets(records, filter);
    }

private:
    fs::path path_;
};

struct TweetClassification {
    TweetRecord record;
    PredictionResult prediction;
    std::string error;  // non-empty when classification failed for this record

    json to_json(double threshold) const {
        json j = record.to_json();
        if (!error.empty()) {
            j["error"] = error;
            return j;
        }
        j["probabilities"] = prediction.probabilities;
        j["decided"] = prediction.decided_labels();
        j["threshold"] = threshold;
        return j;
    }
};

struct TweetBatchResult {
    std::vector<TweetClassification> results;
    std::size_t errors = 0;
};

// Tweets are cleaned with the tweet profile (URL/phone strip plus whitespace
// collapse) before encoding. Per-record failures are reported and the batch
// continues.
inline TweetBatchResult classify_tweets(const std::vector<TweetRecord>& records,
                                        const ModelArtifact& artifact, double threshold,
                                        const CleaningConfig& cfg = CleaningConfig::tweet()) {
    TweetBatchResult batch;
    batch.results.reserve(records.size());
    for (const auto& record : records) {
        TweetClassification item;
        item.record = record;
        try {
            const std::string cleaned = clean_text(record.text, cfg);
            item.prediction = artifact.predict(cleaned, threshold);
        } catch (const Error& e) {
            item.error = e.what();
            ++batch.errors;
        }
        batch.results.push_back(std::move(item));
    }
    return batch;
}

}  // namespace phyto
