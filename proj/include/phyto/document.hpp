#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "phyto/errors.hpp"
#include "phyto/text.hpp"
#include "phyto/utf8.hpp"

namespace phyto {

using json = nlohmann::ordered_json;

enum class SourceKind { bsv_xml, bsv_ocr, tweet };

inline std::string to_string(SourceKind kind) {
    switch (kind) {
        case SourceKind::bsv_xml: return "bsv-xml";
        case SourceKind::bsv_ocr: return "bsv-ocr";
        case SourceKind::tweet: return "tweet";
    }
    return "bsv-ocr";
}

inline SourceKind source_kind_from_string(const std::string& s) {
    if (s == "bsv-xml") return SourceKind::bsv_xml;
    if (s == "bsv-ocr") return SourceKind::bsv_ocr;
    if (s == "tweet") return SourceKind::tweet;
    throw IngestError("schema", "unknown source_kind: " + s);
}

enum class TagCategory { bioagressor, disease, crop };

inline std::string to_string(TagCategory cat) {
    switch (cat) {
        case TagCategory::bioagressor: return "bioagressor";
        case TagCategory::disease: return "disease";
        case TagCategory::crop: return "crop";
    }
    return "crop";
}

inline TagCategory tag_category_from_string(const std::string& s) {
    if (s == "bioagressor") return TagCategory::bioagressor;
    if (s == "disease") return TagCategory::disease;
    if (s == "crop") return TagCategory::crop;
    throw IngestError("schema", "unknown tag category: " + s);
}

// Name is stored canonically: lowercase, composed accents, trimmed.
struct TagRef {
    std::string name;
    TagCategory category = TagCategory::crop;

    static TagRef make(std::string_view raw_name, TagCategory category) {
        TagRef tag;
        tag.name = utf8::canonical(raw_name);
        if (tag.name.empty()) throw IngestError("schema", "empty tag name");
        tag.category = category;
        return tag;
    }

    auto operator<=>(const TagRef&) const = default;
};

using TagSet = std::set<TagRef>;
using TagCatalog = std::map<std::string, TagSet>;  // doc id → tags

struct Thesaurus {
    std::set<std::string> concepts;  // canonical form
};

struct RawDocument {
    std::string id;
    SourceKind source_kind = SourceKind::bsv_ocr;
    std::string text;
    std::vector<std::string> paragraphs;  // populated for bsv-xml
    TagSet tags;

    // A bulletin that yielded no usable text; kept in the corpus, skipped by
    // the dataset builders.
    bool is_empty() const { return text.empty() && paragraphs.empty(); }

    json to_json() const {
        json j;
        j["id"] = id;
        j["source_kind"] = to_string(source_kind);
        j["text"] = text;
        j["paragraphs"] = paragraphs;
        json tag_list = json::array();
        for (const auto& tag : tags) {
            tag_list.push_back({{"name", tag.name}, {"category", to_string(tag.category)}});
        }
        j["tags"] = tag_list;
        return j;
    }

    static RawDocument from_json(const json& j) {
        RawDocument doc;
        if (!j.contains("id") || !j.contains("source_kind") || !j.contains("text"))
            throw IngestError("schema", "corpus record missing id/source_kind/text");
        doc.id = j.at("id").get<std::string>();
        doc.source_kind = source_kind_from_string(j.at("source_kind").get<std::string>());
        doc.text = j.at("text").get<std::string>();
        if (j.contains("paragraphs")) {
            doc.paragraphs = j.at("paragraphs").get<std::vector<std::string>>();
        }
        if (j.contains("tags")) {
            for (const auto& t : j.at("tags")) {
                doc.tags.insert(TagRef::make(t.at("name").get<std::string>(),
                                             tag_category_from_string(
                                                 t.at("category").get<std::string>())));
            }
        }
        return doc;
    }
};

struct RemovedStats {
    std::size_t urls = 0;
    std::size_t phones = 0;
    std::size_t short_lines = 0;
    std::size_t spaced_runs = 0;
    std::size_t stopwords = 0;

    RemovedStats& operator+=(const RemovedStats& o) {
        urls += o.urls;
        phones += o.phones;
        short_lines += o.short_lines;
        spaced_runs += o.spaced_runs;
        stopwords += o.stopwords;
        return *this;
    }

    json to_json() const {
        return json{{"urls", urls},
                    {"phones", phones},
                    {"short_lines", short_lines},
                    {"spaced_runs", spaced_runs},
                    {"stopwords", stopwords}};
    }

    static RemovedStats from_json(const json& j) {
        RemovedStats s;
        s.urls = j.value("urls", 0u);
        s.phones = j.value("phones", 0u);
        s.short_lines = j.value("short_lines", 0u);
        s.spaced_runs = j.value("spaced_runs", 0u);
        s.stopwords = j.value("stopwords", 0u);
        return s;
    }
};

struct CleanedDocument {
    std::string id;
    SourceKind source_kind = SourceKind::bsv_ocr;
    std::string text;
    std::size_t word_count = 0;
    RemovedStats removed_stats;
    TagSet tags;  // carried through for the dataset builder

    bool is_empty() const { return text.empty(); }

    json to_json() const {
        json j;
        j["id"] = id;
        j["source_kind"] = to_string(source_kind);
        j["text"] = text;
        j["word_count"] = word_count;
        j["removed_stats"] = removed_stats.to_json();
        json tag_list = json::array();
        for (const auto& tag : tags) {
            tag_list.push_back({{"name", tag.name}, {"category", to_string(tag.category)}});
        }
        j["tags"] = tag_list;
        return j;
    }

    static CleanedDocument from_json(const json& j) {
        CleanedDocument doc;
        doc.id = j.at("id").get<std::string>();
        doc.source_kind = source_kind_from_string(j.value("source_kind", "bsv-ocr"));
        doc.text = j.at("text").get<std::string>();
        doc.word_count = j.value("word_count", 0u);
        if (j.contains("removed_stats")) {
            doc.removed_stats = RemovedStats::from_json(j.at("removed_stats"));
        }
        if (j.contains("tags")) {
            for (const auto& t : j.at("tags")) {
                doc.tags.insert(TagRef::make(t.at("name").get<std::string>(),
                                             tag_category_from_string(
                                                 t.at("category").get<std::string>())));
            }
        }
        return doc;
    }
};

struct TweetRecord {
    std::string id;
    std::string text;
    std::optional<std::string> created_at;
    std::set<std::string> matched_keywords;

    json to_json() const {
        json j;
        j["id"] = id;
        j["text"] = text;
        if (created_at) j["created_at"] = *created_at;
        j["matched_keywords"] = matched_keywords;
        return j;
    }

    static TweetRecord from_json(const json& j) {
        TweetRecord rec;
        if (!j.contains("id") || !j.contains("text"))
            throw IngestError("schema", "tweet record missing id/text");
        rec.id = j.at("id").is_string() ? j.at("id").get<std::string>() : j.at("id").dump();
        rec.text = j.at("text").get<std::string>();
        if (j.contains("created_at") && j.at("created_at").is_string()) {
            rec.created_at = j.at("created_at").get<std::string>();
        }
        if (j.contains("matched_keywords")) {
            for (const auto& k : j.at("matched_keywords"))
                rec.matched_keywords.insert(k.get<std::string>());
        }
        return rec;
    }
};

}  // namespace phyto
