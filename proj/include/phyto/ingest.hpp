#pragma once

#include <filesystem>
#include <set>
#include <string>
#include <vector>

#include "phyto/document.hpp"
#include "phyto/errors.hpp"
#include "phyto/io.hpp"
#include "phyto/text.hpp"
#include "phyto/utf8.hpp"
#include "phyto/xml.hpp"

namespace phyto {

// Element names treated as paragraphs in bulletin XML. The 2009-2015 files
// are heterogeneous, so the set is configuration, with a leaf-text fallback
// when nothing matches.
struct ParagraphConfig {
    std::set<std::string> paragraph_elements = {"p", "paragraphe", "texte"};
    std::size_t fallback_min_chars = 20;
};

namespace detail {

// Control bytes other than tab/newline/feed mark a binary payload that no
// text encoding should accept.
inline bool looks_binary(std::string_view bytes) {
    for (unsigned char b : bytes) {
        if (b < 0x20 && b != '\t' && b != '\n' && b != '\v' && b != '\f' && b != '\r')
            return true;
    }
    return false;
}

inline std::string decode_text_file(const fs::path& path) {
    const std::string bytes = io::read_file(path);
    if (looks_binary(bytes))
        throw IngestError("encoding", "binary content in " + path.string());
    if (utf8::is_valid(bytes)) return bytes;
    return utf8::latin1_to_utf8(bytes);  // French OCR dumps mix both encodings
}

inline std::string normalize_line_endings(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] == '\r') {
            if (i + 1 < s.size() && s[i + 1] == '\n') continue;
            out.push_back('\n');
        } else {
            out.push_back(s[i]);
        }
    }
    return out;
}

inline std::size_t codepoint_count(std::string_view s) {
    std::size_t n = 0;
    for (unsigned char b : s) {
        if ((b & 0xC0) != 0x80) ++n;
    }
    return n;
}

inline void extract_paragraphs(const xml::Element& element, const ParagraphConfig& cfg,
                               std::vector<std::string>& out) {
    if (cfg.paragraph_elements.contains(xml::local_name_lower(element.name))) {
        std::string content = xml::text_content(element);
        if (!content.empty()) out.push_back(std::move(content));
        return;  // a matched paragraph is not searched for nested paragraphs
    }
    for (const auto& child : element.children) {
        if (std::holds_alternative<xml::Element>(child)) {
            extract_paragraphs(std::get<xml::Element>(child), cfg, out);
        }
    }
}

inline void extract_fallback_leaves(const xml::Element& element, const ParagraphConfig& cfg,
                                    std::vector<std::string>& out) {
    if (!xml::has_child_elements(element)) {
        std::string content = xml::text_content(element);
        if (codepoint_count(content) >= cfg.fallback_min_chars) out.push_back(std::move(content));
        return;
    }
    for (const auto& child : element.children) {
        if (std::holds_alternative<xml::Element>(child)) {
            extract_fallback_leaves(std::get<xml::Element>(child), cfg, out);
        }
    }
}

}  // namespace detail

inline RawDocument load_plaintext_bulletin(const fs::path& path, const std::string& id) {
    RawDocument doc;
    doc.id = id;
    doc.source_kind = SourceKind::bsv_ocr;
    doc.text = detail::normalize_line_endings(detail::decode_text_file(path));
    return doc;
}

inline RawDocument load_xml_bulletin(const fs::path& path, const std::string& id,
                                     const ParagraphConfig& cfg = {}) {
    const std::string source = detail::decode_text_file(path);
    const xml::Element root = xml::parse(source);

    RawDocument doc;
    doc.id = id;
    doc.source_kind = SourceKind::bsv_xml;
    detail::extract_paragraphs(root, cfg, doc.paragraphs);
    if (doc.paragraphs.empty()) {
        detail::extract_fallback_leaves(root, cfg, doc.paragraphs);
    }
    doc.text = text::join(doc.paragraphs, "\n");
    return doc;
}

namespace detail {

// Minimal CSV row splitter with double-quote escaping.
inline std::vector<std::string> split_csv_row(std::string_view line) {
    std::vector<std::string> fields;
    std::string field;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    field.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                field.push_back(c);
            }
        } else if (c == '"' && field.empty()) {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(std::move(field));
            field.clear();
        } else {
            field.push_back(c);
        }
    }
    fields.push_back(std::move(field));
    return fields;
}

inline bool has_extension(const fs::path& path, std::string_view ext) {
    return utf8::canonical(path.extension().string()) == ext;
}

}  // namespace detail

// CSV with header doc_id,tag,category, or JSONL records with the same fields.
// Duplicate (doc, tag) pairs collapse silently; unknown categories are errors.
inline TagCatalog load_tag_catalog(const fs::path& path) {
    TagCatalog catalog;
    const auto add = [&](const std::string& doc_id, const std::string& tag,
                         const std::string& category, std::size_t line_no) {
        const std::string id = text::trim(doc_id);
        if (id.empty())
            throw IngestError("schema",
                              path.string() + ":" + std::to_string(line_no) + ": empty doc_id");
        TagCategory cat;
        try {
            cat = tag_category_from_string(utf8::canonical(category));
        } catch (const IngestError&) {
            throw IngestError("schema", path.string() + ":" + std::to_string(line_no) +
                                            ": unknown tag category '" + category + "'");
        }
        catalog[id].insert(TagRef::make(tag, cat));
    };

    if (detail::has_extension(path, ".jsonl") || detail::has_extension(path, ".ndjson")) {
        io::for_each_jsonl(path, [&](const json& record, std::size_t line_no) {
            if (!record.contains("doc_id") || !record.contains("tag") ||
                !record.contains("category")) {
                throw IngestError("schema", path.string() + ":" + std::to_string(line_no) +
                                                ": expected doc_id/tag/category");
            }
            add(record.at("doc_id").get<std::string>(), record.at("tag").get<std::string>(),
                record.at("category").get<std::string>(), line_no);
        });
        return catalog;
    }

    const std::string content = detail::decode_text_file(path);
    const auto lines = text::split_lines(content);
    if (lines.empty()) return catalog;
    std::size_t line_no = 0;
    bool saw_header = false;
    for (const auto& line : lines) {
        ++line_no;
        if (text::trim(line).empty()) continue;
        auto fields = detail::split_csv_row(line);
        if (!saw_header) {
            saw_header = true;
            if (fields.size() >= 3 && text::trim(fields[0]) == "doc_id") continue;
            throw IngestError("schema", path.string() + ": expected header doc_id,tag,category");
        }
        if (fields.size() != 3)
            throw IngestError("schema", path.string() + ":" + std::to_string(line_no) +
                                            ": expected 3 fields, got " +
                                            std::to_string(fields.size()));
        add(fields[0], fields[1], fields[2], line_no);
    }
    return catalog;
}

// One concept per line, or JSONL records with a "label" field.
inline Thesaurus load_thesaurus(const fs::path& path) {
    Thesaurus thesaurus;
    if (detail::has_extension(path, ".jsonl") || detail::has_extension(path, ".ndjson")) {
        io::for_each_jsonl(path, [&](const json& record, std::size_t line_no) {
            if (!record.contains("label"))
                throw IngestError("schema", path.string() + ":" + std::to_string(line_no) +
                                                ": expected field 'label'");
            const std::string label = utf8::canonical(record.at("label").get<std::string>());
            if (!label.empty()) thesaurus.concepts.insert(label);
        });
    } else {
        const std::string content = detail::decode_text_file(path);
        for (const auto& line : text::split_lines(content)) {
            const std::string label = utf8::canonical(line);
            if (!label.empty()) thesaurus.concepts.insert(label);
        }
    }
    if (thesaurus.concepts.empty())
        throw IngestError("empty-thesaurus", "no concepts in " + path.string());
    return thesaurus;
}

inline void write_corpus(const fs::path& path, const std::vector<RawDocument>& docs) {
    std::vector<json> records;
    records.reserve(docs.size());
    for (const auto& doc : docs) records.push_back(doc.to_json());
    io::write_jsonl_atomic(path, records);
}

inline std::vector<RawDocument> read_corpus(const fs::path& path) {
    std::vector<RawDocument> docs;
    io::for_each_jsonl(path, [&](const json& record, std::size_t) {
        docs.push_back(RawDocument::from_json(record));
    });
    return docs;
}

inline void write_cleaned_corpus(const fs::path& path, const std::vector<CleanedDocument>& docs) {
    std::vector<json> records;
    records.reserve(docs.size());
    for (const auto& doc : docs) records.push_back(doc.to_json());
    io::write_jsonl_atomic(path, records);
}

inline std::vector<CleanedDocument> read_cleaned_corpus(const fs::path& path) {
    std::vector<CleanedDocument> docs;
    io::for_each_jsonl(path, [&](const json& record, std::size_t) {
        docs.push_back(CleanedDocument::from_json(record));
    });
    return docs;
}

inline std::vector<TweetRecord> read_tweets(const fs::path& path) {
    std::vector<TweetRecord> tweets;
    io::for_each_jsonl(path, [&](const json& record, std::size_t) {
        tweets.push_back(TweetRecord::from_json(record));
    });
    return tweets;
}

}  // namespace phyto
