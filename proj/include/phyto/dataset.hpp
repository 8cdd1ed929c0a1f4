#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "phyto/clean.hpp"
#include "phyto/document.hpp"
#include "phyto/errors.hpp"
#include "phyto/hash.hpp"
#include "phyto/io.hpp"
#include "phyto/rng.hpp"
#include "phyto/text.hpp"

namespace phyto {

struct LabelSet {
    bool bioagressor = false;
    bool disease = false;

    auto operator<=>(const LabelSet&) const = default;
};

struct Chunk {
    std::string chunk_id;
    std::string doc_id;
    std::string text;
    std::size_t word_count = 0;
    LabelSet labels;
    // Remainder merges may push word_count past the maximum; flagged, never
    // serialized (derivable from word_count).
    bool remainder_merged = false;

    json to_json() const {
        return json{{"chunk_id", chunk_id},   {"doc_id", doc_id},
                    {"text", text},           {"word_count", word_count},
                    {"bioagressor", labels.bioagressor}, {"disease", labels.disease}};
    }

    static Chunk from_json(const json& j, std::size_t line_no = 0) {
        Chunk c;
        if (!j.contains("text") || !j.contains("bioagressor") || !j.contains("disease") ||
            !j.at("bioagressor").is_boolean() || !j.at("disease").is_boolean()) {
            throw BuildError("schema", "dataset record " + std::to_string(line_no) +
                                           ": expected text plus boolean bioagressor/disease");
        }
        c.chunk_id = j.value("chunk_id", "");
        c.doc_id = j.value("doc_id", "");
        c.text = j.at("text").get<std::string>();
        c.word_count = j.contains("word_count") ? j.at("word_count").get<std::size_t>()
                                                : text::count_words(c.text);
        c.labels.bioagressor = j.at("bioagressor").get<bool>();
        c.labels.disease = j.at("disease").get<bool>();
        return c;
    }
};

struct RiskAnnotation {
    std::string sentence;
    LabelSet labels;
    std::string annotator_note;  // optional, empty when absent
};

struct DatasetSplit {
    std::vector<Chunk> train;
    std::vector<Chunk> test;
    std::uint64_t seed = 0;
    double ratio = 0.8;
};

// Chunk length is drawn uniformly in [min_words, max_words] from a stream
// derived from (seed, doc id), so a corpus-level build is deterministic no
// matter how documents are scheduled.
inline std::uint64_t chunk_stream_seed(std::uint64_t seed, const std::string& doc_id) {
    return SplitMix64(seed ^ fnv1a64(doc_id)).next();
}

inline std::vector<Chunk> chunk_document(const CleanedDocument& doc, std::size_t min_words = 5,
                                         std::size_t max_words = 256, std::uint64_t seed = 0) {
    if (min_words > max_words) throw BuildError("schema", "min_words must be <= max_words");
    const auto words = text::words(doc.text);
    std::vector<Chunk> chunks;
    if (words.size() < min_words) return chunks;  // too short to chunk

    SplitMix64 rng(chunk_stream_seed(seed, doc.id));
    std::size_t pos = 0;
    std::size_t index = 0;
    while (pos < words.size()) {
        std::size_t take = std::size_t(rng.uniform(min_words, max_words));
        bool merged = false;
        if (take >= words.size() - pos) {
            take = words.size() - pos;
        } else if (words.size() - pos - take < min_words) {
            take = words.size() - pos;  // absorb the short remainder
            merged = take > max_words;
        }
        Chunk chunk;
        chunk.doc_id = doc.id;
        chunk.chunk_id = doc.id + "#" + std::to_string(index++);
        std::vector<std::string_view> slice(words.begin() + std::ptrdiff_t(pos),
                                            words.begin() + std::ptrdiff_t(pos + take));
        chunk.text = text::join(slice, " ");
        chunk.word_count = take;
        chunk.remainder_merged = merged;
        chunks.push_back(std::move(chunk));
        pos += take;
    }
    return chunks;
}

// Document-level tags decide the chunk labels: any bioagressor tag marks the
// chunk bioagressor, same for disease; crop tags carry no hazard label.
inline LabelSet labels_from_tags(const TagSet& tags) {
    LabelSet labels;
    for (const auto& tag : tags) {
        if (tag.category == TagCategory::bioagressor) labels.bioagressor = true;
        if (tag.category == TagCategory::disease) labels.disease = true;
    }
    return labels;
}

inline Chunk propagate_labels(Chunk chunk, const TagSet& doc_tags) {
    chunk.labels = labels_from_tags(doc_tags);
    return chunk;
}

// Raw-text corpus for language-model adaptation: one cleaned paragraph per
// line, stopwords retained.
inline std::string build_lm_corpus(const std::vector<RawDocument>& docs,
                                   const CleaningConfig& cfg = CleaningConfig::lm_corpus()) {
    std::string out;
    std::size_t lines = 0;
    for (const auto& doc : docs) {
        if (doc.source_kind != SourceKind::bsv_xml) continue;
        for (const auto& paragraph : doc.paragraphs) {
            std::string cleaned = clean_text(paragraph, cfg);
            // a paragraph is one corpus line; inner breaks become spaces
            for (char& c : cleaned) {
                if (c == '\n') c = ' ';
            }
            if (cleaned.empty()) continue;
            out += cleaned;
            out += '\n';
            ++lines;
        }
    }
    if (lines == 0) throw BuildError("empty-corpus", "no usable paragraphs in input");
    return out;
}

struct TopicDataset {
    std::vector<Chunk> chunks;
    std::vector<std::string> doc_ids;  // sampled documents, in sampling order
    std::uint64_t seed = 0;
    std::size_t n_docs = 0;
    std::size_t target_chunks = 0;  // informational; actual count is emergent

    json manifest() const {
        json j;
        j["seed"] = seed;
        j["n_docs"] = n_docs;
        j["target_chunks"] = target_chunks;
        j["chunk_count"] = chunks.size();
        j["doc_ids"] = doc_ids;
        j["rule_versions"] = {{"chunker", "uniform-random-partition-v1"},
                              {"labels", "document-tag-propagation-v1"}};
        return j;
    }
};

// Samples n_docs documents that have a tag-catalog entry (an empty entry is
// an explicit negative), chunks them, and propagates document labels.
inline TopicDataset build_topic_dataset(const std::vector<CleanedDocument>& docs,
                                        const TagCatalog& catalog, std::size_t n_docs = 200,
                                        std::size_t target_chunks = 4000,
                                        std::uint64_t seed = 0,
                                        std::size_t min_words = 5, std::size_t max_words = 256) {
    std::vector<const CleanedDocument*> eligible;
    for (const auto& doc : docs) {
        if (catalog.contains(doc.id) && !doc.is_empty()) eligible.push_back(&doc);
    }
    if (eligible.size() < n_docs) {
        throw BuildError("insufficient-docs",
                         "need " + std::to_string(n_docs) + " tagged documents, have " +
                             std::to_string(eligible.size()));
    }
    // order by id, then shuffle: the sample depends only on (id set, seed)
    std::sort(eligible.begin(), eligible.end(),
              [](const CleanedDocument* a, const CleanedDocument* b) { return a->id < b->id; });
    SplitMix64 rng(seed);
    rng.shuffle(eligible);
    eligible.resize(n_docs);

    TopicDataset dataset;
    dataset.seed = seed;
    dataset.n_docs = n_docs;
    dataset.target_chunks = target_chunks;
    for (const auto* doc : eligible) {
        dataset.doc_ids.push_back(doc->id);
        const LabelSet labels = labels_from_tags(catalog.at(doc->id));
        for (Chunk& chunk : chunk_document(*doc, min_words, max_words, seed)) {
            chunk.labels = labels;
            dataset.chunks.push_back(std::move(chunk));
        }
    }
    return dataset;
}

inline std::vector<RiskAnnotation> load_risk_annotations(const fs::path& path) {
    std::vector<RiskAnnotation> annotations;
    io::for_each_jsonl(path, [&](const json& record, std::size_t line_no) {
        if (!record.contains("sentence") || !record.contains("bioagressor") ||
            !record.contains("disease") || !record.at("bioagressor").is_boolean() ||
            !record.at("disease").is_boolean()) {
            throw BuildError("schema", path.string() + ":" + std::to_string(line_no) +
                                           ": expected sentence plus boolean bioagressor/disease");
        }
        RiskAnnotation a;
        a.sentence = record.at("sentence").get<std::string>();
        if (a.sentence.empty())
            throw BuildError("schema",
                             path.string() + ":" + std::to_string(line_no) + ": empty sentence");
        a.labels.bioagressor = record.at("bioagressor").get<bool>();
        a.labels.disease = record.at("disease").get<bool>();
        a.annotator_note = record.value("annotator_note", "");
        annotations.push_back(std::move(a));
    });
    return annotations;
}

// Each manually labeled sentence stands alone, so it becomes its own
// document for split purposes.
inline std::vector<Chunk> risk_dataset_from_annotations(
    const std::vector<RiskAnnotation>& annotations) {
    std::vector<Chunk> chunks;
    chunks.reserve(annotations.size());
    for (std::size_t i = 0; i < annotations.size(); ++i) {
        Chunk c;
        c.doc_id = "risk-" + std::to_string(i);
        c.chunk_id = c.doc_id + "#0";
        c.text = annotations[i].sentence;
        c.word_count = text::count_words(c.text);
        c.labels = annotations[i].labels;
        chunks.push_back(std::move(c));
    }
    return chunks;
}

// Random document-level split: all chunks of a document land on one side.
inline DatasetSplit split_dataset(const std::vector<Chunk>& examples, double ratio = 0.8,
                                  std::uint64_t seed = 0) {
    if (!(ratio > 0.0 && ratio < 1.0)) throw BuildError("schema", "ratio must be in (0,1)");
    if (examples.empty()) throw BuildError("schema", "cannot split an empty dataset");

    std::set<std::string> seen;
    std::vector<std::string> doc_ids;
    for (const auto& chunk : examples) {
        if (seen.insert(chunk.doc_id).second) doc_ids.push_back(chunk.doc_id);
    }
    if (doc_ids.size() < 2) {
        throw BuildError("degenerate-split", "all examples come from a single document");
    }
    std::sort(doc_ids.begin(), doc_ids.end());
    SplitMix64 rng(seed);
    rng.shuffle(doc_ids);

    std::size_t n_train = std::size_t(double(doc_ids.size()) * ratio + 0.5);
    n_train = std::clamp<std::size_t>(n_train, 1, doc_ids.size() - 1);
    std::set<std::string> train_docs(doc_ids.begin(), doc_ids.begin() + std::ptrdiff_t(n_train));

    DatasetSplit split;
    split.seed = seed;
    split.ratio = ratio;
    for (const auto& chunk : examples) {
        (train_docs.contains(chunk.doc_id) ? split.train : split.test).push_back(chunk);
    }
    return split;
}

inline void write_dataset(const fs::path& path, const std::vector<Chunk>& chunks) {
    std::vector<json> records;
    records.reserve(chunks.size());
    for (const auto& chunk : chunks) records.push_back(chunk.to_json());
    io::write_jsonl_atomic(path, records);
}

inline std::vector<Chunk> read_dataset(const fs::path& path) {
    std::vector<Chunk> chunks;
    io::for_each_jsonl(path, [&](const json& record, std::size_t line_no) {
        chunks.push_back(Chunk::from_json(record, line_no));
    });
    return chunks;
}

}  // namespace phyto
