// phyto: French plant-health text pipeline.
//
// Subcommands cover the full flow: ingest bulletins, clean them, build the
// language-model corpus and the weakly labeled datasets, adapt and train the
// classifier, evaluate, and filter/classify tweet dumps. Every run writes a
// manifest with the resolved configuration and input content hashes, and all
// primary outputs are written atomically so reruns are byte-identical.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "phyto/clean.hpp"
#include "phyto/dataset.hpp"
#include "phyto/encoder.hpp"
#include "phyto/filter.hpp"
#include "phyto/hash.hpp"
#include "phyto/ingest.hpp"
#include "phyto/io.hpp"
#include "phyto/metrics.hpp"
#include "phyto/parallel.hpp"
#include "phyto/train.hpp"
#include "phyto/version.hpp"

namespace fs = std::filesystem;
using phyto::json;

namespace {

constexpr int kExitOperation = 1;
constexpr int kExitConfig = 2;
constexpr int kExitMissingInput = 3;

struct MissingInput : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct CliOptions {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> jobs;
    std::optional<double> threshold;
    std::optional<std::string> backend;
    std::optional<std::string> out_dir;
    std::string text;  // predict only
};

struct RunContext {
    json config;           // resolved (file + flag overrides)
    fs::path data_dir;     // PHYTO_DATA_DIR or cwd
    fs::path out;          // output directory for this run
    json inputs;           // path → sha256, accumulated as inputs are read
    std::vector<std::string> outputs;

    std::uint64_t seed() const { return config.value("seed", std::uint64_t(42)); }
    std::size_t jobs() const { return config.value("jobs", std::size_t(1)); }
    double threshold() const { return config.value("threshold", 0.5); }
    std::string backend_spec() const { return config.value("backend", "offline-test"); }

    // Relative input paths resolve against PHYTO_DATA_DIR when set.
    fs::path resolve(const std::string& raw) const {
        fs::path p(raw);
        if (p.is_absolute() || data_dir.empty()) return p;
        if (fs::exists(p)) return p;
        return data_dir / p;
    }

    fs::path require_input(const std::string& raw, const std::string& what) {
        if (raw.empty()) throw phyto::ConfigError("schema", "missing config value: " + what);
        const fs::path path = resolve(raw);
        if (!fs::exists(path))
            throw MissingInput(what + " not found: " + path.string());
        if (fs::is_regular_file(path)) {
            inputs[path.string()] = phyto::sha256_hex(phyto::io::read_file(path));
        }
        return path;
    }

    json section(const std::string& name) const {
        return config.contains(name) ? config.at(name) : json::object();
    }

    phyto::TrainingConfig training_config(phyto::TrainingConfig::Stage stage) const {
        phyto::TrainingConfig cfg = config.contains("training")
                                        ? phyto::TrainingConfig::from_json(config.at("training"))
                                        : phyto::TrainingConfig();
        cfg.stage = stage;
        cfg.seed = seed();
        cfg.threshold = threshold();
        cfg.validate();
        return cfg;
    }

    phyto::CleaningConfig cleaning_config(const std::string& profile) const {
        phyto::CleaningConfig cfg;
        if (profile == "lm") cfg = phyto::CleaningConfig::lm_corpus();
        else if (profile == "tweet") cfg = phyto::CleaningConfig::tweet();
        else if (profile == "classification" || profile.empty())
            cfg = phyto::CleaningConfig::classification();
        else throw phyto::ConfigError("schema", "unknown cleaning profile: " + profile);
        if (config.contains("cleaning")) {
            json merged = cfg.to_json();
            for (const auto& [key, value] : config.at("cleaning").items()) merged[key] = value;
            cfg = phyto::CleaningConfig::from_json(merged);
            if (config.at("cleaning").contains("stopword_file")) {
                cfg.stopword_list = phyto::load_stopword_file(
                    resolve(config.at("cleaning").at("stopword_file").get<std::string>()));
            }
        }
        return cfg;
    }

    void write_manifest(const std::string& command) const {
        json manifest;
        manifest["command"] = command;
        manifest["version"] = phyto::kVersion;
        const auto now = std::chrono::system_clock::now();
        manifest["timestamp_utc"] =
            std::chrono::duration_cast<std::chrono::seconds>(now.time_since_epoch()).count();
        manifest["config"] = config;
        manifest["inputs"] = inputs;
        manifest["outputs"] = outputs;
        phyto::io::write_json_atomic(out / "manifest.json", manifest);
    }
};

std::string utc_stamp() {
    const std::time_t now = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y%m%dT%H%M%S", &tm);
    return buf;
}

RunContext make_context(const CliOptions& opts, const std::string& command) {
    RunContext ctx;
    ctx.config = json::object();
    if (!opts.config_path.empty()) {
        if (!fs::exists(opts.config_path))
            throw MissingInput("config file not found: " + opts.config_path);
        ctx.config = phyto::io::parse_json(phyto::io::read_file(opts.config_path), "config");
        if (!ctx.config.is_object())
            throw phyto::ConfigError("schema", "config root must be a JSON object");
    }
    if (opts.seed) ctx.config["seed"] = *opts.seed;
    if (opts.jobs) ctx.config["jobs"] = *opts.jobs;
    if (opts.threshold) ctx.config["threshold"] = *opts.threshold;
    if (opts.backend) ctx.config["backend"] = *opts.backend;

    if (const char* env = std::getenv("PHYTO_DATA_DIR")) ctx.data_dir = env;

    if (opts.out_dir) {
        ctx.out = *opts.out_dir;
    } else {
        const std::string root = ctx.config.value("output_root", std::string("."));
        const std::string short_hash =
            phyto::sha256_hex(command + ctx.config.dump()).substr(0, 8);
        ctx.out = fs::path(root) / "runs" / (utc_stamp() + "-" + short_hash);
    }
    fs::create_directories(ctx.out);
    return ctx;
}

// --- subcommand bodies -----------------------------------------------------

int cmd_ingest(RunContext& ctx) {
    const json section = ctx.section("ingest");
    std::vector<phyto::RawDocument> docs;

    phyto::ParagraphConfig para_cfg;
    if (section.contains("paragraph_elements")) {
        para_cfg.paragraph_elements.clear();
        for (const auto& e : section.at("paragraph_elements"))
            para_cfg.paragraph_elements.insert(phyto::utf8::canonical(e.get<std::string>()));
    }

    const auto gather = [&](const char* key) {
        std::vector<fs::path> files;
        if (!section.contains(key)) return files;
        for (const auto& entry : section.at(key)) {
            const fs::path path = ctx.require_input(entry.get<std::string>(), key);
            if (fs::is_directory(path)) {
                for (const auto& file : fs::directory_iterator(path)) {
                    if (file.is_regular_file()) files.push_back(file.path());
                }
            } else {
                files.push_back(path);
            }
        }
        std::sort(files.begin(), files.end());
        return files;
    };

    for (const fs::path& file : gather("xml")) {
        docs.push_back(phyto::load_xml_bulletin(file, file.stem().string(), para_cfg));
    }
    for (const fs::path& file : gather("ocr")) {
        docs.push_back(phyto::load_plaintext_bulletin(file, file.stem().string()));
    }
    if (docs.empty()) throw phyto::IngestError("empty", "no input bulletins configured");

    std::set<std::string> ids;
    for (const auto& doc : docs) {
        if (!ids.insert(doc.id).second)
            throw phyto::IngestError("duplicate-id", "document id occurs twice: " + doc.id);
    }

    if (section.contains("tags")) {
        const fs::path tags_path = ctx.require_input(section.at("tags").get<std::string>(), "tags");
        const phyto::TagCatalog catalog = phyto::load_tag_catalog(tags_path);
        for (auto& doc : docs) {
            const auto found = catalog.find(doc.id);
            if (found != catalog.end()) doc.tags = found->second;
        }
    }

    phyto::write_corpus(ctx.out / "corpus.jsonl", docs);
    ctx.outputs.push_back("corpus.jsonl");

    std::size_t empty_docs = 0;
    for (const auto& doc : docs) empty_docs += doc.is_empty() ? 1 : 0;
    json summary{{"documents", docs.size()}, {"empty", empty_docs}};
    phyto::io::write_json_atomic(ctx.out / "ingest_summary.json", summary);
    ctx.outputs.push_back("ingest_summary.json");
    std::cout << "ingested " << docs.size() << " documents (" << empty_docs << " empty)\n";
    return 0;
}

int cmd_clean(RunContext& ctx) {
    const json section = ctx.section("clean");
    const fs::path input =
        ctx.require_input(section.value("input", ""), "clean.input (corpus JSONL)");
    const phyto::CleaningConfig cfg =
        ctx.cleaning_config(section.value("profile", "classification"));

    const std::vector<phyto::RawDocument> docs = phyto::read_corpus(input);
    std::vector<phyto::CleanedDocument> cleaned(docs.size());
    phyto::parallel_for(docs.size(), ctx.jobs(),
                        [&](std::size_t i) { cleaned[i] = phyto::clean_document(docs[i], cfg); });

    phyto::write_cleaned_corpus(ctx.out / "cleaned.jsonl", cleaned);
    ctx.outputs.push_back("cleaned.jsonl");

    phyto::RemovedStats totals;
    std::size_t empty_docs = 0;
    for (const auto& doc : cleaned) {
        totals += doc.removed_stats;
        empty_docs += doc.is_empty() ? 1 : 0;
    }
    json summary;
    summary["documents"] = cleaned.size();
    summary["empty_after_cleaning"] = empty_docs;
    summary["removed_stats"] = totals.to_json();
    summary["cleaning"] = cfg.to_json();
    phyto::io::write_json_atomic(ctx.out / "clean_summary.json", summary);
    ctx.outputs.push_back("clean_summary.json");
    std::cout << "cleaned " << cleaned.size() << " documents\n";
    return 0;
}

int cmd_build_lm_corpus(RunContext& ctx) {
    const json section = ctx.section("build_lm_corpus");
    const fs::path input =
        ctx.require_input(section.value("input", ""), "build_lm_corpus.input (corpus JSONL)");
    const phyto::CleaningConfig cfg = ctx.cleaning_config(section.value("profile", "lm"));

    const std::vector<phyto::RawDocument> docs = phyto::read_corpus(input);
    const std::string corpus = phyto::build_lm_corpus(docs, cfg);
    phyto::io::write_file_atomic(ctx.out / "lm_corpus.txt", corpus);
    ctx.outputs.push_back("lm_corpus.txt");

    std::size_t lines = 0;
    for (char c : corpus) lines += c == '\n' ? 1 : 0;
    std::cout << "wrote lm corpus with " << lines << " lines\n";
    return 0;
}

int cmd_build_dataset(RunContext& ctx) {
    const json section = ctx.section("build_dataset");
    const std::string kind = section.value("kind", "topic");
    const double ratio = section.value("ratio", 0.8);

    std::vector<phyto::Chunk> all;
    json manifest;
    if (kind == "topic") {
        const fs::path input =
            ctx.require_input(section.value("input", ""), "build_dataset.input (cleaned JSONL)");
        const fs::path tags_path =
            ctx.require_input(section.value("tags", ""), "build_dataset.tags");
        const std::vector<phyto::CleanedDocument> docs = phyto::read_cleaned_corpus(input);
        const phyto::TagCatalog catalog = phyto::load_tag_catalog(tags_path);
        const phyto::TopicDataset dataset = phyto::build_topic_dataset(
            docs, catalog, section.value("n_docs", std::size_t(200)),
            section.value("target_chunks", std::size_t(4000)), ctx.seed(),
            section.value("min_words", std::size_t(5)), section.value("max_words", std::size_t(256)));
        all = dataset.chunks;
        manifest = dataset.manifest();
    } else if (kind == "risk") {
        const fs::path input = ctx.require_input(section.value("input", ""),
                                                 "build_dataset.input (risk annotations JSONL)");
        const auto annotations = phyto::load_risk_annotations(input);
        all = phyto::risk_dataset_from_annotations(annotations);
        manifest["annotations"] = annotations.size();
        manifest["seed"] = ctx.seed();
    } else {
        throw phyto::ConfigError("schema", "build_dataset.kind must be 'topic' or 'risk'");
    }

    const phyto::DatasetSplit split = phyto::split_dataset(all, ratio, ctx.seed());
    phyto::write_dataset(ctx.out / "dataset.jsonl", all);
    phyto::write_dataset(ctx.out / "train.jsonl", split.train);
    phyto::write_dataset(ctx.out / "test.jsonl", split.test);
    ctx.outputs.insert(ctx.outputs.end(), {"dataset.jsonl", "train.jsonl", "test.jsonl"});

    manifest["ratio"] = ratio;
    manifest["train_examples"] = split.train.size();
    manifest["test_examples"] = split.test.size();
    phyto::io::write_json_atomic(ctx.out / "dataset_manifest.json", manifest);
    ctx.outputs.push_back("dataset_manifest.json");
    std::cout << "dataset: " << all.size() << " examples (" << split.train.size() << " train, "
              << split.test.size() << " test)\n";
    return 0;
}

int cmd_finetune_lm(RunContext& ctx) {
    const json section = ctx.section("finetune_lm");
    const fs::path corpus_path =
        ctx.require_input(section.value("corpus", ""), "finetune_lm.corpus (text)");
    const phyto::TrainingConfig cfg =
        ctx.training_config(phyto::TrainingConfig::Stage::lm_finetune);

    std::vector<std::string> lines;
    {
        const std::string content = phyto::io::read_file(corpus_path);
        for (const auto& line : phyto::text::split_lines(content)) {
            if (!line.empty()) lines.emplace_back(line);
        }
    }

    auto backend = phyto::make_backend(ctx.backend_spec(), cfg.max_sequence_length);
    const phyto::TrainRunReport report = phyto::finetune_language_model(*backend, lines, cfg);

    backend->save(ctx.out / "checkpoint");
    ctx.outputs.push_back("checkpoint/");
    phyto::io::write_json_atomic(ctx.out / "run_report.json", report.to_json());
    ctx.outputs.push_back("run_report.json");
    std::cout << "lm fine-tune: held-out loss " << report.val_loss_before << " -> "
              << report.val_loss_after << "\n";
    return 0;
}

int cmd_train(RunContext& ctx) {
    const json section = ctx.section("train");
    const fs::path train_path =
        ctx.require_input(section.value("train", ""), "train.train (dataset JSONL)");
    const phyto::TrainingConfig cfg = ctx.training_config(phyto::TrainingConfig::Stage::classify);

    phyto::DatasetSplit split;
    split.train = phyto::read_dataset(train_path);
    split.seed = ctx.seed();

    auto backend = phyto::make_backend(ctx.backend_spec(), cfg.max_sequence_length);
    phyto::TrainedClassifier trained = phyto::train_classifier(*backend, split, cfg);

    trained.artifact.save(ctx.out / "artifact");
    ctx.outputs.push_back("artifact/");
    phyto::io::write_json_atomic(ctx.out / "run_report.json", trained.report.to_json());
    ctx.outputs.push_back("run_report.json");
    std::cout << "trained: best epoch " << trained.report.best_epoch << ", validation F1 "
              << trained.report.best_f1 << "\n";
    return 0;
}

int cmd_evaluate(RunContext& ctx) {
    const json section = ctx.section("evaluate");
    const fs::path test_path =
        ctx.require_input(section.value("test", ""), "evaluate.test (dataset JSONL)");
    const fs::path artifact_dir =
        ctx.require_input(section.value("artifact", ""), "evaluate.artifact (directory)");

    const phyto::ModelArtifact artifact = phyto::ModelArtifact::load(artifact_dir);
    const std::vector<phyto::Chunk> test = phyto::read_dataset(test_path);
    const bool micro_auc = section.value("micro_auc", false);
    const phyto::MetricsReport report =
        phyto::evaluate(artifact, test, ctx.threshold(), micro_auc);

    phyto::io::write_json_atomic(ctx.out / "metrics.json", report.to_json());
    phyto::io::write_file_atomic(ctx.out / "metrics.txt", phyto::render_table(report));
    ctx.outputs.insert(ctx.outputs.end(), {"metrics.json", "metrics.txt"});
    std::cout << phyto::render_table(report);
    return 0;
}

int cmd_predict(RunContext& ctx, const CliOptions& opts) {
    const json section = ctx.section("predict");
    const fs::path artifact_dir =
        ctx.require_input(section.value("artifact", ""), "predict.artifact (directory)");
    const phyto::ModelArtifact artifact = phyto::ModelArtifact::load(artifact_dir);

    std::vector<std::string> texts;
    if (!opts.text.empty()) {
        texts.push_back(opts.text);
    } else if (section.contains("input")) {
        const fs::path input = ctx.require_input(section.at("input").get<std::string>(),
                                                 "predict.input (one text per line)");
        const std::string content = phyto::io::read_file(input);
        for (const auto& line : phyto::text::split_lines(content)) {
            if (!line.empty()) texts.emplace_back(line);
        }
    } else {
        throw phyto::ConfigError("schema", "predict needs --text or predict.input");
    }

    std::vector<json> records;
    for (const auto& text : texts) {
        const phyto::PredictionResult result = artifact.predict(text, ctx.threshold());
        json j;
        j["text"] = text;
        j["probabilities"] = result.probabilities;
        j["decided"] = result.decided_labels();
        j["threshold"] = result.threshold_used;
        records.push_back(std::move(j));
    }
    phyto::io::write_jsonl_atomic(ctx.out / "predictions.jsonl", records);
    ctx.outputs.push_back("predictions.jsonl");
    for (const auto& record : records) std::cout << record.dump() << "\n";
    return 0;
}

int cmd_filter_tweets(RunContext& ctx) {
    const json section = ctx.section("filter_tweets");
    const fs::path tweets_path =
        ctx.require_input(section.value("tweets", ""), "filter_tweets.tweets (JSONL)");
    const fs::path thesaurus_path =
        ctx.require_input(section.value("thesaurus", ""), "filter_tweets.thesaurus");
    const fs::path tags_path = ctx.require_input(section.value("tags", ""), "filter_tweets.tags");

    const phyto::Thesaurus thesaurus = phyto::load_thesaurus(thesaurus_path);
    const phyto::TagCatalog catalog = phyto::load_tag_catalog(tags_path);
    const phyto::KeywordFilter filter = phyto::build_keyword_filter(thesaurus, catalog);

    const std::vector<phyto::TweetRecord> records = phyto::read_tweets(tweets_path);
    const std::vector<phyto::TweetRecord> retained = phyto::filter_tweets(records, filter);

    std::vector<json> out;
    out.reserve(retained.size());
    for (const auto& tweet : retained) out.push_back(tweet.to_json());
    phyto::io::write_jsonl_atomic(ctx.out / "filtered.jsonl", out);
    ctx.outputs.push_back("filtered.jsonl");
    std::cout << "retained " << retained.size() << " of " << records.size() << " tweets\n";
    return 0;
}

int cmd_classify_tweets(RunContext& ctx) {
    const json section = ctx.section("classify_tweets");
    const fs::path tweets_path =
        ctx.require_input(section.value("tweets", ""), "classify_tweets.tweets (JSONL)");
    const fs::path artifact_dir =
        ctx.require_input(section.value("artifact", ""), "classify_tweets.artifact (directory)");

    const phyto::ModelArtifact artifact = phyto::ModelArtifact::load(artifact_dir);
    const std::vector<phyto::TweetRecord> records = phyto::read_tweets(tweets_path);
    const phyto::CleaningConfig cfg = ctx.cleaning_config("tweet");

    const double threshold = ctx.threshold();
    std::vector<phyto::TweetClassification> results(records.size());
    std::atomic<std::size_t> errors{0};
    phyto::parallel_for(records.size(), ctx.jobs(), [&](std::size_t i) {
        phyto::TweetClassification item;
        item.record = records[i];
        try {
            const std::string cleaned = phyto::clean_text(records[i].text, cfg);
            item.prediction = artifact.predict(cleaned, threshold);
        } catch (const phyto::Error& e) {
            item.error = e.what();
            errors.fetch_add(1);
        }
        results[i] = std::move(item);
    });

    std::vector<json> out;
    out.reserve(results.size());
    for (const auto& item : results) out.push_back(item.to_json(threshold));
    phyto::io::write_jsonl_atomic(ctx.out / "classified.jsonl", out);
    ctx.outputs.push_back("classified.jsonl");

    json summary{{"tweets", records.size()}, {"errors", errors.load()}};
    phyto::io::write_json_atomic(ctx.out / "classify_summary.json", summary);
    ctx.outputs.push_back("classify_summary.json");
    std::cout << "classified " << records.size() << " tweets (" << errors.load() << " errors)\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"French plant-health bulletin and tweet classification pipeline"};
    app.set_version_flag("--version", phyto::kVersion);
    app.require_subcommand(1);

    CliOptions opts;
    app.add_option("--config", opts.config_path, "JSON config file");
    app.add_option("--seed", opts.seed, "Random seed (overrides config)");
    app.add_option("--jobs", opts.jobs, "Worker threads for per-document stages");
    app.add_option("--threshold", opts.threshold, "Decision threshold (overrides config)");
    app.add_option("--backend", opts.backend, "Encoder backend spec (overrides config)");
    app.add_option("--out", opts.out_dir, "Output directory (default: runs/<stamp>-<hash>)");

    const std::vector<std::string> commands = {
        "ingest",      "clean",   "build-lm-corpus", "build-dataset",  "finetune-lm",
        "train",       "evaluate", "predict",        "filter-tweets",  "classify-tweets"};
    for (const auto& name : commands) {
        auto* sub = app.add_subcommand(name);
        sub->fallthrough();  // global flags may follow the subcommand
        if (name == "predict") sub->add_option("--text", opts.text, "Text to classify");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitConfig;
    }

    const std::string command = app.get_subcommands().front()->get_name();
    try {
        RunContext ctx = make_context(opts, command);
        int rc = 0;
        if (command == "ingest") rc = cmd_ingest(ctx);
        else if (command == "clean") rc = cmd_clean(ctx);
        else if (command == "build-lm-corpus") rc = cmd_build_lm_corpus(ctx);
        else if (command == "build-dataset") rc = cmd_build_dataset(ctx);
        else if (command == "finetune-lm") rc = cmd_finetune_lm(ctx);
        else if (command == "train") rc = cmd_train(ctx);
        else if (command == "evaluate") rc = cmd_evaluate(ctx);
        else if (command == "predict") rc = cmd_predict(ctx, opts);
        else if (command == "filter-tweets") rc = cmd_filter_tweets(ctx);
        else if (command == "classify-tweets") rc = cmd_classify_tweets(ctx);
        if (rc == 0) {
            ctx.write_manifest(command);
            std::cout << "run_dir=" << ctx.out.string() << "\n";
        }
        return rc;
    } catch (const MissingInput& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitMissingInput;
    } catch (const phyto::ConfigError& e) {
        std::cerr << "error (config/" << e.code() << "): " << e.what() << "\n";
        return kExitConfig;
    } catch (const phyto::Error& e) {
        std::cerr << "error (" << e.code() << "): " << e.what() << "\n";
        return kExitOperation;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitOperation;
    }
}
