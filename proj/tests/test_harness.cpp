#include <catch2/catch.hpp>

#include <filesystem>

#include "phyto/clean.hpp"
#include "phyto/dataset.hpp"
#include "phyto/encoder.hpp"
#include "phyto/train.hpp"
#include "support/synth.hpp"

using namespace phyto;
namespace stdfs = std::filesystem;

namespace {

// labeled dataset from the planted-vocabulary corpus, cleaned and chunked
DatasetSplit make_synth_split(std::size_t n_docs, std::uint64_t seed) {
    const synth::SynthCorpus corpus = synth::make_labeled_corpus(n_docs, seed);
    const CleaningConfig cfg = CleaningConfig::classification();
    std::vector<CleanedDocument> cleaned;
    for (const auto& doc : corpus.docs) cleaned.push_back(clean_document(doc, cfg));
    const TopicDataset dataset =
        build_topic_dataset(cleaned, corpus.catalog, n_docs, 4000, seed);
    return split_dataset(dataset.chunks, 0.8, seed);
}

}  // namespace

TEST_CASE("offline test encoder", "[harness]") {
    const OfflineHashEncoder enc(512, 1, 256);
    SECTION("empty text encodes to the zero vector") {
        const auto v = enc.encode("");
        CHECK(v.size() == 512);
        for (double x : v) CHECK(x == 0.0);
    }
    SECTION("token repetition only scales, so direction is preserved") {
        const auto once = enc.encode("puceron");
        const auto twice = enc.encode("puceron puceron");
        REQUIRE(once.size() == twice.size());
        for (std::size_t i = 0; i < once.size(); ++i) CHECK(once[i] == Approx(twice[i]));
    }
    SECTION("deterministic") {
        CHECK(enc.encode("vol de pyrales en hausse") == enc.encode("vol de pyrales en hausse"));
    }
    SECTION("different seeds give different hash projections") {
        const OfflineHashEncoder other(512, 2, 256);
        std::size_t same_bucket = 0;
        for (int i = 0; i < 10000; ++i) {
            const std::string token = "token" + std::to_string(i);
            same_bucket += enc.bucket(token) == other.bucket(token) ? 1 : 0;
        }
        // ~1/512 collision rate by chance; far below this bound
        CHECK(same_bucket < 200);
    }
    SECTION("no lm capability") {
        TrainingConfig cfg;
        cfg.stage = TrainingConfig::Stage::lm_finetune;
        OfflineHashEncoder backend;
        CHECK_THROWS_MATCHES(finetune_language_model(backend, {"une ligne de texte"}, cfg),
                             TrainError,
                             Catch::Matchers::Predicate<TrainError>([](const TrainError& e) {
                                 return e.code() == "unsupported";
                             }));
    }
}

TEST_CASE("training config", "[harness]") {
    SECTION("defaults") {
        const TrainingConfig cfg;
        CHECK(cfg.batch_size == 8);
        CHECK(cfg.lm_learning_rate == 1e-4);
        CHECK(cfg.clf_learning_rate == 2e-5);
        CHECK(cfg.lm_epochs == 2);
        CHECK(cfg.clf_epochs == 5);
        CHECK(cfg.max_sequence_length == 256);
        CHECK(cfg.threshold == 0.5);
        CHECK(cfg.optimizer == "adam");
    }
    SECTION("threshold bounds enforced") {
        json j = TrainingConfig().to_json();
        j["threshold"] = 0.0;
        CHECK_THROWS_AS(TrainingConfig::from_json(j), ConfigError);
        j["threshold"] = 1.0;
        CHECK_THROWS_AS(TrainingConfig::from_json(j), ConfigError);
        j["threshold"] = 0.5;
        CHECK_NOTHROW(TrainingConfig::from_json(j));
    }
}

TEST_CASE("language model fine-tuning", "[harness]") {
    std::vector<std::string> corpus;
    {
        SplitMix64 rng(7);
        const auto& filler = synth::filler_vocab();
        for (int line = 0; line < 60; ++line) {
            std::string s;
            const std::size_t n = 6 + rng.uniform(0, 10);
            for (std::size_t w = 0; w < n; ++w) {
                if (!s.empty()) s += ' ';
                s += filler[std::size_t(rng.uniform(0, filler.size() - 1))];
            }
            corpus.push_back(s);
        }
    }

    SECTION("zero epochs leave the encoder bit-identical") {
        HashedEmbeddingEncoder backend(512, 32, 3, 128);
        const std::vector<double> before = backend.embeddings();
        TrainingConfig cfg;
        cfg.stage = TrainingConfig::Stage::lm_finetune;
        cfg.lm_epochs = 0;
        const TrainRunReport report = finetune_language_model(backend, corpus, cfg);
        CHECK(backend.embeddings() == before);
        CHECK(report.val_loss_before == Approx(report.val_loss_after));
    }
    SECTION("two epochs do not increase held-out masked-token loss") {
        HashedEmbeddingEncoder backend(512, 32, 3, 128);
        TrainingConfig cfg;
        cfg.stage = TrainingConfig::Stage::lm_finetune;
        const TrainRunReport report = finetune_language_model(backend, corpus, cfg);
        CHECK(report.val_loss_after <= report.val_loss_before);
        CHECK(report.epochs.size() == 2);
    }
    SECTION("empty corpus is an error") {
        HashedEmbeddingEncoder backend(512, 32, 3, 128);
        TrainingConfig cfg;
        cfg.stage = TrainingConfig::Stage::lm_finetune;
        CHECK_THROWS_MATCHES(finetune_language_model(backend, {}, cfg), TrainError,
                             Catch::Matchers::Predicate<TrainError>([](const TrainError& e) {
                                 return e.code() == "empty-corpus";
                             }));
    }
    SECTION("fine-tuned checkpoint round-trips through save and load") {
        HashedEmbeddingEncoder backend(256, 16, 3, 64);
        TrainingConfig cfg;
        cfg.stage = TrainingConfig::Stage::lm_finetune;
        cfg.lm_epochs = 1;
        finetune_language_model(backend, corpus, cfg);
        const stdfs::path dir = stdfs::temp_directory_path() / "phyto-backend-ckpt";
        stdfs::remove_all(dir);
        backend.save(dir);
        const auto reloaded = load_backend(dir);
        CHECK(reloaded->encode("parcelle observation semaine") ==
              backend.encode("parcelle observation semaine"));
    }
}

TEST_CASE("classifier training on separable synthetic data", "[harness]") {
    const DatasetSplit split = make_synth_split(500, 2024);
    const OfflineHashEncoder backend(512, 1, 256);
    TrainingConfig cfg;
    cfg.clf_epochs = 10;
    cfg.seed = 11;

    const TrainedClassifier trained = train_classifier(backend, split, cfg);

    SECTION("reaches a high validation f1") {
        CHECK(trained.report.best_f1 >= 0.95);
    }
    SECTION("best checkpoint equals the max of per-epoch validation f1") {
        REQUIRE_FALSE(trained.report.epochs.empty());
        double max_f1 = 0.0;
        for (const auto& e : trained.report.epochs) max_f1 = std::max(max_f1, e.val_f1);
        CHECK(trained.report.best_f1 == Approx(max_f1));
        CHECK(trained.artifact.best_f1() == Approx(max_f1));
    }
    SECTION("training is deterministic under the seed") {
        const TrainedClassifier again = train_classifier(backend, split, cfg);
        CHECK(again.artifact.weights() == trained.artifact.weights());
        CHECK(again.artifact.bias() == trained.artifact.bias());
        CHECK(again.report.best_f1 == trained.report.best_f1);
    }
}

TEST_CASE("classifier training edge cases", "[harness]") {
    const OfflineHashEncoder backend(128, 1, 64);

    SECTION("one epoch means best epoch one") {
        DatasetSplit split = make_synth_split(20, 7);
        TrainingConfig cfg;
        cfg.clf_epochs = 1;
        const TrainedClassifier trained = train_classifier(backend, split, cfg);
        CHECK(trained.report.best_epoch == 1);
        CHECK(trained.artifact.best_epoch() == 1);
    }
    SECTION("zero epochs keep the initial head untouched") {
        DatasetSplit split = make_synth_split(20, 7);
        TrainingConfig cfg;
        cfg.clf_epochs = 0;
        const TrainedClassifier trained = train_classifier(backend, split, cfg);
        CHECK(trained.report.best_epoch == 0);
        // feature weights never move, so every text maps to the same
        // prior-derived probabilities
        for (double w : trained.artifact.weights()) CHECK(w == 0.0);
        const auto a = trained.artifact.predict("pucerons partout", 0.5);
        const auto b = trained.artifact.predict("texte sans rapport", 0.5);
        CHECK(a.probabilities == b.probabilities);
        const TrainedClassifier again = train_classifier(backend, split, cfg);
        CHECK(again.artifact.bias() == trained.artifact.bias());
    }
    SECTION("missing positives for one label is degenerate") {
        DatasetSplit split;
        for (int i = 0; i < 12; ++i) {
            Chunk c;
            c.doc_id = "d" + std::to_string(i % 4);
            c.chunk_id = c.doc_id + "#" + std::to_string(i);
            c.text = "texte sur les pucerons de la semaine";
            c.labels.bioagressor = i % 2 == 0;
            c.labels.disease = false;  // never positive
            split.train.push_back(c);
        }
        CHECK_THROWS_MATCHES(train_classifier(backend, split, TrainingConfig()), TrainError,
                             Catch::Matchers::Predicate<TrainError>([](const TrainError& e) {
                                 return e.code() == "degenerate-labels";
                             }));
    }
    SECTION("empty training split") {
        CHECK_THROWS_MATCHES(train_classifier(backend, DatasetSplit(), TrainingConfig()),
                             TrainError,
                             Catch::Matchers::Predicate<TrainError>([](const TrainError& e) {
                                 return e.code() == "empty-corpus";
                             }));
    }
}

TEST_CASE("prediction and thresholding", "[harness]") {
    const DatasetSplit split = make_synth_split(30, 5);
    const OfflineHashEncoder backend(512, 1, 256);
    TrainingConfig cfg;
    const TrainedClassifier trained = train_classifier(backend, split, cfg);
    const ModelArtifact& artifact = trained.artifact;

    SECTION("probabilities stay in range and decisions follow the threshold") {
        const PredictionResult result =
            artifact.predict("forte pression de pucerons cette semaine", 0.5);
        for (const auto& [label, p] : result.probabilities) {
            CHECK(p >= 0.0);
            CHECK(p <= 1.0);
            CHECK(result.decided_labels().size() <= 2);
        }
        CHECK(result.decided.bioagressor == (result.probabilities.at("bioagressor") >= 0.5));
        CHECK(result.decided.disease == (result.probabilities.at("disease") >= 0.5));
    }
    SECTION("empty text is a legal input") {
        const PredictionResult result = artifact.predict("", 0.5);
        CHECK(result.probabilities.size() == 2);
    }
    SECTION("same text twice gives the identical result") {
        const auto a = artifact.predict("le mildiou progresse", 0.5);
        const auto b = artifact.predict("le mildiou progresse", 0.5);
        CHECK(a.probabilities == b.probabilities);
        CHECK(a.decided == b.decided);
    }
    SECTION("raising the threshold never adds a label") {
        const std::string text = "vol de pyrales et taches de septoriose";
        std::size_t previous = 2;
        for (double threshold : {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9}) {
            const auto result = artifact.predict(text, threshold);
            const std::size_t current = result.decided_labels().size();
            CHECK(current <= previous);
            previous = current;
        }
    }
    SECTION("an empty decided set is a legal prediction") {
        PredictionResult result = artifact.predict("texte neutre sans aucun signal", 0.999);
        CHECK(result.decided_labels().empty());
    }
    SECTION("the no-threshold overload uses the config snapshot threshold") {
        const auto result = artifact.predict("des pucerons sur la parcelle");
        CHECK(result.threshold_used == artifact.config().threshold);
    }
}

TEST_CASE("artifact persistence", "[harness]") {
    const DatasetSplit split = make_synth_split(25, 77);
    const OfflineHashEncoder backend(256, 9, 128);
    TrainingConfig cfg;
    cfg.seed = 5;
    const TrainedClassifier trained = train_classifier(backend, split, cfg);

    const stdfs::path dir = stdfs::temp_directory_path() / "phyto-artifact-test";
    stdfs::remove_all(dir);
    trained.artifact.save(dir);

    SECTION("save/load round-trip reproduces bit-identical predictions") {
        const ModelArtifact loaded = ModelArtifact::load(dir);
        for (std::size_t i = 0; i < std::min<std::size_t>(32, split.test.size()); ++i) {
            const auto a = trained.artifact.predict(split.test[i].text, 0.5);
            const auto b = loaded.predict(split.test[i].text, 0.5);
            CHECK(a.probabilities.at("bioagressor") == b.probabilities.at("bioagressor"));
            CHECK(a.probabilities.at("disease") == b.probabilities.at("disease"));
        }
        CHECK(loaded.best_epoch() == trained.artifact.best_epoch());
        CHECK(loaded.best_f1() == trained.artifact.best_f1());
    }
    SECTION("saving twice gives identical bytes") {
        const stdfs::path other = stdfs::temp_directory_path() / "phyto-artifact-test2";
        stdfs::remove_all(other);
        trained.artifact.save(other);
        CHECK(io::read_file(dir / "head.bin") == io::read_file(other / "head.bin"));
        CHECK(io::read_file(dir / "artifact.json") == io::read_file(other / "artifact.json"));
        CHECK(io::read_file(dir / "backend" / "backend.json") ==
              io::read_file(other / "backend" / "backend.json"));
    }
    SECTION("truncated head file fails to load") {
        const stdfs::path broken = stdfs::temp_directory_path() / "phyto-artifact-broken";
        stdfs::remove_all(broken);
        stdfs::create_directories(broken);
        stdfs::copy(dir, broken, stdfs::copy_options::recursive |
                                     stdfs::copy_options::overwrite_existing);
        stdfs::resize_file(broken / "head.bin", 24);
        CHECK_THROWS_MATCHES(ModelArtifact::load(broken), PredictError,
                             Catch::Matchers::Predicate<PredictError>([](const PredictError& e) {
                                 return e.code() == "artifact";
                             }));
    }
    SECTION("format version mismatch fails to load") {
        const stdfs::path wrong = stdfs::temp_directory_path() / "phyto-artifact-wrong";
        stdfs::remove_all(wrong);
        stdfs::create_directories(wrong);
        stdfs::copy(dir, wrong, stdfs::copy_options::recursive |
                                    stdfs::copy_options::overwrite_existing);
        json meta = io::parse_json(io::read_file(wrong / "artifact.json"), "meta");
        meta["format"] = "phyto-artifact-v999";
        io::write_json_atomic(wrong / "artifact.json", meta);
        CHECK_THROWS_AS(ModelArtifact::load(wrong), PredictError);
    }
}

TEST_CASE("evaluation over a trained artifact", "[harness]") {
    const DatasetSplit split = make_synth_split(150, 31);
    const OfflineHashEncoder backend(512, 1, 256);
    TrainingConfig cfg;
    cfg.clf_epochs = 10;
    const TrainedClassifier trained = train_classifier(backend, split, cfg);

    const MetricsReport report = evaluate(trained.artifact, split.test, 0.5);
    CHECK(report.n_examples == split.test.size());
    CHECK(report.weighted.f1 > 0.8);
    CHECK(report.weighted.roc_auc > 0.9);
    CHECK_THROWS_AS(evaluate(trained.artifact, {}, 0.5), MetricError);
}
