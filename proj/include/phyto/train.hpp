#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "phyto/adam.hpp"
#include "phyto/dataset.hpp"
#include "phyto/encoder.hpp"
#include "phyto/errors.hpp"
#include "phyto/io.hpp"
#include "phyto/metrics.hpp"
#include "phyto/rng.hpp"

namespace phyto {

inline constexpr std::string_view kArtifactFormat = "phyto-artifact-v1";
inline const std::vector<std::string> kTopicLabels = {"bioagressor", "disease"};

struct TrainingConfig {
    enum class Stage { lm_finetune, classify };

    Stage stage = Stage::classify;
    std::size_t batch_size = 8;
    double lm_learning_rate = 1e-4;
    double clf_learning_rate = 2e-5;
    std::size_t lm_epochs = 2;
    std::size_t clf_epochs = 5;
    std::size_t max_sequence_length = 256;
    double threshold = 0.5;
    std::string optimizer = "adam";
    std::uint64_t seed = 42;

    void validate() const {
        if (!(threshold > 0.0 && threshold < 1.0))
            throw ConfigError("schema", "threshold must be strictly between 0 and 1");
        if (batch_size == 0) throw ConfigError("schema", "batch_size must be positive");
        if (max_sequence_length == 0)
            throw ConfigError("schema", "max_sequence_length must be positive");
        if (optimizer != "adam") throw ConfigError("schema", "unsupported optimizer: " + optimizer);
    }

    static std::string stage_name(Stage s) {
        return s == Stage::lm_finetune ? "lm_finetune" : "classify";
    }

    json to_json() const {
        json j;
        j["stage"] = stage_name(stage);
        j["batch_size"] = batch_size;
        j["lm_learning_rate"] = lm_learning_rate;
        j["clf_learning_rate"] = clf_learning_rate;
        j["lm_epochs"] = lm_epochs;
        j["clf_epochs"] = clf_epochs;
        j["max_sequence_length"] = max_sequence_length;
        j["threshold"] = threshold;
        j["optimizer"] = optimizer;
        j["seed"] = seed;
        return j;
    }

    static TrainingConfig from_json(const json& j) {
        TrainingConfig cfg;
        const std::string stage = j.value("stage", "classify");
        if (stage == "lm_finetune") cfg.stage = Stage::lm_finetune;
        else if (stage == "classify") cfg.stage = Stage::classify;
        else throw ConfigError("schema", "unknown training stage: " + stage);
        cfg.batch_size = j.value("batch_size", std::size_t(8));
        cfg.lm_learning_rate = j.value("lm_learning_rate", 1e-4);
        cfg.clf_learning_rate = j.value("clf_learning_rate", 2e-5);
        cfg.lm_epochs = j.value("lm_epochs", std::size_t(2));
        cfg.clf_epochs = j.value("clf_epochs", std::size_t(5));
        cfg.max_sequence_length = j.value("max_sequence_length", std::size_t(256));
        cfg.threshold = j.value("threshold", 0.5);
        cfg.optimizer = j.value("optimizer", "adam");
        cfg.seed = j.value("seed", std::uint64_t(42));
        cfg.validate();
        return cfg;
    }
};

struct PredictionResult {
    std::map<std::string, double> probabilities;
    LabelSet decided;
    double threshold_used = 0.5;

    std::vector<std::string> decided_labels() const {
        std::vector<std::string> out;
        if (decided.bioagressor) out.push_back("bioagressor");
        if (decided.disease) out.push_back("disease");
        return out;
    }
};

// Per-epoch record for the run report; the best-checkpoint property is
// checked against exactly these entries.
struct EpochRecord {
    std::size_t epoch = 0;
    double train_loss = 0.0;
    double val_f1 = 0.0;
};

struct TrainRunReport {
    std::string stage;
    std::string backend;
    std::uint64_t seed = 0;
    std::vector<EpochRecord> epochs;
    std::size_t best_epoch = 0;
    double best_f1 = 0.0;
    double val_loss_before = 0.0;  // lm stage
    double val_loss_after = 0.0;   // lm stage
    std::vector<std::string> val_doc_ids;
    bool val_overlaps_train = false;
    json config;

    json to_json() const {
        json j;
        j["stage"] = stage;
        j["backend"] = backend;
        j["seed"] = seed;
        j["config"] = config;
        if (stage == "lm_finetune") {
            j["val_loss_before"] = val_loss_before;
            j["val_loss_after"] = val_loss_after;
            json losses = json::array();
            for (const auto& e : epochs) losses.push_back(e.train_loss);
            j["epoch_losses"] = losses;
        } else {
            json eps = json::array();
            for (const auto& e : epochs) {
                eps.push_back(
                    {{"epoch", e.epoch}, {"train_loss", e.train_loss}, {"val_f1", e.val_f1}});
            }
            j["epochs"] = eps;
            j["best_epoch"] = best_epoch;
            j["best_f1"] = best_f1;
            j["val_doc_ids"] = val_doc_ids;
        }
        if (val_overlaps_train) j["val_overlaps_train"] = true;
        return j;
    }
};

// Stage one of the procedure: adapt the encoder to the domain corpus with
// masked-token training. The encoder is updated in place; callers persist it
// as the checkpoint.
inline TrainRunReport finetune_language_model(EncoderBackend& backend,
                                              const std::vector<std::string>& corpus_lines,
                                              const TrainingConfig& cfg) {
    cfg.validate();
    if (cfg.stage != TrainingConfig::Stage::lm_finetune)
        throw ConfigError("schema", "finetune_language_model requires stage=lm_finetune");
    if (corpus_lines.empty()) throw TrainError("empty-corpus", "LM corpus is empty");
    if (!backend.supports_lm_finetune())
        throw TrainError("unsupported",
                         backend.name() + " does not support language-model fine-tuning");

    LmFinetuneOptions opts;
    opts.learning_rate = cfg.lm_learning_rate;
    opts.epochs = cfg.lm_epochs;
    opts.batch_size = cfg.batch_size;
    opts.seed = cfg.seed;
    const LmFinetuneReport lm = backend.lm_finetune(corpus_lines, opts);

    TrainRunReport report;
    report.stage = "lm_finetune";
    report.backend = backend.name();
    report.seed = cfg.seed;
    report.config = cfg.to_json();
    report.val_loss_before = lm.val_loss_before;
    report.val_loss_after = lm.val_loss_after;
    report.val_overlaps_train = lm.val_overlaps_train;
    for (std::size_t i = 0; i < lm.epoch_losses.size(); ++i) {
        report.epochs.push_back({i + 1, lm.epoch_losses[i], 0.0});
    }
    return report;
}

// Per-coordinate standardization fitted on the training features. A linear
// head over L2-normalized bag vectors needs it: raw coordinates are so small
// that the fine-tuning-scale learning rate could never move the logits.
struct FeatureScaler {
    std::vector<double> mean;
    std::vector<double> scale;  // 1/std, with zero-variance coordinates pinned to 0

    static FeatureScaler fit(const std::vector<std::vector<double>>& features,
                             const std::vector<std::size_t>& index, std::size_t dim) {
        FeatureScaler s;
        s.mean.assign(dim, 0.0);
        s.scale.assign(dim, 0.0);
        if (index.empty()) return s;
        for (std::size_t i : index) {
            for (std::size_t d = 0; d < dim; ++d) s.mean[d] += features[i][d];
        }
        for (double& m : s.mean) m /= double(index.size());
        std::vector<double> var(dim, 0.0);
        for (std::size_t i : index) {
            for (std::size_t d = 0; d < dim; ++d) {
                const double delta = features[i][d] - s.mean[d];
                var[d] += delta * delta;
            }
        }
        for (std::size_t d = 0; d < dim; ++d) {
            const double sd = std::sqrt(var[d] / double(index.size()));
            s.scale[d] = sd > 1e-12 ? 1.0 / sd : 0.0;
        }
        return s;
    }

    std::vector<double> transform(const std::vector<double>& x) const {
        std::vector<double> out(x.size());
        for (std::size_t d = 0; d < x.size(); ++d) out[d] = (x[d] - mean[d]) * scale[d];
        return out;
    }
};

class ModelArtifact {
public:
    ModelArtifact(std::unique_ptr<EncoderBackend> backend, FeatureScaler scaler,
                  std::vector<double> weights, std::vector<double> bias, TrainingConfig config,
                  std::size_t best_epoch, double best_f1)
        : backend_(std::move(backend)),
          scaler_(std::move(scaler)),
          weights_(std::move(weights)),
          bias_(std::move(bias)),
          config_(std::move(config)),
          best_epoch_(best_epoch),
          best_f1_(best_f1) {}

    const std::vector<std::string>& labels() const { return kTopicLabels; }
    const EncoderBackend& backend() const { return *backend_; }
    const TrainingConfig& config() const { return config_; }
    std::size_t best_epoch() const { return best_epoch_; }
    double best_f1() const { return best_f1_; }
    const std::vector<double>& weights() const { return weights_; }
    const std::vector<double>& bias() const { return bias_; }

    std::vector<double> probabilities_for(std::string_view text) const {
        const std::vector<double> features = scaler_.transform(backend_->encode(text));
        const std::size_t n_labels = labels().size();
        std::vector<double> probs(n_labels);
        for (std::size_t k = 0; k < n_labels; ++k) {
            double z = bias_[k];
            const double* row = &weights_[k * features.size()];
            for (std::size_t d = 0; d < features.size(); ++d) z += row[d] * features[d];
            probs[k] = 1.0 / (1.0 + std::exp(-z));
        }
        return probs;
    }

    PredictionResult predict(std::string_view text, double threshold) const {
        const std::vector<double> probs = probabilities_for(text);
        PredictionResult result;
        result.threshold_used = threshold;
        for (std::size_t k = 0; k < labels().size(); ++k) {
            result.probabilities[labels()[k]] = probs[k];
        }
        result.decided.bioagressor = probs[0] >= threshold;
        result.decided.disease = probs[1] >= threshold;
        return result;
    }

    PredictionResult predict(std::string_view text) const {
        return predict(text, config_.threshold);
    }

    void save(const fs::path& dir) const {
        fs::create_directories(dir);
        backend_->save(dir / "backend");

        const fs::path head_tmp = dir / "head.bin.tmp";
        {
            std::ofstream out(head_tmp, std::ios::binary | std::ios::trunc);
            if (!out) throw BuildError("io", "cannot write " + head_tmp.string());
            out.write("PHYHEAD1", 8);
            const std::uint64_t header[2] = {labels().size(), backend_->dim()};
            out.write(reinterpret_cast<const char*>(header), sizeof header);
            detail::write_doubles(out, scaler_.mean);
            detail::write_doubles(out, scaler_.scale);
            detail::write_doubles(out, weights_);
            detail::write_doubles(out, bias_);
            if (!out) throw BuildError("io", "write failed: " + head_tmp.string());
        }
        fs::rename(head_tmp, dir / "head.bin");

        json meta;
        meta["format"] = std::string(kArtifactFormat);
        meta["labels"] = labels();
        meta["best_epoch"] = best_epoch_;
        meta["best_f1"] = best_f1_;
        meta["backend"] = backend_->name();
        meta["config"] = config_.to_json();
        io::write_json_atomic(dir / "artifact.json", meta);
    }

    static ModelArtifact load(const fs::path& dir) {
        json meta;
        try {
            meta = io::parse_json(io::read_file(dir / "artifact.json"), "artifact.json");
        } catch (const IngestError&) {
            throw PredictError("artifact", "cannot read artifact metadata in " + dir.string());
        }
        TrainingConfig config;
        std::size_t best_epoch = 0;
        double best_f1 = 0.0;
        try {
            if (meta.at("format").get<std::string>() != kArtifactFormat)
                throw PredictError("artifact", "unsupported artifact format in " + dir.string());
            if (meta.at("labels").get<std::vector<std::string>>() != kTopicLabels)
                throw PredictError("artifact", "unexpected label order in " + dir.string());
            config = TrainingConfig::from_json(meta.at("config"));
            best_epoch = meta.at("best_epoch").get<std::size_t>();
            best_f1 = meta.at("best_f1").get<double>();
        } catch (const json::exception&) {
            throw PredictError("artifact", "malformed artifact metadata in " + dir.string());
        } catch (const ConfigError& e) {
            throw PredictError("artifact", "bad config snapshot: " + std::string(e.what()));
        }

        std::unique_ptr<EncoderBackend> backend = load_backend(dir / "backend");

        std::ifstream in(dir / "head.bin", std::ios::binary);
        if (!in) throw PredictError("artifact", "missing head.bin in " + dir.string());
        char magic[8];
        in.read(magic, 8);
        if (in.gcount() != 8 || std::memcmp(magic, "PHYHEAD1", 8) != 0)
            throw PredictError("artifact", "bad head header in " + dir.string());
        std::uint64_t header[2];
        in.read(reinterpret_cast<char*>(header), sizeof header);
        if (std::size_t(in.gcount()) != sizeof header || header[0] != kTopicLabels.size() ||
            header[1] != backend->dim())
            throw PredictError("artifact", "head shape mismatch in " + dir.string());
        FeatureScaler scaler;
        scaler.mean = detail::read_doubles(in, std::size_t(header[1]), "head.bin");
        scaler.scale = detail::read_doubles(in, std::size_t(header[1]), "head.bin");
        std::vector<double> weights =
            detail::read_doubles(in, std::size_t(header[0] * header[1]), "head.bin");
        std::vector<double> bias = detail::read_doubles(in, std::size_t(header[0]), "head.bin");

        return ModelArtifact(std::move(backend), std::move(scaler), std::move(weights),
                             std::move(bias), std::move(config), best_epoch, best_f1);
    }

private:
    std::unique_ptr<EncoderBackend> backend_;
    FeatureScaler scaler_;
    std::vector<double> weights_;  // labels x dim, row-major
    std::vector<double> bias_;
    TrainingConfig config_;
    std::size_t best_epoch_ = 0;
    double best_f1_ = 0.0;
};

namespace detail {

// Last tenth of the training documents (document level) forms the epoch
// selection slice; selecting on the test side would leak.
inline std::vector<std::string> validation_doc_ids(const std::vector<Chunk>& train) {
    std::vector<std::string> doc_ids;
    std::set<std::string> seen;
    for (const auto& chunk : train) {
        if (seen.insert(chunk.doc_id).second) doc_ids.push_back(chunk.doc_id);
    }
    const std::size_t n_val = std::max<std::size_t>(1, doc_ids.size() / 10);
    if (doc_ids.size() <= n_val) return doc_ids;  // tiny sets: validate on everything
    return {doc_ids.end() - std::ptrdiff_t(n_val), doc_ids.end()};
}

inline double weighted_f1_at(const std::vector<std::vector<double>>& probs,
                             const std::vector<std::vector<bool>>& actuals, double threshold) {
    return evaluate_predictions(kTopicLabels, probs, actuals, threshold).weighted.f1;
}

}  // namespace detail

struct TrainedClassifier {
    ModelArtifact artifact;
    TrainRunReport report;
};

// Stage two: a per-label logistic head over the frozen encoder, binary
// cross-entropy per label, Adam, best-epoch checkpointing by validation F1.
inline TrainedClassifier train_classifier(const EncoderBackend& backend, const DatasetSplit& split,
                                          const TrainingConfig& cfg) {
    cfg.validate();
    if (cfg.stage != TrainingConfig::Stage::classify)
        throw ConfigError("schema", "train_classifier requires stage=classify");
    if (split.train.empty()) throw TrainError("empty-corpus", "training split is empty");

    std::size_t bio_pos = 0, dis_pos = 0;
    for (const auto& chunk : split.train) {
        bio_pos += chunk.labels.bioagressor ? 1 : 0;
        dis_pos += chunk.labels.disease ? 1 : 0;
    }
    if (bio_pos == 0 || dis_pos == 0)
        throw TrainError("degenerate-labels",
                         "training data needs positive examples for both labels");

    const std::vector<std::string> val_ids = detail::validation_doc_ids(split.train);
    const std::set<std::string> val_set(val_ids.begin(), val_ids.end());
    std::set<std::string> all_docs;
    for (const auto& chunk : split.train) all_docs.insert(chunk.doc_id);
    const bool val_overlaps = val_set.size() == all_docs.size();

    std::vector<std::size_t> fit_index, val_index;
    for (std::size_t i = 0; i < split.train.size(); ++i) {
        const bool in_val = val_set.contains(split.train[i].doc_id);
        if (in_val) val_index.push_back(i);
        if (!in_val || val_overlaps) fit_index.push_back(i);
    }

    const std::size_t dim = backend.dim();
    const std::size_t n_labels = kTopicLabels.size();

    std::vector<std::vector<double>> features(split.train.size());
    for (std::size_t i = 0; i < split.train.size(); ++i) {
        features[i] = backend.encode(split.train[i].text);
    }
    const FeatureScaler scaler = FeatureScaler::fit(features, fit_index, dim);
    for (auto& feature : features) feature = scaler.transform(feature);
    std::vector<std::vector<bool>> val_actuals;
    for (std::size_t i : val_index) {
        val_actuals.push_back(
            {split.train[i].labels.bioagressor, split.train[i].labels.disease});
    }

    std::vector<double> weights(n_labels * dim, 0.0);
    // bias starts at the label's log-odds prior over the fit slice, so the
    // optimizer spends its steps on the feature weights, not on reaching the
    // base rate
    std::vector<double> bias(n_labels, 0.0);
    if (!fit_index.empty()) {
        for (std::size_t k = 0; k < n_labels; ++k) {
            std::size_t positives = 0;
            for (std::size_t i : fit_index) {
                const bool y = k == 0 ? split.train[i].labels.bioagressor
                                      : split.train[i].labels.disease;
                positives += y ? 1 : 0;
            }
            const double rate =
                std::clamp(double(positives) / double(fit_index.size()), 1e-6, 1.0 - 1e-6);
            bias[k] = std::log(rate / (1.0 - rate));
        }
    }

    const auto probabilities = [&](const std::vector<double>& x) {
        std::vector<double> p(n_labels);
        for (std::size_t k = 0; k < n_labels; ++k) {
            double z = bias[k];
            const double* row = &weights[k * dim];
            for (std::size_t d = 0; d < dim; ++d) z += row[d] * x[d];
            p[k] = 1.0 / (1.0 + std::exp(-z));
        }
        return p;
    };

    const auto validation_f1 = [&] {
        if (val_index.empty()) return 0.0;
        std::vector<std::vector<double>> probs;
        probs.reserve(val_index.size());
        for (std::size_t i : val_index) probs.push_back(probabilities(features[i]));
        return detail::weighted_f1_at(probs, val_actuals, cfg.threshold);
    };

    TrainRunReport report;
    report.stage = "classify";
    report.backend = backend.name();
    report.seed = cfg.seed;
    report.config = cfg.to_json();
    report.val_doc_ids = val_ids;
    report.val_overlaps_train = val_overlaps;

    std::vector<double> best_weights = weights;
    std::vector<double> best_bias = bias;
    std::size_t best_epoch = 0;
    double best_f1 = -1.0;

    if (cfg.clf_epochs == 0) {
        // zero-epoch identity: the artifact carries the untouched head
        best_f1 = validation_f1();
        best_epoch = 0;
    }

    AdamOptimizer adam(weights.size() + bias.size(), cfg.clf_learning_rate);
    std::vector<double> params(weights.size() + bias.size(), 0.0);
    std::vector<double> grad(params.size());

    std::vector<std::size_t> order = fit_index;
    for (std::size_t epoch = 1; epoch <= cfg.clf_epochs; ++epoch) {
        SplitMix64 shuffle_rng(SplitMix64(cfg.seed ^ (0xc1a55 + epoch)).next());
        shuffle_rng.shuffle(order);

        double epoch_loss = 0.0;
        std::size_t epoch_examples = 0;
        for (std::size_t batch_begin = 0; batch_begin < order.size();
             batch_begin += cfg.batch_size) {
            const std::size_t batch_end = std::min(order.size(), batch_begin + cfg.batch_size);
            std::fill(grad.begin(), grad.end(), 0.0);
            const double inv = 1.0 / double((batch_end - batch_begin) * n_labels);

            for (std::size_t b = batch_begin; b < batch_end; ++b) {
                const std::size_t i = order[b];
                const std::vector<double>& x = features[i];
                const bool y[2] = {split.train[i].labels.bioagressor,
                                   split.train[i].labels.disease};
                for (std::size_t k = 0; k < n_labels; ++k) {
                    double z = bias[k];
                    const double* row = &weights[k * dim];
                    for (std::size_t d = 0; d < dim; ++d) z += row[d] * x[d];
                    // stable binary cross-entropy from the logit
                    const double yk = y[k] ? 1.0 : 0.0;
                    epoch_loss += std::max(z, 0.0) - z * yk + std::log1p(std::exp(-std::abs(z)));
                    const double p = 1.0 / (1.0 + std::exp(-z));
                    const double dz = (p - yk) * inv;
                    double* grad_row = &grad[k * dim];
                    for (std::size_t d = 0; d < dim; ++d) grad_row[d] += dz * x[d];
                    grad[n_labels * dim + k] += dz;
                }
                ++epoch_examples;
            }
            std::copy(weights.begin(), weights.end(), params.begin());
            std::copy(bias.begin(), bias.end(), params.begin() + std::ptrdiff_t(weights.size()));
            adam.step(params, grad);
            std::copy(params.begin(), params.begin() + std::ptrdiff_t(weights.size()),
                      weights.begin());
            std::copy(params.begin() + std::ptrdiff_t(weights.size()), params.end(), bias.begin());
        }
        const double mean_loss =
            epoch_examples ? epoch_loss / double(epoch_examples * n_labels) : 0.0;
        if (!std::isfinite(mean_loss))
            throw TrainError("diverged", "non-finite training loss at epoch " +
                                             std::to_string(epoch));

        const double val_f1 = validation_f1();
        report.epochs.push_back({epoch, mean_loss, val_f1});
        if (val_f1 > best_f1) {
            best_f1 = val_f1;
            best_epoch = epoch;
            best_weights = weights;
            best_bias = bias;
        }
    }

    report.best_epoch = best_epoch;
    report.best_f1 = std::max(best_f1, 0.0);

    ModelArtifact artifact(backend.clone(), scaler, std::move(best_weights), std::move(best_bias),
                           cfg, best_epoch, report.best_f1);
    return {std::move(artifact), std::move(report)};
}

// Thresholded evaluation of an artifact over labeled examples.
inline MetricsReport evaluate(const ModelArtifact& artifact, const std::vector<Chunk>& examples,
                              double threshold, bool micro_auc = false) {
    if (examples.empty()) throw MetricError("empty", "test set is empty");
    std::vector<std::vector<double>> probs;
    std::vector<std::vector<bool>> actuals;
    probs.reserve(examples.size());
    for (const auto& chunk : examples) {
        probs.push_back(artifact.probabilities_for(chunk.text));
        actuals.push_back({chunk.labels.bioagressor, chunk.labels.disease});
    }
    return evaluate_predictions(kTopicLabels, probs, actuals, threshold, micro_auc);
}

}  // namespace phyto
