#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "phyto/adam.hpp"
#include "phyto/errors.hpp"
#include "phyto/hash.hpp"
#include "phyto/io.hpp"
#include "phyto/rng.hpp"
#include "phyto/text.hpp"
#include "phyto/utf8.hpp"

namespace phyto {

inline constexpr std::string_view kBackendFormat = "phyto-backend-v1";

struct LmFinetuneOptions {
    double learning_rate = 1e-4;
    std::size_t epochs = 2;
    std::size_t batch_size = 8;
    std::uint64_t seed = 42;
    double mask_rate = 0.15;
};

struct LmFinetuneReport {
    double val_loss_before = 0.0;
    double val_loss_after = 0.0;
    std::vector<double> epoch_losses;
    std::size_t train_lines = 0;
    std::size_t val_lines = 0;
    bool val_overlaps_train = false;
};

// Text encoders are pluggable behind this contract. encode() is
// deterministic: the same text always yields the same fixed-dimension vector,
// truncated at max_sequence_length tokens.
class EncoderBackend {
public:
    virtual ~EncoderBackend() = default;

    virtual std::string name() const = 0;
    virtual std::size_t dim() const = 0;
    virtual std::size_t max_sequence_length() const = 0;
    virtual bool supports_lm_finetune() const = 0;
    virtual std::vector<double> encode(std::string_view text) const = 0;
    virtual void save(const fs::path& dir) const = 0;
    virtual std::unique_ptr<EncoderBackend> clone() const = 0;

    virtual LmFinetuneReport lm_finetune(const std::vector<std::string>&, const LmFinetuneOptions&) {
        throw TrainError("unsupported",
                         name() + " does not support language-model fine-tuning");
    }

    // Canonical lowercase tokens, head-first truncation.
    std::vector<std::string> tokenize(std::string_view text) const {
        std::vector<std::string> tokens;
        const std::string canonical = utf8::canonical(text);
        for (const auto& word : text::words(canonical)) {
            if (tokens.size() >= max_sequence_length()) break;
            tokens.emplace_back(word);
        }
        return tokens;
    }
};

namespace detail {

inline void l2_normalize(std::vector<double>& v) {
    double norm = 0.0;
    for (double x : v) norm += x * x;
    if (norm <= 0.0) return;
    norm = std::sqrt(norm);
    for (double& x : v) x /= norm;
}

inline void write_doubles(std::ofstream& out, const std::vector<double>& values) {
    out.write(reinterpret_cast<const char*>(values.data()),
              std::streamsize(values.size() * sizeof(double)));
}

inline std::vector<double> read_doubles(std::ifstream& in, std::size_t count,
                                        const std::string& what) {
    std::vector<double> values(count);
    in.read(reinterpret_cast<char*>(values.data()), std::streamsize(count * sizeof(double)));
    if (std::size_t(in.gcount()) != count * sizeof(double))
        throw PredictError("artifact", "truncated " + what);
    return values;
}

}  // namespace detail

// Frozen bag-of-hashed-tokens encoder for deterministic offline testing: each
// token increments one of `dim` buckets chosen by a seeded hash and the count
// vector is L2-normalized. No trainable state.
class OfflineHashEncoder final : public EncoderBackend {
public:
    explicit OfflineHashEncoder(std::size_t dim = 512, std::uint64_t seed = 1,
                                std::size_t max_seq = 256)
        : dim_(dim), seed_(seed), max_seq_(max_seq) {
        if (dim_ == 0) throw ConfigError("schema", "encoder dim must be positive");
    }

    std::string name() const override { return "offline-test"; }
    std::size_t dim() const override { return dim_; }
    std::size_t max_sequence_length() const override { return max_seq_; }
    bool supports_lm_finetune() const override { return false; }
    std::uint64_t seed() const { return seed_; }

    std::size_t bucket(std::string_view token) const {
        return std::size_t(SplitMix64(fnv1a64(token) ^ (seed_ * 0x9e3779b97f4a7c15ULL)).next() %
                           dim_);
    }

    std::vector<double> encode(std::string_view text) const override {
        std::vector<double> v(dim_, 0.0);
        for (const auto& token : tokenize(text)) v[bucket(token)] += 1.0;
        detail::l2_normalize(v);
        return v;
    }

    void save(const fs::path& dir) const override {
        fs::create_directories(dir);
        json j;
        j["format"] = std::string(kBackendFormat);
        j["kind"] = "offline-test";
        j["dim"] = dim_;
        j["seed"] = seed_;
        j["max_sequence_length"] = max_seq_;
        io::write_json_atomic(dir / "backend.json", j);
    }

    std::unique_ptr<EncoderBackend> clone() const override {
        return std::make_unique<OfflineHashEncoder>(*this);
    }

private:
    std::size_t dim_;
    std::uint64_t seed_;
    std::size_t max_seq_;
};

// Trainable encoder: hashed token embeddings mean-pooled into a document
// vector. Domain adaptation runs masked-token prediction with the output
// projection tied to the embedding table, so held-out masked-token loss is a
// measurable quantity at desk scale.
class HashedEmbeddingEncoder final : public EncoderBackend {
public:
    explicit HashedEmbeddingEncoder(std::size_t vocab_buckets = 2048, std::size_t dim = 64,
                                    std::uint64_t seed = 1, std::size_t max_seq = 256)
        : vocab_(vocab_buckets), dim_(dim), seed_(seed), max_seq_(max_seq) {
        if (vocab_ == 0 || dim_ == 0)
            throw ConfigError("schema", "encoder vocab/dim must be positive");
        embeddings_.resize(vocab_ * dim_);
        SplitMix64 rng(seed_);
        const double scale = 0.5 / double(dim_);
        for (double& w : embeddings_) w = (rng.uniform01() * 2.0 - 1.0) * scale;
    }

    std::string name() const override { return "hashed-embedding"; }
    std::size_t dim() const override { return dim_; }
    std::size_t max_sequence_length() const override { return max_seq_; }
    bool supports_lm_finetune() const override { return true; }
    std::size_t vocab_buckets() const { return vocab_; }
    std::uint64_t seed() const { return seed_; }
    const std::vector<double>& embeddings() const { return embeddings_; }

    std::size_t bucket(std::string_view token) const { return fnv1a64(token) % vocab_; }

    std::vector<double> encode(std::string_view text) const override {
        std::vector<double> v(dim_, 0.0);
        const auto tokens = tokenize(text);
        if (tokens.empty()) return v;
        for (const auto& token : tokens) {
            const double* row = &embeddings_[bucket(token) * dim_];
            for (std::size_t d = 0; d < dim_; ++d) v[d] += row[d];
        }
        for (double& x : v) x /= double(tokens.size());
        detail::l2_normalize(v);
        return v;
    }

    LmFinetuneReport lm_finetune(const std::vector<std::string>& corpus_lines,
                                 const LmFinetuneOptions& opts) override;

    void save(const fs::path& dir) const override {
        fs::create_directories(dir);
        json j;
        j["format"] = std::string(kBackendFormat);
        j["kind"] = "hashed-embedding";
        j["vocab_buckets"] = vocab_;
        j["dim"] = dim_;
        j["seed"] = seed_;
        j["max_sequence_length"] = max_seq_;
        io::write_json_atomic(dir / "backend.json", j);

        const fs::path tmp = dir / "embeddings.bin.tmp";
        {
            std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
            if (!out) throw BuildError("io", "cannot write " + tmp.string());
            out.write("PHYEMB1\n", 8);
            const std::uint64_t header[2] = {vocab_, dim_};
            out.write(reinterpret_cast<const char*>(header), sizeof header);
            detail::write_doubles(out, embeddings_);
            if (!out) throw BuildError("io", "write failed: " + tmp.string());
        }
        fs::rename(tmp, dir / "embeddings.bin");
    }

    std::unique_ptr<EncoderBackend> clone() const override {
        return std::make_unique<HashedEmbeddingEncoder>(*this);
    }

    static std::unique_ptr<HashedEmbeddingEncoder> load(const fs::path& dir, const json& meta) {
        auto encoder = std::make_unique<HashedEmbeddingEncoder>(
            meta.at("vocab_buckets").get<std::size_t>(), meta.at("dim").get<std::size_t>(),
            meta.at("seed").get<std::uint64_t>(),
            meta.at("max_sequence_length").get<std::size_t>());
        std::ifstream in(dir / "embeddings.bin", std::ios::binary);
        if (!in) throw PredictError("artifact", "missing embeddings.bin in " + dir.string());
        char magic[8];
        in.read(magic, 8);
        if (in.gcount() != 8 || std::memcmp(magic, "PHYEMB1\n", 8) != 0)
            throw PredictError("artifact", "bad embeddings header in " + dir.string());
        std::uint64_t header[2];
        in.read(reinterpret_cast<char*>(header), sizeof header);
        if (std::size_t(in.gcount()) != sizeof header || header[0] != encoder->vocab_ ||
            header[1] != encoder->dim_)
            throw PredictError("artifact", "embeddings shape mismatch in " + dir.string());
        encoder->embeddings_ =
            detail::read_doubles(in, encoder->vocab_ * encoder->dim_, "embeddings.bin");
        return encoder;
    }

private:
    std::size_t vocab_;
    std::size_t dim_;
    std::uint64_t seed_;
    std::size_t max_seq_;
    std::vector<double> embeddings_;  // vocab_ x dim_, row-major
};

namespace detail {

struct MaskedLine {
    std::vector<std::size_t> token_ids;
    std::vector<std::size_t> masked_positions;
};

inline std::vector<std::size_t> draw_masks(std::size_t n_tokens, double mask_rate,
                                           SplitMix64& rng) {
    std::vector<std::size_t> masked;
    for (std::size_t t = 0; t < n_tokens; ++t) {
        if (rng.uniform01() < mask_rate) masked.push_back(t);
    }
    if (masked.empty() && n_tokens > 0) {
        masked.push_back(std::size_t(rng.uniform(0, n_tokens - 1)));
    }
    return masked;
}

}  // namespace detail

inline LmFinetuneReport HashedEmbeddingEncoder::lm_finetune(
    const std::vector<std::string>& corpus_lines, const LmFinetuneOptions& opts) {
    std::vector<std::vector<std::size_t>> lines;
    for (const auto& line : corpus_lines) {
        std::vector<std::size_t> ids;
        for (const auto& token : tokenize(line)) ids.push_back(bucket(token));
        if (ids.size() >= 2) lines.push_back(std::move(ids));  // need context to predict
    }
    if (lines.empty()) throw TrainError("empty-corpus", "no usable lines in LM corpus");

    LmFinetuneReport report;
    std::size_t n_val = std::max<std::size_t>(1, lines.size() / 10);
    std::size_t n_train = lines.size() > n_val ? lines.size() - n_val : lines.size();
    if (lines.size() <= n_val) {
        report.val_overlaps_train = true;  // single-line corpora: measure on what we have
        n_val = lines.size();
    }
    report.train_lines = n_train;
    report.val_lines = n_val;

    // fixed masks for the validation slice so before/after losses compare
    // the same prediction problems
    std::vector<detail::MaskedLine> val_lines;
    for (std::size_t i = lines.size() - n_val; i < lines.size(); ++i) {
        SplitMix64 mask_rng(SplitMix64(opts.seed ^ 0x5EEDA11ULL ^ (i * 0x9e3779b97f4a7c15ULL)).next());
        detail::MaskedLine ml;
        ml.token_ids = lines[i];
        ml.masked_positions = detail::draw_masks(ml.token_ids.size(), opts.mask_rate, mask_rng);
        val_lines.push_back(std::move(ml));
    }

    const auto context_vector = [&](const std::vector<std::size_t>& ids, std::size_t skip) {
        std::vector<double> ctx(dim_, 0.0);
        for (std::size_t u = 0; u < ids.size(); ++u) {
            if (u == skip) continue;
            const double* row = &embeddings_[ids[u] * dim_];
            for (std::size_t d = 0; d < dim_; ++d) ctx[d] += row[d];
        }
        for (double& x : ctx) x /= double(ids.size() - 1);
        return ctx;
    };

    const auto masked_loss = [&](const detail::MaskedLine& ml, std::vector<double>* logits_buf) {
        double loss = 0.0;
        for (std::size_t pos : ml.masked_positions) {
            const std::vector<double> ctx = context_vector(ml.token_ids, pos);
            double max_logit = -1e300;
            std::vector<double>& logits = *logits_buf;
            for (std::size_t v = 0; v < vocab_; ++v) {
                double z = 0.0;
                const double* row = &embeddings_[v * dim_];
                for (std::size_t d = 0; d < dim_; ++d) z += row[d] * ctx[d];
                logits[v] = z;
                if (z > max_logit) max_logit = z;
            }
            double sum_exp = 0.0;
            for (std::size_t v = 0; v < vocab_; ++v) sum_exp += std::exp(logits[v] - max_logit);
            const double log_prob = logits[ml.token_ids[pos]] - max_logit - std::log(sum_exp);
            loss -= log_prob;
        }
        return loss / double(ml.masked_positions.size());
    };

    const auto validation_loss = [&] {
        std::vector<double> logits(vocab_);
        double total = 0.0;
        for (const auto& ml : val_lines) total += masked_loss(ml, &logits);
        return total / double(val_lines.size());
    };

    report.val_loss_before = validation_loss();

    AdamOptimizer adam(embeddings_.size(), opts.learning_rate);
    std::vector<std::size_t> order(n_train);
    for (std::size_t i = 0; i < n_train; ++i) order[i] = i;

    std::vector<double> logits(vocab_);
    std::vector<double> probs(vocab_);
    std::vector<double> grad(embeddings_.size());

    for (std::size_t epoch = 0; epoch < opts.epochs; ++epoch) {
        SplitMix64 shuffle_rng(SplitMix64(opts.seed ^ (0xe9000 + epoch)).next());
        shuffle_rng.shuffle(order);
        double epoch_loss = 0.0;
        std::size_t epoch_positions = 0;

        for (std::size_t batch_begin = 0; batch_begin < order.size();
             batch_begin += opts.batch_size) {
            const std::size_t batch_end = std::min(order.size(), batch_begin + opts.batch_size);
            std::fill(grad.begin(), grad.end(), 0.0);
            std::size_t batch_positions = 0;

            for (std::size_t b = batch_begin; b < batch_end; ++b) {
                const auto& ids = lines[order[b]];
                SplitMix64 mask_rng(SplitMix64(opts.seed ^ (epoch * 0x10001ULL) ^
                                               (order[b] * 0x9e3779b97f4a7c15ULL))
                                        .next());
                for (std::size_t pos : detail::draw_masks(ids.size(), opts.mask_rate, mask_rng)) {
                    const std::vector<double> ctx = context_vector(ids, pos);
                    double max_logit = -1e300;
                    for (std::size_t v = 0; v < vocab_; ++v) {
                        double z = 0.0;
                        const double* row = &embeddings_[v * dim_];
                        for (std::size_t d = 0; d < dim_; ++d) z += row[d] * ctx[d];
                        logits[v] = z;
                        if (z > max_logit) max_logit = z;
                    }
                    double sum_exp = 0.0;
                    for (std::size_t v = 0; v < vocab_; ++v) {
                        probs[v] = std::exp(logits[v] - max_logit);
                        sum_exp += probs[v];
                    }
                    for (std::size_t v = 0; v < vocab_; ++v) probs[v] /= sum_exp;
                    epoch_loss -= std::log(std::max(probs[ids[pos]], 1e-300));
                    ++batch_positions;
                    ++epoch_positions;

                    // d(loss)/d(logit_v) = p_v - [v == true id]
                    probs[ids[pos]] -= 1.0;
                    // embedding table is both output projection and context
                    std::vector<double> d_ctx(dim_, 0.0);
                    for (std::size_t v = 0; v < vocab_; ++v) {
                        const double dv = probs[v];
                        if (dv == 0.0) continue;
                        double* grad_row = &grad[v * dim_];
                        const double* row = &embeddings_[v * dim_];
                        for (std::size_t d = 0; d < dim_; ++d) {
                            grad_row[d] += dv * ctx[d];
                            d_ctx[d] += dv * row[d];
                        }
                    }
                    const double ctx_scale = 1.0 / double(ids.size() - 1);
                    for (std::size_t u = 0; u < ids.size(); ++u) {
                        if (u == pos) continue;
                        double* grad_row = &grad[ids[u] * dim_];
                        for (std::size_t d = 0; d < dim_; ++d)
                            grad_row[d] += d_ctx[d] * ctx_scale;
                    }
                }
            }
            if (batch_positions == 0) continue;
            for (double& g : grad) g /= double(batch_positions);
            adam.step(embeddings_, grad);
        }
        report.epoch_losses.push_back(epoch_positions ? epoch_loss / double(epoch_positions)
                                                      : 0.0);
    }

    report.val_loss_after = validation_loss();
    return report;
}

// Backend construction from a config key:
//   "offline-test[:dim=512,seed=1]"
//   "hashed-embedding[:buckets=2048,dim=64,seed=1]"
//   "pretrained:<local checkpoint directory>"
inline std::unique_ptr<EncoderBackend> load_backend(const fs::path& dir);

inline std::unique_ptr<EncoderBackend> make_backend(const std::string& spec,
                                                    std::size_t max_sequence_length) {
    const auto colon = spec.find(':');
    const std::string kind = colon == std::string::npos ? spec : spec.substr(0, colon);
    const std::string rest = colon == std::string::npos ? "" : spec.substr(colon + 1);

    if (kind == "pretrained") {
        if (rest.empty()) throw ConfigError("schema", "pretrained backend needs a path");
        return load_backend(rest);
    }

    std::map<std::string, std::uint64_t> options;
    if (!rest.empty()) {
        std::size_t begin = 0;
        while (begin <= rest.size()) {
            std::size_t end = rest.find(',', begin);
            if (end == std::string::npos) end = rest.size();
            const std::string pair = rest.substr(begin, end - begin);
            const std::size_t eq = pair.find('=');
            if (eq == std::string::npos || eq == 0)
                throw ConfigError("schema", "bad backend option '" + pair + "'");
            try {
                options[pair.substr(0, eq)] = std::stoull(pair.substr(eq + 1));
            } catch (const std::exception&) {
                throw ConfigError("schema", "bad backend option value in '" + pair + "'");
            }
            begin = end + 1;
        }
    }
    const auto option = [&](const char* key, std::uint64_t fallback) {
        const auto found = options.find(key);
        return found == options.end() ? fallback : found->second;
    };

    if (kind == "offline-test") {
        return std::make_unique<OfflineHashEncoder>(std::size_t(option("dim", 512)),
                                                    option("seed", 1), max_sequence_length);
    }
    if (kind == "hashed-embedding") {
        return std::make_unique<HashedEmbeddingEncoder>(std::size_t(option("buckets", 2048)),
                                                        std::size_t(option("dim", 64)),
                                                        option("seed", 1), max_sequence_length);
    }
    throw ConfigError("schema", "unknown backend '" + spec + "'");
}

inline std::unique_ptr<EncoderBackend> load_backend(const fs::path& dir) {
    json meta;
    try {
        meta = io::parse_json(io::read_file(dir / "backend.json"), "backend.json");
    } catch (const IngestError&) {
        throw PredictError("artifact", "cannot read backend metadata in " + dir.string());
    }
    try {
        if (meta.at("format").get<std::string>() != kBackendFormat)
            throw PredictError("artifact", "unsupported backend format in " + dir.string());
        const std::string kind = meta.at("kind").get<std::string>();
        if (kind == "offline-test") {
            return std::make_unique<OfflineHashEncoder>(
                meta.at("dim").get<std::size_t>(), meta.at("seed").get<std::uint64_t>(),
                meta.at("max_sequence_length").get<std::size_t>());
        }
        if (kind == "hashed-embedding") {
            return HashedEmbeddingEncoder::load(dir, meta);
        }
        throw PredictError("artifact", "unknown backend kind '" + kind + "'");
    } catch (const json::exception&) {
        throw PredictError("artifact", "malformed backend metadata in " + dir.string());
    }
}

}  // namespace phyto
