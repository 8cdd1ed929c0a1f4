#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "phyto/errors.hpp"

namespace phyto {

using json = nlohmann::ordered_json;

struct ConfusionCounts {
    std::size_t tp = 0, fp = 0, tn = 0, fn = 0;

    std::size_t total() const { return tp + fp + tn + fn; }
};

inline ConfusionCounts confusion_counts(const std::vector<std::pair<bool, bool>>& decisions) {
    ConfusionCounts c;
    for (const auto& [predicted, actual] : decisions) {
        if (predicted && actual) ++c.tp;
        else if (predicted && !actual) ++c.fp;
        else if (!predicted && actual) ++c.fn;
        else ++c.tn;
    }
    return c;
}

// Division-by-zero returns 0 with the degenerate flag set, so batch
// evaluation always completes.
struct MetricValue {
    double value = 0.0;
    bool degenerate = false;
};

inline MetricValue precision(const ConfusionCounts& c) {
    if (c.tp + c.fp == 0) return {0.0, true};
    return {double(c.tp) / double(c.tp + c.fp), false};
}

inline MetricValue recall(const ConfusionCounts& c) {
    if (c.tp + c.fn == 0) return {0.0, true};
    return {double(c.tp) / double(c.tp + c.fn), false};
}

inline MetricValue f1_score(const ConfusionCounts& c) {
    const MetricValue p = precision(c);
    const MetricValue r = recall(c);
    if (p.degenerate && r.degenerate) return {0.0, true};
    if (p.value + r.value == 0.0) return {0.0, true};
    return {2.0 * p.value * r.value / (p.value + r.value), false};
}

inline MetricValue accuracy(const ConfusionCounts& c) {
    if (c.total() == 0) return {0.0, true};
    return {double(c.tp + c.tn) / double(c.total()), false};
}

// Probability that a uniformly random positive outranks a uniformly random
// negative, ties at half weight. Computed with average ranks (the
// Mann-Whitney statistic); tests check it against direct pair counting.
inline double roc_auc(const std::vector<double>& scores, const std::vector<bool>& actuals) {
    if (scores.size() != actuals.size())
        throw MetricError("shape", "scores and actuals differ in length");
    std::size_t n_pos = 0;
    for (bool a : actuals) n_pos += a ? 1 : 0;
    const std::size_t n_neg = actuals.size() - n_pos;
    if (n_pos == 0 || n_neg == 0)
        throw MetricError("single-class", "ROC-AUC needs at least one positive and one negative");

    std::vector<std::size_t> order(scores.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    double rank_sum_pos = 0.0;
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
        const double avg_rank = 0.5 * double(i + 1 + j);  // ranks are 1-based
        for (std::size_t k = i; k < j; ++k) {
            if (actuals[order[k]]) rank_sum_pos += avg_rank;
        }
        i = j;
    }
    const double u = rank_sum_pos - 0.5 * double(n_pos) * double(n_pos + 1);
    return u / (double(n_pos) * double(n_neg));
}

struct LabelMetrics {
    ConfusionCounts counts;
    MetricValue accuracy;
    MetricValue precision;
    MetricValue recall;
    MetricValue f1;
    MetricValue roc_auc;  // degenerate when the label has a single class
    std::size_t support = 0;
};

struct WeightedMetrics {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    double roc_auc = 0.0;
    bool roc_auc_degenerate = false;  // no label had both classes
};

struct MetricsReport {
    std::vector<std::string> labels;
    std::map<std::string, LabelMetrics> per_label;
    WeightedMetrics weighted;
    std::size_t n_examples = 0;
    double threshold = 0.5;
    bool micro_auc = false;
    std::vector<std::string> notes;

    json to_json() const {
        json j;
        j["n_examples"] = n_examples;
        j["threshold"] = threshold;
        json per;
        for (const auto& label : labels) {
            const LabelMetrics& m = per_label.at(label);
            json lm;
            lm["accuracy"] = m.accuracy.value;
            lm["precision"] = m.precision.value;
            lm["recall"] = m.recall.value;
            lm["f1"] = m.f1.value;
            lm["roc_auc"] = m.roc_auc.degenerate ? json() : json(m.roc_auc.value);
            lm["support"] = m.support;
            lm["counts"] = {{"tp", m.counts.tp}, {"fp", m.counts.fp},
                            {"tn", m.counts.tn}, {"fn", m.counts.fn}};
            if (m.accuracy.degenerate || m.precision.degenerate || m.recall.degenerate ||
                m.f1.degenerate)
                lm["degenerate"] = true;
            per[label] = lm;
        }
        j["per_label"] = per;
        j["weighted"] = {{"precision", weighted.precision},
                         {"recall", weighted.recall},
                         {"f1", weighted.f1},
                         {"roc_auc", weighted.roc_auc_degenerate ? json() : json(weighted.roc_auc)}};
        j["micro_auc"] = micro_auc;
        if (!notes.empty()) j["notes"] = notes;
        return j;
    }
};

// Per-example predictions for one label column each: probabilities[i][k] and
// actuals[i][k] refer to example i, label k.
inline MetricsReport evaluate_predictions(const std::vector<std::string>& labels,
                                          const std::vector<std::vector<double>>& probabilities,
                                          const std::vector<std::vector<bool>>& actuals,
                                          double threshold, bool micro_auc = false) {
    if (probabilities.size() != actuals.size())
        throw MetricError("shape", "probabilities/actuals size mismatch");
    if (probabilities.empty()) throw MetricError("empty", "no examples to evaluate");

    MetricsReport report;
    report.labels = labels;
    report.n_examples = probabilities.size();
    report.threshold = threshold;
    report.micro_auc = micro_auc;

    double weight_total = 0.0, wp = 0.0, wr = 0.0, wf = 0.0;
    double auc_weight_total = 0.0, wauc = 0.0;

    for (std::size_t k = 0; k < labels.size(); ++k) {
        std::vector<std::pair<bool, bool>> decisions;
        std::vector<double> scores;
        std::vector<bool> truth;
        decisions.reserve(probabilities.size());
        for (std::size_t i = 0; i < probabilities.size(); ++i) {
            const double p = probabilities[i].at(k);
            const bool actual = actuals[i].at(k);
            decisions.emplace_back(p >= threshold, actual);
            scores.push_back(p);
            truth.push_back(actual);
        }
        LabelMetrics m;
        m.counts = confusion_counts(decisions);
        m.accuracy = accuracy(m.counts);
        m.precision = precision(m.counts);
        m.recall = recall(m.counts);
        m.f1 = f1_score(m.counts);
        m.support = m.counts.tp + m.counts.fn;
        try {
            m.roc_auc = {roc_auc(scores, truth), false};
        } catch (const MetricError&) {
            m.roc_auc = {0.0, true};
            report.notes.push_back("label '" + labels[k] +
                                   "' has a single class; ROC-AUC excluded from the weighted average");
        }
        const double w = double(m.support);
        weight_total += w;
        wp += w * m.precision.value;
        wr += w * m.recall.value;
        wf += w * m.f1.value;
        if (!m.roc_auc.degenerate) {
            auc_weight_total += w;
            wauc += w * m.roc_auc.value;
        }
        report.per_label[labels[k]] = m;
    }

    if (weight_total > 0.0) {
        report.weighted.precision = wp / weight_total;
        report.weighted.recall = wr / weight_total;
        report.weighted.f1 = wf / weight_total;
    }
    if (micro_auc) {
        // pool every (example, label) pair into one ranking
        std::vector<double> scores;
        std::vector<bool> truth;
        for (std::size_t i = 0; i < probabilities.size(); ++i) {
            for (std::size_t k = 0; k < labels.size(); ++k) {
                scores.push_back(probabilities[i].at(k));
                truth.push_back(actuals[i].at(k));
            }
        }
        try {
            report.weighted.roc_auc = roc_auc(scores, truth);
        } catch (const MetricError&) {
            report.weighted.roc_auc_degenerate = true;
        }
    } else if (auc_weight_total > 0.0) {
        report.weighted.roc_auc = wauc / auc_weight_total;
    } else {
        report.weighted.roc_auc_degenerate = true;
    }
    return report;
}

namespace detail {

inline std::string format_metric(double value) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4f", value);
    return buf;
}

}  // namespace detail

// Aligned plain-text table: one row per label plus the weighted-average row.
inline std::string render_table(const MetricsReport& report) {
    const std::vector<std::string> header = {"", "Accuracy", "Precision", "Recall",
                                             "F Score", "ROC_AUC"};
    std::vector<std::vector<std::string>> rows;
    rows.push_back(header);
    for (const auto& label : report.labels) {
        const LabelMetrics& m = report.per_label.at(label);
        std::string shown = label;
        if (!shown.empty()) shown[0] = char(std::toupper((unsigned char)shown[0]));
        rows.push_back({shown, detail::format_metric(m.accuracy.value),
                        detail::format_metric(m.precision.value),
                        detail::format_metric(m.recall.value),
                        detail::format_metric(m.f1.value), ""});
    }
    rows.push_back({"Weighted Average", "", detail::format_metric(report.weighted.precision),
                    detail::format_metric(report.weighted.recall),
                    detail::format_metric(report.weighted.f1),
                    report.weighted.roc_auc_degenerate
                        ? std::string("n/a")
                        : detail::format_metric(report.weighted.roc_auc)});

    std::vector<std::size_t> widths(header.size(), 0);
    for (const auto& row : rows) {
        for (std::size_t c = 0; c < row.size(); ++c) widths[c] = std::max(widths[c], row[c].size());
    }
    std::string out;
    for (const auto& row : rows) {
        for (std::size_t c = 0; c < row.size(); ++c) {
            std::string cell = row[c];
            cell.resize(widths[c], ' ');
            if (c) out += "  ";
            out += cell;
        }
        while (!out.empty() && out.back() == ' ') out.pop_back();
        out += '\n';
    }
    return out;
}

}  // namespace phyto
