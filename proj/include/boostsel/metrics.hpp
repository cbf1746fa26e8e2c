#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "boostsel/common.hpp"

namespace boostsel {

// ============================ Confusion matrix ===============================

struct ConfusionMatrix {
    uint64_t tp = 0;
    uint64_t fp = 0;
    uint64_t tn = 0;
    uint64_t fn = 0;

    uint64_t total() const { return tp + fp + tn + fn; }

    nlohmann::json to_json() const {
        return {{"tp", tp}, {"fp", fp}, {"tn", tn}, {"fn", fn}};
    }
};

inline ConfusionMatrix confusion(const std::vector<uint8_t>& labels,
                                 const std::vector<uint8_t>& predictions) {
    require(labels.size() == predictions.size(), Errc::length_mismatch,
            "labels and predictions differ in length");
    require(!labels.empty(), Errc::length_mismatch, "empty label vector");
    ConfusionMatrix m;
    for (size_t i = 0; i < labels.size(); ++i) {
        if (labels[i]) {
            predictions[i] ? ++m.tp : ++m.fn;
        } else {
            predictions[i] ? ++m.fp : ++m.tn;
        }
    }
    return m;
}

// ============================== Scalar metrics ===============================

// Metrics with a zero denominator are reported as absent, never as 0, so CV
// aggregation stays honest on degenerate folds.
struct MetricsReport {
    std::optional<double> sensitivity;
    std::optional<double> specificity;
    std::optional<double> auc;
    std::optional<double> f1;
    std::optional<double> accuracy;
    ConfusionMatrix matrix;

    nlohmann::json to_json() const {
        auto field = [](const std::optional<double>& v) {
            return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
        };
        return {{"sensitivity", field(sensitivity)}, {"specificity", field(specificity)},
                {"auc", field(auc)},                 {"f1", field(f1)},
                {"accuracy", field(accuracy)},       {"confusion", matrix.to_json()}};
    }
};

inline MetricsReport scalar_metrics(const ConfusionMatrix& m) {
    require(m.total() > 0, Errc::length_mismatch, "empty confusion matrix");
    MetricsReport r;
    r.matrix = m;
    if (m.tp + m.fn > 0)
        r.sensitivity = static_cast<double>(m.tp) / static_cast<double>(m.tp + m.fn);
    if (m.tn + m.fp > 0)
        r.specificity = static_cast<double>(m.tn) / static_cast<double>(m.tn + m.fp);
    if (2 * m.tp + m.fp + m.fn > 0)
        r.f1 = static_cast<double>(2 * m.tp) / static_cast<double>(2 * m.tp + m.fp + m.fn);
    r.accuracy = static_cast<double>(m.tp + m.tn) / static_cast<double>(m.total());
    return r;
}

// ==================================== AUC ====================================

// Rank-sum AUC with ties credited 0.5. Rank sums stay exact multiples of 0.5,
// so the result equals the brute-force pairwise definition bit for bit.
inline double auc(const std::vector<uint8_t>& labels, const std::vector<double>& scores) {
    require(labels.size() == scores.size(), Errc::length_mismatch,
            "labels and scores differ in length");
    for (double s : scores)
        require(std::isfinite(s), Errc::invalid_config, "scores must be finite");

    size_t n_pos = 0;
    for (uint8_t y : labels) n_pos += y;
    const size_t n_neg = labels.size() - n_pos;
    require(n_pos > 0 && n_neg > 0, Errc::one_class_only, "AUC needs both classes");

    std::vector<size_t> order(labels.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](size_t a, size_t b) { return scores[a] < scores[b]; });

    double positive_rank_sum = 0.0;
    size_t i = 0;
    while (i < order.size()) {
        size_t j = i;
        while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
        // average 1-based rank of the tie group [i, j)
        const double avg_rank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
        for (size_t t = i; t < j; ++t)
            if (labels[order[t]]) positive_rank_sum += avg_rank;
        i = j;
    }
    const double np = static_cast<double>(n_pos);
    const double nn = static_cast<double>(n_neg);
    return (positive_rank_sum - np * (np + 1.0) / 2.0) / (np * nn);
}

// ============================== CV aggregation ===============================

struct CvSummary {
    struct Aggregate {
        std::optional<double> mean;
        std::optional<double> stddev;
        std::optional<double> ci_low;
        std::optional<double> ci_high;
    };

    std::vector<MetricsReport> per_fold;
    Aggregate sensitivity, specificity, auc, f1, accuracy;
    size_t k = 0;
    std::vector<std::string> warnings;

    nlohmann::json to_json() const {
        auto agg = [](const Aggregate& a) {
            nlohmann::json j;
            j["mean"] = a.mean ? nlohmann::json(*a.mean) : nlohmann::json(nullptr);
            j["stddev"] = a.stddev ? nlohmann::json(*a.stddev) : nlohmann::json(nullptr);
            j["ci95"] = a.ci_low ? nlohmann::json({*a.ci_low, *a.ci_high})
                                 : nlohmann::json(nullptr);
            return j;
        };
        nlohmann::json folds = nlohmann::json::array();
        for (const auto& f : per_fold) folds.push_back(f.to_json());
        return {{"k", k},
                {"folds", folds},
                {"sensitivity", agg(sensitivity)},
                {"specificity", agg(specificity)},
                {"auc", agg(auc)},
                {"f1", agg(f1)},
                {"accuracy", agg(accuracy)},
                {"warnings", warnings}};
    }
};

namespace detail {

inline CvSummary::Aggregate aggregate_metric(const std::vector<MetricsReport>& folds,
                                             std::optional<double> MetricsReport::*member,
                                             const char* name,
                                             std::vector<std::string>& warnings) {
    std::vector<double> xs;
    for (const auto& f : folds)
        if (f.*member) xs.push_back(*(f.*member));
    if (xs.size() < folds.size())
        warnings.push_back(std::string(name) + " undefined on " +
                           std::to_string(folds.size() - xs.size()) + " fold(s)");
    CvSummary::Aggregate a;
    if (xs.size() < 2) {
        if (!xs.empty())
            warnings.push_back(std::string(name) + " defined on fewer than 2 folds; "
                               "aggregate omitted");
        return a;
    }
    const double n = static_cast<double>(xs.size());
    const double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
    double ss = 0.0;
    for (double x : xs) ss += (x - mean) * (x - mean);
    const double stddev = std::sqrt(ss / (n - 1.0));
    a.mean = mean;
    a.stddev = stddev;
    const double half = 1.96 * stddev / std::sqrt(n);
    a.ci_low = std::max(0.0, mean - half);
    a.ci_high = std::min(1.0, mean + half);
    return a;
}

}  // namespace detail

// Per-metric sample mean, sample stddev (K-1), and normal-approximation 95%
// CI clamped to [0,1].
inline CvSummary aggregate_cv(const std::vector<MetricsReport>& per_fold) {
    require(per_fold.size() >= 2, Errc::too_few_folds, "need at least 2 folds");
    CvSummary s;
    s.per_fold = per_fold;
    s.k = per_fold.size();
    s.sensitivity = detail::aggregate_metric(per_fold, &MetricsReport::sensitivity,
                                             "sensitivity", s.warnings);
    s.specificity = detail::aggregate_metric(per_fold, &MetricsReport::specificity,
                                             "specificity", s.warnings);
    s.auc = detail::aggregate_metric(per_fold, &MetricsReport::auc, "auc", s.warnings);
    s.f1 = detail::aggregate_metric(per_fold, &MetricsReport::f1, "f1", s.warnings);
    s.accuracy = detail::aggregate_metric(per_fold, &MetricsReport::accuracy, "accuracy",
                                          s.warnings);
    return s;
}

// =============================== Text tables =================================

namespace detail {

inline std::string fmt4(const std::optional<double>& v) {
    if (!v) return "n/a";
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4f", *v);
    return buf;
}

}  // namespace detail

// Plain-text metric table, one value column.
inline std::string metrics_table_text(const MetricsReport& r, const std::string& column) {
    std::string out = "Metrics     " + column + "\n";
    auto row = [&out](const char* name, const std::optional<double>& v) {
        char buf[64];
        std::snprintf(buf, sizeof(buf), "%-11s %s\n", name, detail::fmt4(v).c_str());
        out += buf;
    };
    row("Spec.", r.specificity);
    row("Sens.", r.sensitivity);
    row("AUC", r.auc);
    row("F1-score", r.f1);
    row("Accuracy", r.accuracy);
    return out;
}

inline std::string confusion_table_text(const ConfusionMatrix& m) {
    char buf[256];
    std::snprintf(buf, sizeof(buf),
                  "            actual-neg  actual-pos\n"
                  "pred-neg    %-10llu  %-10llu\n"
                  "pred-pos    %-10llu  %-10llu\n",
                  static_cast<unsigned long long>(m.tn), static_cast<unsigned long long>(m.fn),
                  static_cast<unsigned long long>(m.fp), static_cast<unsigned long long>(m.tp));
    return buf;
}

inline std::string cv_table_text(const CvSummary& s) {
    std::string out = "Metrics     Mean    Std     CI95-low  CI95-high\n";
    auto row = [&out](const char* name, const CvSummary::Aggregate& a) {
        std::optional<double> lo = a.ci_low, hi = a.ci_high;
        char buf[128];
        std::snprintf(buf, sizeof(buf), "%-11s %-7s %-7s %-9s %-9s\n", name,
                      detail::fmt4(a.mean).c_str(), detail::fmt4(a.stddev).c_str(),
                      detail::fmt4(lo).c_str(), detail::fmt4(hi).c_str());
        out += buf;
    };
    row("Spec.", s.specificity);
    row("Sens.", s.sensitivity);
    row("AUC", s.auc);
    row("F1-score", s.f1);
    row("Accuracy", s.accuracy);
    return out;
}

}  // namespace boostsel
