#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "boostsel/boosting.hpp"
#include "boostsel/common.hpp"
#include "boostsel/dataset.hpp"
#include "boostsel/parallel.hpp"
#include "boostsel/rng.hpp"

namespace boostsel {

// ========================== Importance reports ===============================

enum class ImportanceMethod { prediction_values_change, loss_function_change };

inline const char* to_string(ImportanceMethod m) {
    return m == ImportanceMethod::prediction_values_change ? "prediction_values_change"
                                                           : "loss_function_change";
}

enum class Normalization { percent, raw };

struct ImportanceEntry {
    std::string feature;
    double score = 0.0;
    size_t feature_index = 0;
};

// Ranked (feature, score) list; total order is score descending, then
// feature index ascending.
struct ImportanceReport {
    ImportanceMethod method = ImportanceMethod::prediction_values_change;
    Normalization normalization = Normalization::raw;
    std::vector<ImportanceEntry> scores;

    std::string to_csv() const {
        std::string out = "method,feature,score,rank\n";
        char buf[160];
        for (size_t i = 0; i < scores.size(); ++i) {
            std::snprintf(buf, sizeof(buf), "%s,%s,%.17g,%zu\n", to_string(method),
                          scores[i].feature.c_str(), scores[i].score, i + 1);
            out += buf;
        }
        return out;
    }

    nlohmann::json to_json() const {
        nlohmann::json entries = nlohmann::json::array();
        for (size_t i = 0; i < scores.size(); ++i)
            entries.push_back({{"feature", scores[i].feature},
                               {"score", scores[i].score},
                               {"rank", i + 1}});
        return {{"method", to_string(method)},
                {"normalization", normalization == Normalization::percent ? "percent" : "raw"},
                {"scores", entries}};
    }
};

namespace detail {

inline void sort_report(std::vector<ImportanceEntry>& entries) {
    std::sort(entries.begin(), entries.end(), [](const ImportanceEntry& a,
                                                 const ImportanceEntry& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.feature_index < b.feature_index;
    });
}

}  // namespace detail

// ===================== Prediction-values-change ranking ======================

// Per-feature sum of the realized split gains recorded during training,
// normalized to percent. Features never split on score exactly 0. With zero
// total gain (all null splits) the raw zeros are kept unnormalized.
inline ImportanceReport prediction_values_change(const GbdtModel& model) {
    if (!model.has_gain_records)
        raise(Errc::model_missing_gain_records,
              "model file carries no per-level gain records");
    std::vector<double> total(model.feature_names.size(), 0.0);
    for (const auto& tree : model.trees)
        for (const auto& lv : tree.levels)
            if (!lv.is_null()) total[lv.feature] += lv.gain;

    double sum = 0.0;
    for (double t : total) sum += t;

    ImportanceReport report;
    report.method = ImportanceMethod::prediction_values_change;
    report.normalization = sum > 0.0 ? Normalization::percent : Normalization::raw;
    report.scores.reserve(total.size());
    for (size_t f = 0; f < total.size(); ++f) {
        const double score = sum > 0.0 ? total[f] / sum * 100.0 : total[f];
        report.scores.push_back({model.feature_names[f], score, f});
    }
    detail::sort_report(report.scores);
    return report;
}

// ======================= Loss-function-change ranking ========================

// Permutation importance: mean increase of weighted logloss over seeded
// per-(feature, repeat) column permutations, reported raw. Streams derive
// from (seed, feature, repeat), so results are independent of evaluation
// order and thread count.
inline ImportanceReport loss_function_change(const GbdtModel& model, const DatasetMatrix& d,
                                             const std::vector<double>& weights,
                                             uint32_t repeats = 5, uint64_t seed = 0) {
    require(repeats >= 1, Errc::invalid_config, "repeats must be >= 1");
    if (d.feature_names != model.feature_names)
        raise(Errc::dimension_mismatch, "dataset features do not match the model's");
    require(weights.size() == d.rows(), Errc::length_mismatch, "weights length != rows");

    const size_t n = d.rows();
    std::vector<double> base_probs(n);
    for (size_t r = 0; r < n; ++r) base_probs[r] = predict_proba(model, d.row(r));
    const double baseline = weighted_logloss(d.labels, weights, base_probs);

    ImportanceReport report;
    report.method = ImportanceMethod::loss_function_change;
    report.normalization = Normalization::raw;
    report.scores.resize(d.features());

    parallel_for(d.features(), [&](size_t f) {
        std::vector<double> row(d.features());
        std::vector<double> probs(n);
        double sum = 0.0;
        for (uint32_t rep = 0; rep < repeats; ++rep) {
            Rng rng = Rng::stream(seed, f, rep);
            const std::vector<size_t> perm = rng.permutation(n);
            for (size_t r = 0; r < n; ++r) {
                const auto src = d.row(r);
                std::copy(src.begin(), src.end(), row.begin());
                row[f] = d.at(perm[r], f);
                probs[r] = predict_proba(model, row);
            }
            sum += weighted_logloss(d.labels, weights, probs) - baseline;
        }
        report.scores[f] = {d.feature_names[f], sum / repeats, f};
    });
    detail::sort_report(report.scores);
    return report;
}

// ================================= Top-K =====================================

// First min(k, features) names under the report's total order.
inline std::vector<std::string> top_k(const ImportanceReport& report, size_t k) {
    require(k >= 1, Errc::invalid_config, "k must be >= 1");
    const size_t take = std::min(k, report.scores.size());
    std::vector<std::string> names;
    names.reserve(take);
    for (size_t i = 0; i < take; ++i) names.push_back(report.scores[i].feature);
    return names;
}

}  // namespace boostsel
