#pragma once

#include <algorithm>
#include <cstdio>
#include <optional>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "boostsel/boosting.hpp"
#include "boostsel/common.hpp"
#include "boostsel/dataset.hpp"
#include "boostsel/evaluation.hpp"
#include "boostsel/importance.hpp"
#include "boostsel/metrics.hpp"

namespace boostsel {

// ============================= Configuration =================================

struct SelectionConfig {
    size_t top_k = 100;
    std::vector<std::string> exclusion_list;
    std::vector<std::string> always_include;
    TrainConfig wide_config;
    TrainConfig compact_config;
    uint64_t seed = 0;
    // The compact model is trained on an independent re-split of the reduced
    // dataset; defaults to the primary seed when unset.
    std::optional<uint64_t> compact_seed;
    uint32_t loss_repeats = 5;
    size_t cv_folds = 10;

    void validate() const {
        require(top_k >= 1, Errc::invalid_config, "top_k must be >= 1");
        wide_config.validate();
        compact_config.validate();
        require(cv_folds >= 2, Errc::invalid_config, "cv_folds must be >= 2");
        std::unordered_set<std::string> excluded(exclusion_list.begin(), exclusion_list.end());
        for (const auto& name : always_include)
            require(!excluded.count(name), Errc::invalid_config,
                    "'" + name + "' appears in both exclusion_list and always_include");
    }

    nlohmann::json to_json() const {
        return {{"top_k", top_k},
                {"exclusion_list", exclusion_list},
                {"always_include", always_include},
                {"wide_config", wide_config.to_json()},
                {"compact_config", compact_config.to_json()},
                {"seed", seed},
                {"compact_seed", compact_seed ? nlohmann::json(*compact_seed)
                                              : nlohmann::json(nullptr)},
                {"loss_repeats", loss_repeats},
                {"cv_folds", cv_folds}};
    }
};

struct DatasetFingerprint {
    size_t rows = 0;
    size_t features = 0;
    std::string content_hash;

    nlohmann::json to_json() const {
        return {{"rows", rows}, {"features", features}, {"content_hash", content_hash}};
    }
};

struct SelectionResult {
    std::vector<std::string> intersection;     // ordered by prediction-values-change rank
    std::vector<std::string> after_exclusion;  // subset of intersection, order preserved
    std::vector<std::string> final_features;   // after_exclusion plus always_include
    ImportanceReport report_prediction;
    ImportanceReport report_loss;
    SelectionConfig config_echo;
    DatasetFingerprint fingerprint;
    std::vector<std::string> warnings;

    nlohmann::json to_json() const {
        return {{"intersection", intersection},
                {"after_exclusion", after_exclusion},
                {"final_features", final_features},
                {"reports",
                 {{"prediction_values_change", report_prediction.to_json()},
                  {"loss_function_change", report_loss.to_json()}}},
                {"provenance",
                 {{"config", config_echo.to_json()},
                  {"dataset", fingerprint.to_json()},
                  {"warnings", warnings}}}};
    }
};

// Raised when the intersection survives no feature after exclusion; carries
// both importance reports so callers can still write them out.
class EmptySelectionError : public Error {
public:
    EmptySelectionError(ImportanceReport prediction, ImportanceReport loss)
        : Error(Errc::empty_selection, "no feature survives intersection and exclusion"),
          report_prediction(std::move(prediction)),
          report_loss(std::move(loss)) {}

    ImportanceReport report_prediction;
    ImportanceReport report_loss;
};

// ============================ Set operations =================================

// Set intersection of the two top-k lists, ordered by the first report's rank.
inline std::vector<std::string> intersect_top_k(const ImportanceReport& r1,
                                                const ImportanceReport& r2, size_t k) {
    auto universe = [](const ImportanceReport& r) {
        std::unordered_set<std::string> u;
        for (const auto& e : r.scores) u.insert(e.feature);
        return u;
    };
    if (universe(r1) != universe(r2))
        raise(Errc::feature_universe_mismatch, "reports cover different feature sets");

    const auto top1 = top_k(r1, k);
    const auto top2 = top_k(r2, k);
    const std::unordered_set<std::string> in2(top2.begin(), top2.end());
    std::vector<std::string> out;
    for (const auto& name : top1)
        if (in2.count(name)) out.push_back(name);
    return out;
}

// Order-preserving removal. Excluded names that never occur are collected as
// warnings for provenance rather than treated as errors.
inline std::vector<std::string> apply_exclusions(const std::vector<std::string>& features,
                                                 const std::vector<std::string>& exclusion_list,
                                                 std::vector<std::string>* warnings = nullptr) {
    const std::unordered_set<std::string> excluded(exclusion_list.begin(), exclusion_list.end());
    std::vector<std::string> out;
    out.reserve(features.size());
    std::unordered_set<std::string> present(features.begin(), features.end());
    for (const auto& name : features)
        if (!excluded.count(name)) out.push_back(name);
    if (warnings)
        for (const auto& name : exclusion_list)
            if (!present.count(name))
                warnings->push_back("excluded feature '" + name + "' not in candidate list");
    return out;
}

// ============================== The pipeline =================================

struct PipelineOutcome {
    SelectionResult selection;
    GbdtModel compact_model;
    MetricsReport validation;  // compact model on the held-out 20%
    CvSummary cv;              // stratified k-fold on the compact training part
};

namespace detail {

inline std::string hash_hex(uint64_t h) {
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace detail

// Wide model on an 80/20 stratified split, dual importance ranking, top-k
// intersection, exclusion filtering, projection, and a compact model retrained
// on a fresh split of the reduced dataset with validation metrics plus
// stratified k-fold cross-validation.
inline PipelineOutcome run_pipeline(const DatasetMatrix& d, const SelectionConfig& cfg) {
    cfg.validate();
    d.require_all_finite();
    require(d.both_classes_present(), Errc::degenerate_labels,
            "pipeline needs both classes present");
    for (const auto& name : cfg.always_include)
        if (!d.feature_index(name))
            raise(Errc::missing_column, "always_include feature '" + name + "' not in dataset");

    constexpr double kTrainFraction = 0.8;

    // 1) wide model on the training side
    const SplitPlan wide_split = stratified_split(d, kTrainFraction, cfg.seed);
    const DatasetMatrix wide_train = d.subset(wide_split.train_indices);
    const auto [wide_wpos, wide_wneg] =
        class_weights(wide_train.labels, cfg.wide_config.class_weighting);
    const auto wide_weights = expand_weights(wide_train.labels, wide_wpos, wide_wneg);
    const BinnedDataset wide_binned = quantile_bin(wide_train, cfg.wide_config.max_bins);
    const GbdtModel wide_model =
        train(wide_binned, wide_train.labels, wide_weights, cfg.wide_config);

    // 2) dual importance ranking on the training side
    SelectionResult sel;
    sel.report_prediction = prediction_values_change(wide_model);
    sel.report_loss = loss_function_change(wide_model, wide_train, wide_weights,
                                           cfg.loss_repeats, cfg.seed);

    // 3) top-k intersection, then the exclusion filter
    sel.intersection = intersect_top_k(sel.report_prediction, sel.report_loss, cfg.top_k);
    sel.after_exclusion = apply_exclusions(sel.intersection, cfg.exclusion_list, &sel.warnings);
    if (sel.after_exclusion.empty())
        throw EmptySelectionError(sel.report_prediction, sel.report_loss);

    // 4) final features = survivors plus always_include, ordered by the
    //    prediction-values-change ranking
    {
        std::unordered_set<std::string> chosen(sel.after_exclusion.begin(),
                                               sel.after_exclusion.end());
        for (const auto& name : cfg.always_include) chosen.insert(name);
        std::unordered_map<std::string, size_t> rank;
        for (size_t i = 0; i < sel.report_prediction.scores.size(); ++i)
            rank[sel.report_prediction.scores[i].feature] = i;
        sel.final_features.assign(chosen.begin(), chosen.end());
        std::sort(sel.final_features.begin(), sel.final_features.end(),
                  [&rank](const std::string& a, const std::string& b) {
                      return rank.at(a) < rank.at(b);
                  });
    }

    sel.config_echo = cfg;
    sel.fingerprint = {d.rows(), d.features(), detail::hash_hex(d.content_hash())};

    // 5) compact model on the projected dataset, fresh split
    const DatasetMatrix compact_data = d.project(sel.final_features);
    const uint64_t compact_seed = cfg.compact_seed.value_or(cfg.seed);
    const SplitPlan compact_split = stratified_split(compact_data, kTrainFraction, compact_seed);
    const DatasetMatrix compact_train = compact_data.subset(compact_split.train_indices);
    const DatasetMatrix compact_validation = compact_data.subset(compact_split.validation_indices);

    const auto [cpos, cneg] = class_weights(compact_train.labels,
                                            cfg.compact_config.class_weighting);
    const auto compact_weights = expand_weights(compact_train.labels, cpos, cneg);
    const BinnedDataset compact_binned = quantile_bin(compact_train, cfg.compact_config.max_bins);

    PipelineOutcome out;
    out.compact_model =
        train(compact_binned, compact_train.labels, compact_weights, cfg.compact_config);
    out.validation = evaluate_model(out.compact_model, compact_validation);

    const FoldPlan folds = stratified_kfold(compact_train, cfg.cv_folds, compact_seed);
    out.cv = cross_validate(compact_train, folds, gbdt_factory(cfg.compact_config));
    out.selection = std::move(sel);
    return out;
}

}  // namespace boostsel
