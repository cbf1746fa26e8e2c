#pragma once

#include <algorithm>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "boostsel/boosting.hpp"
#include "boostsel/common.hpp"
#include "boostsel/dataset.hpp"
#include "boostsel/knn.hpp"
#include "boostsel/metrics.hpp"

namespace boostsel {

// Scoring interface a cross-validation fold trains once and queries per row.
struct FoldScorer {
    std::function<double(std::span<const double>)> score;
    std::function<bool(std::span<const double>)> label;
};

using ModelFactory = std::function<FoldScorer(const DatasetMatrix& train)>;

inline MetricsReport evaluate_scores(const std::vector<uint8_t>& labels,
                                     const std::vector<double>& scores,
                                     const std::vector<uint8_t>& predictions) {
    MetricsReport r = scalar_metrics(confusion(labels, predictions));
    r.auc = auc(labels, scores);
    return r;
}

// Scores a dataset with a trained boosting model.
inline MetricsReport evaluate_model(const GbdtModel& model, const DatasetMatrix& d,
                                    double threshold = 0.5) {
    require(threshold > 0.0 && threshold < 1.0, Errc::invalid_config,
            "threshold must lie in (0,1)");
    std::vector<double> scores(d.rows());
    std::vector<uint8_t> preds(d.rows());
    for (size_t r = 0; r < d.rows(); ++r) {
        scores[r] = predict_proba(model, d.row(r));
        preds[r] = scores[r] >= threshold ? 1 : 0;
    }
    return evaluate_scores(d.labels, scores, preds);
}

// Trains via the factory on each fold's complement and evaluates on the
// held-out fold; per-fold reports are aggregated with aggregate_cv.
inline CvSummary cross_validate(const DatasetMatrix& d, const FoldPlan& plan,
                                const ModelFactory& factory) {
    std::vector<MetricsReport> per_fold;
    per_fold.reserve(plan.folds.size());
    for (size_t f = 0; f < plan.folds.size(); ++f) {
        std::vector<size_t> train_rows;
        train_rows.reserve(d.rows());
        for (size_t g = 0; g < plan.folds.size(); ++g)
            if (g != f)
                train_rows.insert(train_rows.end(), plan.folds[g].begin(), plan.folds[g].end());
        std::sort(train_rows.begin(), train_rows.end());

        const DatasetMatrix train = d.subset(train_rows);
        const FoldScorer scorer = factory(train);

        const auto& holdout = plan.folds[f];
        std::vector<uint8_t> truth(holdout.size()), preds(holdout.size());
        std::vector<double> scores(holdout.size());
        for (size_t i = 0; i < holdout.size(); ++i) {
            const auto row = d.row(holdout[i]);
            truth[i] = d.labels[holdout[i]];
            scores[i] = scorer.score(row);
            preds[i] = scorer.label(row) ? 1 : 0;
        }
        per_fold.push_back(evaluate_scores(truth, scores, preds));
    }
    return aggregate_cv(per_fold);
}

// Factory for the boosting model: bins the fold's training rows, resolves
// class weights per the config, trains, and scores raw feature rows.
inline ModelFactory gbdt_factory(const TrainConfig& config, double threshold = 0.5) {
    return [config, threshold](const DatasetMatrix& fold_train) {
        const auto [w_pos, w_neg] = class_weights(fold_train.labels, config.class_weighting);
        const auto weights = expand_weights(fold_train.labels, w_pos, w_neg);
        const BinnedDataset binned = quantile_bin(fold_train, config.max_bins);
        auto model = std::make_shared<GbdtModel>(train(binned, fold_train.labels, weights, config));
        FoldScorer s;
        s.score = [model](std::span<const double> row) { return predict_proba(*model, row); };
        s.label = [model, threshold](std::span<const double> row) {
            return predict_label(*model, row, threshold);
        };
        return s;
    };
}

inline ModelFactory knn_factory(size_t k) {
    return [k](const DatasetMatrix& train) {
        auto model = std::make_shared<KnnModel>(knn_fit(train, k));
        FoldScorer s;
        s.score = [model](std::span<const double> row) { return knn_predict_score(*model, row); };
        s.label = [model](std::span<const double> row) { return knn_predict_label(*model, row); };
        return s;
    };
}

}  // namespace boostsel
