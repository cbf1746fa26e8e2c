#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "boostsel/common.hpp"
#include "boostsel/dataset.hpp"
#include "boostsel/parallel.hpp"

namespace boostsel {

// ================================ Config =====================================

enum class ClassWeighting { none, balanced };

inline const char* to_string(ClassWeighting w) {
    return w == ClassWeighting::balanced ? "balanced" : "none";
}

struct TrainConfig {
    uint32_t iterations = 100;
    uint32_t depth = 6;
    double learning_rate = 0.1;
    double l2_leaf_reg = 3.0;
    ClassWeighting class_weighting = ClassWeighting::balanced;
    uint64_t seed = 0;
    size_t max_bins = 255;

    void validate() const {
        require(iterations >= 1, Errc::invalid_config, "iterations must be >= 1");
        require(depth >= 1 && depth <= 16, Errc::invalid_config, "depth must lie in [1, 16]");
        require(learning_rate > 0.0 && learning_rate <= 1.0, Errc::invalid_config,
                "learning_rate must lie in (0, 1]");
        require(l2_leaf_reg >= 0.0, Errc::invalid_config, "l2_leaf_reg must be >= 0");
        require(max_bins >= 2 && max_bins <= 65535, Errc::invalid_config,
                "max_bins must lie in [2, 65535]");
    }

    nlohmann::json to_json() const {
        return {{"iterations", iterations},   {"depth", depth},
                {"learning_rate", learning_rate}, {"l2_leaf_reg", l2_leaf_reg},
                {"class_weighting", to_string(class_weighting)}, {"seed", seed},
                {"max_bins", max_bins}};
    }

    static TrainConfig from_json(const nlohmann::json& j) {
        TrainConfig c;
        c.iterations = j.at("iterations").get<uint32_t>();
        c.depth = j.at("depth").get<uint32_t>();
        c.learning_rate = j.at("learning_rate").get<double>();
        c.l2_leaf_reg = j.at("l2_leaf_reg").get<double>();
        c.class_weighting = j.at("class_weighting").get<std::string>() == "balanced"
                                ? ClassWeighting::balanced
                                : ClassWeighting::none;
        c.seed = j.at("seed").get<uint64_t>();
        c.max_bins = j.at("max_bins").get<size_t>();
        return c;
    }
};

// w_c = N / (2 * N_c): total weight mass stays N and both classes contribute
// equally. Mode none returns (1, 1) unconditionally.
inline std::pair<double, double> class_weights(const std::vector<uint8_t>& labels,
                                               ClassWeighting mode) {
    if (mode == ClassWeighting::none) return {1.0, 1.0};
    size_t n_pos = 0;
    for (uint8_t y : labels) n_pos += y;
    const size_t n_neg = labels.size() - n_pos;
    require(n_pos > 0 && n_neg > 0, Errc::degenerate_labels,
            "balanced weighting needs both classes");
    const double n = static_cast<double>(labels.size());
    return {n / (2.0 * static_cast<double>(n_pos)), n / (2.0 * static_cast<double>(n_neg))};
}

inline std::vector<double> expand_weights(const std::vector<uint8_t>& labels, double w_pos,
                                          double w_neg) {
    std::vector<double> w(labels.size());
    for (size_t i = 0; i < labels.size(); ++i) w[i] = labels[i] ? w_pos : w_neg;
    return w;
}

// ================================= Model =====================================

// One level of an oblivious tree. A null split (threshold +inf) sends every
// row left; levels whose best gain was <= 0 degenerate to it.
struct SplitLevel {
    uint32_t feature = 0;
    double threshold = std::numeric_limits<double>::infinity();
    double gain = 0.0;

    bool is_null() const { return std::isinf(threshold); }
};

struct ObliviousTree {
    std::vector<SplitLevel> levels;       // length = depth
    std::vector<double> leaf_values;      // length = 2^depth, log-odds increments

    size_t depth() const { return levels.size(); }

    size_t leaf_for(std::span<const double> row) const {
        size_t idx = 0;
        for (size_t l = 0; l < levels.size(); ++l)
            if (row[levels[l].feature] > levels[l].threshold) idx |= size_t{1} << l;
        return idx;
    }
};

struct GbdtModel {
    double base_score = 0.0;  // log-odds
    double learning_rate = 0.1;
    std::vector<std::string> feature_names;
    std::vector<ObliviousTree> trees;
    double weight_positive = 1.0;
    double weight_negative = 1.0;
    TrainConfig config;
    bool has_gain_records = true;
    // weighted mean logloss after 0, 1, ..., iterations trees (not serialized)
    std::vector<double> training_loss;
};

// Stable logistic link clamped to the open interval (0, 1).
inline double logistic(double z) {
    double p;
    if (z >= 0.0) {
        p = 1.0 / (1.0 + std::exp(-z));
    } else {
        const double e = std::exp(z);
        p = e / (1.0 + e);
    }
    constexpr double eps = 1e-15;
    return std::min(std::max(p, eps), 1.0 - eps);
}

inline double predict_raw(const GbdtModel& m, std::span<const double> row) {
    if (row.size() != m.feature_names.size())
        raise(Errc::dimension_mismatch, "row has " + std::to_string(row.size()) +
                                            " values, model expects " +
                                            std::to_string(m.feature_names.size()));
    double score = m.base_score;
    for (const auto& tree : m.trees) score += tree.leaf_values[tree.leaf_for(row)];
    return score;
}

inline double predict_proba(const GbdtModel& m, std::span<const double> row) {
    return logistic(predict_raw(m, row));
}

inline bool predict_label(const GbdtModel& m, std::span<const double> row,
                          double threshold = 0.5) {
    require(threshold > 0.0 && threshold < 1.0, Errc::invalid_config,
            "threshold must lie in (0,1)");
    return predict_proba(m, row) >= threshold;
}

// Weighted mean logistic loss, sum(w * loss) / sum(w).
inline double weighted_logloss(const std::vector<uint8_t>& labels,
                               const std::vector<double>& weights,
                               const std::vector<double>& probs) {
    require(labels.size() == probs.size() && labels.size() == weights.size(),
            Errc::length_mismatch, "labels/weights/probs differ in length");
    double num = 0.0, den = 0.0;
    for (size_t i = 0; i < labels.size(); ++i) {
        const double p = probs[i];
        num += weights[i] * -(labels[i] ? std::log(p) : std::log(1.0 - p));
        den += weights[i];
    }
    return num / den;
}

// ================================ Training ===================================

namespace detail {

struct GradHist {
    std::vector<double> g;  // [leaf * bins + bin]
    std::vector<double> h;
};

inline double gain_term(double g, double h, double lambda) {
    const double den = h + lambda;
    return den > 0.0 ? g * g / den : 0.0;
}

}  // namespace detail

// Gradient boosting over oblivious trees on pre-binned data, minimizing
// class-weighted logistic loss. Each level picks the one (feature, edge)
// split maximizing the summed leaf gain
//   GL^2/(HL+l2) + GR^2/(HR+l2) - GP^2/(HP+l2)
// over all current leaves; leaf values are -lr * G / (H + l2). Histograms
// are accumulated per feature in fixed row order and reduced in feature
// order, so results do not depend on the thread count. Ties break to the
// lowest feature index, then the lowest edge index.
inline GbdtModel train(const BinnedDataset& binned, const std::vector<uint8_t>& labels,
                       const std::vector<double>& weights, const TrainConfig& config) {
    config.validate();
    const size_t n = binned.rows();
    const size_t n_features = binned.features();
    require(labels.size() == n, Errc::length_mismatch, "labels length != rows");
    require(weights.size() == n, Errc::length_mismatch, "weights length != rows");
    require(n >= 2, Errc::degenerate_labels, "training needs at least 2 rows");
    for (double w : weights)
        require(std::isfinite(w) && w >= 0.0, Errc::invalid_config,
                "weights must be finite and non-negative");

    double mass_pos = 0.0, mass_neg = 0.0;
    for (size_t i = 0; i < n; ++i) (labels[i] ? mass_pos : mass_neg) += weights[i];
    require(mass_pos > 0.0 && mass_neg > 0.0, Errc::degenerate_labels,
            "training needs positive weight in both classes");

    GbdtModel model;
    model.base_score = std::log(mass_pos / mass_neg);
    model.learning_rate = config.learning_rate;
    model.feature_names = binned.source_feature_names;
    model.config = config;
    model.has_gain_records = true;

    const double lambda = config.l2_leaf_reg;
    const double lr = config.learning_rate;
    const uint32_t depth = config.depth;
    const size_t n_leaves = size_t{1} << depth;

    std::vector<double> raw(n, model.base_score);
    std::vector<double> grad(n), hess(n), prob(n);
    std::vector<uint32_t> leaf_of(n);

    auto record_loss = [&] {
        double num = 0.0, den = 0.0;
        for (size_t i = 0; i < n; ++i) {
            const double p = logistic(raw[i]);
            num += weights[i] * -(labels[i] ? std::log(p) : std::log(1.0 - p));
            den += weights[i];
        }
        model.training_loss.push_back(num / den);
    };
    record_loss();

    // per-feature scratch, reused across levels
    std::vector<detail::GradHist> hists(n_features);
    struct Candidate {
        double score = -std::numeric_limits<double>::infinity();
        size_t edge = 0;
    };
    std::vector<Candidate> best_per_feature(n_features);

    for (uint32_t iter = 0; iter < config.iterations; ++iter) {
        for (size_t i = 0; i < n; ++i) {
            const double p = logistic(raw[i]);
            prob[i] = p;
            grad[i] = weights[i] * (p - static_cast<double>(labels[i]));
            hess[i] = weights[i] * p * (1.0 - p);
        }
        std::fill(leaf_of.begin(), leaf_of.end(), 0u);

        ObliviousTree tree;
        tree.levels.reserve(depth);

        for (uint32_t level = 0; level < depth; ++level) {
            const size_t leaves_now = size_t{1} << level;

            std::vector<double> parent_g(leaves_now, 0.0), parent_h(leaves_now, 0.0);
            for (size_t i = 0; i < n; ++i) {
                parent_g[leaf_of[i]] += grad[i];
                parent_h[leaf_of[i]] += hess[i];
            }
            double parent_term = 0.0;
            for (size_t l = 0; l < leaves_now; ++l)
                parent_term += detail::gain_term(parent_g[l], parent_h[l], lambda);

            parallel_for(n_features, [&](size_t f) {
                const auto& edges = binned.bin_edges[f];
                best_per_feature[f] = Candidate{};
                if (edges.empty()) return;
                const size_t bins = edges.size() + 1;
                auto& hist = hists[f];
                hist.g.assign(leaves_now * bins, 0.0);
                hist.h.assign(leaves_now * bins, 0.0);
                const auto& ids = binned.bin_indices[f];
                for (size_t i = 0; i < n; ++i) {
                    const size_t slot = leaf_of[i] * bins + ids[i];
                    hist.g[slot] += grad[i];
                    hist.h[slot] += hess[i];
                }
                // running left-side sums while the candidate edge advances
                std::vector<double> left_g(leaves_now, 0.0), left_h(leaves_now, 0.0);
                Candidate best;
                for (size_t edge = 0; edge + 1 < bins; ++edge) {
                    double score = 0.0;
                    for (size_t l = 0; l < leaves_now; ++l) {
                        left_g[l] += hist.g[l * bins + edge];
                        left_h[l] += hist.h[l * bins + edge];
                        score += detail::gain_term(left_g[l], left_h[l], lambda) +
                                 detail::gain_term(parent_g[l] - left_g[l],
                                                   parent_h[l] - left_h[l], lambda);
                    }
                    if (score > best.score) {
                        best.score = score;
                        best.edge = edge;
                    }
                }
                best_per_feature[f] = best;
            });

            size_t best_feature = 0;
            Candidate best;
            for (size_t f = 0; f < n_features; ++f) {
                if (best_per_feature[f].score > best.score) {
                    best = best_per_feature[f];
                    best_feature = f;
                }
            }

            const double gain = best.score - parent_term;
            SplitLevel split;
            if (std::isfinite(best.score) && gain > 0.0) {
                split.feature = static_cast<uint32_t>(best_feature);
                split.threshold = binned.bin_edges[best_feature][best.edge];
                split.gain = gain;
                const auto& ids = binned.bin_indices[best_feature];
                for (size_t i = 0; i < n; ++i)
                    if (ids[i] > best.edge) leaf_of[i] |= uint32_t{1} << level;
            }
            tree.levels.push_back(split);
        }

        std::vector<double> leaf_g(n_leaves, 0.0), leaf_h(n_leaves, 0.0);
        for (size_t i = 0; i < n; ++i) {
            leaf_g[leaf_of[i]] += grad[i];
            leaf_h[leaf_of[i]] += hess[i];
        }
        tree.leaf_values.resize(n_leaves);
        for (size_t l = 0; l < n_leaves; ++l) {
            const double den = leaf_h[l] + lambda;
            tree.leaf_values[l] = den > 0.0 ? -lr * leaf_g[l] / den : 0.0;
        }

        for (size_t i = 0; i < n; ++i) raw[i] += tree.leaf_values[leaf_of[i]];
        model.trees.push_back(std::move(tree));
        record_loss();
    }
    return model;
}

// ============================== Persistence ==================================

// Model file schema (version 1). Null-split thresholds (+inf) serialize as
// JSON null; finite thresholds rely on the serializer's exact round-trip of
// doubles, so reloaded models predict bit-identically.
inline nlohmann::json model_to_json(const GbdtModel& m) {
    nlohmann::json trees = nlohmann::json::array();
    for (const auto& tree : m.trees) {
        nlohmann::json levels = nlohmann::json::array();
        for (const auto& lv : tree.levels) {
            nlohmann::json level{{"feature", lv.feature}};
            level["threshold"] = lv.is_null() ? nlohmann::json(nullptr)
                                              : nlohmann::json(lv.threshold);
            if (m.has_gain_records) level["gain"] = lv.gain;
            levels.push_back(std::move(level));
        }
        trees.push_back({{"levels", levels}, {"leaf_values", tree.leaf_values}});
    }
    return {{"schema_version", 1},
            {"base_score", m.base_score},
            {"learning_rate", m.learning_rate},
            {"feature_names", m.feature_names},
            {"trees", trees},
            {"class_weights", {{"positive", m.weight_positive}, {"negative", m.weight_negative}}},
            {"config", m.config.to_json()}};
}

inline void save_model(const GbdtModel& m, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) raise(Errc::io_error, "cannot write '" + path + "'");
    out << model_to_json(m).dump(2) << '\n';
    if (!out) raise(Errc::io_error, "failed writing '" + path + "'");
}

inline GbdtModel model_from_json(const nlohmann::json& j) {
    if (!j.contains("schema_version"))
        raise(Errc::corrupt_model, "missing schema_version");
    if (!j.at("schema_version").is_number_integer() ||
        j.at("schema_version").get<int64_t>() != 1)
        raise(Errc::schema_version_mismatch,
              "unsupported schema_version " + j.at("schema_version").dump());
    try {
        GbdtModel m;
        m.base_score = j.at("base_score").get<double>();
        m.learning_rate = j.at("learning_rate").get<double>();
        m.feature_names = j.at("feature_names").get<std::vector<std::string>>();
        m.weight_positive = j.at("class_weights").at("positive").get<double>();
        m.weight_negative = j.at("class_weights").at("negative").get<double>();
        m.config = TrainConfig::from_json(j.at("config"));
        m.has_gain_records = true;
        for (const auto& jt : j.at("trees")) {
            ObliviousTree tree;
            for (const auto& jl : jt.at("levels")) {
                SplitLevel lv;
                lv.feature = jl.at("feature").get<uint32_t>();
                if (!jl.at("threshold").is_null()) lv.threshold = jl.at("threshold").get<double>();
                if (jl.contains("gain"))
                    lv.gain = jl.at("gain").get<double>();
                else
                    m.has_gain_records = false;
                tree.levels.push_back(lv);
            }
            tree.leaf_values = jt.at("leaf_values").get<std::vector<double>>();
            if (tree.leaf_values.size() != size_t{1} << tree.levels.size())
                raise(Errc::corrupt_model, "leaf_values length does not match depth");
            for (const auto& lv : tree.levels)
                if (lv.feature >= m.feature_names.size())
                    raise(Errc::corrupt_model, "split feature index out of range");
            m.trees.push_back(std::move(tree));
        }
        return m;
    } catch (const Error&) {
        throw;
    } catch (const std::exception& e) {
        raise(Errc::corrupt_model, e.what());
    }
}

inline GbdtModel load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) raise(Errc::io_error, "cannot open '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        raise(Errc::corrupt_model, std::string("unparseable model file: ") + e.what());
    }
    return model_from_json(j);
}

}  // namespace boostsel
