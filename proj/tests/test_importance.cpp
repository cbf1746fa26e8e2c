#include <catch2/catch_amalgamated.hpp>

#include "helpers/test_support.hpp"

using namespace boostsel;
using Catch::Approx;

namespace {

GbdtModel model_with_gains(const std::vector<std::pair<uint32_t, double>>& level_gains,
                           size_t n_features) {
    GbdtModel m;
    for (size_t f = 0; f < n_features; ++f) m.feature_names.push_back("f" + std::to_string(f));
    m.config.depth = 1;
    ObliviousTree tree;
    for (const auto& [feature, gain] : level_gains) tree.levels.push_back({feature, 0.5, gain});
    tree.leaf_values.assign(size_t{1} << tree.levels.size(), 0.0);
    m.config.depth = static_cast<uint32_t>(tree.levels.size());
    m.trees.push_back(tree);
    return m;
}

}  // namespace

TEST_CASE("prediction_values_change: single-feature model takes all the credit") {
    const auto m = model_with_gains({{0, 2.0}, {0, 1.5}}, 3);
    const ImportanceReport r = prediction_values_change(m);
    REQUIRE(r.normalization == Normalization::percent);
    REQUIRE(r.scores[0].feature == "f0");
    REQUIRE(r.scores[0].score == 100.0);
    REQUIRE(r.scores[1].score == 0.0);
    REQUIRE(r.scores[2].score == 0.0);
}

TEST_CASE("prediction_values_change: all-null model keeps raw zeros") {
    GbdtModel m;
    m.feature_names = {"a", "b"};
    m.config.depth = 2;
    ObliviousTree tree;
    tree.levels.assign(2, SplitLevel{});  // null splits
    tree.leaf_values.assign(4, 0.0);
    m.trees.push_back(tree);
    const ImportanceReport r = prediction_values_change(m);
    REQUIRE(r.normalization == Normalization::raw);
    for (const auto& e : r.scores) REQUIRE(e.score == 0.0);
}

TEST_CASE("prediction_values_change: recorded gains normalize to percent") {
    const auto m = model_with_gains({{0, 3.0}, {1, 1.0}}, 2);
    const ImportanceReport r = prediction_values_change(m);
    REQUIRE(r.scores[0].feature == "f0");
    REQUIRE(r.scores[0].score == Approx(75.0).epsilon(1e-12));
    REQUIRE(r.scores[1].score == Approx(25.0).epsilon(1e-12));
    double total = 0.0;
    for (const auto& e : r.scores) total += e.score;
    REQUIRE(total == Approx(100.0).margin(1e-6));
}

TEST_CASE("a model file stripped of gains raises ModelMissingGainRecords") {
    testsupport::TempDir dir("imp");
    const auto m = model_with_gains({{0, 3.0}}, 2);
    const std::string path = dir.file("m.json");
    save_model(m, path);
    nlohmann::json j = nlohmann::json::parse(testsupport::slurp(path));
    for (auto& tree : j["trees"])
        for (auto& level : tree["levels"]) level.erase("gain");
    testsupport::write_file(path, j.dump());
    const GbdtModel loaded = load_model(path);
    REQUIRE_FALSE(loaded.has_gain_records);
    try {
        prediction_values_change(loaded);
        FAIL("expected ModelMissingGainRecords");
    } catch (const Error& e) {
        REQUIRE(e.code() == Errc::model_missing_gain_records);
    }
}

TEST_CASE("unused features score exactly zero under both methods") {
    // feature 2 is constant: it has no candidate split, so no tree uses it
    Rng rng(314);
    std::vector<std::vector<double>> rows;
    std::vector<uint8_t> labels;
    for (int i = 0; i < 80; ++i) {
        const uint8_t y = static_cast<uint8_t>(rng.next_below(2));
        rows.push_back({rng.next_gaussian() + (y ? 1.5 : 0.0), rng.next_gaussian(), 4.0});
        labels.push_back(y);
    }
    labels[0] = 1;
    labels[1] = 0;
    const auto d = testsupport::make_matrix(rows, labels);
    TrainConfig cfg;
    cfg.iterations = 20;
    cfg.depth = 3;
    const auto weights = expand_weights(d.labels, 1.0, 1.0);
    const auto model = train(quantile_bin(d, 64), d.labels, weights, cfg);

    for (const auto& tree : model.trees)
        for (const auto& lv : tree.levels)
            REQUIRE((lv.is_null() || lv.feature != 2));

    const auto pred = prediction_values_change(model);
    const auto loss = loss_function_change(model, d, weights, 3, 99);
    for (const auto& e : pred.scores)
        if (e.feature == "f2") REQUIRE(e.score == 0.0);
    for (const auto& e : loss.scores)
        if (e.feature == "f2") REQUIRE(e.score == 0.0);
}

TEST_CASE("permuting the only informative feature strictly hurts the loss") {
    const auto d = testsupport::make_matrix(
        {{0.0}, {0.1}, {0.2}, {0.3}, {0.4}, {1.0}, {1.1}, {1.2}, {1.3}, {1.4}},
        {0, 0, 0, 0, 0, 1, 1, 1, 1, 1});
    TrainConfig cfg;
    cfg.iterations = 10;
    cfg.depth = 1;
    const auto weights = expand_weights(d.labels, 1.0, 1.0);
    const auto model = train(quantile_bin(d, 32), d.labels, weights, cfg);
    const auto r = loss_function_change(model, d, weights, 5, 7);
    REQUIRE(r.scores[0].feature == "f0");
    REQUIRE(r.scores[0].score > 0.0);
    REQUIRE(r.normalization == Normalization::raw);
}

TEST_CASE("loss_function_change is deterministic for a fixed seed") {
    const auto d = testsupport::random_matrix(50, 4, 21, 1.2);
    TrainConfig cfg;
    cfg.iterations = 8;
    cfg.depth = 2;
    const auto weights = expand_weights(d.labels, 1.0, 1.0);
    const auto model = train(quantile_bin(d, 32), d.labels, weights, cfg);
    const auto a = loss_function_change(model, d, weights, 1, 3131);
    const auto b = loss_function_change(model, d, weights, 1, 3131);
    for (size_t i = 0; i < a.scores.size(); ++i) {
        REQUIRE(a.scores[i].feature == b.scores[i].feature);
        REQUIRE(a.scores[i].score == b.scores[i].score);
    }

    setenv("BOOSTSEL_THREADS", "5", 1);
    const auto c = loss_function_change(model, d, weights, 1, 3131);
    unsetenv("BOOSTSEL_THREADS");
    for (size_t i = 0; i < a.scores.size(); ++i)
        REQUIRE(a.scores[i].score == c.scores[i].score);
}

TEST_CASE("top_k follows the score-then-index order and clamps") {
    ImportanceReport r;
    r.scores = {{"b", 5.0, 1}, {"c", 5.0, 2}, {"a", 1.0, 0}};
    REQUIRE(top_k(r, 2) == std::vector<std::string>{"b", "c"});
    REQUIRE(top_k(r, 10) == std::vector<std::string>{"b", "c", "a"});
}

TEST_CASE("both methods rank a planted dominant feature first") {
    Rng rng(2718);
    for (uint64_t seed : {11ULL, 22ULL, 33ULL}) {
        SyntheticSpec spec;
        spec.rows = 150;
        spec.features = 10;
        spec.informative = 1;
        spec.shift = 2.5;
        spec.seed = seed;
        const auto cohort = make_synthetic_cohort(spec);
        const std::string planted = cohort.data.feature_names[cohort.informative_indices[0]];
        TrainConfig cfg;
        cfg.iterations = 30;
        cfg.depth = 3;
        const auto [wp, wn] = class_weights(cohort.data.labels, ClassWeighting::balanced);
        const auto weights = expand_weights(cohort.data.labels, wp, wn);
        const auto model = train(quantile_bin(cohort.data, 64), cohort.data.labels, weights, cfg);
        const auto pred = prediction_values_change(model);
        const auto loss = loss_function_change(model, cohort.data, weights, 3, seed);
        REQUIRE(pred.scores[0].feature == planted);
        REQUIRE(loss.scores[0].feature == planted);
    }
}

TEST_CASE("importance reports serialize to csv with ranks") {
    const auto m = model_with_gains({{0, 3.0}, {1, 1.0}}, 2);
    const std::string csv = prediction_values_change(m).to_csv();
    REQUIRE(csv.find("method,feature,score,rank") == 0);
    REQUIRE(csv.find("prediction_values_change,f0,75,1") != std::string::npos);
    REQUIRE(csv.find("prediction_values_change,f1,25,2") != std::string::npos);
}
