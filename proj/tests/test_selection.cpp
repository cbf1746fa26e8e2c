#include <catch2/catch_amalgamated.hpp>

#include <unordered_set>

#include "helpers/test_support.hpp"

using namespace boostsel;

namespace {

ImportanceReport report_of(const std::vector<std::pair<std::string, double>>& entries) {
    ImportanceReport r;
    for (size_t i = 0; i < entries.size(); ++i)
        r.scores.push_back({entries[i].first, entries[i].second, i});
    detail::sort_report(r.scores);
    return r;
}

}  // namespace

TEST_CASE("intersect_top_k keeps the first report's order") {
    const auto r1 = report_of({{"a", 9.0}, {"b", 8.0}, {"c", 7.0}, {"d", 1.0}});
    const auto r2 = report_of({{"b", 9.0}, {"c", 8.0}, {"d", 7.0}, {"a", 1.0}});
    REQUIRE(intersect_top_k(r1, r2, 3) == std::vector<std::string>{"b", "c"});
    REQUIRE(intersect_top_k(r1, r1, 3) == std::vector<std::string>{"a", "b", "c"});
}

TEST_CASE("intersect_top_k demands one feature universe") {
    const auto r1 = report_of({{"a", 1.0}, {"b", 0.5}});
    const auto r2 = report_of({{"a", 1.0}, {"z", 0.5}});
    try {
        intersect_top_k(r1, r2, 2);
        FAIL("expected FeatureUniverseMismatch");
    } catch (const Error& e) {
        REQUIRE(e.code() == Errc::feature_universe_mismatch);
    }
}

TEST_CASE("apply_exclusions removes in order and warns about absentees") {
    std::vector<std::string> warnings;
    REQUIRE(apply_exclusions({"a", "b", "c"}, {"b"}, &warnings) ==
            std::vector<std::string>{"a", "c"});
    REQUIRE(warnings.empty());
    REQUIRE(apply_exclusions({"a", "b", "c"}, {}) == std::vector<std::string>{"a", "b", "c"});
    apply_exclusions({"a"}, {"ghost"}, &warnings);
    REQUIRE(warnings.size() == 1);
    REQUIRE(warnings[0].find("ghost") != std::string::npos);
}

TEST_CASE("selection config rejects overlap between exclusions and always_include") {
    SelectionConfig cfg;
    cfg.exclusion_list = {"age"};
    cfg.always_include = {"age"};
    REQUIRE_THROWS_AS(cfg.validate(), Error);
}

namespace {

SelectionConfig small_pipeline_config(uint64_t seed) {
    SelectionConfig cfg;
    cfg.top_k = 10;
    cfg.seed = seed;
    cfg.wide_config.iterations = 50;
    cfg.wide_config.depth = 4;
    cfg.wide_config.max_bins = 64;
    cfg.compact_config.iterations = 40;
    cfg.compact_config.depth = 3;
    cfg.compact_config.max_bins = 64;
    cfg.loss_repeats = 3;
    return cfg;
}

}  // namespace

TEST_CASE("run_pipeline recovers planted features and keeps the subset chain") {
    SyntheticSpec spec;
    spec.rows = 300;
    spec.features = 50;
    spec.informative = 5;
    spec.seed = 404;
    const auto cohort = make_synthetic_cohort(spec);
    const auto cfg = small_pipeline_config(404);
    const PipelineOutcome out = run_pipeline(cohort.data, cfg);

    std::unordered_set<std::string> final_set(out.selection.final_features.begin(),
                                              out.selection.final_features.end());
    size_t recovered = 0;
    for (size_t f : cohort.informative_indices)
        recovered += final_set.count(cohort.data.feature_names[f]);
    REQUIRE(recovered >= 4);  // of 5 planted

    // subset chain: final (minus always_include) <= intersection <= both top-k lists
    const auto t1 = top_k(out.selection.report_prediction, cfg.top_k);
    const auto t2 = top_k(out.selection.report_loss, cfg.top_k);
    const std::unordered_set<std::string> s1(t1.begin(), t1.end());
    const std::unordered_set<std::string> s2(t2.begin(), t2.end());
    const std::unordered_set<std::string> inter(out.selection.intersection.begin(),
                                                out.selection.intersection.end());
    for (const auto& name : out.selection.intersection) {
        REQUIRE(s1.count(name) == 1);
        REQUIRE(s2.count(name) == 1);
    }
    for (const auto& name : out.selection.after_exclusion) REQUIRE(inter.count(name) == 1);
    for (const auto& name : out.selection.final_features) REQUIRE(inter.count(name) == 1);

    // projection correctness: compact model features match the final list
    REQUIRE(out.compact_model.feature_names == out.selection.final_features);
    REQUIRE(out.cv.per_fold.size() == cfg.cv_folds);
    REQUIRE(out.validation.auc.has_value());
    REQUIRE(out.selection.fingerprint.rows == 300);
    REQUIRE(out.selection.fingerprint.features == 50);
}

TEST_CASE("run_pipeline is deterministic") {
    SyntheticSpec spec;
    spec.rows = 200;
    spec.features = 20;
    spec.informative = 3;
    spec.seed = 8;
    const auto cohort = make_synthetic_cohort(spec);
    const auto cfg = small_pipeline_config(8);
    const PipelineOutcome a = run_pipeline(cohort.data, cfg);
    const PipelineOutcome b = run_pipeline(cohort.data, cfg);
    REQUIRE(a.selection.to_json().dump() == b.selection.to_json().dump());
    REQUIRE(model_to_json(a.compact_model).dump() == model_to_json(b.compact_model).dump());
    REQUIRE(a.cv.to_json().dump() == b.cv.to_json().dump());
}

TEST_CASE("excluding the whole intersection aborts with both reports") {
    SyntheticSpec spec;
    spec.rows = 120;
    spec.features = 12;
    spec.informative = 2;
    spec.seed = 5;
    const auto cohort = make_synthetic_cohort(spec);
    auto cfg = small_pipeline_config(5);
    cfg.top_k = 5;
    cfg.exclusion_list = cohort.data.feature_names;  // nothing can survive
    try {
        run_pipeline(cohort.data, cfg);
        FAIL("expected EmptySelection");
    } catch (const EmptySelectionError& e) {
        REQUIRE(e.code() == Errc::empty_selection);
        REQUIRE(e.report_prediction.scores.size() == 12);
        REQUIRE(e.report_loss.scores.size() == 12);
    }
}

TEST_CASE("always_include forces a feature into the final set") {
    SyntheticSpec spec;
    spec.rows = 150;
    spec.features = 15;
    spec.informative = 3;
    spec.seed = 77;
    spec.with_age = true;
    const auto cohort = make_synthetic_cohort(spec);
    auto cfg = small_pipeline_config(77);
    cfg.top_k = 5;
    cfg.always_include = {"age"};
    const PipelineOutcome out = run_pipeline(cohort.data, cfg);
    const auto& ff = out.selection.final_features;
    REQUIRE(std::find(ff.begin(), ff.end(), "age") != ff.end());
    // final list stays ordered by the prediction report's ranking
    std::unordered_map<std::string, size_t> rank;
    for (size_t i = 0; i < out.selection.report_prediction.scores.size(); ++i)
        rank[out.selection.report_prediction.scores[i].feature] = i;
    for (size_t i = 1; i < ff.size(); ++i) REQUIRE(rank.at(ff[i - 1]) < rank.at(ff[i]));
}

TEST_CASE("pipeline rejects datasets with missing values") {
    SyntheticSpec spec;
    spec.rows = 60;
    spec.features = 6;
    spec.informative = 2;
    spec.seed = 3;
    spec.with_age = true;
    spec.missing_age_fraction = 0.3;
    const auto cohort = make_synthetic_cohort(spec);
    const auto cfg = small_pipeline_config(3);
    REQUIRE_THROWS_AS(run_pipeline(cohort.data, cfg), Error);
    // after the caller applies the age filter it runs fine
    const auto cleaned = drop_missing_age(cohort.data);
    REQUIRE_NOTHROW(run_pipeline(cleaned, cfg));
}

TEST_CASE("shipped probe-set lists are consistent") {
#ifdef BOOSTSEL_DATA_DIR
    const std::string dir = BOOSTSEL_DATA_DIR;
    auto read_list = [](const std::string& path) {
        std::ifstream in(path);
        REQUIRE(in.good());
        std::vector<std::string> names;
        std::string line;
        while (std::getline(in, line)) {
            while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
            if (!line.empty() && line[0] != '#') names.push_back(line);
        }
        return names;
    };
    const auto full = read_list(dir + "/probe_sets_34.txt");
    const auto keep = read_list(dir + "/probe_sets_keep_26.txt");
    const auto excl = read_list(dir + "/probe_sets_exclude_8.txt");
    REQUIRE(full.size() == 34);
    REQUIRE(keep.size() == 26);
    REQUIRE(excl.size() == 8);
    std::unordered_set<std::string> full_set(full.begin(), full.end());
    REQUIRE(full_set.size() == 34);
    for (const auto& name : keep) REQUIRE(full_set.count(name) == 1);
    for (const auto& name : excl) REQUIRE(full_set.count(name) == 1);
    const std::unordered_set<std::string> keep_set(keep.begin(), keep.end());
    for (const auto& name : excl) REQUIRE(keep_set.count(name) == 0);
    // applying the shipped exclusion list to the candidate list yields the keep set
    const auto filtered = apply_exclusions(full, excl);
    REQUIRE(filtered.size() == 26);
    for (const auto& name : filtered) REQUIRE(keep_set.count(name) == 1);
#endif
}
