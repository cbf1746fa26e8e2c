#include <catch2/catch_amalgamated.hpp>

#include "helpers/test_support.hpp"

using namespace boostsel;

TEST_CASE("knn_fit boundary conditions") {
    const auto d = testsupport::make_matrix({{0.0}, {1.0}, {2.0}, {3.0}, {4.0}}, {1, 1, 0, 0, 1});
    REQUIRE(knn_fit(d, 5).k == 5);
    try {
        knn_fit(d, 6);
        FAIL("expected KTooLarge");
    } catch (const Error& e) {
        REQUIRE(e.code() == Errc::k_too_large);
    }
    // duplicate rows are fine
    const auto dup = testsupport::make_matrix({{1.0}, {1.0}}, {1, 0});
    REQUIRE(knn_fit(dup, 2).rows() == 2);
}

TEST_CASE("self-match with k=1 returns the row's own label") {
    const auto d = testsupport::make_matrix({{0.0, 1.0}, {5.0, 5.0}}, {1, 0});
    const KnnModel m = knn_fit(d, 1);
    REQUIRE(knn_predict_score(m, d.row(0)) == 1.0);
    REQUIRE(knn_predict_score(m, d.row(1)) == 0.0);
    REQUIRE(knn_predict_label(m, d.row(0)));
    REQUIRE_FALSE(knn_predict_label(m, d.row(1)));
}

TEST_CASE("majority vote over three neighbours") {
    const auto d = testsupport::make_matrix({{0.0}, {1.0}, {2.0}, {50.0}}, {1, 1, 0, 0});
    const KnnModel m = knn_fit(d, 3);
    const double q[] = {1.0};
    REQUIRE(knn_predict_score(m, q) == Catch::Approx(2.0 / 3.0));
    REQUIRE(knn_predict_label(m, q));
}

TEST_CASE("hand-computed two-neighbour distances") {
    const auto d = testsupport::make_matrix({{0.0, 0.0}, {1.0, 0.0}, {4.0, 0.0}}, {1, 1, 0});
    const KnnModel m = knn_fit(d, 2);
    const double q[] = {0.4, 0.0};  // distances 0.4, 0.6, 3.6
    const auto nn = knn_neighbors(m, q);
    REQUIRE(nn == std::vector<size_t>{0, 1});
    REQUIRE(knn_predict_score(m, q) == 1.0);
}

TEST_CASE("distance ties break to the lower training-row index") {
    const auto d = testsupport::make_matrix({{-1.0}, {1.0}, {-1.0}, {1.0}}, {1, 0, 0, 1});
    const KnnModel m = knn_fit(d, 2);
    const double q[] = {0.0};  // all four rows are at distance 1
    REQUIRE(knn_neighbors(m, q) == std::vector<size_t>{0, 1});
}

TEST_CASE("an exact half vote defers to the nearest neighbour") {
    const auto d = testsupport::make_matrix({{0.0}, {1.0}}, {0, 1});
    const KnnModel m = knn_fit(d, 2);
    const double near_zero[] = {0.1};  // score 0.5, nearest is negative
    REQUIRE(knn_predict_score(m, near_zero) == 0.5);
    REQUIRE_FALSE(knn_predict_label(m, near_zero));
    const double near_one[] = {0.9};  // score 0.5, nearest is positive
    REQUIRE(knn_predict_label(m, near_one));
}

TEST_CASE("neighbour sets match brute force on random instances") {
    Rng rng(606);
    for (int trial = 0; trial < 30; ++trial) {
        const size_t rows = 10 + rng.next_below(200);
        const size_t features = 1 + rng.next_below(6);
        const auto d = testsupport::random_matrix(rows, features, rng.next_u64());
        const size_t k = 1 + rng.next_below(std::min<size_t>(rows, 12));
        const KnnModel m = knn_fit(d, k);
        for (int q = 0; q < 5; ++q) {
            std::vector<double> query(features);
            for (auto& v : query) v = rng.next_gaussian() * 2.0;
            REQUIRE(knn_neighbors(m, query) ==
                    testsupport::brute_force_neighbors(d, query, k));
        }
    }
}

TEST_CASE("integer translation leaves predictions unchanged") {
    Rng rng(607);
    std::vector<std::vector<double>> rows;
    std::vector<uint8_t> labels;
    for (int i = 0; i < 40; ++i) {
        rows.push_back({static_cast<double>(rng.next_below(100)),
                        static_cast<double>(rng.next_below(100))});
        labels.push_back(static_cast<uint8_t>(rng.next_below(2)));
    }
    labels[0] = 1;
    labels[1] = 0;
    const auto d = testsupport::make_matrix(rows, labels);
    auto shifted_rows = rows;
    for (auto& r : shifted_rows) {
        r[0] += 1000.0;
        r[1] -= 250.0;
    }
    const auto shifted = testsupport::make_matrix(shifted_rows, labels);
    const KnnModel m = knn_fit(d, 5);
    const KnnModel ms = knn_fit(shifted, 5);
    for (int q = 0; q < 25; ++q) {
        std::vector<double> query{static_cast<double>(rng.next_below(100)),
                                  static_cast<double>(rng.next_below(100))};
        std::vector<double> shifted_query{query[0] + 1000.0, query[1] - 250.0};
        REQUIRE(knn_predict_score(m, query) == knn_predict_score(ms, shifted_query));
        REQUIRE(knn_predict_label(m, query) == knn_predict_label(ms, shifted_query));
    }
}

TEST_CASE("k equal to the row count scores the training positive fraction") {
    const auto d = testsupport::make_matrix({{0.0}, {10.0}, {20.0}, {30.0}}, {1, 0, 0, 0});
    const KnnModel m = knn_fit(d, 4);
    for (double x : {-5.0, 3.0, 12.0, 99.0}) {
        const double q[] = {x};
        REQUIRE(knn_predict_score(m, q) == 0.25);
    }
}

TEST_CASE("query arity must match") {
    const auto d = testsupport::make_matrix({{0.0, 1.0}, {1.0, 2.0}}, {1, 0});
    const KnnModel m = knn_fit(d, 1);
    const double q[] = {1.0};
    try {
        knn_predict_score(m, q);
        FAIL("expected DimensionMismatch");
    } catch (const Error& e) {
        REQUIRE(e.code() == Errc::dimension_mismatch);
    }
}
