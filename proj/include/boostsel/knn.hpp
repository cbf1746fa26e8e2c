#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <vector>

#include "boostsel/common.hpp"
#include "boostsel/dataset.hpp"

namespace boostsel {

// k-nearest-neighbour baseline. Plain O(n*d) distance scan per query;
// adequate at this scale and trivially exact against a brute-force oracle.
struct KnnModel {
    std::vector<double> values;  // row-major copy of the training matrix
    size_t n_features = 0;
    std::vector<uint8_t> labels;
    size_t k = 5;

    size_t rows() const { return labels.size(); }
    std::span<const double> row(size_t r) const { return {values.data() + r * n_features, n_features}; }
};

inline KnnModel knn_fit(const DatasetMatrix& d, size_t k) {
    require(k >= 1, Errc::invalid_config, "k must be >= 1");
    if (k > d.rows())
        raise(Errc::k_too_large, "k=" + std::to_string(k) + " exceeds " +
                                     std::to_string(d.rows()) + " training rows");
    d.require_all_finite();
    KnnModel m;
    m.values = d.values;
    m.n_features = d.features();
    m.labels = d.labels;
    m.k = k;
    return m;
}

namespace detail {

inline double squared_distance(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (size_t i = 0; i < a.size(); ++i) {
        const double diff = a[i] - b[i];
        s += diff * diff;
    }
    return s;
}

}  // namespace detail

// Indices of the k nearest training rows by Euclidean distance, distance
// ties broken by the lower training-row index.
inline std::vector<size_t> knn_neighbors(const KnnModel& m, std::span<const double> query) {
    if (query.size() != m.n_features)
        raise(Errc::dimension_mismatch, "query has " + std::to_string(query.size()) +
                                            " values, model expects " +
                                            std::to_string(m.n_features));
    std::vector<double> dist(m.rows());
    for (size_t r = 0; r < m.rows(); ++r)
        dist[r] = detail::squared_distance(m.row(r), query);
    std::vector<size_t> order(m.rows());
    std::iota(order.begin(), order.end(), 0);
    auto closer = [&](size_t a, size_t b) {
        if (dist[a] != dist[b]) return dist[a] < dist[b];
        return a < b;
    };
    std::nth_element(order.begin(), order.begin() + static_cast<ptrdiff_t>(m.k - 1), order.end(),
                     closer);
    order.resize(m.k);
    std::sort(order.begin(), order.end(), closer);
    return order;
}

// Fraction of the k nearest neighbours labelled positive.
inline double knn_predict_score(const KnnModel& m, std::span<const double> query) {
    const auto nn = knn_neighbors(m, query);
    size_t pos = 0;
    for (size_t r : nn) pos += m.labels[r];
    return static_cast<double>(pos) / static_cast<double>(m.k);
}

// Positive iff score >= 0.5; an exact half vote defers to the single
// nearest neighbour's label.
inline bool knn_predict_label(const KnnModel& m, std::span<const double> query) {
    const auto nn = knn_neighbors(m, query);
    size_t pos = 0;
    for (size_t r : nn) pos += m.labels[r];
    if (2 * pos == m.k) return m.labels[nn.front()] != 0;
    return 2 * pos > m.k;
}

}  // namespace boostsel
