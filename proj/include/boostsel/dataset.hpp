#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "boostsel/common.hpp"
#include "boostsel/parallel.hpp"
#include "boostsel/rng.hpp"

namespace boostsel {

// ============================= DatasetMatrix =================================

// Labeled numeric feature matrix with named columns. Labels are binary with
// 1 = positive class. All cells are finite, with one sanctioned exception:
// the age column may hold NaN between ingest and drop_missing_age().
struct DatasetMatrix {
    std::vector<std::string> feature_names;
    std::vector<double> values;  // row-major, rows() * features()
    std::vector<uint8_t> labels;
    std::vector<std::string> sample_ids;
    std::optional<size_t> age_column;
    std::string positive_label = "positive";
    std::string negative_label = "negative";

    size_t rows() const { return sample_ids.size(); }
    size_t features() const { return feature_names.size(); }

    double at(size_t r, size_t c) const { return values[r * features() + c]; }
    double& at(size_t r, size_t c) { return values[r * features() + c]; }

    std::span<const double> row(size_t r) const {
        return {values.data() + r * features(), features()};
    }

    size_t positives() const {
        size_t n = 0;
        for (uint8_t y : labels) n += y;
        return n;
    }
    size_t negatives() const { return rows() - positives(); }
    bool both_classes_present() const { return positives() > 0 && negatives() > 0; }

    std::optional<size_t> feature_index(std::string_view name) const {
        for (size_t i = 0; i < feature_names.size(); ++i)
            if (feature_names[i] == name) return i;
        return std::nullopt;
    }

    // Rejects any non-finite cell, age included. Entry points that feed
    // training call this; between ingest and drop_missing_age the age
    // column is allowed to carry NaN and this must not be called.
    void require_all_finite() const {
        const size_t nf = features();
        for (size_t r = 0; r < rows(); ++r)
            for (size_t c = 0; c < nf; ++c)
                if (!std::isfinite(at(r, c)))
                    raise(Errc::non_numeric_cell,
                          "non-finite value at sample '" + sample_ids[r] + "', column '" +
                              feature_names[c] + "'");
    }

    // New matrix with the named feature columns, in the given order.
    DatasetMatrix project(const std::vector<std::string>& names) const {
        DatasetMatrix out;
        out.feature_names = names;
        out.labels = labels;
        out.sample_ids = sample_ids;
        out.positive_label = positive_label;
        out.negative_label = negative_label;
        std::vector<size_t> src(names.size());
        for (size_t i = 0; i < names.size(); ++i) {
            auto idx = feature_index(names[i]);
            if (!idx) raise(Errc::missing_column, "feature '" + names[i] + "' not in dataset");
            src[i] = *idx;
            if (age_column && *age_column == *idx) out.age_column = i;
        }
        out.values.resize(rows() * names.size());
        for (size_t r = 0; r < rows(); ++r)
            for (size_t c = 0; c < names.size(); ++c)
                out.values[r * names.size() + c] = at(r, src[c]);
        return out;
    }

    // New matrix with the given rows, in the given order.
    DatasetMatrix subset(std::span<const size_t> row_indices) const {
        DatasetMatrix out;
        out.feature_names = feature_names;
        out.age_column = age_column;
        out.positive_label = positive_label;
        out.negative_label = negative_label;
        const size_t nf = features();
        out.values.reserve(row_indices.size() * nf);
        out.labels.reserve(row_indices.size());
        out.sample_ids.reserve(row_indices.size());
        for (size_t r : row_indices) {
            out.values.insert(out.values.end(), values.begin() + static_cast<ptrdiff_t>(r * nf),
                              values.begin() + static_cast<ptrdiff_t>((r + 1) * nf));
            out.labels.push_back(labels[r]);
            out.sample_ids.push_back(sample_ids[r]);
        }
        return out;
    }

    // FNV-1a over names, ids, labels and cell bytes; used as the dataset
    // fingerprint in provenance records and manifests.
    uint64_t content_hash() const {
        uint64_t h = 1469598103934665603ULL;
        auto mix_bytes = [&h](const void* data, size_t n) {
            const auto* p = static_cast<const unsigned char*>(data);
            for (size_t i = 0; i < n; ++i) {
                h ^= p[i];
                h *= 1099511628211ULL;
            }
        };
        for (const auto& name : feature_names) mix_bytes(name.data(), name.size() + 1);
        for (const auto& id : sample_ids) mix_bytes(id.data(), id.size() + 1);
        mix_bytes(labels.data(), labels.size());
        mix_bytes(values.data(), values.size() * sizeof(double));
        return h;
    }
};

// =============================== CSV ingest ==================================

struct IngestOptions {
    std::string label_column;
    std::string positive_label;
    std::string id_column;
    std::optional<std::string> age_column;
    // Tokens marking an absent age (the age column only; feature cells are
    // always strict). The empty cell is always treated as missing.
    std::vector<std::string> missing_age_tokens{};
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cur;
    bool quoted = false;
    for (size_t i = 0; i < line.size(); ++i) {
        const char ch = line[i];
        if (quoted) {
            if (ch == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur.push_back(ch);
            }
        } else if (ch == '"') {
            quoted = true;
        } else if (ch == ',') {
            cells.push_back(cur);
            cur.clear();
        } else if (ch != '\r') {
            cur.push_back(ch);
        }
    }
    cells.push_back(cur);
    return cells;
}

inline bool parse_double(const std::string& s, double& out) {
    const char* begin = s.data();
    const char* end = s.data() + s.size();
    while (begin < end && (*begin == ' ' || *begin == '\t')) ++begin;
    while (end > begin && (*(end - 1) == ' ' || *(end - 1) == '\t')) --end;
    if (begin == end) return false;
    auto [ptr, ec] = std::from_chars(begin, end, out);
    return ec == std::errc() && ptr == end && std::isfinite(out);
}

}  // namespace detail

// Parses a UTF-8, comma-delimited file with a header row. One column is the
// sample id, one the label; every remaining column is a numeric feature kept
// in file order. The age column, when named, is a feature like any other
// except that missing-age tokens parse to NaN instead of failing.
inline DatasetMatrix ingest_csv(const std::string& path, const IngestOptions& opt) {
    std::ifstream in(path, std::ios::binary);
    if (!in) raise(Errc::io_error, "cannot open '" + path + "'");

    std::string header_line;
    if (!std::getline(in, header_line)) raise(Errc::malformed_row, "'" + path + "' is empty");
    const auto header = detail::split_csv_line(header_line);

    auto column_of = [&](const std::string& name) -> size_t {
        for (size_t i = 0; i < header.size(); ++i)
            if (header[i] == name) return i;
        raise(Errc::missing_column, "column '" + name + "' not found in '" + path + "'");
    };
    const size_t id_col = column_of(opt.id_column);
    const size_t label_col = column_of(opt.label_column);
    if (id_col == label_col)
        raise(Errc::invalid_config, "id column and label column are both '" + opt.id_column + "'");
    std::optional<size_t> age_file_col;
    if (opt.age_column) {
        age_file_col = column_of(*opt.age_column);
        if (*age_file_col == id_col || *age_file_col == label_col)
            raise(Errc::invalid_config,
                  "age column '" + *opt.age_column + "' is also the id or label column");
    }

    DatasetMatrix d;
    std::unordered_set<std::string> seen_features;
    std::vector<size_t> feature_cols;
    for (size_t i = 0; i < header.size(); ++i) {
        if (i == id_col || i == label_col) continue;
        if (!seen_features.insert(header[i]).second)
            raise(Errc::duplicate_feature_name, "feature column '" + header[i] + "' repeats");
        if (age_file_col && *age_file_col == i) d.age_column = d.feature_names.size();
        feature_cols.push_back(i);
        d.feature_names.push_back(header[i]);
    }

    auto is_missing_age = [&](const std::string& cell) {
        if (cell.empty()) return true;
        for (const auto& tok : opt.missing_age_tokens)
            if (cell == tok) return true;
        return false;
    };

    std::unordered_set<std::string> seen_ids;
    std::vector<std::string> raw_labels;
    std::string line;
    size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || (line.size() == 1 && line[0] == '\r')) continue;
        const auto cells = detail::split_csv_line(line);
        if (cells.size() != header.size())
            raise(Errc::malformed_row, "line " + std::to_string(line_no) + " has " +
                                           std::to_string(cells.size()) + " cells, expected " +
                                           std::to_string(header.size()));
        const std::string& id = cells[id_col];
        if (!seen_ids.insert(id).second)
            raise(Errc::duplicate_sample_id, "sample id '" + id + "' repeats (line " +
                                                 std::to_string(line_no) + ")");
        d.sample_ids.push_back(id);
        raw_labels.push_back(cells[label_col]);
        for (size_t f = 0; f < feature_cols.size(); ++f) {
            const std::string& cell = cells[feature_cols[f]];
            double v = 0.0;
            if (d.age_column && *d.age_column == f && is_missing_age(cell)) {
                v = std::numeric_limits<double>::quiet_NaN();
            } else if (!detail::parse_double(cell, v)) {
                raise(Errc::non_numeric_cell, "non-numeric cell at line " +
                                                  std::to_string(line_no) + ", column '" +
                                                  d.feature_names[f] + "'");
            }
            d.values.push_back(v);
        }
    }

    std::unordered_set<std::string> distinct(raw_labels.begin(), raw_labels.end());
    if (distinct.size() != 2)
        raise(Errc::degenerate_labels, "label column '" + opt.label_column + "' has " +
                                           std::to_string(distinct.size()) +
                                           " distinct values, expected 2");
    if (!distinct.count(opt.positive_label))
        raise(Errc::degenerate_labels,
              "positive label '" + opt.positive_label + "' not present in label column");
    d.positive_label = opt.positive_label;
    for (const auto& v : distinct)
        if (v != opt.positive_label) d.negative_label = v;
    d.labels.reserve(raw_labels.size());
    for (const auto& v : raw_labels) d.labels.push_back(v == opt.positive_label ? 1 : 0);
    return d;
}

inline DatasetMatrix ingest_csv(const std::string& path, const std::string& label_column,
                                const std::string& positive_label, const std::string& id_column,
                                std::optional<std::string> age_column = std::nullopt) {
    IngestOptions opt;
    opt.label_column = label_column;
    opt.positive_label = positive_label;
    opt.id_column = id_column;
    opt.age_column = std::move(age_column);
    return ingest_csv(path, opt);
}

// Keeps only rows whose age is present and finite; row order preserved.
inline DatasetMatrix drop_missing_age(const DatasetMatrix& d) {
    if (!d.age_column) raise(Errc::no_age_column, "dataset has no age column");
    std::vector<size_t> keep;
    keep.reserve(d.rows());
    for (size_t r = 0; r < d.rows(); ++r)
        if (std::isfinite(d.at(r, *d.age_column))) keep.push_back(r);
    return d.subset(keep);
}

// ============================ Stratified splits ==============================

struct SplitPlan {
    std::vector<size_t> train_indices;
    std::vector<size_t> validation_indices;
    uint64_t seed = 0;
    double train_fraction = 0.8;

    nlohmann::json train_json() const {
        return {{"seed", seed}, {"train_fraction", train_fraction}, {"indices", train_indices}};
    }
    nlohmann::json validation_json() const {
        return {{"seed", seed},
                {"train_fraction", train_fraction},
                {"indices", validation_indices}};
    }
};

struct FoldPlan {
    std::vector<std::vector<size_t>> folds;
    uint64_t seed = 0;
    size_t k = 10;

    nlohmann::json to_json() const { return {{"seed", seed}, {"k", k}, {"folds", folds}}; }
};

namespace detail {

inline size_t round_half_up(double x) { return static_cast<size_t>(std::floor(x + 0.5)); }

inline constexpr uint64_t kSplitSalt = 0x53504c49u;  // distinct RNG domains
inline constexpr uint64_t kFoldSalt = 0x464f4c44u;

inline std::pair<std::vector<size_t>, std::vector<size_t>> indices_by_class(
    const DatasetMatrix& d) {
    std::vector<size_t> pos, neg;
    for (size_t r = 0; r < d.rows(); ++r) (d.labels[r] ? pos : neg).push_back(r);
    return {std::move(pos), std::move(neg)};
}

}  // namespace detail

// Per class, the validation side receives round-half-up(count * (1 - f))
// uniformly chosen rows; deterministic for fixed (data, fraction, seed).
inline SplitPlan stratified_split(const DatasetMatrix& d, double train_fraction, uint64_t seed) {
    require(train_fraction > 0.0 && train_fraction < 1.0, Errc::invalid_config,
            "train_fraction must lie in (0,1)");
    require(d.both_classes_present(), Errc::degenerate_labels,
            "stratified split needs both classes");

    SplitPlan plan;
    plan.seed = seed;
    plan.train_fraction = train_fraction;
    auto [pos, neg] = detail::indices_by_class(d);
    int class_id = 0;
    for (auto* cls : {&pos, &neg}) {
        Rng rng = Rng::stream(seed, detail::kSplitSalt, static_cast<uint64_t>(class_id++));
        rng.shuffle(*cls);
        const size_t val_count = detail::round_half_up(
            static_cast<double>(cls->size()) * (1.0 - train_fraction));
        for (size_t i = 0; i < cls->size(); ++i)
            (i < val_count ? plan.validation_indices : plan.train_indices).push_back((*cls)[i]);
    }
    std::sort(plan.train_indices.begin(), plan.train_indices.end());
    std::sort(plan.validation_indices.begin(), plan.validation_indices.end());
    require(!plan.train_indices.empty() && !plan.validation_indices.empty(),
            Errc::degenerate_split, "split left one side empty; adjust train_fraction");
    return plan;
}

// K disjoint stratified folds; per-class fold counts differ by at most one.
inline FoldPlan stratified_kfold(const DatasetMatrix& d, size_t k, uint64_t seed) {
    require(k >= 2, Errc::too_few_folds, "k must be >= 2");
    require(d.both_classes_present(), Errc::degenerate_labels,
            "stratified k-fold needs both classes");
    auto [pos, neg] = detail::indices_by_class(d);
    if (pos.size() < k || neg.size() < k)
        raise(Errc::too_few_rows_per_class,
              "each class needs at least k=" + std::to_string(k) + " rows (have " +
                  std::to_string(pos.size()) + " positive, " + std::to_string(neg.size()) +
                  " negative)");

    FoldPlan plan;
    plan.seed = seed;
    plan.k = k;
    plan.folds.assign(k, {});
    int class_id = 0;
    for (auto* cls : {&pos, &neg}) {
        Rng rng = Rng::stream(seed, detail::kFoldSalt, static_cast<uint64_t>(class_id++));
        rng.shuffle(*cls);
        for (size_t i = 0; i < cls->size(); ++i) plan.folds[i % k].push_back((*cls)[i]);
    }
    for (auto& fold : plan.folds) std::sort(fold.begin(), fold.end());
    return plan;
}

// ============================ Quantile binning ===============================

// Histogram pre-discretization for split finding. Edges are midpoints between
// a quantile value (rank ceil(i*n/max_bins)) and the next distinct value, so
// an edge never coincides with a data value and bin-id comparisons agree with
// the project-wide "goes right iff value > threshold" convention.
struct BinnedDataset {
    std::vector<std::vector<double>> bin_edges;       // per feature, ascending
    std::vector<std::vector<uint16_t>> bin_indices;   // [feature][row]
    std::vector<std::string> source_feature_names;

    size_t features() const { return bin_edges.size(); }
    size_t rows() const { return bin_indices.empty() ? 0 : bin_indices[0].size(); }
};

inline BinnedDataset quantile_bin(const DatasetMatrix& d, size_t max_bins = 255) {
    require(max_bins >= 2 && max_bins <= 65535, Errc::invalid_config,
            "max_bins must lie in [2, 65535]");
    d.require_all_finite();

    BinnedDataset binned;
    binned.source_feature_names = d.feature_names;
    binned.bin_edges.resize(d.features());
    binned.bin_indices.resize(d.features());
    const size_t n = d.rows();

    parallel_for(d.features(), [&](size_t f) {
        std::vector<double> sorted(n);
        for (size_t r = 0; r < n; ++r) sorted[r] = d.at(r, f);
        std::sort(sorted.begin(), sorted.end());

        std::vector<double>& edges = binned.bin_edges[f];
        for (size_t i = 1; i < max_bins && n > 0; ++i) {
            const size_t rank = (i * n + max_bins - 1) / max_bins;  // ceil(i*n/max_bins)
            const double v = sorted[std::min(rank, n) - 1];
            auto next = std::upper_bound(sorted.begin(), sorted.end(), v);
            if (next == sorted.end()) break;
            const double edge = v + (*next - v) / 2.0;
            // adjacent representable values can collapse the midpoint; skip
            if (!(edge > v) || !(edge < *next)) continue;
            if (edges.empty() || edges.back() != edge) edges.push_back(edge);
        }

        std::vector<uint16_t>& ids = binned.bin_indices[f];
        ids.resize(n);
        for (size_t r = 0; r < n; ++r) {
            const double v = d.at(r, f);
            const auto it = std::upper_bound(edges.begin(), edges.end(), v);
            ids[r] = static_cast<uint16_t>(it - edges.begin());
        }
    });
    return binned;
}

}  // namespace boostsel
