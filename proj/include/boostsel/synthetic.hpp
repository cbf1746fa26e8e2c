#pragma once

#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "boostsel/common.hpp"
#include "boostsel/dataset.hpp"
#include "boostsel/rng.hpp"

namespace boostsel {

// Seeded synthetic cohort for desk-scale demos and tests: informative columns
// are label-shifted Gaussians at seeded random positions, the rest pure noise.
struct SyntheticSpec {
    size_t rows = 300;
    size_t features = 50;
    size_t informative = 5;
    double shift = 1.25;
    double positive_fraction = 0.5;
    uint64_t seed = 0;
    bool with_age = false;
    double missing_age_fraction = 0.0;  // emitted as empty cells by write_csv
};

struct SyntheticCohort {
    DatasetMatrix data;
    std::vector<size_t> informative_indices;  // positions among the feature columns
};

inline SyntheticCohort make_synthetic_cohort(const SyntheticSpec& spec) {
    require(spec.rows >= 4, Errc::invalid_config, "rows must be >= 4");
    require(spec.informative <= spec.features, Errc::invalid_config,
            "informative count exceeds feature count");
    require(spec.positive_fraction > 0.0 && spec.positive_fraction < 1.0, Errc::invalid_config,
            "positive_fraction must lie in (0,1)");

    Rng rng = Rng::stream(spec.seed, 0x53594e54u, 0);

    SyntheticCohort out;
    DatasetMatrix& d = out.data;
    d.positive_label = "AML";
    d.negative_label = "healthy";

    char buf[32];
    for (size_t f = 0; f < spec.features; ++f) {
        std::snprintf(buf, sizeof(buf), "g%04zu", f + 1);
        d.feature_names.emplace_back(buf);
    }
    if (spec.with_age) {
        d.age_column = d.feature_names.size();
        d.feature_names.emplace_back("age");
    }

    // exact positive count, then a seeded row order
    size_t n_pos = detail::round_half_up(static_cast<double>(spec.rows) * spec.positive_fraction);
    n_pos = std::min(std::max<size_t>(n_pos, 1), spec.rows - 1);
    std::vector<uint8_t> labels(spec.rows, 0);
    for (size_t i = 0; i < n_pos; ++i) labels[i] = 1;
    rng.shuffle(labels);

    const auto informative = [&] {
        auto perm = rng.permutation(spec.features);
        perm.resize(spec.informative);
        std::sort(perm.begin(), perm.end());
        return perm;
    }();
    std::vector<uint8_t> is_informative(spec.features, 0);
    for (size_t f : informative) is_informative[f] = 1;
    out.informative_indices = informative;

    const size_t nf = d.feature_names.size();
    d.values.resize(spec.rows * nf);
    d.labels = labels;
    for (size_t r = 0; r < spec.rows; ++r) {
        std::snprintf(buf, sizeof(buf), "s%05zu", r + 1);
        d.sample_ids.emplace_back(buf);
        for (size_t f = 0; f < spec.features; ++f) {
            double v = rng.next_gaussian();
            if (is_informative[f] && labels[r]) v += spec.shift;
            d.values[r * nf + f] = v;
        }
        if (spec.with_age) {
            double age = 18.0 + static_cast<double>(rng.next_below(73));  // 18..90
            if (spec.missing_age_fraction > 0.0 && rng.next_double() < spec.missing_age_fraction)
                age = std::numeric_limits<double>::quiet_NaN();
            d.values[r * nf + (nf - 1)] = age;
        }
    }
    return out;
}

// CSV writer matching the ingest format: id, label, then features in order.
// NaN cells (missing age) are written empty.
inline void write_csv(const DatasetMatrix& d, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) raise(Errc::io_error, "cannot write '" + path + "'");
    out << "id,label";
    for (const auto& name : d.feature_names) out << ',' << name;
    out << '\n';
    char buf[64];
    for (size_t r = 0; r < d.rows(); ++r) {
        out << d.sample_ids[r] << ',' << (d.labels[r] ? d.positive_label : d.negative_label);
        for (size_t c = 0; c < d.features(); ++c) {
            const double v = d.at(r, c);
            if (std::isnan(v)) {
                out << ',';
            } else {
                std::snprintf(buf, sizeof(buf), "%.17g", v);
                out << ',' << buf;
            }
        }
        out << '\n';
    }
    if (!out) raise(Errc::io_error, "failed writing '" + path + "'");
}

}  // namespace boostsel
