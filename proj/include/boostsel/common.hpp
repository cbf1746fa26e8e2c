#pragma once

#include <stdexcept>
#include <string>

namespace boostsel {

inline constexpr const char* kVersion = "1.0.0";

// Error codes shared across the library. The CLI maps these onto process
// exit codes (see tools/boostsel.cpp).
enum class Errc {
    invalid_config,
    missing_column,
    duplicate_feature_name,
    malformed_row,
    non_numeric_cell,
    duplicate_sample_id,
    degenerate_labels,
    no_age_column,
    degenerate_split,
    too_few_rows_per_class,
    dimension_mismatch,
    length_mismatch,
    one_class_only,
    too_few_folds,
    k_too_large,
    io_error,
    schema_version_mismatch,
    corrupt_model,
    model_missing_gain_records,
    feature_universe_mismatch,
    empty_selection,
};

inline const char* errc_name(Errc c) {
    switch (c) {
        case Errc::invalid_config: return "InvalidConfig";
        case Errc::missing_column: return "MissingColumn";
        case Errc::duplicate_feature_name: return "DuplicateFeatureName";
        case Errc::malformed_row: return "MalformedRow";
        case Errc::non_numeric_cell: return "NonNumericCell";
        case Errc::duplicate_sample_id: return "DuplicateSampleId";
        case Errc::degenerate_labels: return "DegenerateLabels";
        case Errc::no_age_column: return "NoAgeColumn";
        case Errc::degenerate_split: return "DegenerateSplit";
        case Errc::too_few_rows_per_class: return "TooFewRowsPerClass";
        case Errc::dimension_mismatch: return "DimensionMismatch";
        case Errc::length_mismatch: return "LengthMismatch";
        case Errc::one_class_only: return "OneClassOnly";
        case Errc::too_few_folds: return "TooFewFolds";
        case Errc::k_too_large: return "KTooLarge";
        case Errc::io_error: return "IoError";
        case Errc::schema_version_mismatch: return "SchemaVersionMismatch";
        case Errc::corrupt_model: return "CorruptModel";
        case Errc::model_missing_gain_records: return "ModelMissingGainRecords";
        case Errc::feature_universe_mismatch: return "FeatureUniverseMismatch";
        case Errc::empty_selection: return "EmptySelection";
    }
    return "UnknownError";
}

class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& message)
        : std::runtime_error(std::string(errc_name(code)) + ": " + message), code_(code) {}

    Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

[[noreturn]] inline void raise(Errc code, const std::string& message) {
    throw Error(code, message);
}

inline void require(bool condition, Errc code, const std::string& message) {
    if (!condition) raise(code, message);
}

}  // namespace boostsel
