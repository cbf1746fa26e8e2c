// boostsel command-line pipeline: ingest labeled expression CSVs, make
// stratified splits, run cross-validated training, execute the feature
// selection pipeline, and evaluate saved models. Every command is seeded and
// writes a run manifest; reruns with identical inputs reproduce outputs
// byte-identically (timestamps excluded).

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <unordered_set>
#include <vector>

#include <CLI11.hpp>

#include "boostsel/boostsel.hpp"

namespace fs = std::filesystem;
using namespace boostsel;

namespace {

// Exit-code contract: 0 success, 2 usage, 3 data, 4 training, 5 empty
// selection. Stable across versions.
constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitTraining = 4;
constexpr int kExitEmptySelection = 5;

struct CliExit {
    int code;
    std::string message;
};

int exit_code_for(Errc c) {
    switch (c) {
        case Errc::invalid_config: return kExitUsage;
        case Errc::empty_selection: return kExitEmptySelection;
        case Errc::k_too_large: return kExitTraining;
        default: return kExitData;
    }
}

void write_text(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) raise(Errc::io_error, "cannot write '" + path + "'");
    out << content;
    if (!out) raise(Errc::io_error, "failed writing '" + path + "'");
}

void write_json(const std::string& path, const nlohmann::json& j) {
    write_text(path, j.dump(2) + "\n");
}

std::vector<std::string> read_name_list(const std::string& path) {
    std::ifstream in(path);
    if (!in) raise(Errc::io_error, "cannot open '" + path + "'");
    std::vector<std::string> names;
    std::string line;
    while (std::getline(in, line)) {
        while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
        if (!line.empty() && line[0] != '#') names.push_back(line);
    }
    return names;
}

// ----------------------------- shared flags ---------------------------------

struct IngestFlags {
    std::string input;
    std::string label_column = "label";
    std::string positive_label = "AML";
    std::string id_column = "id";
    std::string age_column;
    std::vector<std::string> missing_age_tokens;
    bool keep_missing_age = false;
};

void add_ingest_flags(CLI::App* cmd, IngestFlags& f) {
    cmd->add_option("--input", f.input, "input CSV (header row; id, label, numeric features)")
        ->required();
    cmd->add_option("--label-column", f.label_column, "label column name");
    cmd->add_option("--positive-label", f.positive_label, "label value of the positive class");
    cmd->add_option("--id-column", f.id_column, "sample id column name");
    cmd->add_option("--age-column", f.age_column,
                    "age column name; rows with missing age are dropped unless "
                    "--keep-missing-age");
    cmd->add_option("--missing-age-token", f.missing_age_tokens,
                    "extra token marking a missing age (empty cell always counts)");
    cmd->add_flag("--keep-missing-age", f.keep_missing_age,
                  "keep rows whose age is missing instead of dropping them");
}

nlohmann::json ingest_params(const IngestFlags& f) {
    return {{"input", f.input},
            {"label_column", f.label_column},
            {"positive_label", f.positive_label},
            {"id_column", f.id_column},
            {"age_column", f.age_column.empty() ? nlohmann::json(nullptr)
                                                : nlohmann::json(f.age_column)},
            {"missing_age_tokens", f.missing_age_tokens},
            {"keep_missing_age", f.keep_missing_age}};
}

DatasetMatrix load_dataset(const IngestFlags& f, RunManifest& manifest) {
    manifest.add_input(f.input);
    IngestOptions opt;
    opt.label_column = f.label_column;
    opt.positive_label = f.positive_label;
    opt.id_column = f.id_column;
    if (!f.age_column.empty()) opt.age_column = f.age_column;
    opt.missing_age_tokens = f.missing_age_tokens;
    DatasetMatrix d = ingest_csv(f.input, opt);
    if (!f.age_column.empty() && !f.keep_missing_age) d = drop_missing_age(d);
    return d;
}

struct TrainFlags {
    uint32_t iterations = 100;
    uint32_t depth = 6;
    double learning_rate = 0.1;
    double l2_leaf_reg = 3.0;
    size_t max_bins = 255;
    std::string class_weighting = "balanced";
};

void add_train_flags(CLI::App* cmd, TrainFlags& f, const std::string& prefix) {
    const std::string p = prefix.empty() ? "--" : "--" + prefix + "-";
    cmd->add_option(p + "iterations", f.iterations, "boosting iterations");
    cmd->add_option(p + "depth", f.depth, "oblivious tree depth");
    cmd->add_option(p + "learning-rate", f.learning_rate, "shrinkage per tree");
    cmd->add_option(p + "l2", f.l2_leaf_reg, "L2 leaf regularization");
    cmd->add_option(p + "max-bins", f.max_bins, "histogram bins per feature");
    cmd->add_option(p + "class-weighting", f.class_weighting, "none or balanced")
        ->check(CLI::IsMember({"none", "balanced"}));
}

TrainConfig to_config(const TrainFlags& f, uint64_t seed) {
    TrainConfig c;
    c.iterations = f.iterations;
    c.depth = f.depth;
    c.learning_rate = f.learning_rate;
    c.l2_leaf_reg = f.l2_leaf_reg;
    c.max_bins = f.max_bins;
    c.class_weighting =
        f.class_weighting == "balanced" ? ClassWeighting::balanced : ClassWeighting::none;
    c.seed = seed;
    c.validate();
    return c;
}

std::string out_path(const std::string& dir, const std::string& name) {
    return (fs::path(dir) / name).string();
}

void ensure_out_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) raise(Errc::io_error, "cannot create output directory '" + dir + "'");
}

// ------------------------------- split --------------------------------------

int cmd_split(const IngestFlags& ingest, double train_fraction, uint64_t seed,
              const std::string& out_dir) {
    if (train_fraction <= 0.0 || train_fraction >= 1.0)
        throw CliExit{kExitUsage, "--train-fraction must lie in (0,1)"};
    ensure_out_dir(out_dir);
    RunManifest manifest("split");
    const DatasetMatrix d = load_dataset(ingest, manifest);
    const SplitPlan plan = stratified_split(d, train_fraction, seed);

    nlohmann::json params = ingest_params(ingest);
    params["train_fraction"] = train_fraction;
    params["seed"] = seed;
    params["out"] = out_dir;
    manifest.set_parameters(params);

    const std::string train_path = out_path(out_dir, "train_indices.json");
    const std::string val_path = out_path(out_dir, "validation_indices.json");
    write_json(train_path, plan.train_json());
    write_json(val_path, plan.validation_json());
    manifest.add_output(train_path);
    manifest.add_output(val_path);
    manifest.write(out_path(out_dir, "manifest.json"));
    std::cout << "split: " << plan.train_indices.size() << " train / "
              << plan.validation_indices.size() << " validation rows\n";
    return 0;
}

// --------------------------------- cv ---------------------------------------

int cmd_cv(const IngestFlags& ingest, const std::string& model, const TrainFlags& tf, size_t k,
           size_t folds, uint64_t seed, const std::string& out_dir) {
    if (folds < 2) throw CliExit{kExitUsage, "--folds must be >= 2"};
    ensure_out_dir(out_dir);
    RunManifest manifest("cv");
    const DatasetMatrix d = load_dataset(ingest, manifest);
    const FoldPlan plan = stratified_kfold(d, folds, seed);

    nlohmann::json params = ingest_params(ingest);
    params["model"] = model;
    params["folds"] = folds;
    params["seed"] = seed;
    params["out"] = out_dir;
    if (model == "gbdt")
        params["config"] = to_config(tf, seed).to_json();
    else
        params["k"] = k;
    manifest.set_parameters(params);

    CvSummary summary;
    try {
        summary = cross_validate(
            d, plan, model == "gbdt" ? gbdt_factory(to_config(tf, seed)) : knn_factory(k));
    } catch (const Error& e) {
        if (e.code() == Errc::invalid_config) throw;
        throw CliExit{kExitTraining, e.what()};
    }

    const std::string json_path = out_path(out_dir, "cv_summary.json");
    const std::string text_path = out_path(out_dir, "cv_summary.txt");
    nlohmann::json j = summary.to_json();
    j["fold_plan"] = plan.to_json();
    write_json(json_path, j);
    write_text(text_path, cv_table_text(summary));
    manifest.add_output(json_path);
    manifest.add_output(text_path);
    manifest.write(out_path(out_dir, "manifest.json"));
    std::cout << cv_table_text(summary);
    return 0;
}

// -------------------------------- select ------------------------------------

int cmd_select(const IngestFlags& ingest, const TrainFlags& wide, const TrainFlags& compact,
               size_t top_k_count, const std::string& exclude_file,
               const std::vector<std::string>& always_include, uint64_t seed,
               std::optional<uint64_t> compact_seed, uint32_t repeats, size_t folds,
               const std::string& out_dir) {
    ensure_out_dir(out_dir);
    RunManifest manifest("select");
    const DatasetMatrix d = load_dataset(ingest, manifest);

    SelectionConfig cfg;
    cfg.top_k = top_k_count;
    cfg.always_include = always_include;
    cfg.wide_config = to_config(wide, seed);
    cfg.compact_config = to_config(compact, compact_seed.value_or(seed));
    cfg.seed = seed;
    cfg.compact_seed = compact_seed;
    cfg.loss_repeats = repeats;
    cfg.cv_folds = folds;
    if (!exclude_file.empty()) {
        manifest.add_input(exclude_file);
        cfg.exclusion_list = read_name_list(exclude_file);
    }

    nlohmann::json params = ingest_params(ingest);
    params["config"] = cfg.to_json();
    params["exclude_file"] = exclude_file.empty() ? nlohmann::json(nullptr)
                                                  : nlohmann::json(exclude_file);
    params["out"] = out_dir;
    manifest.set_parameters(params);

    const std::string pred_csv = out_path(out_dir, "importance_prediction_values_change.csv");
    const std::string loss_csv = out_path(out_dir, "importance_loss_function_change.csv");

    PipelineOutcome outcome;
    try {
        outcome = run_pipeline(d, cfg);
    } catch (const EmptySelectionError& e) {
        write_text(pred_csv, e.report_prediction.to_csv());
        write_text(loss_csv, e.report_loss.to_csv());
        manifest.add_output(pred_csv);
        manifest.add_output(loss_csv);
        manifest.write(out_path(out_dir, "manifest.json"));
        throw CliExit{kExitEmptySelection, e.what()};
    }

    write_text(pred_csv, outcome.selection.report_prediction.to_csv());
    write_text(loss_csv, outcome.selection.report_loss.to_csv());
    const std::string sel_path = out_path(out_dir, "selection.json");
    write_json(sel_path, outcome.selection.to_json());
    std::string features_text;
    for (const auto& name : outcome.selection.final_features) features_text += name + "\n";
    const std::string features_path = out_path(out_dir, "final_features.txt");
    write_text(features_path, features_text);
    const std::string model_path = out_path(out_dir, "compact_model.json");
    save_model(outcome.compact_model, model_path);
    const std::string val_json = out_path(out_dir, "validation_metrics.json");
    const std::string val_text = out_path(out_dir, "validation_metrics.txt");
    write_json(val_json, outcome.validation.to_json());
    write_text(val_text, metrics_table_text(outcome.validation, "Validation Set") + "\n" +
                             confusion_table_text(outcome.validation.matrix));
    const std::string cv_json = out_path(out_dir, "cv_summary.json");
    const std::string cv_text = out_path(out_dir, "cv_summary.txt");
    write_json(cv_json, outcome.cv.to_json());
    write_text(cv_text, cv_table_text(outcome.cv));

    for (const auto& p : {pred_csv, loss_csv, sel_path, features_path, model_path, val_json,
                          val_text, cv_json, cv_text})
        manifest.add_output(p);
    manifest.write(out_path(out_dir, "manifest.json"));

    std::cout << "selected " << outcome.selection.final_features.size() << " features ("
              << outcome.selection.intersection.size() << " in intersection, "
              << outcome.selection.after_exclusion.size() << " after exclusion)\n";
    std::cout << metrics_table_text(outcome.validation, "Validation Set");
    return 0;
}

// ------------------------------- evaluate -----------------------------------

int cmd_evaluate(const IngestFlags& ingest, const std::string& model_kind,
                 const std::string& model_file, const std::string& train_input, size_t k,
                 double threshold, const std::string& out_dir) {
    if (threshold <= 0.0 || threshold >= 1.0)
        throw CliExit{kExitUsage, "--threshold must lie in (0,1)"};
    ensure_out_dir(out_dir);
    RunManifest manifest("evaluate");
    const DatasetMatrix d = load_dataset(ingest, manifest);

    nlohmann::json params = ingest_params(ingest);
    params["model"] = model_kind;
    params["threshold"] = threshold;
    params["out"] = out_dir;

    MetricsReport report;
    if (model_kind == "gbdt") {
        if (model_file.empty()) throw CliExit{kExitUsage, "--model-file is required for gbdt"};
        manifest.add_input(model_file);
        params["model_file"] = model_file;
        const GbdtModel model = load_model(model_file);

        // dataset must contain every model feature; extra columns are
        // projected away and recorded
        std::vector<std::string> missing, extra;
        const std::unordered_set<std::string> model_features(model.feature_names.begin(),
                                                             model.feature_names.end());
        for (const auto& name : model.feature_names)
            if (!d.feature_index(name)) missing.push_back(name);
        for (const auto& name : d.feature_names)
            if (!model_features.count(name)) extra.push_back(name);
        if (!missing.empty()) {
            std::string msg = "feature mismatch between model and dataset; missing from dataset:";
            for (const auto& name : missing) msg += " " + name;
            if (!extra.empty()) {
                msg += "; absent from model:";
                for (const auto& name : extra) msg += " " + name;
            }
            throw CliExit{kExitData, msg};
        }
        params["projected_away"] = extra;
        report = evaluate_model(model, d.project(model.feature_names), threshold);
    } else {
        if (train_input.empty())
            throw CliExit{kExitUsage, "--train-input is required for knn evaluation"};
        IngestFlags train_flags = ingest;
        train_flags.input = train_input;
        const DatasetMatrix train_d = load_dataset(train_flags, manifest);
        params["train_input"] = train_input;
        params["k"] = k;
        KnnModel model;
        try {
            model = knn_fit(train_d.project(d.feature_names), k);
        } catch (const Error& e) {
            if (e.code() == Errc::invalid_config) throw;
            throw CliExit{kExitTraining, e.what()};
        }
        std::vector<double> scores(d.rows());
        std::vector<uint8_t> preds(d.rows());
        for (size_t r = 0; r < d.rows(); ++r) {
            scores[r] = knn_predict_score(model, d.row(r));
            preds[r] = knn_predict_label(model, d.row(r)) ? 1 : 0;
        }
        report = evaluate_scores(d.labels, scores, preds);
    }
    manifest.set_parameters(params);

    const std::string json_path = out_path(out_dir, "metrics.json");
    const std::string text_path = out_path(out_dir, "metrics.txt");
    write_json(json_path, report.to_json());
    write_text(text_path, metrics_table_text(report, "Value") + "\n" +
                              confusion_table_text(report.matrix));
    manifest.add_output(json_path);
    manifest.add_output(text_path);
    manifest.write(out_path(out_dir, "manifest.json"));
    std::cout << metrics_table_text(report, "Value") << "\n"
              << confusion_table_text(report.matrix);
    return 0;
}

// -------------------------------- synth -------------------------------------

int cmd_synth(SyntheticSpec spec, const std::string& config_file, const std::string& out_file) {
    if (!config_file.empty()) {
        std::ifstream in(config_file);
        if (!in) raise(Errc::io_error, "cannot open '" + config_file + "'");
        nlohmann::json j;
        try {
            in >> j;
        } catch (const std::exception& e) {
            throw CliExit{kExitData, std::string("unparseable config: ") + e.what()};
        }
        if (j.contains("rows")) spec.rows = j["rows"].get<size_t>();
        if (j.contains("features")) spec.features = j["features"].get<size_t>();
        if (j.contains("informative")) spec.informative = j["informative"].get<size_t>();
        if (j.contains("shift")) spec.shift = j["shift"].get<double>();
        if (j.contains("positive_fraction"))
            spec.positive_fraction = j["positive_fraction"].get<double>();
        if (j.contains("seed")) spec.seed = j["seed"].get<uint64_t>();
        if (j.contains("with_age")) spec.with_age = j["with_age"].get<bool>();
        if (j.contains("missing_age_fraction"))
            spec.missing_age_fraction = j["missing_age_fraction"].get<double>();
    }
    RunManifest manifest("synth");
    if (!config_file.empty()) manifest.add_input(config_file);
    manifest.set_parameters({{"rows", spec.rows},
                             {"features", spec.features},
                             {"informative", spec.informative},
                             {"shift", spec.shift},
                             {"positive_fraction", spec.positive_fraction},
                             {"seed", spec.seed},
                             {"with_age", spec.with_age},
                             {"missing_age_fraction", spec.missing_age_fraction},
                             {"out", out_file}});
    const SyntheticCohort cohort = make_synthetic_cohort(spec);
    write_csv(cohort.data, out_file);
    manifest.add_output(out_file);
    std::string informative;
    for (size_t f : cohort.informative_indices)
        informative += cohort.data.feature_names[f] + "\n";
    const std::string sidecar = out_file + ".informative.txt";
    write_text(sidecar, informative);
    manifest.add_output(sidecar);
    manifest.write(out_file + ".manifest.json");
    std::cout << "wrote " << cohort.data.rows() << "x" << cohort.data.features()
              << " cohort to " << out_file << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"gradient-boosted oblivious trees with dual-importance feature selection"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kVersion);

    // split
    auto* split = app.add_subcommand("split", "stratified train/validation split");
    IngestFlags split_ingest;
    add_ingest_flags(split, split_ingest);
    double train_fraction = 0.8;
    uint64_t split_seed = 0;
    std::string split_out = "out";
    split->add_option("--train-fraction", train_fraction, "training-side fraction");
    split->add_option("--seed", split_seed, "RNG seed");
    split->add_option("--out", split_out, "output directory");

    // cv
    auto* cv = app.add_subcommand("cv", "stratified k-fold cross-validated training");
    IngestFlags cv_ingest;
    add_ingest_flags(cv, cv_ingest);
    std::string cv_model = "gbdt";
    TrainFlags cv_train;
    size_t cv_k = 5, cv_folds = 10;
    uint64_t cv_seed = 0;
    std::string cv_out = "out";
    cv->add_option("--model", cv_model, "model kind")->check(CLI::IsMember({"gbdt", "knn"}));
    add_train_flags(cv, cv_train, "");
    cv->add_option("--k", cv_k, "neighbour count for knn");
    cv->add_option("--folds", cv_folds, "number of folds");
    cv->add_option("--seed", cv_seed, "RNG seed");
    cv->add_option("--out", cv_out, "output directory");

    // select
    auto* select = app.add_subcommand("select",
                                      "wide model, dual importance, top-k intersection, "
                                      "exclusion filter, compact model");
    IngestFlags sel_ingest;
    add_ingest_flags(select, sel_ingest);
    TrainFlags wide_train, compact_train;
    wide_train.iterations = 200;
    wide_train.depth = 6;
    compact_train.iterations = 100;
    compact_train.depth = 11;
    size_t sel_top_k = 100, sel_folds = 10;
    uint64_t sel_seed = 0;
    std::optional<uint64_t> sel_compact_seed;
    uint32_t sel_repeats = 5;
    std::string exclude_file, sel_out = "out";
    std::vector<std::string> always_include;
    select->add_option("--top-k", sel_top_k, "top-k size for each importance ranking");
    select->add_option("--exclude-file", exclude_file,
                       "newline-delimited feature names removed after intersection");
    select->add_option("--always-include", always_include,
                       "feature forced into the final set (repeatable)");
    add_train_flags(select, wide_train, "wide");
    add_train_flags(select, compact_train, "compact");
    select->add_option("--seed", sel_seed, "RNG seed");
    select->add_option("--compact-seed", sel_compact_seed,
                       "separate seed for the compact-model re-split");
    select->add_option("--repeats", sel_repeats, "loss-change permutation repeats");
    select->add_option("--folds", sel_folds, "compact-model CV folds");
    select->add_option("--out", sel_out, "output directory");

    // evaluate
    auto* evaluate = app.add_subcommand("evaluate", "score a dataset with a saved model");
    IngestFlags eval_ingest;
    add_ingest_flags(evaluate, eval_ingest);
    std::string eval_model = "gbdt", model_file, eval_train_input;
    size_t eval_k = 5;
    double eval_threshold = 0.5;
    std::string eval_out = "out";
    evaluate->add_option("--model", eval_model, "model kind")
        ->check(CLI::IsMember({"gbdt", "knn"}));
    evaluate->add_option("--model-file", model_file, "saved gbdt model JSON");
    evaluate->add_option("--train-input", eval_train_input, "training CSV for knn evaluation");
    evaluate->add_option("--k", eval_k, "neighbour count for knn");
    evaluate->add_option("--threshold", eval_threshold, "positive-class probability threshold");
    evaluate->add_option("--out", eval_out, "output directory");

    // synth
    auto* synth = app.add_subcommand("synth", "write a seeded synthetic cohort CSV");
    SyntheticSpec synth_spec;
    std::string synth_config, synth_out = "cohort.csv";
    synth->add_option("--rows", synth_spec.rows, "sample count");
    synth->add_option("--features", synth_spec.features, "feature count");
    synth->add_option("--informative", synth_spec.informative, "informative feature count");
    synth->add_option("--shift", synth_spec.shift, "label shift of informative features");
    synth->add_option("--positive-fraction", synth_spec.positive_fraction,
                      "fraction of positive rows");
    synth->add_option("--seed", synth_spec.seed, "RNG seed");
    synth->add_flag("--with-age", synth_spec.with_age, "append an age column");
    synth->add_option("--missing-age-fraction", synth_spec.missing_age_fraction,
                      "fraction of ages left empty");
    synth->add_option("--config", synth_config, "JSON file overriding the flags above");
    synth->add_option("--out", synth_out, "output CSV path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (split->parsed())
            return cmd_split(split_ingest, train_fraction, split_seed, split_out);
        if (cv->parsed())
            return cmd_cv(cv_ingest, cv_model, cv_train, cv_k, cv_folds, cv_seed, cv_out);
        if (select->parsed())
            return cmd_select(sel_ingest, wide_train, compact_train, sel_top_k, exclude_file,
                              always_include, sel_seed, sel_compact_seed, sel_repeats, sel_folds,
                              sel_out);
        if (evaluate->parsed())
            return cmd_evaluate(eval_ingest, eval_model, model_file, eval_train_input, eval_k,
                                eval_threshold, eval_out);
        if (synth->parsed()) return cmd_synth(synth_spec, synth_config, synth_out);
    } catch (const CliExit& e) {
        std::cerr << "error: " << e.message << "\n";
        return e.code;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code_for(e.code());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
