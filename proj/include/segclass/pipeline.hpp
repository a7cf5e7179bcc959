#pragma once

#include <filesystem>
#include <string>

#include "segclass/run_config.hpp"

namespace segclass {

// Artifact layout inside a run directory.
struct RunPaths {
    std::filesystem::path root;

    explicit RunPaths(std::filesystem::path dir) : root(std::move(dir)) {}

    std::filesystem::path splits_dir() const { return root / "splits"; }
    std::filesystem::path bundles_dir() const { return root / "bundles"; }
    std::filesystem::path checkpoint_dir() const { return root / "checkpoint"; }
    std::filesystem::path reports_dir() const { return root / "reports"; }
    std::filesystem::path split_file(const std::string& name) const {
        return splits_dir() / (name + ".jsonl");
    }
    std::filesystem::path bundle_file(const std::string& name) const {
        return bundles_dir() / (name + ".jsonl");
    }
    std::filesystem::path label_space_file() const { return root / "label_space.json"; }
    std::filesystem::path class_weights_file() const { return root / "class_weights.json"; }
    std::filesystem::path rejections_file() const { return root / "rejections.jsonl"; }
    std::filesystem::path resolved_config_file() const { return root / "resolved_config.json"; }
    std::filesystem::path meta_file() const { return root / "meta.json"; }
};

// Validates, splits, segments and weights the corpus into the run directory.
void run_prepare(const RunConfig& config);

// Trains the head on the prepared artifacts and writes the checkpoint.
void run_train(const RunConfig& config);

// Builds the evaluation report from the checkpoint and the chosen split, or
// from a frozen predictions file when eval.predictions is set.
void run_evaluate(const RunConfig& config);

// Scores unlabeled JSON-lines input; writes {doc_id, probabilities,
// predicted_labels} per line.
void run_predict(const RunConfig& config, const std::filesystem::path& input,
                 const std::filesystem::path& output);

// Renders reports/report.json as a markdown table; also writes report.md.
std::string run_report(const RunConfig& config);

} // namespace segclass
