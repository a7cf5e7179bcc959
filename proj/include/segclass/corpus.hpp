#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "segclass/label_space.hpp"

namespace segclass {

// One corpus article. subject_areas holds normalized raw codes.
struct DocumentRecord {
    std::string doc_id;
    std::string title;
    std::string abstract_text;
    std::string body_text;
    std::set<std::string> subject_areas;
    std::optional<std::vector<std::string>> keywords;

    friend bool operator==(const DocumentRecord&, const DocumentRecord&) = default;
};

struct RejectedLine {
    std::size_t line_no = 0; // 1-based
    std::string reason;
};

struct LoadResult {
    std::vector<DocumentRecord> records;
    std::vector<RejectedLine> rejections;
};

struct LoadOptions {
    std::optional<std::size_t> limit;
    // Prediction inputs carry no labels; corpus records must.
    bool require_labels = true;
};

// Parses and validates one external-schema object. Throws ValidationError with
// the rejection reason on failure.
DocumentRecord record_from_json(const nlohmann::json& doc, const LabelSpace& space,
                                bool require_labels = true);
nlohmann::json record_to_json(const DocumentRecord& record);

// Loads a JSON-lines corpus. Records failing validation are skipped and
// reported, never fatal; an unreadable file is. Reading stops once `limit`
// records have been accepted.
LoadResult load_corpus(const std::filesystem::path& path, const LabelSpace& space,
                       const LoadOptions& options = {});

void write_corpus(const std::filesystem::path& path, const std::vector<DocumentRecord>& records);
void write_rejections(const std::filesystem::path& path, const std::vector<RejectedLine>& rejections);

enum class LabelSpaceKind { raw, consolidated };

// Per-label record counts. A record contributes once to each label it carries
// (after consolidation, labels merging to the same code count once per record).
// Labels absent from the data appear with count 0.
std::map<std::string, std::int64_t> label_distribution(const std::vector<DocumentRecord>& records,
                                                       const LabelSpace& space,
                                                       LabelSpaceKind kind);

struct DatasetSplit {
    std::vector<DocumentRecord> train;
    std::vector<DocumentRecord> validation;
    std::vector<DocumentRecord> test;
    std::array<double, 3> ratios{};
    std::uint64_t seed = 0;
};

// Seeded shuffle, then floor-allocated sizes with the remainder going to train.
DatasetSplit split_dataset(const std::vector<DocumentRecord>& records,
                           const std::array<double, 3>& ratios, std::uint64_t seed);

enum class WeightSmoothing { none, add_one };

// Inverse-frequency weights over the consolidated labels of the training
// records. A zero-frequency label is an error unless add-one smoothing is
// enabled, which bumps every frequency by one.
ClassWeightTable compute_class_weights(const std::vector<DocumentRecord>& train_records,
                                       const LabelSpace& space,
                                       WeightSmoothing smoothing = WeightSmoothing::none);

} // namespace segclass
