#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "segclass/cnn_head.hpp"
#include "segclass/encoder.hpp"
#include "segclass/segmenter.hpp"
#include "segclass/trainer.hpp"

namespace segclass {

// Fully-resolved run settings. Resolution order: built-in defaults, config
// file, SEGCLASS_-prefixed environment variables, then dotted-key command-line
// overrides (e.g. train.epochs=3). The top-level seed fills every component
// seed that is not set explicitly.
struct RunConfig {
    std::filesystem::path corpus_path;
    std::optional<std::size_t> corpus_limit;

    std::array<double, 3> split_ratios{0.8, 0.1, 0.1};
    std::uint64_t split_seed = 13;

    std::string keyword_provider = "term_score";
    SegmenterOptions segmenter;

    EncoderSettings encoder;

    HeadConfig head; // segment_count, hidden_size and n_labels are derived

    TrainConfig train;
    bool smooth_class_weights = false;

    std::string eval_split = "test";
    std::optional<std::filesystem::path> eval_predictions;

    std::filesystem::path output_dir;

    std::uint64_t base_seed = 13;

    // Echo document with every default filled in; written next to outputs.
    nlohmann::json resolved;
};

// Parses and validates; throws ConfigError on unknown keys or bad values.
RunConfig load_run_config(const std::filesystem::path& config_path,
                          const std::vector<std::string>& overrides = {},
                          bool apply_env = true);

// Same resolution applied to an in-memory document (used by tests).
RunConfig resolve_run_config(nlohmann::json file_doc,
                             const std::vector<std::string>& overrides = {},
                             bool apply_env = true);

} // namespace segclass
