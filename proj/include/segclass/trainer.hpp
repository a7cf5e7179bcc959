#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "segclass/cnn_head.hpp"
#include "segclass/corpus.hpp"
#include "segclass/encoder.hpp"
#include "segclass/evaluator.hpp"
#include "segclass/label_space.hpp"

namespace segclass {

enum class FreezingPolicy { freeze_all_encoder, unfreeze_top_n, unfreeze_first_12, unfreeze_all };
enum class WeightingMode { sample_weights, uniform, per_label };

std::string to_string(FreezingPolicy policy);
FreezingPolicy freezing_policy_from_string(const std::string& name);
std::string to_string(WeightingMode mode);
WeightingMode weighting_mode_from_string(const std::string& name);

struct TrainConfig {
    std::size_t epochs = 3;
    std::size_t batch_size = 8;
    double head_step_size = 1e-3;
    double encoder_step_size = 2e-5;
    FreezingPolicy freezing_policy = FreezingPolicy::freeze_all_encoder;
    std::size_t unfreeze_top_n = 0;
    double decision_threshold = 0.5;
    std::uint64_t seed = 0;
    std::optional<std::size_t> early_stop_patience;
    WeightingMode weighting_mode = WeightingMode::sample_weights;

    nlohmann::json to_json() const;
    static TrainConfig from_json(const nlohmann::json& doc);

    friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

void validate_train_config(const TrainConfig& config);

// w_s * mean over labels of binary cross-entropy. Probabilities are clamped
// away from exact 0/1 by a machine-epsilon guard inside the loss only.
double weighted_loss(const std::vector<double>& probs, const LabelVector& target,
                     double sample_weight_value);

// Ablation variant: sum over labels of w(l) * BCE_l (the class weights sum to
// one, so this is a convex combination of the per-label terms).
double per_label_weighted_loss(const std::vector<double>& probs, const LabelVector& target,
                               const std::vector<double>& label_weights);

// Trainable layer-group indices under a policy; the head is always trainable.
std::set<std::size_t> trainable_layer_groups(std::size_t group_count, FreezingPolicy policy,
                                             std::size_t top_n = 0);
std::set<std::size_t> apply_freezing_policy(const Encoder& encoder, FreezingPolicy policy,
                                            std::size_t top_n = 0);

struct EpochStats {
    std::size_t epoch = 0;       // 1-based
    double train_loss = 0.0;
    double val_weighted_f1 = 0.0; // NaN when there is no validation split
};

struct TrainedModel {
    EncoderSettings encoder;
    HeadConfig head_config;
    HeadParameters params;
    TrainConfig train_config;
    LabelSpace space = LabelSpace::standard();
    ClassWeightTable weights;
    std::vector<EpochStats> history;
    // Set when a NaN loss aborted training; params then hold the last
    // end-of-epoch state. Runtime flag only, not persisted.
    bool diverged = false;
};

// One prepared training example: the encoded segment stack and its target.
struct TrainItem {
    Matrix embedding;
    LabelVector target;
    std::set<std::string> labels; // consolidated
};

std::vector<TrainItem> prepare_train_items(const std::vector<DocumentRecord>& records,
                                           const std::vector<SegmentBundle>& bundles,
                                           const EncoderStack& stack, std::size_t max_len,
                                           const LabelSpace& space);

// Core seeded loop over pre-encoded items. Encoder parameters never change
// here (the adapters expose no gradients), so embeddings stay valid across
// epochs; the freezing policy is validated and recorded.
TrainedModel train_core(const std::vector<TrainItem>& train_items,
                        const std::vector<TrainItem>& val_items, const HeadConfig& head_config,
                        const TrainConfig& config, const ClassWeightTable& table,
                        const LabelSpace& space, const EncoderSettings& encoder_settings);

// Segments, tokenizes and encodes the split, then trains.
TrainedModel train(const DatasetSplit& split, const EncoderStack& stack,
                   const EncoderSettings& encoder_settings, const KeywordProvider& provider,
                   const SegmenterOptions& seg_options, HeadConfig head_config,
                   const TrainConfig& config, const ClassWeightTable& table,
                   const LabelSpace& space);

// Checkpoint directory layout: params.bin, head_config.json, train_config.json,
// label_space.json, class_weights.json, history.csv, VERSION.
void save_checkpoint(const TrainedModel& model, const std::filesystem::path& dir);
TrainedModel load_checkpoint(const std::filesystem::path& dir);

// Inference over a batch of embedding stacks.
std::vector<std::vector<double>> predict_probabilities(const TrainedModel& model,
                                                       const std::vector<Matrix>& embeddings);

} // namespace segclass
