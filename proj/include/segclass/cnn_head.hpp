#pragma once

#include <cstdint>
#include <vector>

#include <json.hpp>

#include "segclass/label_space.hpp"
#include "segclass/matrix.hpp"

namespace segclass {

struct HeadConfig {
    std::size_t segment_count = 5;  // K
    std::size_t hidden_size = 768;  // H
    std::vector<std::size_t> kernel_widths = {2, 3};
    std::size_t filters_per_width = 128;
    double dropout_p = 0.1;
    std::size_t dense_dim = 256;
    std::size_t n_labels = 18;
    std::uint64_t seed = 0;

    std::size_t pooled_dim() const { return kernel_widths.size() * filters_per_width; }

    nlohmann::json to_json() const;
    static HeadConfig from_json(const nlohmann::json& doc);

    friend bool operator==(const HeadConfig&, const HeadConfig&) = default;
};

// Throws ConfigError unless the whole K x H -> sum(filters) -> dense -> labels
// chain is consistent.
void validate_head_config(const HeadConfig& config);

struct ConvBlockParams {
    Matrix kernel;             // filters x (width * H), rows are filters
    std::vector<double> bias;  // filters

    friend bool operator==(const ConvBlockParams&, const ConvBlockParams&) = default;
};

struct HeadParameters {
    std::vector<ConvBlockParams> conv;  // aligned with kernel_widths
    Matrix dense_weight;                // dense_dim x pooled_dim
    std::vector<double> dense_bias;
    Matrix out_weight;                  // n_labels x dense_dim
    std::vector<double> out_bias;

    static HeadParameters zeros(const HeadConfig& config);
    bool all_finite() const;

    friend bool operator==(const HeadParameters&, const HeadParameters&) = default;
};

using HeadGradients = HeadParameters;

// Glorot-uniform weights (bound sqrt(6/(fan_in+fan_out))), zero biases.
// Deterministic for a fixed seed.
HeadParameters init_parameters(const HeadConfig& config, std::uint64_t seed);

enum class RunMode { train, infer };

// Activations recorded by a train-mode forward pass; consumed by head_backward.
struct ForwardCache {
    Matrix input;                                    // K x H segment matrix
    std::vector<Matrix> conv_pre;                    // per width: positions x filters
    std::vector<std::vector<std::size_t>> pool_argmax;  // per width: filter -> position
    std::vector<double> pooled;        // concatenated max-pooled features
    std::vector<double> dropout_mask;  // 0 or 1/(1-p) per pooled unit
    std::vector<double> dropped;
    std::vector<double> dense_pre;     // dense activations before ReLU
    std::vector<double> dense_act;
    std::vector<double> logits;
    std::vector<double> probs;
    bool train_mode = false;
    bool valid = false;
};

// Conv over the segment axis (H as channels) -> ReLU -> max-pool -> concat ->
// dropout (train only, inverted scaling) -> dense+ReLU -> affine -> sigmoid.
// Every output lies strictly inside (0, 1).
std::vector<double> head_forward(const Matrix& segments, const HeadParameters& params,
                                 const HeadConfig& config, RunMode mode,
                                 std::uint64_t dropout_mask_seed = 0,
                                 ForwardCache* cache = nullptr);

// Gradients of loss_gradient * mean-BCE (or a per-label weighted BCE sum when
// per_label_weights is given) with respect to every head parameter. Max-pool
// routes gradient to the first maximal position.
HeadGradients head_backward(const ForwardCache& cache, const HeadParameters& params,
                            const HeadConfig& config, const LabelVector& target,
                            double loss_gradient,
                            const std::vector<double>* per_label_weights = nullptr);

} // namespace segclass
