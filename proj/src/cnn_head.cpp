#include "segclass/cnn_head.hpp"

#include <algorithm>
#include <cmath>

#include "segclass/rng.hpp"

namespace segclass {

namespace {

double stable_sigmoid(double z) {
    if (z >= 0.0) {
        return 1.0 / (1.0 + std::exp(-z));
    }
    const double e = std::exp(z);
    return e / (1.0 + e);
}

Matrix glorot_matrix(std::size_t rows, std::size_t cols, std::size_t fan_in, std::size_t fan_out,
                     std::mt19937_64& gen) {
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    Matrix m(rows, cols);
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) {
            m(r, c) = rng::uniform(gen, -bound, bound);
        }
    }
    return m;
}

} // namespace

nlohmann::json HeadConfig::to_json() const {
    return nlohmann::json{
        {"segment_count", segment_count},
        {"hidden_size", hidden_size},
        {"kernel_widths", kernel_widths},
        {"filters_per_width", filters_per_width},
        {"dropout_p", dropout_p},
        {"dense_dim", dense_dim},
        {"n_labels", n_labels},
        {"seed", seed},
    };
}

HeadConfig HeadConfig::from_json(const nlohmann::json& doc) {
    HeadConfig config;
    config.segment_count = doc.value("segment_count", config.segment_count);
    config.hidden_size = doc.value("hidden_size", config.hidden_size);
    if (doc.contains("kernel_widths")) {
        config.kernel_widths = doc.at("kernel_widths").get<std::vector<std::size_t>>();
    }
    config.filters_per_width = doc.value("filters_per_width", config.filters_per_width);
    config.dropout_p = doc.value("dropout_p", config.dropout_p);
    config.dense_dim = doc.value("dense_dim", config.dense_dim);
    config.n_labels = doc.value("n_labels", config.n_labels);
    config.seed = doc.value("seed", config.seed);
    return config;
}

void validate_head_config(const HeadConfig& config) {
    if (config.segment_count < 1 || config.hidden_size < 1) {
        throw ConfigError("head needs segment_count >= 1 and hidden_size >= 1");
    }
    if (config.kernel_widths.empty()) {
        throw ConfigError("head needs at least one kernel width");
    }
    for (std::size_t w : config.kernel_widths) {
        if (w < 1 || w > config.segment_count) {
            throw ConfigError("kernel width " + std::to_string(w) +
                              " exceeds the segment count " + std::to_string(config.segment_count));
        }
    }
    if (config.filters_per_width < 1) {
        throw ConfigError("filters_per_width must be >= 1");
    }
    if (!(config.dropout_p >= 0.0 && config.dropout_p < 1.0)) {
        throw ConfigError("dropout_p must lie in [0, 1)");
    }
    if (config.dense_dim < 1 || config.n_labels < 1) {
        throw ConfigError("dense_dim and n_labels must be >= 1");
    }
    // Shape chain K x H -> pooled -> dense -> labels must be positive throughout.
    if (config.pooled_dim() < 1) {
        throw ConfigError("pooled feature dimension must be >= 1");
    }
}

HeadParameters HeadParameters::zeros(const HeadConfig& config) {
    validate_head_config(config);
    HeadParameters params;
    for (std::size_t w : config.kernel_widths) {
        ConvBlockParams block;
        block.kernel = Matrix(config.filters_per_width, w * config.hidden_size);
        block.bias.assign(config.filters_per_width, 0.0);
        params.conv.push_back(std::move(block));
    }
    params.dense_weight = Matrix(config.dense_dim, config.pooled_dim());
    params.dense_bias.assign(config.dense_dim, 0.0);
    params.out_weight = Matrix(config.n_labels, config.dense_dim);
    params.out_bias.assign(config.n_labels, 0.0);
    return params;
}

bool HeadParameters::all_finite() const {
    auto finite = [](const std::vector<double>& v) {
        return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
    };
    for (const auto& block : conv) {
        if (!block.kernel.all_finite() || !finite(block.bias)) return false;
    }
    return dense_weight.all_finite() && finite(dense_bias) && out_weight.all_finite() &&
           finite(out_bias);
}

HeadParameters init_parameters(const HeadConfig& config, std::uint64_t seed) {
    validate_head_config(config);
    HeadParameters params = HeadParameters::zeros(config);
    std::mt19937_64 gen(rng::mix(seed, 0x686561645f696e69ULL));
    for (std::size_t i = 0; i < config.kernel_widths.size(); ++i) {
        const std::size_t w = config.kernel_widths[i];
        params.conv[i].kernel = glorot_matrix(config.filters_per_width, w * config.hidden_size,
                                              w * config.hidden_size, config.filters_per_width, gen);
    }
    params.dense_weight = glorot_matrix(config.dense_dim, config.pooled_dim(), config.pooled_dim(),
                                        config.dense_dim, gen);
    params.out_weight = glorot_matrix(config.n_labels, config.dense_dim, config.dense_dim,
                                      config.n_labels, gen);
    return params;
}

std::vector<double> head_forward(const Matrix& segments, const HeadParameters& params,
                                 const HeadConfig& config, RunMode mode,
                                 std::uint64_t dropout_mask_seed, ForwardCache* cache) {
    validate_head_config(config);
    if (segments.rows() != config.segment_count || segments.cols() != config.hidden_size) {
        throw ValidationError("segment matrix is " + std::to_string(segments.rows()) + "x" +
                              std::to_string(segments.cols()) + ", head expects " +
                              std::to_string(config.segment_count) + "x" +
                              std::to_string(config.hidden_size));
    }
    if (!segments.all_finite()) {
        throw ValidationError("segment matrix contains non-finite entries");
    }

    ForwardCache local;
    ForwardCache& c = cache ? *cache : local;
    c = ForwardCache{};
    c.train_mode = mode == RunMode::train;
    c.input = segments;

    // Convolution along the segment axis, H as channels.
    c.pooled.assign(config.pooled_dim(), 0.0);
    for (std::size_t wi = 0; wi < config.kernel_widths.size(); ++wi) {
        const std::size_t width = config.kernel_widths[wi];
        const std::size_t positions = config.segment_count - width + 1;
        const auto& block = params.conv[wi];
        Matrix pre(positions, config.filters_per_width);
        std::vector<std::size_t> argmax(config.filters_per_width, 0);
        std::vector<double> best(config.filters_per_width, -1.0);
        for (std::size_t p = 0; p < positions; ++p) {
            for (std::size_t f = 0; f < config.filters_per_width; ++f) {
                double acc = block.bias[f];
                for (std::size_t i = 0; i < width; ++i) {
                    const double* kernel_row = block.kernel.data() + f * block.kernel.cols();
                    const double* input_row = segments.data() + (p + i) * config.hidden_size;
                    const double* kernel_slice = kernel_row + i * config.hidden_size;
                    for (std::size_t h = 0; h < config.hidden_size; ++h) {
                        acc += kernel_slice[h] * input_row[h];
                    }
                }
                pre(p, f) = acc;
                const double activated = acc > 0.0 ? acc : 0.0;
                if (activated > best[f]) {  // strict: ties keep the first position
                    best[f] = activated;
                    argmax[f] = p;
                }
            }
        }
        for (std::size_t f = 0; f < config.filters_per_width; ++f) {
            c.pooled[wi * config.filters_per_width + f] = std::max(best[f], 0.0);
        }
        c.conv_pre.push_back(std::move(pre));
        c.pool_argmax.push_back(std::move(argmax));
    }

    // Inverted dropout on the pooled features.
    c.dropout_mask.assign(c.pooled.size(), 1.0);
    if (c.train_mode && config.dropout_p > 0.0) {
        std::mt19937_64 gen(rng::mix(dropout_mask_seed, 0x64726f706f757431ULL));
        const double keep = 1.0 - config.dropout_p;
        for (double& m : c.dropout_mask) {
            m = rng::uniform01(gen) < keep ? 1.0 / keep : 0.0;
        }
    }
    c.dropped.resize(c.pooled.size());
    for (std::size_t i = 0; i < c.pooled.size(); ++i) {
        c.dropped[i] = c.pooled[i] * c.dropout_mask[i];
    }

    c.dense_pre.assign(config.dense_dim, 0.0);
    for (std::size_t d = 0; d < config.dense_dim; ++d) {
        double acc = params.dense_bias[d];
        const double* row = params.dense_weight.data() + d * params.dense_weight.cols();
        for (std::size_t i = 0; i < c.dropped.size(); ++i) acc += row[i] * c.dropped[i];
        c.dense_pre[d] = acc;
    }
    c.dense_act.resize(config.dense_dim);
    for (std::size_t d = 0; d < config.dense_dim; ++d) {
        c.dense_act[d] = c.dense_pre[d] > 0.0 ? c.dense_pre[d] : 0.0;
    }

    c.logits.assign(config.n_labels, 0.0);
    c.probs.assign(config.n_labels, 0.0);
    for (std::size_t j = 0; j < config.n_labels; ++j) {
        double acc = params.out_bias[j];
        const double* row = params.out_weight.data() + j * params.out_weight.cols();
        for (std::size_t d = 0; d < config.dense_dim; ++d) acc += row[d] * c.dense_act[d];
        c.logits[j] = acc;
        c.probs[j] = stable_sigmoid(acc);
    }
    c.valid = true;
    return c.probs;
}

HeadGradients head_backward(const ForwardCache& cache, const HeadParameters& params,
                            const HeadConfig& config, const LabelVector& target,
                            double loss_gradient, const std::vector<double>* per_label_weights) {
    if (!cache.valid || !cache.train_mode) {
        throw ValidationError("head_backward needs a cache from a train-mode forward pass");
    }
    if (target.bits.size() != config.n_labels) {
        throw ValidationError("target length does not match n_labels");
    }
    if (per_label_weights && per_label_weights->size() != config.n_labels) {
        throw ValidationError("per-label weight vector length does not match n_labels");
    }

    HeadGradients grads = HeadParameters::zeros(config);

    // d(mean BCE)/dlogit_j = (p_j - y_j)/n; the per-label variant drops the
    // 1/n and scales each term by its class weight.
    std::vector<double> g_logit(config.n_labels);
    for (std::size_t j = 0; j < config.n_labels; ++j) {
        const double diff = cache.probs[j] - (target.bits[j] ? 1.0 : 0.0);
        const double scale = per_label_weights
                                 ? (*per_label_weights)[j]
                                 : 1.0 / static_cast<double>(config.n_labels);
        g_logit[j] = loss_gradient * scale * diff;
    }

    std::vector<double> g_dense_act(config.dense_dim, 0.0);
    for (std::size_t j = 0; j < config.n_labels; ++j) {
        const double g = g_logit[j];
        const double* row = params.out_weight.data() + j * params.out_weight.cols();
        double* grow = grads.out_weight.data() + j * grads.out_weight.cols();
        for (std::size_t d = 0; d < config.dense_dim; ++d) {
            grow[d] = g * cache.dense_act[d];
            g_dense_act[d] += g * row[d];
        }
        grads.out_bias[j] = g;
    }

    std::vector<double> g_dense_pre(config.dense_dim);
    for (std::size_t d = 0; d < config.dense_dim; ++d) {
        g_dense_pre[d] = cache.dense_pre[d] > 0.0 ? g_dense_act[d] : 0.0;
    }

    std::vector<double> g_dropped(cache.dropped.size(), 0.0);
    for (std::size_t d = 0; d < config.dense_dim; ++d) {
        const double g = g_dense_pre[d];
        const double* row = params.dense_weight.data() + d * params.dense_weight.cols();
        double* grow = grads.dense_weight.data() + d * grads.dense_weight.cols();
        for (std::size_t i = 0; i < cache.dropped.size(); ++i) {
            grow[i] = g * cache.dropped[i];
            g_dropped[i] += g * row[i];
        }
        grads.dense_bias[d] = g;
    }

    for (std::size_t wi = 0; wi < config.kernel_widths.size(); ++wi) {
        const std::size_t width = config.kernel_widths[wi];
        const auto& argmax = cache.pool_argmax[wi];
        const auto& pre = cache.conv_pre[wi];
        for (std::size_t f = 0; f < config.filters_per_width; ++f) {
            const std::size_t unit = wi * config.filters_per_width + f;
            const double g_pooled = g_dropped[unit] * cache.dropout_mask[unit];
            const std::size_t p = argmax[f];
            if (pre(p, f) <= 0.0 || g_pooled == 0.0) continue;
            double* kernel_grad = grads.conv[wi].kernel.data() + f * grads.conv[wi].kernel.cols();
            for (std::size_t i = 0; i < width; ++i) {
                const double* input_row = cache.input.data() + (p + i) * config.hidden_size;
                double* kernel_slice = kernel_grad + i * config.hidden_size;
                for (std::size_t h = 0; h < config.hidden_size; ++h) {
                    kernel_slice[h] += g_pooled * input_row[h];
                }
            }
            grads.conv[wi].bias[f] += g_pooled;
        }
    }

    if (!grads.all_finite()) {
        throw ValidationError("non-finite gradients");
    }
    return grads;
}

} // namespace segclass
