#include "segclass/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>
#include <numeric>

#include "segclass/rng.hpp"

namespace segclass {

namespace {

constexpr char kCheckpointVersion[] = "1";

// Flat view over every head tensor, used by the optimizer and params.bin.
struct TensorRef {
    std::string name;
    std::vector<std::size_t> dims;
    double* data;
    std::size_t size;
};

std::vector<TensorRef> tensor_refs(HeadParameters& params, const HeadConfig& config) {
    std::vector<TensorRef> refs;
    for (std::size_t i = 0; i < params.conv.size(); ++i) {
        auto& block = params.conv[i];
        const std::size_t width = config.kernel_widths[i];
        refs.push_back({"conv" + std::to_string(i) + ".kernel",
                        {config.filters_per_width, width, config.hidden_size},
                        block.kernel.data(), block.kernel.size()});
        refs.push_back({"conv" + std::to_string(i) + ".bias",
                        {config.filters_per_width},
                        block.bias.data(), block.bias.size()});
    }
    refs.push_back({"dense.weight", {config.dense_dim, config.pooled_dim()},
                    params.dense_weight.data(), params.dense_weight.size()});
    refs.push_back({"dense.bias", {config.dense_dim}, params.dense_bias.data(),
                    params.dense_bias.size()});
    refs.push_back({"out.weight", {config.n_labels, config.dense_dim}, params.out_weight.data(),
                    params.out_weight.size()});
    refs.push_back({"out.bias", {config.n_labels}, params.out_bias.data(),
                    params.out_bias.size()});
    return refs;
}

// Adam with bias correction; one slot pair per tensor.
class AdamOptimizer {
public:
    AdamOptimizer(double step_size, std::size_t tensor_count)
        : step_size_(step_size), m_(tensor_count), v_(tensor_count) {}

    void step(std::vector<TensorRef>& params, const std::vector<TensorRef>& grads) {
        ++t_;
        const double bc1 = 1.0 - std::pow(kBeta1, static_cast<double>(t_));
        const double bc2 = 1.0 - std::pow(kBeta2, static_cast<double>(t_));
        for (std::size_t i = 0; i < params.size(); ++i) {
            auto& m = m_[i];
            auto& v = v_[i];
            if (m.empty()) {
                m.assign(params[i].size, 0.0);
                v.assign(params[i].size, 0.0);
            }
            for (std::size_t k = 0; k < params[i].size; ++k) {
                const double g = grads[i].data[k];
                m[k] = kBeta1 * m[k] + (1.0 - kBeta1) * g;
                v[k] = kBeta2 * v[k] + (1.0 - kBeta2) * g * g;
                const double mhat = m[k] / bc1;
                const double vhat = v[k] / bc2;
                params[i].data[k] -= step_size_ * mhat / (std::sqrt(vhat) + kEpsilon);
            }
        }
    }

private:
    static constexpr double kBeta1 = 0.9;
    static constexpr double kBeta2 = 0.999;
    static constexpr double kEpsilon = 1e-8;

    double step_size_;
    std::uint64_t t_ = 0;
    std::vector<std::vector<double>> m_;
    std::vector<std::vector<double>> v_;
};

void accumulate(HeadParameters& into, const HeadParameters& grads) {
    for (std::size_t i = 0; i < into.conv.size(); ++i) {
        auto& k = into.conv[i].kernel.values();
        const auto& gk = grads.conv[i].kernel.values();
        for (std::size_t j = 0; j < k.size(); ++j) k[j] += gk[j];
        for (std::size_t j = 0; j < into.conv[i].bias.size(); ++j) {
            into.conv[i].bias[j] += grads.conv[i].bias[j];
        }
    }
    auto& dw = into.dense_weight.values();
    const auto& gdw = grads.dense_weight.values();
    for (std::size_t j = 0; j < dw.size(); ++j) dw[j] += gdw[j];
    for (std::size_t j = 0; j < into.dense_bias.size(); ++j) into.dense_bias[j] += grads.dense_bias[j];
    auto& ow = into.out_weight.values();
    const auto& gow = grads.out_weight.values();
    for (std::size_t j = 0; j < ow.size(); ++j) ow[j] += gow[j];
    for (std::size_t j = 0; j < into.out_bias.size(); ++j) into.out_bias[j] += grads.out_bias[j];
}

double validation_weighted_f1(const std::vector<TrainItem>& val_items,
                              const HeadParameters& params, const HeadConfig& head_config,
                              const LabelSpace& space, double threshold) {
    std::vector<std::vector<double>> probabilities;
    LabelSets truths;
    probabilities.reserve(val_items.size());
    for (const auto& item : val_items) {
        probabilities.push_back(
            head_forward(item.embedding, params, head_config, RunMode::infer));
        truths.push_back(item.labels);
    }
    const LabelSets preds = predict_sets(probabilities, space, threshold);
    return weighted_average(per_label_metrics(confusion_counts(preds, truths, space))).f1;
}

void write_u32(std::ofstream& out, std::uint32_t v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

void write_u64(std::ofstream& out, std::uint64_t v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

std::uint32_t read_u32(std::ifstream& in) {
    std::uint32_t v = 0;
    in.read(reinterpret_cast<char*>(&v), sizeof v);
    return v;
}

std::uint64_t read_u64(std::ifstream& in) {
    std::uint64_t v = 0;
    in.read(reinterpret_cast<char*>(&v), sizeof v);
    return v;
}

void save_named_tensors(const std::filesystem::path& path, std::vector<TensorRef> refs) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out.write("SEGTNSR1", 8);
    write_u32(out, static_cast<std::uint32_t>(refs.size()));
    for (const auto& ref : refs) {
        write_u32(out, static_cast<std::uint32_t>(ref.name.size()));
        out.write(ref.name.data(), static_cast<std::streamsize>(ref.name.size()));
        write_u32(out, static_cast<std::uint32_t>(ref.dims.size()));
        for (std::size_t d : ref.dims) write_u64(out, d);
        out.write(reinterpret_cast<const char*>(ref.data),
                  static_cast<std::streamsize>(ref.size * sizeof(double)));
    }
    if (!out) throw IoError("failed writing " + path.string());
}

void load_named_tensors(const std::filesystem::path& path, std::vector<TensorRef> refs) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw CheckpointError("checkpoint is missing " + path.string());
    char magic[8];
    in.read(magic, 8);
    if (!in || std::memcmp(magic, "SEGTNSR1", 8) != 0) {
        throw CheckpointError("bad tensor file magic in " + path.string());
    }
    const std::uint32_t count = read_u32(in);
    if (count != refs.size()) {
        throw CheckpointError("tensor count mismatch in " + path.string() + ": file has " +
                              std::to_string(count) + ", head expects " +
                              std::to_string(refs.size()));
    }
    for (auto& ref : refs) {
        const std::uint32_t name_len = read_u32(in);
        std::string name(name_len, '\0');
        in.read(name.data(), name_len);
        if (name != ref.name) {
            throw CheckpointError("tensor '" + name + "' where '" + ref.name + "' was expected");
        }
        const std::uint32_t ndim = read_u32(in);
        std::vector<std::size_t> dims(ndim);
        std::size_t total = 1;
        for (auto& d : dims) {
            d = static_cast<std::size_t>(read_u64(in));
            total *= d;
        }
        if (dims != ref.dims || total != ref.size) {
            throw CheckpointError("tensor '" + name + "' has unexpected shape");
        }
        in.read(reinterpret_cast<char*>(ref.data),
                static_cast<std::streamsize>(ref.size * sizeof(double)));
        if (!in) throw CheckpointError("tensor file truncated at '" + name + "'");
    }
}

nlohmann::json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw CheckpointError("checkpoint is missing " + path.filename().string());
    return nlohmann::json::parse(in);
}

} // namespace

std::string to_string(FreezingPolicy policy) {
    switch (policy) {
    case FreezingPolicy::freeze_all_encoder: return "freeze_all_encoder";
    case FreezingPolicy::unfreeze_top_n: return "unfreeze_top_n";
    case FreezingPolicy::unfreeze_first_12: return "unfreeze_first_12";
    case FreezingPolicy::unfreeze_all: return "unfreeze_all";
    }
    return "freeze_all_encoder";
}

FreezingPolicy freezing_policy_from_string(const std::string& name) {
    if (name == "freeze_all_encoder") return FreezingPolicy::freeze_all_encoder;
    if (name == "unfreeze_top_n") return FreezingPolicy::unfreeze_top_n;
    if (name == "unfreeze_first_12") return FreezingPolicy::unfreeze_first_12;
    if (name == "unfreeze_all") return FreezingPolicy::unfreeze_all;
    throw ConfigError("unknown freezing policy '" + name + "'");
}

std::string to_string(WeightingMode mode) {
    switch (mode) {
    case WeightingMode::sample_weights: return "sample_weights";
    case WeightingMode::uniform: return "uniform";
    case WeightingMode::per_label: return "per_label";
    }
    return "sample_weights";
}

WeightingMode weighting_mode_from_string(const std::string& name) {
    if (name == "sample_weights") return WeightingMode::sample_weights;
    if (name == "uniform") return WeightingMode::uniform;
    if (name == "per_label") return WeightingMode::per_label;
    throw ConfigError("unknown weighting mode '" + name + "'");
}

nlohmann::json TrainConfig::to_json() const {
    nlohmann::json doc{
        {"epochs", epochs},
        {"batch_size", batch_size},
        {"head_step_size", head_step_size},
        {"encoder_step_size", encoder_step_size},
        {"freezing_policy", to_string(freezing_policy)},
        {"unfreeze_top_n", unfreeze_top_n},
        {"decision_threshold", decision_threshold},
        {"seed", seed},
        {"weighting_mode", to_string(weighting_mode)},
    };
    doc["early_stop_patience"] =
        early_stop_patience ? nlohmann::json(*early_stop_patience) : nlohmann::json();
    return doc;
}

TrainConfig TrainConfig::from_json(const nlohmann::json& doc) {
    TrainConfig config;
    config.epochs = doc.value("epochs", config.epochs);
    config.batch_size = doc.value("batch_size", config.batch_size);
    config.head_step_size = doc.value("head_step_size", config.head_step_size);
    config.encoder_step_size = doc.value("encoder_step_size", config.encoder_step_size);
    if (doc.contains("freezing_policy")) {
        config.freezing_policy = freezing_policy_from_string(doc.at("freezing_policy"));
    }
    config.unfreeze_top_n = doc.value("unfreeze_top_n", config.unfreeze_top_n);
    config.decision_threshold = doc.value("decision_threshold", config.decision_threshold);
    config.seed = doc.value("seed", config.seed);
    if (doc.contains("early_stop_patience") && !doc.at("early_stop_patience").is_null()) {
        config.early_stop_patience = doc.at("early_stop_patience").get<std::size_t>();
    }
    if (doc.contains("weighting_mode")) {
        config.weighting_mode = weighting_mode_from_string(doc.at("weighting_mode"));
    }
    validate_train_config(config);
    return config;
}

void validate_train_config(const TrainConfig& config) {
    if (config.epochs < 1) throw ConfigError("epochs must be >= 1");
    if (config.batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (!(config.decision_threshold > 0.0 && config.decision_threshold < 1.0)) {
        throw ConfigError("decision_threshold must lie strictly inside (0, 1)");
    }
    if (config.head_step_size <= 0.0 || config.encoder_step_size <= 0.0) {
        throw ConfigError("step sizes must be positive");
    }
    if (config.early_stop_patience && *config.early_stop_patience < 1) {
        throw ConfigError("early_stop_patience must be >= 1 when set");
    }
}

double weighted_loss(const std::vector<double>& probs, const LabelVector& target,
                     double sample_weight_value) {
    if (probs.size() != target.bits.size()) {
        throw ValidationError("probability and target lengths differ");
    }
    if (!(sample_weight_value >= 0.0)) {
        throw ValidationError("sample weight must be non-negative");
    }
    const double eps = std::numeric_limits<double>::epsilon();
    double sum = 0.0;
    for (std::size_t j = 0; j < probs.size(); ++j) {
        const double p = std::clamp(probs[j], eps, 1.0 - eps);
        if (!std::isfinite(p)) {
            throw ValidationError("non-finite probability in loss");
        }
        sum += target.bits[j] ? -std::log(p) : -std::log1p(-p);
    }
    const double loss = sample_weight_value * sum / static_cast<double>(probs.size());
    if (!std::isfinite(loss)) {
        throw ValidationError("non-finite loss");
    }
    return loss;
}

double per_label_weighted_loss(const std::vector<double>& probs, const LabelVector& target,
                               const std::vector<double>& label_weights) {
    if (probs.size() != target.bits.size() || probs.size() != label_weights.size()) {
        throw ValidationError("probability, target and weight lengths differ");
    }
    const double eps = std::numeric_limits<double>::epsilon();
    double sum = 0.0;
    for (std::size_t j = 0; j < probs.size(); ++j) {
        const double p = std::clamp(probs[j], eps, 1.0 - eps);
        if (!std::isfinite(p)) {
            throw ValidationError("non-finite probability in loss");
        }
        sum += label_weights[j] * (target.bits[j] ? -std::log(p) : -std::log1p(-p));
    }
    if (!std::isfinite(sum)) {
        throw ValidationError("non-finite loss");
    }
    return sum;
}

std::set<std::size_t> trainable_layer_groups(std::size_t group_count, FreezingPolicy policy,
                                             std::size_t top_n) {
    std::set<std::size_t> groups;
    switch (policy) {
    case FreezingPolicy::freeze_all_encoder:
        return groups;
    case FreezingPolicy::unfreeze_first_12:
        if (group_count < 12) {
            throw ValidationError("unfreeze_first_12 needs at least 12 layer groups, encoder has " +
                                  std::to_string(group_count));
        }
        for (std::size_t i = 0; i < 12; ++i) groups.insert(i);
        return groups;
    case FreezingPolicy::unfreeze_top_n:
        if (top_n > group_count) {
            throw ValidationError("cannot unfreeze " + std::to_string(top_n) + " of " +
                                  std::to_string(group_count) + " layer groups");
        }
        for (std::size_t i = group_count - top_n; i < group_count; ++i) groups.insert(i);
        return groups;
    case FreezingPolicy::unfreeze_all:
        for (std::size_t i = 0; i < group_count; ++i) groups.insert(i);
        return groups;
    }
    return groups;
}

std::set<std::size_t> apply_freezing_policy(const Encoder& encoder, FreezingPolicy policy,
                                            std::size_t top_n) {
    return trainable_layer_groups(encoder.layer_group_count(), policy, top_n);
}

std::vector<TrainItem> prepare_train_items(const std::vector<DocumentRecord>& records,
                                           const std::vector<SegmentBundle>& bundles,
                                           const EncoderStack& stack, std::size_t max_len,
                                           const LabelSpace& space) {
    if (records.size() != bundles.size()) {
        throw ValidationError("record and bundle counts differ");
    }
    std::vector<TrainItem> items;
    items.reserve(records.size());
    for (std::size_t i = 0; i < records.size(); ++i) {
        if (records[i].doc_id != bundles[i].doc_id) {
            throw ValidationError("record/bundle doc_id mismatch at index " + std::to_string(i) +
                                  ": '" + records[i].doc_id + "' vs '" + bundles[i].doc_id + "'");
        }
        TrainItem item;
        item.embedding =
            encode_bundle(bundles[i], *stack.tokenizer, *stack.encoder, max_len).rows;
        item.target = encode_labels(records[i].subject_areas, space);
        item.labels = decode_labels(item.target, space);
        items.push_back(std::move(item));
    }
    return items;
}

TrainedModel train_core(const std::vector<TrainItem>& train_items,
                        const std::vector<TrainItem>& val_items, const HeadConfig& head_config,
                        const TrainConfig& config, const ClassWeightTable& table,
                        const LabelSpace& space, const EncoderSettings& encoder_settings) {
    validate_train_config(config);
    validate_head_config(head_config);
    if (train_items.empty()) {
        throw ValidationError("cannot train on an empty split");
    }
    if (config.early_stop_patience && val_items.empty()) {
        throw ValidationError("early stopping requested but the validation split is empty");
    }
    // Validates the policy against the encoder's layer inventory up front.
    trainable_layer_groups(encoder_settings.layer_groups, config.freezing_policy,
                           config.unfreeze_top_n);

    const std::vector<double> label_weights = label_weight_vector(table, space);
    std::vector<double> sample_weights(train_items.size(), 1.0);
    if (config.weighting_mode == WeightingMode::sample_weights) {
        for (std::size_t i = 0; i < train_items.size(); ++i) {
            sample_weights[i] = sample_weight(train_items[i].labels, table);
        }
    }

    TrainedModel model;
    model.encoder = encoder_settings;
    model.head_config = head_config;
    model.train_config = config;
    model.space = space;
    model.weights = table;
    model.params = init_parameters(head_config, head_config.seed);

    AdamOptimizer optimizer(config.head_step_size, tensor_refs(model.params, head_config).size());

    HeadParameters last_good = model.params;
    HeadParameters best_params = model.params;
    double best_val = -std::numeric_limits<double>::infinity();
    std::size_t best_epoch = 0;

    std::vector<std::size_t> order(train_items.size());
    std::iota(order.begin(), order.end(), std::size_t{0});

    for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
        std::mt19937_64 shuffle_gen(rng::mix(config.seed, epoch, 0x657065706f6368ULL));
        rng::shuffle(order, shuffle_gen);

        double loss_sum = 0.0;
        bool diverged = false;
        for (std::size_t start = 0; start < order.size() && !diverged;
             start += config.batch_size) {
            const std::size_t end = std::min(order.size(), start + config.batch_size);
            const auto batch_n = static_cast<double>(end - start);
            HeadParameters grad_sum = HeadParameters::zeros(head_config);
            for (std::size_t k = start; k < end; ++k) {
                const std::size_t idx = order[k];
                const auto& item = train_items[idx];
                ForwardCache cache;
                const std::uint64_t mask_seed = rng::mix(config.seed, epoch, idx);
                const auto probs = head_forward(item.embedding, model.params, head_config,
                                                RunMode::train, mask_seed, &cache);
                if (std::any_of(probs.begin(), probs.end(),
                                [](double p) { return !std::isfinite(p); })) {
                    diverged = true;
                    break;
                }
                double loss = 0.0;
                HeadGradients grads;
                if (config.weighting_mode == WeightingMode::per_label) {
                    loss = per_label_weighted_loss(probs, item.target, label_weights);
                    grads = head_backward(cache, model.params, head_config, item.target,
                                          1.0 / batch_n, &label_weights);
                } else {
                    const double w_s = sample_weights[idx];
                    loss = weighted_loss(probs, item.target, w_s);
                    grads = head_backward(cache, model.params, head_config, item.target,
                                          w_s / batch_n);
                }
                if (!std::isfinite(loss)) {
                    diverged = true;
                    break;
                }
                loss_sum += loss;
                accumulate(grad_sum, grads);
            }
            if (diverged) break;
            auto params_view = tensor_refs(model.params, head_config);
            auto grads_view = tensor_refs(grad_sum, head_config);
            optimizer.step(params_view, grads_view);
            if (!model.params.all_finite()) diverged = true;
        }

        if (diverged) {
            model.params = last_good;
            model.diverged = true;
            break;
        }

        EpochStats stats;
        stats.epoch = epoch;
        stats.train_loss = loss_sum / static_cast<double>(train_items.size());
        stats.val_weighted_f1 = std::numeric_limits<double>::quiet_NaN();
        if (!val_items.empty()) {
            stats.val_weighted_f1 = validation_weighted_f1(
                val_items, model.params, head_config, space, config.decision_threshold);
            if (stats.val_weighted_f1 > best_val) {
                best_val = stats.val_weighted_f1;
                best_params = model.params;
                best_epoch = epoch;
            }
        }
        model.history.push_back(stats);
        last_good = model.params;

        if (config.early_stop_patience && epoch - best_epoch >= *config.early_stop_patience &&
            epoch < config.epochs) {
            break;
        }
    }

    // Best-validation checkpoint wins; without validation the final state does.
    if (!val_items.empty() && !model.diverged && best_epoch > 0) {
        model.params = best_params;
    }
    return model;
}

TrainedModel train(const DatasetSplit& split, const EncoderStack& stack,
                   const EncoderSettings& encoder_settings, const KeywordProvider& provider,
                   const SegmenterOptions& seg_options, HeadConfig head_config,
                   const TrainConfig& config, const ClassWeightTable& table,
                   const LabelSpace& space) {
    auto bundle_all = [&](const std::vector<DocumentRecord>& records) {
        std::vector<SegmentBundle> bundles;
        bundles.reserve(records.size());
        for (const auto& record : records) {
            bundles.push_back(build_segments(record, provider, seg_options));
        }
        return bundles;
    };
    const auto train_items = prepare_train_items(split.train, bundle_all(split.train), stack,
                                                 encoder_settings.max_len, space);
    const auto val_items = prepare_train_items(split.validation, bundle_all(split.validation),
                                               stack, encoder_settings.max_len, space);
    return train_core(train_items, val_items, head_config, config, table, space,
                      encoder_settings);
}

void save_checkpoint(const TrainedModel& model, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    HeadParameters params_copy = model.params;
    save_named_tensors(dir / "params.bin", tensor_refs(params_copy, model.head_config));

    auto write_json = [&](const char* name, const nlohmann::json& doc) {
        std::ofstream out(dir / name);
        if (!out) throw IoError("cannot write checkpoint file " + std::string(name));
        out << doc.dump(2) << '\n';
    };
    write_json("head_config.json", model.head_config.to_json());
    nlohmann::json train_doc = model.train_config.to_json();
    train_doc["encoder"] = model.encoder.to_json();
    write_json("train_config.json", train_doc);
    write_json("label_space.json", model.space.to_json());
    write_json("class_weights.json", model.weights.to_json());

    {
        std::ofstream out(dir / "history.csv");
        if (!out) throw IoError("cannot write history.csv");
        out << "epoch,train_loss,val_weighted_f1\n";
        for (const auto& row : model.history) {
            char buf[96];
            std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g", row.epoch, row.train_loss,
                          row.val_weighted_f1);
            out << buf << '\n';
        }
    }
    {
        std::ofstream out(dir / "VERSION");
        if (!out) throw IoError("cannot write VERSION");
        out << kCheckpointVersion << '\n';
    }
}

TrainedModel load_checkpoint(const std::filesystem::path& dir) {
    {
        std::ifstream version_in(dir / "VERSION");
        if (!version_in) throw CheckpointError("checkpoint is missing VERSION");
        std::string version;
        std::getline(version_in, version);
        if (version != kCheckpointVersion) {
            throw CheckpointError("unsupported checkpoint version '" + version + "', expected '" +
                                  kCheckpointVersion + "'");
        }
    }

    TrainedModel model;
    model.head_config = HeadConfig::from_json(read_json_file(dir / "head_config.json"));
    const nlohmann::json train_doc = read_json_file(dir / "train_config.json");
    model.train_config = TrainConfig::from_json(train_doc);
    if (train_doc.contains("encoder")) {
        model.encoder = EncoderSettings::from_json(train_doc.at("encoder"));
    }
    model.space = LabelSpace::from_json(read_json_file(dir / "label_space.json"));
    model.weights = ClassWeightTable::from_json(read_json_file(dir / "class_weights.json"));

    if (model.head_config.n_labels != model.space.consolidated_count()) {
        throw CheckpointError("head has " + std::to_string(model.head_config.n_labels) +
                              " labels but the label space has " +
                              std::to_string(model.space.consolidated_count()));
    }

    model.params = HeadParameters::zeros(model.head_config);
    load_named_tensors(dir / "params.bin", tensor_refs(model.params, model.head_config));

    std::ifstream history_in(dir / "history.csv");
    if (!history_in) throw CheckpointError("checkpoint is missing history.csv");
    std::string line;
    std::getline(history_in, line); // header
    while (std::getline(history_in, line)) {
        if (line.empty()) continue;
        EpochStats stats;
        char* cursor = line.data();
        stats.epoch = std::strtoull(cursor, &cursor, 10);
        if (*cursor == ',') ++cursor;
        stats.train_loss = std::strtod(cursor, &cursor);
        if (*cursor == ',') ++cursor;
        stats.val_weighted_f1 = std::strtod(cursor, &cursor);
        model.history.push_back(stats);
    }
    return model;
}

std::vector<std::vector<double>> predict_probabilities(const TrainedModel& model,
                                                       const std::vector<Matrix>& embeddings) {
    std::vector<std::vector<double>> out;
    out.reserve(embeddings.size());
    for (const auto& embedding : embeddings) {
        out.push_back(head_forward(embedding, model.params, model.head_config, RunMode::infer));
    }
    return out;
}

} // namespace segclass
