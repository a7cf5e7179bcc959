#include "segclass/pipeline.hpp"

#include <chrono>
#include <ctime>
#include <fstream>
#include <iostream>
#include <map>

#include "segclass/evaluator.hpp"

namespace segclass {

namespace {

void write_json_file(const std::filesystem::path& path, const nlohmann::json& doc) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << doc.dump(2) << '\n';
}

nlohmann::json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    return nlohmann::json::parse(in);
}

// Timestamps live here and only here; report/config artifacts stay
// byte-reproducible.
void write_meta(const RunPaths& paths, const std::string& command) {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    char stamp[32];
    std::tm tm_utc{};
    gmtime_r(&now, &tm_utc);
    std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
    nlohmann::json meta;
    if (std::filesystem::exists(paths.meta_file())) {
        meta = read_json_file(paths.meta_file());
    }
    meta[command] = {{"completed_at", stamp}};
    write_json_file(paths.meta_file(), meta);
}

void echo_config(const RunConfig& config, const RunPaths& paths) {
    std::filesystem::create_directories(paths.root);
    write_json_file(paths.resolved_config_file(), config.resolved);
}

std::vector<DocumentRecord> read_split_records(const RunPaths& paths, const std::string& name,
                                               const LabelSpace& space) {
    const auto path = paths.split_file(name);
    if (!std::filesystem::exists(path)) {
        throw IoError("missing split file " + path.string() + "; run prepare first");
    }
    LoadResult result = load_corpus(path, space);
    if (!result.rejections.empty()) {
        throw ValidationError("prepared split " + name + " contains invalid records");
    }
    return std::move(result.records);
}

std::vector<SegmentBundle> read_split_bundles(const RunPaths& paths, const std::string& name) {
    const auto path = paths.bundle_file(name);
    if (!std::filesystem::exists(path)) {
        throw IoError("missing bundle file " + path.string() + "; run prepare first");
    }
    return read_bundles(path);
}

// Cache identity: the encoder_id alone does not pin the embedding function.
std::string cache_key(const EncoderSettings& settings) {
    return settings.encoder_id + "/h" + std::to_string(settings.hidden_size) + "/s" +
           std::to_string(settings.seed) + "/len" + std::to_string(settings.max_len) + "/v" +
           std::to_string(settings.vocab_size);
}

// Encodes a split's bundles, backed by the per-split embedding cache. A cache
// whose key or document list does not match is re-encoded and overwritten.
std::vector<TrainItem> encoded_items(const RunPaths& paths, const std::string& split_name,
                                     const std::vector<DocumentRecord>& records,
                                     const std::vector<SegmentBundle>& bundles,
                                     const EncoderStack& stack, const EncoderSettings& settings,
                                     const LabelSpace& space) {
    if (records.size() != bundles.size()) {
        throw ValidationError("split '" + split_name + "' has " + std::to_string(records.size()) +
                              " records but " + std::to_string(bundles.size()) + " bundles");
    }
    for (std::size_t i = 0; i < records.size(); ++i) {
        if (records[i].doc_id != bundles[i].doc_id) {
            throw ValidationError("split '" + split_name + "' records and bundles disagree at line " +
                                  std::to_string(i + 1));
        }
    }
    const auto cache_dir = paths.root / "cache";
    const auto bin_path = cache_dir / (split_name + "_embeddings.bin");
    const auto sidecar_path = cache_dir / (split_name + "_embeddings.json");

    if (std::filesystem::exists(bin_path) && std::filesystem::exists(sidecar_path)) {
        try {
            EmbeddingCache cache = load_embedding_cache(bin_path, sidecar_path);
            bool usable = cache.encoder_id == cache_key(settings) &&
                          cache.hidden_size == settings.hidden_size &&
                          cache.items.size() == bundles.size();
            for (std::size_t i = 0; usable && i < bundles.size(); ++i) {
                usable = cache.items[i].doc_id == bundles[i].doc_id &&
                         cache.segment_count == bundles[i].segments.size();
            }
            if (usable) {
                std::vector<TrainItem> items;
                items.reserve(records.size());
                for (std::size_t i = 0; i < records.size(); ++i) {
                    TrainItem item;
                    item.embedding = std::move(cache.items[i].rows);
                    item.target = encode_labels(records[i].subject_areas, space);
                    item.labels = decode_labels(item.target, space);
                    items.push_back(std::move(item));
                }
                return items;
            }
        } catch (const Error&) {
            // stale or corrupt cache; fall through and re-encode
        }
    }

    auto items = prepare_train_items(records, bundles, stack, settings.max_len, space);
    if (!items.empty()) {
        std::filesystem::create_directories(cache_dir);
        std::vector<SegmentEmbeddingMatrix> to_save;
        to_save.reserve(items.size());
        for (std::size_t i = 0; i < items.size(); ++i) {
            to_save.push_back({records[i].doc_id, items[i].embedding});
        }
        save_embedding_cache(bin_path, sidecar_path, to_save, cache_key(settings));
    }
    return items;
}

struct EvalInputs {
    std::vector<std::vector<double>> probabilities;
    LabelSets truths;
};

EvalInputs collect_model_predictions(const RunConfig& config, const RunPaths& paths,
                                     const TrainedModel& model) {
    const auto records = read_split_records(paths, config.eval_split, model.space);
    const auto bundles = read_split_bundles(paths, config.eval_split);
    if (records.empty()) {
        throw ValidationError("evaluation split '" + config.eval_split + "' is empty");
    }
    const EncoderStack stack = make_encoder_stack(model.encoder);
    const auto items = encoded_items(paths, config.eval_split, records, bundles, stack,
                                     model.encoder, model.space);

    EvalInputs inputs;
    for (const auto& item : items) {
        inputs.probabilities.push_back(
            head_forward(item.embedding, model.params, model.head_config, RunMode::infer));
        inputs.truths.push_back(item.labels);
    }
    return inputs;
}

EvalInputs collect_frozen_predictions(const RunConfig& config, const RunPaths& paths,
                                      const LabelSpace& space) {
    const auto records = read_split_records(paths, config.eval_split, space);
    std::map<std::string, const DocumentRecord*> by_id;
    for (const auto& record : records) by_id[record.doc_id] = &record;

    std::ifstream in(*config.eval_predictions);
    if (!in) {
        throw IoError("cannot open predictions file: " + config.eval_predictions->string());
    }
    EvalInputs inputs;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        nlohmann::json doc;
        try {
            doc = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& err) {
            throw ValidationError("predictions line " + std::to_string(line_no) + ": " +
                                  err.what());
        }
        const auto doc_id = doc.at("doc_id").get<std::string>();
        auto it = by_id.find(doc_id);
        if (it == by_id.end()) {
            throw ValidationError("predictions reference unknown doc_id '" + doc_id + "'");
        }
        auto probs = doc.at("probabilities").get<std::vector<double>>();
        if (probs.size() != space.consolidated_count()) {
            throw ValidationError("predictions for '" + doc_id + "' have " +
                                  std::to_string(probs.size()) + " entries, expected " +
                                  std::to_string(space.consolidated_count()));
        }
        inputs.probabilities.push_back(std::move(probs));
        bool warned = false;
        inputs.truths.push_back(
            decode_labels(encode_labels(it->second->subject_areas, space, &warned), space));
    }
    if (inputs.probabilities.empty()) {
        throw ValidationError("predictions file is empty");
    }
    return inputs;
}

} // namespace

void run_prepare(const RunConfig& config) {
    const RunPaths paths(config.output_dir);
    echo_config(config, paths);

    const LabelSpace& space = LabelSpace::standard();
    LoadOptions options;
    options.limit = config.corpus_limit;
    const LoadResult loaded = load_corpus(config.corpus_path, space, options);
    write_rejections(paths.rejections_file(), loaded.rejections);
    if (loaded.records.empty()) {
        throw ValidationError("corpus holds no valid records (see rejections.jsonl)");
    }

    const DatasetSplit split = split_dataset(loaded.records, config.split_ratios,
                                             config.split_seed);

    std::filesystem::create_directories(paths.splits_dir());
    std::filesystem::create_directories(paths.bundles_dir());
    const auto provider = make_keyword_provider(config.keyword_provider);

    const std::map<std::string, const std::vector<DocumentRecord>*> split_map = {
        {"train", &split.train}, {"validation", &split.validation}, {"test", &split.test}};
    for (const auto& [name, records] : split_map) {
        write_corpus(paths.split_file(name), *records);
        std::vector<SegmentBundle> bundles;
        bundles.reserve(records->size());
        for (const auto& record : *records) {
            bundles.push_back(build_segments(record, *provider, config.segmenter));
        }
        write_bundles(paths.bundle_file(name), bundles);
    }

    write_json_file(paths.label_space_file(), space.to_json());
    const ClassWeightTable weights = compute_class_weights(
        split.train, space,
        config.smooth_class_weights ? WeightSmoothing::add_one : WeightSmoothing::none);
    write_json_file(paths.class_weights_file(), weights.to_json());

    write_meta(paths, "prepare");
    std::cout << "prepared " << loaded.records.size() << " records into " << paths.root.string()
              << " (train " << split.train.size() << ", validation " << split.validation.size()
              << ", test " << split.test.size() << "; " << loaded.rejections.size()
              << " rejected)\n";
}

void run_train(const RunConfig& config) {
    const RunPaths paths(config.output_dir);
    echo_config(config, paths);

    if (!std::filesystem::exists(paths.label_space_file()) ||
        !std::filesystem::exists(paths.class_weights_file())) {
        throw IoError("label space or class weights missing from " + paths.root.string() +
                      "; run prepare first");
    }
    const LabelSpace space = LabelSpace::from_json(read_json_file(paths.label_space_file()));
    const ClassWeightTable weights =
        ClassWeightTable::from_json(read_json_file(paths.class_weights_file()));

    const EncoderStack stack = make_encoder_stack(config.encoder);
    const auto train_records = read_split_records(paths, "train", space);
    const auto train_bundles = read_split_bundles(paths, "train");
    const auto val_records = read_split_records(paths, "validation", space);
    const auto val_bundles = read_split_bundles(paths, "validation");

    const auto train_items = encoded_items(paths, "train", train_records, train_bundles, stack,
                                           config.encoder, space);
    const auto val_items = encoded_items(paths, "validation", val_records, val_bundles, stack,
                                         config.encoder, space);

    const TrainedModel model = train_core(train_items, val_items, config.head, config.train,
                                          weights, space, config.encoder);
    save_checkpoint(model, paths.checkpoint_dir());
    write_meta(paths, "train");

    std::cout << "trained " << model.history.size() << " epoch(s) on " << train_items.size()
              << " documents";
    if (!model.history.empty()) {
        std::cout << "; final train loss " << model.history.back().train_loss;
        if (!val_items.empty()) {
            std::cout << ", last val weighted-F1 " << model.history.back().val_weighted_f1;
        }
    }
    if (model.diverged) std::cout << " [diverged; kept last good parameters]";
    std::cout << "; checkpoint at " << paths.checkpoint_dir().string() << "\n";
}

void run_evaluate(const RunConfig& config) {
    const RunPaths paths(config.output_dir);
    echo_config(config, paths);

    EvalReport report;
    if (config.eval_predictions) {
        const LabelSpace space =
            std::filesystem::exists(paths.label_space_file())
                ? LabelSpace::from_json(read_json_file(paths.label_space_file()))
                : LabelSpace::standard();
        const EvalInputs inputs = collect_frozen_predictions(config, paths, space);
        std::optional<ClassWeightTable> weights;
        if (std::filesystem::exists(paths.class_weights_file())) {
            weights = ClassWeightTable::from_json(read_json_file(paths.class_weights_file()));
        }
        report = build_eval_report(inputs.probabilities, inputs.truths, space,
                                   config.train.decision_threshold,
                                   weights ? &*weights : nullptr);
    } else {
        if (!std::filesystem::exists(paths.checkpoint_dir() / "VERSION")) {
            throw CheckpointError("no checkpoint under " + paths.checkpoint_dir().string() +
                                  "; run train first");
        }
        const TrainedModel model = load_checkpoint(paths.checkpoint_dir());
        const EvalInputs inputs = collect_model_predictions(config, paths, model);
        report = build_eval_report(inputs.probabilities, inputs.truths, model.space,
                                   model.train_config.decision_threshold, &model.weights);
    }

    write_report_files(report, paths.reports_dir());
    write_meta(paths, "evaluate");
    std::cout << "evaluated " << report.n_samples << " samples"
              << (config.eval_predictions ? " from frozen predictions"
                                          : " from split '" + config.eval_split + "'")
              << "; weighted F1 " << report.averages.at("weighted").f1 << ", no-label count "
              << report.misclassification.no_label_count << "; reports at "
              << paths.reports_dir().string() << "\n";
}

void run_predict(const RunConfig& config, const std::filesystem::path& input,
                 const std::filesystem::path& output) {
    const RunPaths paths(config.output_dir);
    echo_config(config, paths);

    if (!std::filesystem::exists(paths.checkpoint_dir() / "VERSION")) {
        throw CheckpointError("no checkpoint under " + paths.checkpoint_dir().string() +
                              "; run train first");
    }
    const TrainedModel model = load_checkpoint(paths.checkpoint_dir());
    const EncoderStack stack = make_encoder_stack(model.encoder);
    const auto provider = make_keyword_provider(config.keyword_provider);

    LoadOptions options;
    options.require_labels = false;
    const LoadResult loaded = load_corpus(input, model.space, options);
    if (loaded.records.empty()) {
        throw ValidationError("prediction input holds no valid records");
    }

    std::ofstream out(output);
    if (!out) throw IoError("cannot write predictions: " + output.string());
    const double threshold = model.train_config.decision_threshold;
    for (const auto& record : loaded.records) {
        const SegmentBundle bundle = build_segments(record, *provider, config.segmenter);
        const auto embedding =
            encode_bundle(bundle, *stack.tokenizer, *stack.encoder, model.encoder.max_len);
        const auto probs =
            head_forward(embedding.rows, model.params, model.head_config, RunMode::infer);
        std::vector<std::string> predicted;
        for (std::size_t i = 0; i < probs.size(); ++i) {
            if (probs[i] >= threshold) {
                predicted.push_back(model.space.consolidated_codes()[i]);
            }
        }
        out << nlohmann::json{{"doc_id", record.doc_id},
                              {"probabilities", probs},
                              {"predicted_labels", predicted}}
                   .dump()
            << '\n';
    }
    write_meta(paths, "predict");
    std::cout << "scored " << loaded.records.size() << " document(s) into " << output.string()
              << " (" << loaded.rejections.size() << " rejected)\n";
}

std::string run_report(const RunConfig& config) {
    const RunPaths paths(config.output_dir);
    echo_config(config, paths);
    const auto report_path = paths.reports_dir() / "report.json";
    if (!std::filesystem::exists(report_path)) {
        throw IoError("no report at " + report_path.string() + "; run evaluate first");
    }
    const std::string markdown = report_markdown(read_json_file(report_path));
    std::ofstream out(paths.reports_dir() / "report.md");
    if (!out) throw IoError("cannot write report.md");
    out << markdown;
    write_meta(paths, "report");
    return markdown;
}

} // namespace segclass
