#include "segclass/run_config.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <set>

extern char** environ;

namespace segclass {

namespace {

const std::map<std::string, std::set<std::string>> kSchema = {
    {"corpus", {"path", "limit"}},
    {"split", {"ratios", "seed"}},
    {"segmenter", {"provider", "keyword_count", "keywords_as_sixth_segment"}},
    {"encoder", {"encoder_id", "hidden_size", "seed", "max_len", "layer_groups", "vocab_size"}},
    {"head", {"kernel_widths", "filters_per_width", "dropout_p", "dense_dim", "seed"}},
    {"train",
     {"epochs", "batch_size", "head_step_size", "encoder_step_size", "freezing_policy",
      "unfreeze_top_n", "decision_threshold", "seed", "early_stop_patience", "weighting_mode",
      "smooth_class_weights"}},
    {"eval", {"split", "predictions"}},
    {"output", {"dir"}},
};

nlohmann::json default_document() {
    return nlohmann::json{
        {"seed", 13},
        {"corpus", {{"path", ""}, {"limit", nullptr}}},
        {"split", {{"ratios", {0.8, 0.1, 0.1}}}},
        {"segmenter",
         {{"provider", "term_score"},
          {"keyword_count", 10},
          {"keywords_as_sixth_segment", false}}},
        {"encoder",
         {{"encoder_id", "mock"},
          {"hidden_size", 768},
          {"max_len", 512},
          {"layer_groups", 12},
          {"vocab_size", 30522}}},
        {"head",
         {{"kernel_widths", {2, 3}},
          {"filters_per_width", 128},
          {"dropout_p", 0.1},
          {"dense_dim", 256}}},
        {"train",
         {{"epochs", 3},
          {"batch_size", 8},
          {"head_step_size", 1e-3},
          {"encoder_step_size", 2e-5},
          {"freezing_policy", "freeze_all_encoder"},
          {"unfreeze_top_n", 0},
          {"decision_threshold", 0.5},
          {"early_stop_patience", nullptr},
          {"weighting_mode", "sample_weights"},
          {"smooth_class_weights", false}}},
        {"eval", {{"split", "test"}, {"predictions", nullptr}}},
        {"output", {{"dir", "runs/default"}}},
    };
}

void check_known_keys(const nlohmann::json& doc) {
    for (const auto& [section, body] : doc.items()) {
        if (section == "seed") continue;
        auto it = kSchema.find(section);
        if (it == kSchema.end()) {
            throw ConfigError("unknown config section '" + section + "'");
        }
        if (!body.is_object()) {
            throw ConfigError("config section '" + section + "' must be an object");
        }
        for (const auto& [key, value] : body.items()) {
            (void)value;
            if (!it->second.count(key)) {
                throw ConfigError("unknown config key '" + section + "." + key + "'");
            }
        }
    }
}

void deep_merge(nlohmann::json& base, const nlohmann::json& overlay) {
    for (const auto& [key, value] : overlay.items()) {
        if (value.is_object() && base.contains(key) && base.at(key).is_object()) {
            deep_merge(base.at(key), value);
        } else {
            base[key] = value;
        }
    }
}

nlohmann::json parse_override_value(const std::string& text) {
    const nlohmann::json parsed = nlohmann::json::parse(text, nullptr, false);
    if (!parsed.is_discarded()) return parsed;
    return nlohmann::json(text); // bare strings (paths, names) stay strings
}

void apply_dotted(nlohmann::json& doc, const std::string& dotted, const std::string& value) {
    const auto dot = dotted.find('.');
    if (dot == std::string::npos) {
        if (dotted != "seed") {
            throw ConfigError("unknown override key '" + dotted + "'");
        }
        doc["seed"] = parse_override_value(value);
        return;
    }
    const std::string section = dotted.substr(0, dot);
    const std::string key = dotted.substr(dot + 1);
    auto it = kSchema.find(section);
    if (it == kSchema.end() || !it->second.count(key)) {
        throw ConfigError("unknown override key '" + dotted + "'");
    }
    doc[section][key] = parse_override_value(value);
}

void apply_environment(nlohmann::json& doc) {
    for (char** entry = environ; entry && *entry; ++entry) {
        const std::string var(*entry);
        if (var.rfind("SEGCLASS_", 0) != 0) continue;
        const auto eq = var.find('=');
        if (eq == std::string::npos) continue;
        std::string name = var.substr(9, eq - 9);
        const std::string value = var.substr(eq + 1);
        std::transform(name.begin(), name.end(), name.begin(),
                       [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
        if (name == "seed") {
            apply_dotted(doc, "seed", value);
            continue;
        }
        const auto underscore = name.find('_');
        if (underscore == std::string::npos) {
            throw ConfigError("environment override SEGCLASS_" + name + " does not name a key");
        }
        apply_dotted(doc, name.substr(0, underscore) + "." + name.substr(underscore + 1), value);
    }
}

template <typename T>
T get_value(const nlohmann::json& doc, const std::string& section, const std::string& key) {
    try {
        return doc.at(section).at(key).get<T>();
    } catch (const nlohmann::json::exception& err) {
        throw ConfigError("config value " + section + "." + key + " is invalid: " + err.what());
    }
}

} // namespace

RunConfig resolve_run_config(nlohmann::json file_doc, const std::vector<std::string>& overrides,
                             bool apply_env) {
    check_known_keys(file_doc);

    nlohmann::json doc = default_document();
    deep_merge(doc, file_doc);
    if (apply_env) apply_environment(doc);
    for (const auto& item : overrides) {
        const auto eq = item.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("override '" + item + "' is not of the form key=value");
        }
        apply_dotted(doc, item.substr(0, eq), item.substr(eq + 1));
    }
    check_known_keys(doc);

    RunConfig config;
    config.base_seed = doc.at("seed").get<std::uint64_t>();
    // The top-level seed reaches every component that was not seeded explicitly.
    for (const char* section : {"split", "encoder", "head", "train"}) {
        if (!doc.at(section).contains("seed")) doc[section]["seed"] = config.base_seed;
    }

    config.corpus_path = get_value<std::string>(doc, "corpus", "path");
    if (!doc.at("corpus").at("limit").is_null()) {
        config.corpus_limit = get_value<std::size_t>(doc, "corpus", "limit");
    }

    const auto ratios = get_value<std::vector<double>>(doc, "split", "ratios");
    if (ratios.size() != 3) {
        throw ConfigError("split.ratios must hold exactly three fractions");
    }
    config.split_ratios = {ratios[0], ratios[1], ratios[2]};
    config.split_seed = get_value<std::uint64_t>(doc, "split", "seed");

    config.keyword_provider = get_value<std::string>(doc, "segmenter", "provider");
    config.segmenter.keyword_count = get_value<std::size_t>(doc, "segmenter", "keyword_count");
    config.segmenter.keywords_as_sixth_segment =
        get_value<bool>(doc, "segmenter", "keywords_as_sixth_segment");
    make_keyword_provider(config.keyword_provider); // fail fast on unknown providers

    config.encoder = EncoderSettings::from_json(doc.at("encoder"));
    make_encoder_stack(config.encoder); // fail fast on unknown encoders or bad sizes

    config.head = HeadConfig::from_json(doc.at("head"));
    config.head.segment_count = config.segmenter.keywords_as_sixth_segment ? 6 : 5;
    config.head.hidden_size = config.encoder.hidden_size;
    config.head.n_labels = LabelSpace::standard().consolidated_count();
    validate_head_config(config.head);

    nlohmann::json train_doc = doc.at("train");
    config.smooth_class_weights = train_doc.value("smooth_class_weights", false);
    train_doc.erase("smooth_class_weights");
    config.train = TrainConfig::from_json(train_doc);

    config.eval_split = get_value<std::string>(doc, "eval", "split");
    if (config.eval_split != "train" && config.eval_split != "validation" &&
        config.eval_split != "test") {
        throw ConfigError("eval.split must be train, validation or test");
    }
    if (!doc.at("eval").at("predictions").is_null()) {
        config.eval_predictions = std::filesystem::path(
            get_value<std::string>(doc, "eval", "predictions"));
    }

    config.output_dir = get_value<std::string>(doc, "output", "dir");
    if (config.output_dir.empty()) {
        throw ConfigError("output.dir must be set");
    }

    config.resolved = std::move(doc);
    return config;
}

RunConfig load_run_config(const std::filesystem::path& config_path,
                          const std::vector<std::string>& overrides, bool apply_env) {
    std::ifstream in(config_path);
    if (!in) {
        throw IoError("cannot open config file: " + config_path.string());
    }
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& err) {
        throw ConfigError("config file " + config_path.string() + " is not valid JSON: " +
                          err.what());
    }
    return resolve_run_config(std::move(doc), overrides, apply_env);
}

} // namespace segclass
