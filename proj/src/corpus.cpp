#include "segclass/corpus.hpp"

#include <cmath>
#include <fstream>
#include <numeric>

#include "segclass/rng.hpp"

namespace segclass {

namespace {

std::string require_string(const nlohmann::json& doc, const char* key) {
    if (!doc.contains(key)) return {};
    const auto& value = doc.at(key);
    if (!value.is_string()) {
        throw ValidationError(std::string(key) + " must be a string");
    }
    return value.get<std::string>();
}

} // namespace

DocumentRecord record_from_json(const nlohmann::json& doc, const LabelSpace& space,
                                bool require_labels) {
    if (!doc.is_object()) {
        throw ValidationError("record must be a JSON object");
    }
    DocumentRecord record;
    if (!doc.contains("doc_id") || !doc.at("doc_id").is_string()) {
        throw ValidationError("missing doc_id");
    }
    record.doc_id = doc.at("doc_id").get<std::string>();
    if (record.doc_id.empty()) {
        throw ValidationError("empty doc_id");
    }

    record.title = require_string(doc, "title");
    record.abstract_text = require_string(doc, "abstract");
    record.body_text = require_string(doc, "body_text");
    if (record.title.empty() && record.abstract_text.empty() && record.body_text.empty()) {
        throw ValidationError("no usable text: title, abstract and body_text all empty");
    }

    if (doc.contains("subject_areas")) {
        const auto& areas = doc.at("subject_areas");
        if (!areas.is_array()) {
            throw ValidationError("subject_areas must be an array of strings");
        }
        for (const auto& item : areas) {
            if (!item.is_string()) {
                throw ValidationError("subject_areas must be an array of strings");
            }
            const std::string code = normalize_label_code(item.get<std::string>());
            if (!space.is_raw_code(code)) {
                throw ValidationError("unknown subject-area code '" + code + "'");
            }
            record.subject_areas.insert(code);
        }
    }
    if (require_labels && record.subject_areas.empty()) {
        throw ValidationError(doc.contains("subject_areas") ? "empty subject_areas"
                                                            : "missing subject_areas");
    }

    if (doc.contains("keywords")) {
        const auto& kw = doc.at("keywords");
        if (!kw.is_array()) {
            throw ValidationError("keywords must be an array of strings");
        }
        std::vector<std::string> keywords;
        for (const auto& item : kw) {
            if (!item.is_string()) {
                throw ValidationError("keywords must be an array of strings");
            }
            keywords.push_back(item.get<std::string>());
        }
        record.keywords = std::move(keywords);
    }
    return record;
}

nlohmann::json record_to_json(const DocumentRecord& record) {
    nlohmann::json doc{
        {"doc_id", record.doc_id},
        {"title", record.title},
        {"abstract", record.abstract_text},
        {"body_text", record.body_text},
        {"subject_areas", record.subject_areas},
    };
    if (record.keywords) doc["keywords"] = *record.keywords;
    return doc;
}

LoadResult load_corpus(const std::filesystem::path& path, const LabelSpace& space,
                       const LoadOptions& options) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open corpus file: " + path.string());
    }
    LoadResult result;
    std::set<std::string> seen_ids;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (options.limit && result.records.size() >= *options.limit) break;
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            result.rejections.push_back({line_no, "blank line"});
            continue;
        }
        try {
            nlohmann::json doc = nlohmann::json::parse(line);
            DocumentRecord record = record_from_json(doc, space, options.require_labels);
            if (!seen_ids.insert(record.doc_id).second) {
                throw ValidationError("duplicate doc_id '" + record.doc_id + "'");
            }
            result.records.push_back(std::move(record));
        } catch (const nlohmann::json::exception&) {
            result.rejections.push_back({line_no, "malformed JSON"});
        } catch (const ValidationError& err) {
            result.rejections.push_back({line_no, err.what()});
        }
    }
    return result;
}

void write_corpus(const std::filesystem::path& path, const std::vector<DocumentRecord>& records) {
    std::ofstream out(path);
    if (!out) {
        throw IoError("cannot write corpus file: " + path.string());
    }
    for (const auto& record : records) {
        out << record_to_json(record).dump() << '\n';
    }
}

void write_rejections(const std::filesystem::path& path, const std::vector<RejectedLine>& rejections) {
    std::ofstream out(path);
    if (!out) {
        throw IoError("cannot write rejection report: " + path.string());
    }
    for (const auto& rejection : rejections) {
        out << nlohmann::json{{"line_no", rejection.line_no}, {"reason", rejection.reason}}.dump()
            << '\n';
    }
}

std::map<std::string, std::int64_t> label_distribution(const std::vector<DocumentRecord>& records,
                                                       const LabelSpace& space,
                                                       LabelSpaceKind kind) {
    std::map<std::string, std::int64_t> counts;
    const auto& vocabulary =
        kind == LabelSpaceKind::raw ? space.raw_codes() : space.consolidated_codes();
    for (const auto& code : vocabulary) counts[code] = 0;

    for (const auto& record : records) {
        std::set<std::string> effective;
        for (const auto& label : record.subject_areas) {
            const std::string code = normalize_label_code(label);
            if (!space.is_raw_code(code)) {
                throw ValidationError("record '" + record.doc_id + "' carries unknown code '" +
                                      code + "'");
            }
            effective.insert(kind == LabelSpaceKind::raw ? code : space.consolidate(code));
        }
        for (const auto& code : effective) ++counts[code];
    }
    return counts;
}

DatasetSplit split_dataset(const std::vector<DocumentRecord>& records,
                           const std::array<double, 3>& ratios, std::uint64_t seed) {
    if (records.empty()) {
        throw ValidationError("cannot split an empty corpus");
    }
    const double total = ratios[0] + ratios[1] + ratios[2];
    if (ratios[0] < 0 || ratios[1] < 0 || ratios[2] < 0 || std::abs(total - 1.0) > 1e-9) {
        throw ValidationError("split ratios must be non-negative and sum to 1");
    }

    std::vector<std::size_t> order(records.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::mt19937_64 gen(rng::mix(seed, 0x73706c69745f6473ULL));
    rng::shuffle(order, gen);

    const auto n = static_cast<double>(records.size());
    // The epsilon keeps exact products like 0.7*10 from flooring one short.
    auto allocate = [n](double ratio) {
        return static_cast<std::size_t>(std::floor(ratio * n + 1e-9));
    };
    std::size_t n_train = allocate(ratios[0]);
    const std::size_t n_val = allocate(ratios[1]);
    const std::size_t n_test = allocate(ratios[2]);
    n_train += records.size() - (n_train + n_val + n_test); // remainder to train

    DatasetSplit split;
    split.ratios = ratios;
    split.seed = seed;
    std::size_t pos = 0;
    for (std::size_t i = 0; i < n_train; ++i) split.train.push_back(records[order[pos++]]);
    for (std::size_t i = 0; i < n_val; ++i) split.validation.push_back(records[order[pos++]]);
    for (std::size_t i = 0; i < n_test; ++i) split.test.push_back(records[order[pos++]]);
    return split;
}

ClassWeightTable compute_class_weights(const std::vector<DocumentRecord>& train_records,
                                       const LabelSpace& space, WeightSmoothing smoothing) {
    auto frequencies = label_distribution(train_records, space, LabelSpaceKind::consolidated);
    if (smoothing == WeightSmoothing::add_one) {
        for (auto& [label, count] : frequencies) ++count;
    } else {
        for (const auto& [label, count] : frequencies) {
            if (count == 0) {
                throw ValidationError("label '" + label +
                                      "' never occurs in the training split; remove the label or "
                                      "enable add-one smoothing");
            }
        }
    }
    return class_weights_from_frequencies(frequencies);
}

} // namespace segclass
