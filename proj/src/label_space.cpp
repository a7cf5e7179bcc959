#include "segclass/label_space.hpp"

#include <algorithm>
#include <cctype>

namespace segclass {

namespace {

const std::vector<std::string> kRawCodes = {
    "AGRI", "ARTS", "BIOC", "BUSI", "CENG", "CHEM", "COMP", "DECI", "DENT",
    "EART", "ECON", "ENER", "ENGI", "ENVI", "HEAL", "IMMU", "MATE", "MATH",
    "MEDI", "MULT", "NEUR", "NURS", "PHAR", "PHYS", "PSYC", "SOCI", "VETE",
};

const std::vector<std::string> kConsolidatedCodes = {
    "AGRI", "BIOC", "CENG", "CHEM", "COMP", "EART", "ENER", "ENGI", "ENVI",
    "IMMU", "MATE", "MEDI", "MULT", "NEUR", "PHAR", "PHYS", "PSYC", "SOCI",
};

std::map<std::string, std::string> standard_consolidation() {
    std::map<std::string, std::string> map;
    for (const auto& code : kRawCodes) map[code] = code;
    map["VETE"] = "MEDI";
    map["HEAL"] = "MEDI";
    map["DENT"] = "MEDI";
    map["NURS"] = "MEDI";
    map["ECON"] = "SOCI";
    map["ARTS"] = "SOCI";
    map["BUSI"] = "SOCI";
    map["DECI"] = "SOCI";
    map["MATH"] = "MULT";
    return map;
}

} // namespace

std::string normalize_label_code(std::string_view code) {
    std::size_t begin = 0;
    std::size_t end = code.size();
    while (begin < end && std::isspace(static_cast<unsigned char>(code[begin]))) ++begin;
    while (end > begin && std::isspace(static_cast<unsigned char>(code[end - 1]))) --end;
    std::string out(code.substr(begin, end - begin));
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
    // Corpus metadata spells engineering both ways; one canonical code.
    if (out == "ENGR") out = "ENGI";
    return out;
}

LabelSpace::LabelSpace(std::vector<std::string> raw,
                       std::vector<std::string> consolidated,
                       std::map<std::string, std::string> consolidation)
    : raw_codes_(std::move(raw)),
      consolidated_codes_(std::move(consolidated)),
      consolidation_(std::move(consolidation)) {
    for (std::size_t i = 0; i < consolidated_codes_.size(); ++i) {
        index_[consolidated_codes_[i]] = i;
    }
    validate();
}

void LabelSpace::validate() const {
    if (raw_codes_.size() != 27) {
        throw ValidationError("label space must have 27 raw codes, got " +
                              std::to_string(raw_codes_.size()));
    }
    if (consolidated_codes_.size() != 18) {
        throw ValidationError("label space must have 18 consolidated codes, got " +
                              std::to_string(consolidated_codes_.size()));
    }
    std::set<std::string> image;
    for (const auto& code : raw_codes_) {
        auto it = consolidation_.find(code);
        if (it == consolidation_.end()) {
            throw ValidationError("consolidation map is not total: missing " + code);
        }
        if (index_.find(it->second) == index_.end()) {
            throw ValidationError("consolidation maps " + code + " outside the consolidated codes");
        }
        image.insert(it->second);
    }
    if (image.size() != consolidated_codes_.size()) {
        throw ValidationError("consolidation map is not surjective onto the 18 codes");
    }
}

const LabelSpace& LabelSpace::standard() {
    static const LabelSpace space(kRawCodes, kConsolidatedCodes, standard_consolidation());
    return space;
}

bool LabelSpace::is_raw_code(const std::string& normalized) const {
    return std::find(raw_codes_.begin(), raw_codes_.end(), normalized) != raw_codes_.end();
}

bool LabelSpace::is_consolidated_code(const std::string& normalized) const {
    return index_.find(normalized) != index_.end();
}

const std::string& LabelSpace::consolidate(const std::string& raw_label) const {
    auto it = consolidation_.find(raw_label);
    if (it == consolidation_.end()) {
        throw ValidationError("unknown subject-area code '" + raw_label + "'");
    }
    return it->second;
}

std::size_t LabelSpace::index_of(const std::string& consolidated) const {
    auto it = index_.find(consolidated);
    if (it == index_.end()) {
        throw ValidationError("unknown consolidated code '" + consolidated + "'");
    }
    return it->second;
}

nlohmann::json LabelSpace::to_json() const {
    nlohmann::json map = nlohmann::json::object();
    for (const auto& [raw, cons] : consolidation_) map[raw] = cons;
    return nlohmann::json{
        {"raw_codes", raw_codes_},
        {"consolidated_codes", consolidated_codes_},
        {"map", map},
    };
}

LabelSpace LabelSpace::from_json(const nlohmann::json& doc) {
    if (!doc.contains("raw_codes") || !doc.contains("consolidated_codes") || !doc.contains("map")) {
        throw ValidationError("label space document needs raw_codes, consolidated_codes and map");
    }
    std::map<std::string, std::string> consolidation;
    for (const auto& [key, value] : doc.at("map").items()) {
        consolidation[key] = value.get<std::string>();
    }
    return LabelSpace(doc.at("raw_codes").get<std::vector<std::string>>(),
                      doc.at("consolidated_codes").get<std::vector<std::string>>(),
                      std::move(consolidation));
}

bool LabelVector::any() const {
    return std::any_of(bits.begin(), bits.end(), [](std::uint8_t b) { return b != 0; });
}

std::size_t LabelVector::count() const {
    std::size_t n = 0;
    for (auto b : bits) n += b != 0;
    return n;
}

LabelVector encode_labels(const std::set<std::string>& labels, const LabelSpace& space,
                          bool* warned_empty) {
    LabelVector vec;
    vec.bits.assign(space.consolidated_count(), 0);
    if (warned_empty) *warned_empty = labels.empty();
    for (const auto& label : labels) {
        const std::string normalized = normalize_label_code(label);
        if (space.is_raw_code(normalized)) {
            vec.bits[space.index_of(space.consolidate(normalized))] = 1;
        } else if (space.is_consolidated_code(normalized)) {
            vec.bits[space.index_of(normalized)] = 1;
        } else {
            throw ValidationError("unknown subject-area code '" + normalized + "'");
        }
    }
    return vec;
}

std::set<std::string> decode_labels(const LabelVector& vec, const LabelSpace& space) {
    if (vec.bits.size() != space.consolidated_count()) {
        throw ValidationError("label vector length " + std::to_string(vec.bits.size()) +
                              " does not match the " + std::to_string(space.consolidated_count()) +
                              "-code space");
    }
    std::set<std::string> labels;
    for (std::size_t i = 0; i < vec.bits.size(); ++i) {
        if (vec.bits[i]) labels.insert(space.consolidated_codes()[i]);
    }
    return labels;
}

double ClassWeightTable::weight(const std::string& label) const {
    auto it = weights.find(label);
    if (it == weights.end()) {
        throw ValidationError("no class weight for label '" + label + "'");
    }
    return it->second;
}

nlohmann::json ClassWeightTable::to_json() const {
    nlohmann::json w = nlohmann::json::object();
    for (const auto& [label, value] : weights) w[label] = value;
    nlohmann::json f = nlohmann::json::object();
    for (const auto& [label, value] : frequencies) f[label] = value;
    return nlohmann::json{{"weights", w}, {"frequencies", f}};
}

ClassWeightTable ClassWeightTable::from_json(const nlohmann::json& doc) {
    ClassWeightTable table;
    for (const auto& [label, value] : doc.at("weights").items()) {
        table.weights[label] = value.get<double>();
    }
    for (const auto& [label, value] : doc.at("frequencies").items()) {
        table.frequencies[label] = value.get<std::int64_t>();
    }
    return table;
}

ClassWeightTable class_weights_from_frequencies(const std::map<std::string, std::int64_t>& freq) {
    if (freq.empty()) {
        throw ValidationError("cannot compute class weights from an empty frequency table");
    }
    double inverse_sum = 0.0;
    for (const auto& [label, count] : freq) {
        if (count < 1) {
            throw ValidationError("label '" + label + "' has frequency " + std::to_string(count) +
                                  "; remove the label or enable add-one smoothing");
        }
        inverse_sum += 1.0 / static_cast<double>(count);
    }
    ClassWeightTable table;
    table.frequencies = freq;
    for (const auto& [label, count] : freq) {
        table.weights[label] = (1.0 / static_cast<double>(count)) / inverse_sum;
    }
    return table;
}

double sample_weight(const std::set<std::string>& labels, const ClassWeightTable& table) {
    if (labels.empty()) {
        throw ValidationError("sample weight of an empty label set is undefined");
    }
    double total = 0.0;
    for (const auto& label : labels) total += table.weight(label);
    return total;
}

std::vector<double> label_weight_vector(const ClassWeightTable& table, const LabelSpace& space) {
    std::vector<double> out;
    out.reserve(space.consolidated_count());
    for (const auto& code : space.consolidated_codes()) out.push_back(table.weight(code));
    return out;
}

} // namespace segclass
