#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "segclass/errors.hpp"

namespace segclass {

// Canonical form of a subject-area code: trimmed, uppercased, with the ENGR
// spelling folded into ENGI (the corpus uses both for engineering).
std::string normalize_label_code(std::string_view code);

// The raw 27-code subject-area vocabulary and its consolidation onto 18
// broader codes. Consolidated order is alphabetical so indicator indices are
// stable across runs and match reporting order.
class LabelSpace {
public:
    static const LabelSpace& standard();

    static LabelSpace from_json(const nlohmann::json& doc);
    nlohmann::json to_json() const;

    const std::vector<std::string>& raw_codes() const { return raw_codes_; }
    const std::vector<std::string>& consolidated_codes() const { return consolidated_codes_; }
    std::size_t consolidated_count() const { return consolidated_codes_.size(); }

    bool is_raw_code(const std::string& normalized) const;
    bool is_consolidated_code(const std::string& normalized) const;

    // Maps a raw code onto its consolidated code. Idempotent on consolidated
    // codes. Throws ValidationError naming the code when unknown.
    const std::string& consolidate(const std::string& raw_label) const;

    // Position of a consolidated code in indicator-vector order.
    std::size_t index_of(const std::string& consolidated) const;

    friend bool operator==(const LabelSpace&, const LabelSpace&) = default;

private:
    LabelSpace(std::vector<std::string> raw,
               std::vector<std::string> consolidated,
               std::map<std::string, std::string> consolidation);

    void validate() const;

    std::vector<std::string> raw_codes_;
    std::vector<std::string> consolidated_codes_;
    std::map<std::string, std::string> consolidation_;
    std::map<std::string, std::size_t> index_;
};

// Indicator vector over the consolidated codes, in LabelSpace order.
struct LabelVector {
    std::vector<std::uint8_t> bits;

    bool any() const;
    std::size_t count() const;

    friend bool operator==(const LabelVector&, const LabelVector&) = default;
};

// Binarizes a label set. Raw codes are consolidated first; duplicates collapse.
// An empty input yields the all-zero vector and sets *warned_empty; an all-zero
// vector is never a valid training/eval target.
LabelVector encode_labels(const std::set<std::string>& labels, const LabelSpace& space,
                          bool* warned_empty = nullptr);

std::set<std::string> decode_labels(const LabelVector& vec, const LabelSpace& space);

// Normalized inverse-frequency weights: w(l) = (1/freq(l)) / sum_l' (1/freq(l')).
struct ClassWeightTable {
    std::map<std::string, double> weights;
    std::map<std::string, std::int64_t> frequencies;

    double weight(const std::string& label) const;

    nlohmann::json to_json() const;
    static ClassWeightTable from_json(const nlohmann::json& doc);
};

// Builds the table from an explicit frequency map. Every frequency must be >= 1.
ClassWeightTable class_weights_from_frequencies(const std::map<std::string, std::int64_t>& freq);

// Sum of the class weights over a sample's labels. Labels must be non-empty
// and known to the table.
double sample_weight(const std::set<std::string>& labels, const ClassWeightTable& table);

// Weights laid out in consolidated-code order, for per-label loss variants.
std::vector<double> label_weight_vector(const ClassWeightTable& table, const LabelSpace& space);

} // namespace segclass
