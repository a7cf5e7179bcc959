#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "segclass/label_space.hpp"

namespace segclass {

using LabelSets = std::vector<std::set<std::string>>;

// One-vs-rest counts per consolidated label, in code order.
struct ConfusionCounts {
    std::vector<std::string> labels;
    std::vector<std::int64_t> tp, fp, fn, tn;
    std::size_t n_samples = 0;

    std::int64_t support(std::size_t i) const { return tp[i] + fn[i]; }
};

ConfusionCounts confusion_counts(const LabelSets& pred_sets, const LabelSets& true_sets,
                                 const LabelSpace& space);

struct Prf1 {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

// Zero-denominator convention: a rate with an empty denominator is 0.
Prf1 prf1_from_counts(std::int64_t tp, std::int64_t fp, std::int64_t fn);

struct PerLabelMetrics {
    std::string label;
    Prf1 metrics;
    std::int64_t support = 0;
};

std::vector<PerLabelMetrics> per_label_metrics(const ConfusionCounts& counts);

enum class AverageMode { micro, macro, weighted, samples };

AverageMode parse_average_mode(std::string_view name);

Prf1 micro_average(const ConfusionCounts& counts);
Prf1 macro_average(const std::vector<PerLabelMetrics>& per_label);
Prf1 weighted_average(const std::vector<PerLabelMetrics>& per_label);
// Mean of per-sample P/R/F1. An empty prediction against non-empty truth
// scores 0; empty against empty scores 1 (cannot occur for valid targets).
Prf1 samples_average(const LabelSets& pred_sets, const LabelSets& true_sets);

// Dispatcher over the four modes; samples mode needs the per-sample sets.
Prf1 aggregate(AverageMode mode, const ConfusionCounts& counts,
               const LabelSets* pred_sets = nullptr, const LabelSets* true_sets = nullptr);

struct RocPoint {
    double fpr = 0.0;
    double tpr = 0.0;
};

struct RocCurve {
    std::vector<RocPoint> points;
    double auc = 0.0;
};

// Threshold sweep over the distinct scores, descending; tied scores share one
// staircase step; trapezoidal AUC. Throws EvalError when truth is single-class.
RocCurve roc_curve(const std::vector<double>& scores, const std::vector<std::uint8_t>& truths);

struct MisclassificationReport {
    // misplaced[true][pred] over consolidated code order; diagonal always 0.
    std::vector<std::vector<std::int64_t>> misplaced;
    std::int64_t no_label_count = 0;
};

// For each missed true label: an empty prediction set increments
// no_label_count, otherwise every wrongly predicted label is charged.
MisclassificationReport misclassification_report(const LabelSets& pred_sets,
                                                 const LabelSets& true_sets,
                                                 const LabelSpace& space);

// pred set = {l : prob_l >= threshold}; inclusive so an all-0.5 head is
// deterministic at the default threshold.
LabelSets predict_sets(const std::vector<std::vector<double>>& probabilities,
                       const LabelSpace& space, double threshold);

struct EvalReport {
    double threshold = 0.5;
    std::size_t n_samples = 0;
    std::vector<PerLabelMetrics> per_label;
    std::map<std::string, Prf1> averages;              // micro, macro, weighted, samples
    std::vector<std::optional<RocCurve>> roc;          // per label; absent if undefined
    MisclassificationReport misclassification;
    nlohmann::json label_space_doc;
    std::optional<nlohmann::json> class_weights_doc;
};

EvalReport build_eval_report(const std::vector<std::vector<double>>& probabilities,
                             const LabelSets& true_sets, const LabelSpace& space, double threshold,
                             const ClassWeightTable* weights = nullptr);

nlohmann::json report_to_json(const EvalReport& report);

// report.json next to per_label.csv, averages.csv, roc_<label>.csv,
// misplaced.csv and scalars.txt.
void write_report_files(const EvalReport& report, const std::filesystem::path& dir);

// Markdown table in the per-label + averages layout used for reporting.
std::string report_markdown(const nlohmann::json& report_doc);

} // namespace segclass
