#include "segclass/evaluator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

namespace segclass {

namespace {

std::string fixed6(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

std::string fixed2(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

std::set<std::string> intersect(const std::set<std::string>& a, const std::set<std::string>& b) {
    std::set<std::string> out;
    std::set_intersection(a.begin(), a.end(), b.begin(), b.end(),
                          std::inserter(out, out.begin()));
    return out;
}

} // namespace

ConfusionCounts confusion_counts(const LabelSets& pred_sets, const LabelSets& true_sets,
                                 const LabelSpace& space) {
    if (pred_sets.size() != true_sets.size()) {
        throw EvalError("prediction and truth lists differ in length: " +
                        std::to_string(pred_sets.size()) + " vs " +
                        std::to_string(true_sets.size()));
    }
    ConfusionCounts counts;
    counts.labels = space.consolidated_codes();
    counts.n_samples = pred_sets.size();
    const std::size_t n = counts.labels.size();
    counts.tp.assign(n, 0);
    counts.fp.assign(n, 0);
    counts.fn.assign(n, 0);
    counts.tn.assign(n, 0);
    for (std::size_t s = 0; s < pred_sets.size(); ++s) {
        for (std::size_t i = 0; i < n; ++i) {
            const bool predicted = pred_sets[s].count(counts.labels[i]) > 0;
            const bool actual = true_sets[s].count(counts.labels[i]) > 0;
            if (predicted && actual) ++counts.tp[i];
            else if (predicted) ++counts.fp[i];
            else if (actual) ++counts.fn[i];
            else ++counts.tn[i];
        }
    }
    return counts;
}

Prf1 prf1_from_counts(std::int64_t tp, std::int64_t fp, std::int64_t fn) {
    Prf1 out;
    out.precision = (tp + fp) > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
    out.recall = (tp + fn) > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
    const double pr = out.precision + out.recall;
    out.f1 = pr > 0.0 ? 2.0 * out.precision * out.recall / pr : 0.0;
    return out;
}

std::vector<PerLabelMetrics> per_label_metrics(const ConfusionCounts& counts) {
    std::vector<PerLabelMetrics> out;
    out.reserve(counts.labels.size());
    for (std::size_t i = 0; i < counts.labels.size(); ++i) {
        out.push_back({counts.labels[i], prf1_from_counts(counts.tp[i], counts.fp[i], counts.fn[i]),
                       counts.support(i)});
    }
    return out;
}

AverageMode parse_average_mode(std::string_view name) {
    if (name == "micro") return AverageMode::micro;
    if (name == "macro") return AverageMode::macro;
    if (name == "weighted") return AverageMode::weighted;
    if (name == "samples") return AverageMode::samples;
    throw EvalError("unknown averaging mode '" + std::string(name) + "'");
}

Prf1 micro_average(const ConfusionCounts& counts) {
    const std::int64_t tp = std::accumulate(counts.tp.begin(), counts.tp.end(), std::int64_t{0});
    const std::int64_t fp = std::accumulate(counts.fp.begin(), counts.fp.end(), std::int64_t{0});
    const std::int64_t fn = std::accumulate(counts.fn.begin(), counts.fn.end(), std::int64_t{0});
    return prf1_from_counts(tp, fp, fn);
}

Prf1 macro_average(const std::vector<PerLabelMetrics>& per_label) {
    if (per_label.empty()) {
        throw EvalError("macro average of an empty metric list");
    }
    Prf1 out;
    for (const auto& row : per_label) {
        out.precision += row.metrics.precision;
        out.recall += row.metrics.recall;
        out.f1 += row.metrics.f1;
    }
    const auto n = static_cast<double>(per_label.size());
    out.precision /= n;
    out.recall /= n;
    out.f1 /= n;
    return out;
}

Prf1 weighted_average(const std::vector<PerLabelMetrics>& per_label) {
    double support_total = 0.0;
    Prf1 out;
    for (const auto& row : per_label) {
        const auto support = static_cast<double>(row.support);
        out.precision += row.metrics.precision * support;
        out.recall += row.metrics.recall * support;
        out.f1 += row.metrics.f1 * support;
        support_total += support;
    }
    if (support_total <= 0.0) return {};
    out.precision /= support_total;
    out.recall /= support_total;
    out.f1 /= support_total;
    return out;
}

Prf1 samples_average(const LabelSets& pred_sets, const LabelSets& true_sets) {
    if (pred_sets.size() != true_sets.size()) {
        throw EvalError("prediction and truth lists differ in length");
    }
    if (pred_sets.empty()) {
        throw EvalError("samples average over zero samples");
    }
    Prf1 out;
    for (std::size_t s = 0; s < pred_sets.size(); ++s) {
        const auto& pred = pred_sets[s];
        const auto& truth = true_sets[s];
        double p = 0.0, r = 0.0, f1 = 0.0;
        if (pred.empty() && truth.empty()) {
            p = r = f1 = 1.0;
        } else if (!pred.empty() && !truth.empty()) {
            const auto hit = static_cast<double>(intersect(pred, truth).size());
            p = hit / static_cast<double>(pred.size());
            r = hit / static_cast<double>(truth.size());
            f1 = (p + r) > 0.0 ? 2.0 * p * r / (p + r) : 0.0;
        }
        out.precision += p;
        out.recall += r;
        out.f1 += f1;
    }
    const auto n = static_cast<double>(pred_sets.size());
    out.precision /= n;
    out.recall /= n;
    out.f1 /= n;
    return out;
}

Prf1 aggregate(AverageMode mode, const ConfusionCounts& counts, const LabelSets* pred_sets,
               const LabelSets* true_sets) {
    switch (mode) {
    case AverageMode::micro:
        return micro_average(counts);
    case AverageMode::macro:
        return macro_average(per_label_metrics(counts));
    case AverageMode::weighted:
        return weighted_average(per_label_metrics(counts));
    case AverageMode::samples:
        if (!pred_sets || !true_sets) {
            throw EvalError("samples averaging needs the per-sample label sets");
        }
        return samples_average(*pred_sets, *true_sets);
    }
    throw EvalError("unknown averaging mode");
}

RocCurve roc_curve(const std::vector<double>& scores, const std::vector<std::uint8_t>& truths) {
    if (scores.size() != truths.size()) {
        throw EvalError("scores and truths differ in length");
    }
    std::int64_t positives = 0;
    for (auto t : truths) positives += t ? 1 : 0;
    const std::int64_t negatives = static_cast<std::int64_t>(truths.size()) - positives;
    if (positives == 0 || negatives == 0) {
        throw EvalError("AUC undefined: truth contains a single class");
    }

    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (scores[a] != scores[b]) return scores[a] > scores[b];
        return a < b;
    });

    RocCurve curve;
    curve.points.push_back({0.0, 0.0});
    std::int64_t tp = 0, fp = 0;
    std::size_t i = 0;
    while (i < order.size()) {
        const double value = scores[order[i]];
        // All samples sharing this score cross the threshold together.
        while (i < order.size() && scores[order[i]] == value) {
            if (truths[order[i]]) ++tp;
            else ++fp;
            ++i;
        }
        curve.points.push_back({static_cast<double>(fp) / static_cast<double>(negatives),
                                static_cast<double>(tp) / static_cast<double>(positives)});
    }

    double auc = 0.0;
    for (std::size_t k = 1; k < curve.points.size(); ++k) {
        const auto& a = curve.points[k - 1];
        const auto& b = curve.points[k];
        auc += (b.fpr - a.fpr) * (a.tpr + b.tpr) / 2.0;
    }
    curve.auc = auc;
    return curve;
}

MisclassificationReport misclassification_report(const LabelSets& pred_sets,
                                                 const LabelSets& true_sets,
                                                 const LabelSpace& space) {
    if (pred_sets.size() != true_sets.size()) {
        throw EvalError("prediction and truth lists differ in length");
    }
    MisclassificationReport report;
    const std::size_t n = space.consolidated_count();
    report.misplaced.assign(n, std::vector<std::int64_t>(n, 0));
    for (std::size_t s = 0; s < pred_sets.size(); ++s) {
        const auto& pred = pred_sets[s];
        const auto& truth = true_sets[s];
        for (const auto& missed : truth) {
            if (pred.count(missed)) continue;
            if (pred.empty()) {
                ++report.no_label_count;
                continue;
            }
            for (const auto& wrong : pred) {
                if (truth.count(wrong)) continue;
                ++report.misplaced[space.index_of(missed)][space.index_of(wrong)];
            }
        }
    }
    return report;
}

LabelSets predict_sets(const std::vector<std::vector<double>>& probabilities,
                       const LabelSpace& space, double threshold) {
    LabelSets sets;
    sets.reserve(probabilities.size());
    for (const auto& probs : probabilities) {
        if (probs.size() != space.consolidated_count()) {
            throw EvalError("probability vector length " + std::to_string(probs.size()) +
                            " does not match the label space");
        }
        std::set<std::string> predicted;
        for (std::size_t i = 0; i < probs.size(); ++i) {
            if (probs[i] >= threshold) predicted.insert(space.consolidated_codes()[i]);
        }
        sets.push_back(std::move(predicted));
    }
    return sets;
}

EvalReport build_eval_report(const std::vector<std::vector<double>>& probabilities,
                             const LabelSets& true_sets, const LabelSpace& space, double threshold,
                             const ClassWeightTable* weights) {
    if (probabilities.size() != true_sets.size()) {
        throw EvalError("probabilities and truths differ in length");
    }
    EvalReport report;
    report.threshold = threshold;
    report.n_samples = probabilities.size();
    report.label_space_doc = space.to_json();
    if (weights) report.class_weights_doc = weights->to_json();

    const LabelSets pred = predict_sets(probabilities, space, threshold);
    const ConfusionCounts counts = confusion_counts(pred, true_sets, space);
    report.per_label = per_label_metrics(counts);
    report.averages["micro"] = micro_average(counts);
    report.averages["macro"] = macro_average(report.per_label);
    report.averages["weighted"] = weighted_average(report.per_label);
    report.averages["samples"] = samples_average(pred, true_sets);
    report.misclassification = misclassification_report(pred, true_sets, space);

    report.roc.resize(space.consolidated_count());
    for (std::size_t i = 0; i < space.consolidated_count(); ++i) {
        std::vector<double> scores(probabilities.size());
        std::vector<std::uint8_t> truth(probabilities.size());
        for (std::size_t s = 0; s < probabilities.size(); ++s) {
            scores[s] = probabilities[s][i];
            truth[s] = true_sets[s].count(space.consolidated_codes()[i]) ? 1 : 0;
        }
        try {
            report.roc[i] = roc_curve(scores, truth);
        } catch (const EvalError&) {
            report.roc[i] = std::nullopt; // single-class label in this evaluation set
        }
    }
    return report;
}

nlohmann::json report_to_json(const EvalReport& report) {
    nlohmann::json per_label = nlohmann::json::array();
    const auto& codes = report.per_label;
    for (std::size_t i = 0; i < codes.size(); ++i) {
        nlohmann::json row{
            {"label", codes[i].label},
            {"precision", codes[i].metrics.precision},
            {"recall", codes[i].metrics.recall},
            {"f1", codes[i].metrics.f1},
            {"support", codes[i].support},
        };
        if (i < report.roc.size() && report.roc[i]) {
            row["auc"] = report.roc[i]->auc;
            nlohmann::json points = nlohmann::json::array();
            for (const auto& point : report.roc[i]->points) {
                points.push_back({point.fpr, point.tpr});
            }
            row["roc"] = std::move(points);
        } else {
            row["auc"] = nullptr;
        }
        per_label.push_back(std::move(row));
    }

    nlohmann::json averages = nlohmann::json::object();
    for (const auto& [mode, values] : report.averages) {
        averages[mode] = {{"precision", values.precision},
                          {"recall", values.recall},
                          {"f1", values.f1}};
    }

    nlohmann::json misplaced = nlohmann::json::array();
    for (std::size_t t = 0; t < report.misclassification.misplaced.size(); ++t) {
        for (std::size_t p = 0; p < report.misclassification.misplaced[t].size(); ++p) {
            const auto count = report.misclassification.misplaced[t][p];
            if (count > 0) {
                misplaced.push_back({{"true", report.per_label[t].label},
                                     {"pred", report.per_label[p].label},
                                     {"count", count}});
            }
        }
    }

    nlohmann::json doc{
        {"threshold", report.threshold},
        {"n_samples", report.n_samples},
        {"per_label", std::move(per_label)},
        {"averages", std::move(averages)},
        {"misplaced", std::move(misplaced)},
        {"no_label_count", report.misclassification.no_label_count},
        {"label_space", report.label_space_doc},
    };
    doc["class_weights"] = report.class_weights_doc ? *report.class_weights_doc : nlohmann::json();
    return doc;
}

void write_report_files(const EvalReport& report, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);

    {
        std::ofstream out(dir / "report.json");
        if (!out) throw IoError("cannot write " + (dir / "report.json").string());
        out << report_to_json(report).dump(2) << '\n';
    }
    {
        std::ofstream out(dir / "per_label.csv");
        if (!out) throw IoError("cannot write per_label.csv");
        out << "label,precision,recall,f1,support\n";
        for (const auto& row : report.per_label) {
            out << row.label << ',' << fixed6(row.metrics.precision) << ','
                << fixed6(row.metrics.recall) << ',' << fixed6(row.metrics.f1) << ','
                << row.support << '\n';
        }
    }
    {
        std::ofstream out(dir / "averages.csv");
        if (!out) throw IoError("cannot write averages.csv");
        out << "mode,precision,recall,f1\n";
        for (const auto& [mode, values] : report.averages) {
            out << mode << ',' << fixed6(values.precision) << ',' << fixed6(values.recall) << ','
                << fixed6(values.f1) << '\n';
        }
    }
    for (std::size_t i = 0; i < report.roc.size(); ++i) {
        if (!report.roc[i]) continue;
        std::ofstream out(dir / ("roc_" + report.per_label[i].label + ".csv"));
        if (!out) throw IoError("cannot write roc csv");
        out << "fpr,tpr\n";
        for (const auto& point : report.roc[i]->points) {
            out << fixed6(point.fpr) << ',' << fixed6(point.tpr) << '\n';
        }
    }
    {
        std::ofstream out(dir / "misplaced.csv");
        if (!out) throw IoError("cannot write misplaced.csv");
        out << "true,pred,count\n";
        for (std::size_t t = 0; t < report.misclassification.misplaced.size(); ++t) {
            for (std::size_t p = 0; p < report.misclassification.misplaced[t].size(); ++p) {
                const auto count = report.misclassification.misplaced[t][p];
                if (count > 0) {
                    out << report.per_label[t].label << ',' << report.per_label[p].label << ','
                        << count << '\n';
                }
            }
        }
    }
    {
        std::ofstream out(dir / "scalars.txt");
        if (!out) throw IoError("cannot write scalars.txt");
        out << "threshold=" << fixed6(report.threshold) << '\n'
            << "no_label_count=" << report.misclassification.no_label_count << '\n'
            << "n_samples=" << report.n_samples << '\n';
    }
}

std::string report_markdown(const nlohmann::json& report_doc) {
    std::ostringstream out;
    out << "| Label | Precision | Recall | F1-Score | Support |\n";
    out << "|-------|-----------|--------|----------|---------|\n";
    std::int64_t support_total = 0;
    for (const auto& row : report_doc.at("per_label")) {
        support_total += row.at("support").get<std::int64_t>();
        out << "| " << row.at("label").get<std::string>() << " | "
            << fixed2(row.at("precision").get<double>()) << " | "
            << fixed2(row.at("recall").get<double>()) << " | "
            << fixed2(row.at("f1").get<double>()) << " | " << row.at("support").get<std::int64_t>()
            << " |\n";
    }
    const auto& averages = report_doc.at("averages");
    for (const char* mode : {"micro", "macro", "weighted", "samples"}) {
        if (!averages.contains(mode)) continue;
        const auto& values = averages.at(mode);
        out << "| " << mode << " avg | " << fixed2(values.at("precision").get<double>()) << " | "
            << fixed2(values.at("recall").get<double>()) << " | "
            << fixed2(values.at("f1").get<double>()) << " | " << support_total << " |\n";
    }
    out << "\nno-label predictions: " << report_doc.at("no_label_count").get<std::int64_t>()
        << " (threshold " << fixed2(report_doc.at("threshold").get<double>()) << ")\n";
    return out.str();
}

} // namespace segclass
