#pragma once

// Independent oracles for the test and acceptance suites: plain double-loop
// recounts, rank statistics and finite differences. Deliberately written from
// first principles, sharing no code with the library paths they check.

#include <cmath>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "segclass/cnn_head.hpp"
#include "segclass/evaluator.hpp"
#include "segclass/trainer.hpp"

namespace oracle {

struct Counts {
    long long tp = 0, fp = 0, fn = 0, tn = 0;
};

inline std::map<std::string, Counts> confusion(const segclass::LabelSets& preds,
                                               const segclass::LabelSets& truths,
                                               const std::vector<std::string>& labels) {
    std::map<std::string, Counts> out;
    for (const auto& label : labels) {
        Counts counts;
        for (std::size_t s = 0; s < preds.size(); ++s) {
            const bool predicted = preds[s].count(label) > 0;
            const bool actual = truths[s].count(label) > 0;
            if (predicted && actual) ++counts.tp;
            if (predicted && !actual) ++counts.fp;
            if (!predicted && actual) ++counts.fn;
            if (!predicted && !actual) ++counts.tn;
        }
        out[label] = counts;
    }
    return out;
}

struct Triple {
    double p = 0, r = 0, f1 = 0;
};

inline Triple prf1(long long tp, long long fp, long long fn) {
    Triple t;
    t.p = (tp + fp) ? double(tp) / double(tp + fp) : 0.0;
    t.r = (tp + fn) ? double(tp) / double(tp + fn) : 0.0;
    t.f1 = (t.p + t.r) > 0 ? 2 * t.p * t.r / (t.p + t.r) : 0.0;
    return t;
}

inline Triple micro(const std::map<std::string, Counts>& counts) {
    long long tp = 0, fp = 0, fn = 0;
    for (const auto& [label, c] : counts) {
        tp += c.tp;
        fp += c.fp;
        fn += c.fn;
    }
    return prf1(tp, fp, fn);
}

inline Triple macro(const std::map<std::string, Counts>& counts) {
    Triple sum;
    for (const auto& [label, c] : counts) {
        const Triple t = prf1(c.tp, c.fp, c.fn);
        sum.p += t.p;
        sum.r += t.r;
        sum.f1 += t.f1;
    }
    const double n = double(counts.size());
    return {sum.p / n, sum.r / n, sum.f1 / n};
}

inline Triple weighted(const std::map<std::string, Counts>& counts) {
    Triple sum;
    double support_total = 0;
    for (const auto& [label, c] : counts) {
        const Triple t = prf1(c.tp, c.fp, c.fn);
        const double support = double(c.tp + c.fn);
        sum.p += t.p * support;
        sum.r += t.r * support;
        sum.f1 += t.f1 * support;
        support_total += support;
    }
    if (support_total == 0) return {};
    return {sum.p / support_total, sum.r / support_total, sum.f1 / support_total};
}

inline Triple samples(const segclass::LabelSets& preds, const segclass::LabelSets& truths) {
    Triple sum;
    for (std::size_t s = 0; s < preds.size(); ++s) {
        long long hit = 0;
        for (const auto& label : preds[s]) hit += truths[s].count(label) ? 1 : 0;
        double p = 0, r = 0, f1 = 0;
        if (preds[s].empty() && truths[s].empty()) {
            p = r = f1 = 1.0;
        } else if (!preds[s].empty() && !truths[s].empty()) {
            p = double(hit) / double(preds[s].size());
            r = double(hit) / double(truths[s].size());
            f1 = (p + r) > 0 ? 2 * p * r / (p + r) : 0.0;
        }
        sum.p += p;
        sum.r += r;
        sum.f1 += f1;
    }
    const double n = double(preds.size());
    return {sum.p / n, sum.r / n, sum.f1 / n};
}

// AUC as the probability that a random positive outscores a random negative,
// ties counted half.
inline double mann_whitney_auc(const std::vector<double>& scores,
                               const std::vector<std::uint8_t>& truths) {
    double wins = 0.0;
    long long pairs = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (!truths[i]) continue;
        for (std::size_t j = 0; j < scores.size(); ++j) {
            if (truths[j]) continue;
            ++pairs;
            if (scores[i] > scores[j]) wins += 1.0;
            else if (scores[i] == scores[j]) wins += 0.5;
        }
    }
    return wins / double(pairs);
}

inline std::map<std::pair<std::string, std::string>, long long> misplaced(
    const segclass::LabelSets& preds, const segclass::LabelSets& truths, long long* no_label) {
    std::map<std::pair<std::string, std::string>, long long> matrix;
    *no_label = 0;
    for (std::size_t s = 0; s < preds.size(); ++s) {
        for (const auto& truth_label : truths[s]) {
            if (preds[s].count(truth_label)) continue;
            if (preds[s].empty()) {
                ++*no_label;
                continue;
            }
            for (const auto& pred_label : preds[s]) {
                if (truths[s].count(pred_label)) continue;
                ++matrix[{truth_label, pred_label}];
            }
        }
    }
    return matrix;
}

// True when every ReLU input clears `margin` and every pooling decision has a
// clear winner, so central differences with a much smaller step stay on one
// linear piece of the network. Draws failing this sit on a kink, where the
// one-sided finite difference is not the analytic subgradient.
inline bool kink_safe(const segclass::ForwardCache& cache, double margin) {
    for (const auto& pre : cache.conv_pre) {
        for (const double v : pre.values()) {
            if (std::abs(v) < margin) return false;
        }
        for (std::size_t f = 0; f < pre.cols(); ++f) {
            double best = 0.0, second = 0.0;
            for (std::size_t p = 0; p < pre.rows(); ++p) {
                const double v = pre(p, f) > 0.0 ? pre(p, f) : 0.0;
                if (v > best) {
                    second = best;
                    best = v;
                } else if (v > second) {
                    second = v;
                }
            }
            if (best > 0.0 && best - second < margin) return false;
        }
    }
    for (const double v : cache.dense_pre) {
        if (std::abs(v) < margin) return false;
    }
    return true;
}

inline std::vector<double*> parameter_scalars(segclass::HeadParameters& params) {
    std::vector<double*> out;
    for (auto& block : params.conv) {
        for (auto& v : block.kernel.values()) out.push_back(&v);
        for (auto& v : block.bias) out.push_back(&v);
    }
    for (auto& v : params.dense_weight.values()) out.push_back(&v);
    for (auto& v : params.dense_bias) out.push_back(&v);
    for (auto& v : params.out_weight.values()) out.push_back(&v);
    for (auto& v : params.out_bias) out.push_back(&v);
    return out;
}

// Central finite differences of the composed forward + weighted loss, with the
// dropout mask pinned by mask_seed so the perturbed losses see the same mask.
inline std::vector<double> finite_difference_gradient(
    const segclass::Matrix& input, segclass::HeadParameters params,
    const segclass::HeadConfig& config, const segclass::LabelVector& target, double sample_weight,
    std::uint64_t mask_seed, double step) {
    auto loss_of = [&](const segclass::HeadParameters& p) {
        const auto probs =
            segclass::head_forward(input, p, config, segclass::RunMode::train, mask_seed);
        return segclass::weighted_loss(probs, target, sample_weight);
    };
    auto scalars = parameter_scalars(params);
    std::vector<double> grad(scalars.size());
    for (std::size_t i = 0; i < scalars.size(); ++i) {
        const double original = *scalars[i];
        *scalars[i] = original + step;
        const double up = loss_of(params);
        *scalars[i] = original - step;
        const double down = loss_of(params);
        *scalars[i] = original;
        grad[i] = (up - down) / (2.0 * step);
    }
    return grad;
}

} // namespace oracle
