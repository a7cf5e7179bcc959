#include "segclass/segmenter.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace segclass {

namespace {

const std::set<std::string_view> kStopwords = {
    "a",    "an",   "and",  "are",   "as",    "at",    "be",    "been",  "but",  "by",
    "can",  "did",  "do",   "does",  "for",   "from",  "had",   "has",   "have", "he",
    "her",  "his",  "i",    "if",    "in",    "into",  "is",    "it",    "its",  "may",
    "more", "most", "not",  "of",    "on",    "or",    "our",   "she",   "so",   "such",
    "than", "that", "the",  "their", "them",  "then",  "there", "these", "they", "this",
    "those", "to",  "was",  "we",    "were",  "which", "while", "will",  "with", "you",
};

std::string lowercase(std::string_view token) {
    std::string out(token);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

bool has_alnum(std::string_view token) {
    return std::any_of(token.begin(), token.end(),
                       [](unsigned char c) { return std::isalnum(c) != 0; });
}

std::string join_words(const std::vector<std::string>& words, std::size_t begin, std::size_t end) {
    std::string out;
    for (std::size_t i = begin; i < end && i < words.size(); ++i) {
        if (!out.empty()) out.push_back(' ');
        out += words[i];
    }
    return out;
}

std::string keyword_suffix(const std::vector<std::string>& keywords) {
    std::string out(kKeywordMarker);
    for (const auto& keyword : keywords) {
        out.push_back(' ');
        out += keyword;
    }
    return out;
}

} // namespace

std::vector<std::string> split_words(std::string_view text) {
    std::vector<std::string> words;
    std::size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
        std::size_t begin = i;
        while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i]))) ++i;
        if (i > begin) words.emplace_back(text.substr(begin, i - begin));
    }
    return words;
}

std::string trim_words(std::string_view text, std::size_t limit) {
    const auto words = split_words(text);
    return join_words(words, 0, std::min(limit, words.size()));
}

std::vector<std::string> TermScoreKeywordProvider::extract(std::string_view body_text,
                                                           std::size_t k) const {
    const auto raw_tokens = split_words(body_text);
    struct TermStats {
        std::size_t count = 0;
        std::size_t first_pos = 0;
        std::vector<double> positions;
    };
    std::map<std::string, TermStats> stats;
    for (std::size_t pos = 0; pos < raw_tokens.size(); ++pos) {
        const std::string term = lowercase(raw_tokens[pos]);
        if (!has_alnum(term) || kStopwords.count(term)) continue;
        auto [it, inserted] = stats.try_emplace(term);
        if (inserted) it->second.first_pos = pos;
        ++it->second.count;
        it->second.positions.push_back(static_cast<double>(pos));
    }
    if (stats.empty()) return {};

    const double doc_len = static_cast<double>(std::max<std::size_t>(raw_tokens.size(), 1));
    struct Scored {
        std::string term;
        double score;
        std::size_t first_pos;
    };
    std::vector<Scored> scored;
    scored.reserve(stats.size());
    for (const auto& [term, st] : stats) {
        double mean = 0.0;
        for (double p : st.positions) mean += p;
        mean /= static_cast<double>(st.positions.size());
        double variance = 0.0;
        for (double p : st.positions) variance += (p - mean) * (p - mean);
        variance /= static_cast<double>(st.positions.size());
        const double dispersion = std::sqrt(variance) / doc_len;
        const double score = static_cast<double>(st.count) / (1.0 + dispersion);
        scored.push_back({term, score, st.first_pos});
    }
    std::sort(scored.begin(), scored.end(), [](const Scored& a, const Scored& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.first_pos < b.first_pos;
    });
    std::vector<std::string> keywords;
    for (std::size_t i = 0; i < scored.size() && keywords.size() < k; ++i) {
        keywords.push_back(scored[i].term);
    }
    return keywords;
}

std::unique_ptr<KeywordProvider> make_keyword_provider(const std::string& name) {
    if (name == "term_score") return std::make_unique<TermScoreKeywordProvider>();
    throw ConfigError("unknown keyword provider '" + name + "' (available: term_score)");
}

std::vector<std::string> extract_keywords(std::string_view body_text, std::size_t k,
                                          const KeywordProvider& provider, bool* warned_empty) {
    if (k < 1) {
        throw ValidationError("keyword count must be at least 1");
    }
    const bool empty = split_words(body_text).empty();
    if (warned_empty) *warned_empty = empty;
    if (empty) return {};
    return provider.extract(body_text, k);
}

SegmentBundle build_segments(const DocumentRecord& record, const KeywordProvider& provider,
                             const SegmenterOptions& options) {
    SegmentBundle bundle;
    bundle.doc_id = record.doc_id;

    if (record.keywords) {
        bundle.provider_id = "record_keywords";
        for (const auto& keyword : *record.keywords) {
            if (bundle.keywords.size() >= options.keyword_count) break;
            bundle.keywords.push_back(keyword);
        }
    } else {
        bundle.provider_id = provider.provider_id();
        bundle.keywords = extract_keywords(record.body_text, options.keyword_count, provider);
    }

    const auto body_words = split_words(record.body_text);
    std::string body_lead = join_words(body_words, 0, kBodyLeadWordLimit);

    std::string keyword_segment;
    if (!bundle.keywords.empty()) {
        keyword_segment = keyword_suffix(bundle.keywords);
        if (!options.keywords_as_sixth_segment) {
            if (!body_lead.empty()) body_lead.push_back(' ');
            body_lead += keyword_segment;
        }
    }

    bundle.segments.push_back(trim_words(record.abstract_text, kAbstractWordLimit));
    bundle.segments.push_back(trim_words(record.title, kTitleWordLimit));
    bundle.segments.push_back(std::move(body_lead));
    bundle.segments.push_back(
        join_words(body_words, kBodyLeadWordLimit, kBodyLeadWordLimit + kBodyExtensionWordLimit));
    bundle.segments.push_back(join_words(body_words, kBodyLeadWordLimit + kBodyExtensionWordLimit,
                                         kBodyLeadWordLimit + 2 * kBodyExtensionWordLimit));
    if (options.keywords_as_sixth_segment) {
        bundle.segments.push_back(std::move(keyword_segment));
    }
    return bundle;
}

nlohmann::json bundle_to_json(const SegmentBundle& bundle) {
    return nlohmann::json{
        {"doc_id", bundle.doc_id},
        {"segments", bundle.segments},
        {"keywords", bundle.keywords},
        {"provider_id", bundle.provider_id},
    };
}

SegmentBundle bundle_from_json(const nlohmann::json& doc) {
    SegmentBundle bundle;
    bundle.doc_id = doc.at("doc_id").get<std::string>();
    bundle.segments = doc.at("segments").get<std::vector<std::string>>();
    bundle.keywords = doc.at("keywords").get<std::vector<std::string>>();
    bundle.provider_id = doc.at("provider_id").get<std::string>();
    if (bundle.segments.size() != 5 && bundle.segments.size() != 6) {
        throw ValidationError("bundle for '" + bundle.doc_id + "' has " +
                              std::to_string(bundle.segments.size()) + " segments, expected 5 or 6");
    }
    return bundle;
}

void write_bundles(const std::filesystem::path& path, const std::vector<SegmentBundle>& bundles) {
    std::ofstream out(path);
    if (!out) {
        throw IoError("cannot write bundle file: " + path.string());
    }
    for (const auto& bundle : bundles) {
        out << bundle_to_json(bundle).dump() << '\n';
    }
}

std::vector<SegmentBundle> read_bundles(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open bundle file: " + path.string());
    }
    std::vector<SegmentBundle> bundles;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        try {
            bundles.push_back(bundle_from_json(nlohmann::json::parse(line)));
        } catch (const nlohmann::json::exception& err) {
            throw ValidationError("bundle file " + path.string() + " line " +
                                  std::to_string(line_no) + ": " + err.what());
        }
    }
    return bundles;
}

} // namespace segclass
