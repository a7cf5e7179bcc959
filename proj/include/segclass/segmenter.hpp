#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "segclass/corpus.hpp"

namespace segclass {

// Word budgets per segment: abstract, title, leading body window, and the two
// body extension windows.
inline constexpr std::size_t kAbstractWordLimit = 200;
inline constexpr std::size_t kTitleWordLimit = 50;
inline constexpr std::size_t kBodyLeadWordLimit = 250;
inline constexpr std::size_t kBodyExtensionWordLimit = 500;
inline constexpr std::string_view kKeywordMarker = "[KEYWORDS]";

// The word-budgeted text segments for one document. Five segments by default:
// [abstract, title, body lead + keyword suffix, body words 251-750, 751-1250].
// With keywords_as_sixth_segment the suffix becomes a sixth segment instead.
struct SegmentBundle {
    std::string doc_id;
    std::vector<std::string> segments;
    std::vector<std::string> keywords;
    std::string provider_id;

    friend bool operator==(const SegmentBundle&, const SegmentBundle&) = default;
};

class KeywordProvider {
public:
    virtual ~KeywordProvider() = default;

    // At most k distinct, lowercased, non-stopword tokens of body_text.
    virtual std::vector<std::string> extract(std::string_view body_text, std::size_t k) const = 0;
    virtual std::string provider_id() const = 0;
};

// Default dependency-free provider. Scores each candidate token by
// term frequency x inverse positional dispersion (terms clumped in one spot
// rank above terms smeared across the document at equal frequency), breaking
// ties by first occurrence. Deterministic for identical input.
class TermScoreKeywordProvider final : public KeywordProvider {
public:
    std::vector<std::string> extract(std::string_view body_text, std::size_t k) const override;
    std::string provider_id() const override { return "term_score"; }
};

// Named provider registry; neural topic-model providers plug in here.
std::unique_ptr<KeywordProvider> make_keyword_provider(const std::string& name);

struct SegmenterOptions {
    std::size_t keyword_count = 10;
    bool keywords_as_sixth_segment = false;
};

// Whitespace-delimited tokens, punctuation kept attached.
std::vector<std::string> split_words(std::string_view text);

// First min(limit, wordcount) words re-joined with single spaces.
std::string trim_words(std::string_view text, std::size_t limit);

// Provider call with the empty-input warning surfaced.
std::vector<std::string> extract_keywords(std::string_view body_text, std::size_t k,
                                          const KeywordProvider& provider,
                                          bool* warned_empty = nullptr);

// Builds the segment bundle for one record. When the record already carries
// keywords the provider is skipped and the stored list is used (truncated to
// the configured count).
SegmentBundle build_segments(const DocumentRecord& record, const KeywordProvider& provider,
                             const SegmenterOptions& options = {});

nlohmann::json bundle_to_json(const SegmentBundle& bundle);
SegmentBundle bundle_from_json(const nlohmann::json& doc);

void write_bundles(const std::filesystem::path& path, const std::vector<SegmentBundle>& bundles);
std::vector<SegmentBundle> read_bundles(const std::filesystem::path& path);

} // namespace segclass
