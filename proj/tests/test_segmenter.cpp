#include <doctest.h>

#include <random>
#include <sstream>

#include "segclass/rng.hpp"
#include "segclass/segmenter.hpp"

using namespace segclass;

namespace {

std::string make_words(std::size_t n, const std::string& prefix = "w") {
    std::ostringstream out;
    for (std::size_t i = 0; i < n; ++i) {
        if (i) out << ' ';
        out << prefix << i;
    }
    return out.str();
}

DocumentRecord make_record(std::string body, std::string abstract = "an abstract",
                           std::string title = "a title") {
    DocumentRecord record;
    record.doc_id = "doc";
    record.title = std::move(title);
    record.abstract_text = std::move(abstract);
    record.body_text = std::move(body);
    record.subject_areas = {"AGRI"};
    return record;
}

} // namespace

TEST_CASE("trim_words") {
    CHECK(trim_words("a b c", 5) == "a b c");
    CHECK(trim_words("a  b\tc", 2) == "a b");
    CHECK(trim_words("", 4) == "");

    const std::string long_text = make_words(250);
    const std::string trimmed = trim_words(long_text, 200);
    CHECK(split_words(trimmed).size() == 200);
    CHECK(split_words(trimmed).back() == "w199");
}

TEST_CASE("extract_keywords") {
    TermScoreKeywordProvider provider;

    SUBCASE("frequency dominates, ties break by first occurrence") {
        const auto keywords = extract_keywords("alpha alpha beta", 2, provider);
        CHECK(keywords == std::vector<std::string>{"alpha", "beta"});
    }
    SUBCASE("empty text yields an empty list and a warning") {
        bool warned = false;
        CHECK(extract_keywords("", 10, provider, &warned).empty());
        CHECK(warned);
    }
    SUBCASE("keywords are distinct lowercased tokens of the text") {
        const std::string text =
            "The Reactor reactor CORE was inspected; the core temperature stayed normal "
            "during the inspection of the reactor core systems.";
        const auto keywords = extract_keywords(text, 10, provider);
        CHECK(keywords.size() <= 10);
        std::set<std::string> seen;
        std::set<std::string> tokens;
        for (const auto& word : split_words(text)) {
            std::string lower = word;
            for (auto& c : lower) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
            tokens.insert(lower);
        }
        for (const auto& keyword : keywords) {
            CHECK(seen.insert(keyword).second);
            CHECK(tokens.count(keyword) == 1);
        }
    }
    SUBCASE("stopwords never surface") {
        const auto keywords = extract_keywords("the the the gearbox", 3, provider);
        CHECK(keywords == std::vector<std::string>{"gearbox"});
    }
    SUBCASE("k must be positive") {
        CHECK_THROWS_AS(extract_keywords("x", 0, provider), ValidationError);
    }
}

TEST_CASE("build_segments windows") {
    TermScoreKeywordProvider provider;

    SUBCASE("1300-word body splits into 250/500/500 with the tail dropped") {
        const auto record = make_record(make_words(1300, "b"));
        const auto bundle = build_segments(record, provider);
        REQUIRE(bundle.segments.size() == 5);

        const auto body1_words = split_words(bundle.segments[2]);
        auto marker = std::find(body1_words.begin(), body1_words.end(),
                                std::string(kKeywordMarker));
        REQUIRE(marker != body1_words.end());
        CHECK(marker - body1_words.begin() == 250);
        CHECK(body1_words.front() == "b0");
        CHECK(*(marker - 1) == "b249");

        const auto body2_words = split_words(bundle.segments[3]);
        CHECK(body2_words.size() == 500);
        CHECK(body2_words.front() == "b250");
        CHECK(body2_words.back() == "b749");

        const auto body3_words = split_words(bundle.segments[4]);
        CHECK(body3_words.size() == 500);
        CHECK(body3_words.front() == "b750");
        CHECK(body3_words.back() == "b1249"); // words 1250..1299 dropped
    }
    SUBCASE("100-word body exhausts into body1; extensions stay empty") {
        const auto record = make_record(make_words(100, "b"));
        const auto bundle = build_segments(record, provider);
        const auto body1_words = split_words(bundle.segments[2]);
        CHECK(body1_words[99] == "b99");
        CHECK(bundle.segments[3].empty());
        CHECK(bundle.segments[4].empty());
    }
    SUBCASE("empty abstract leaves slot 1 empty, slots stay five") {
        const auto record = make_record(make_words(30), "");
        const auto bundle = build_segments(record, provider);
        REQUIRE(bundle.segments.size() == 5);
        CHECK(bundle.segments[0].empty());
        CHECK_FALSE(bundle.segments[1].empty());
    }
    SUBCASE("record keywords bypass the provider") {
        auto record = make_record(make_words(40));
        record.keywords = std::vector<std::string>{"stored", "keywords"};
        const auto bundle = build_segments(record, provider);
        CHECK(bundle.provider_id == "record_keywords");
        CHECK(bundle.keywords == std::vector<std::string>{"stored", "keywords"});
    }
    SUBCASE("sixth-segment option moves the keyword block") {
        SegmenterOptions options;
        options.keywords_as_sixth_segment = true;
        const auto record = make_record(make_words(40));
        const auto bundle = build_segments(record, provider, options);
        REQUIRE(bundle.segments.size() == 6);
        CHECK(bundle.segments[2].find(std::string(kKeywordMarker)) == std::string::npos);
        CHECK(bundle.segments[5].rfind(kKeywordMarker, 0) == 0);
    }
}

TEST_CASE("segment budgets and body reconstruction on random documents") {
    TermScoreKeywordProvider provider;
    std::mt19937_64 gen(23);
    const std::size_t budgets[5] = {200, 50, 250 + 11, 500, 500};

    for (int trial = 0; trial < 120; ++trial) {
        const std::size_t body_len = rng::bounded(gen, 1600);
        const std::size_t abstract_len = rng::bounded(gen, 300);
        const std::size_t title_len = rng::bounded(gen, 80);
        // Biased vocabulary so terms repeat and keyword scores vary.
        auto text = [&](std::size_t n) {
            std::ostringstream out;
            for (std::size_t i = 0; i < n; ++i) {
                if (i) out << ' ';
                out << "t" << rng::bounded(gen, 97);
            }
            return out.str();
        };
        const auto record = make_record(text(body_len), text(abstract_len), text(title_len));
        const auto bundle = build_segments(record, provider);
        REQUIRE(bundle.segments.size() == 5);

        for (int s = 0; s < 5; ++s) {
            CHECK(split_words(bundle.segments[s]).size() <= budgets[s]);
        }

        // body1 (without the keyword suffix) + body2 + body3 rebuilds the
        // normalized body prefix.
        auto body1_words = split_words(bundle.segments[2]);
        auto marker = std::find(body1_words.begin(), body1_words.end(),
                                std::string(kKeywordMarker));
        std::vector<std::string> rebuilt(body1_words.begin(), marker);
        for (int s = 3; s < 5; ++s) {
            const auto words = split_words(bundle.segments[s]);
            rebuilt.insert(rebuilt.end(), words.begin(), words.end());
        }
        const auto body_words = split_words(record.body_text);
        REQUIRE(rebuilt.size() == std::min<std::size_t>(body_words.size(), 1250));
        CHECK(std::equal(rebuilt.begin(), rebuilt.end(), body_words.begin()));

        // Determinism: same record and provider give the same bundle.
        CHECK(build_segments(record, provider) == bundle);
    }
}

TEST_CASE("bundle persistence round-trip") {
    TermScoreKeywordProvider provider;
    std::vector<SegmentBundle> bundles;
    for (int i = 0; i < 3; ++i) {
        auto record = make_record(make_words(40 + i * 7, "x"));
        record.doc_id = "doc-" + std::to_string(i);
        bundles.push_back(build_segments(record, provider));
    }
    const auto tmp = std::filesystem::temp_directory_path() / "segclass_bundles.jsonl";
    write_bundles(tmp, bundles);
    const auto reloaded = read_bundles(tmp);
    CHECK(reloaded == bundles);
    std::filesystem::remove(tmp);
}

TEST_CASE("keyword provider registry") {
    CHECK(make_keyword_provider("term_score")->provider_id() == "term_score");
    CHECK_THROWS_AS(make_keyword_provider("keybert"), ConfigError);
}
