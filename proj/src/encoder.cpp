#include "segclass/encoder.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>

#include "segclass/rng.hpp"

namespace segclass {

std::vector<std::int32_t> TokenizedSegment::real_ids() const {
    std::vector<std::int32_t> ids;
    for (std::size_t i = 0; i < input_ids.size(); ++i) {
        if (attention_mask[i]) ids.push_back(input_ids[i]);
    }
    return ids;
}

HashingWordTokenizer::HashingWordTokenizer(std::size_t vocab_size) : vocab_size_(vocab_size) {
    if (vocab_size_ < 1001) {
        throw ConfigError("hashing tokenizer needs a vocab of at least 1001 ids");
    }
}

std::vector<std::int32_t> HashingWordTokenizer::encode_content(std::string_view text) const {
    std::vector<std::int32_t> ids;
    std::size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
        std::size_t begin = i;
        while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i]))) ++i;
        if (i == begin) continue;
        std::string token(text.substr(begin, i - begin));
        std::transform(token.begin(), token.end(), token.begin(),
                       [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
        // Content ids start at 1000, clear of the special-token range.
        const std::uint64_t hash = rng::fnv1a64(token.data(), token.size());
        ids.push_back(static_cast<std::int32_t>(1000 + hash % (vocab_size_ - 1000)));
    }
    return ids;
}

std::string HashingWordTokenizer::tokenizer_id() const {
    return "hashing_word_v1:" + std::to_string(vocab_size_);
}

TokenizedSegment tokenize_segment(std::string_view text, const Tokenizer& tokenizer,
                                  std::size_t max_len) {
    if (max_len < 3) {
        throw ValidationError("max_len must be at least 3 (cls + content + sep)");
    }
    std::vector<std::int32_t> content = tokenizer.encode_content(text);
    if (content.size() > max_len - 2) content.resize(max_len - 2);

    TokenizedSegment segment;
    segment.max_len = max_len;
    segment.input_ids.reserve(max_len);
    segment.input_ids.push_back(tokenizer.cls_id());
    segment.input_ids.insert(segment.input_ids.end(), content.begin(), content.end());
    segment.input_ids.push_back(tokenizer.sep_id());
    segment.attention_mask.assign(segment.input_ids.size(), 1);
    segment.input_ids.resize(max_len, tokenizer.pad_id());
    segment.attention_mask.resize(max_len, 0);
    return segment;
}

std::vector<double> mock_encode(std::span<const std::int32_t> ids, std::uint64_t seed,
                                std::size_t hidden_size) {
    if (hidden_size < 1) {
        throw ValidationError("hidden size must be at least 1");
    }
    const std::uint64_t content_hash = rng::fnv1a64(ids.data(), ids.size_bytes());
    std::mt19937_64 gen(rng::mix(content_hash, seed));
    std::vector<double> vec(hidden_size);
    double norm_sq = 0.0;
    for (double& v : vec) {
        v = rng::normal(gen);
        norm_sq += v * v;
    }
    const double norm = std::sqrt(norm_sq);
    if (norm > 0.0) {
        for (double& v : vec) v /= norm;
    } else {
        vec[0] = 1.0;
    }
    return vec;
}

MockEncoder::MockEncoder(std::size_t hidden_size, std::uint64_t seed, std::size_t layer_groups)
    : hidden_size_(hidden_size), seed_(seed), layer_groups_(layer_groups) {}

std::vector<double> MockEncoder::encode_cls(const TokenizedSegment& segment) const {
    const auto ids = segment.real_ids();
    return mock_encode(ids, seed_, hidden_size_);
}

SegmentEmbeddingMatrix encode_bundle(const SegmentBundle& bundle, const Tokenizer& tokenizer,
                                     const Encoder& encoder, std::size_t max_len) {
    SegmentEmbeddingMatrix out;
    out.doc_id = bundle.doc_id;
    out.rows = Matrix(bundle.segments.size(), encoder.hidden_size());
    for (std::size_t i = 0; i < bundle.segments.size(); ++i) {
        std::vector<double> row;
        try {
            row = encoder.encode_cls(tokenize_segment(bundle.segments[i], tokenizer, max_len));
        } catch (const Error& err) {
            throw ValidationError("encoding doc '" + bundle.doc_id + "' segment " +
                                  std::to_string(i) + ": " + err.what());
        }
        if (row.size() != encoder.hidden_size()) {
            throw ValidationError("encoder returned " + std::to_string(row.size()) +
                                  " dims for doc '" + bundle.doc_id + "' segment " +
                                  std::to_string(i));
        }
        for (std::size_t h = 0; h < row.size(); ++h) {
            if (!std::isfinite(row[h])) {
                throw ValidationError("non-finite embedding for doc '" + bundle.doc_id +
                                      "' segment " + std::to_string(i));
            }
            out.rows(i, h) = row[h];
        }
    }
    return out;
}

nlohmann::json EncoderSettings::to_json() const {
    return nlohmann::json{
        {"encoder_id", encoder_id}, {"hidden_size", hidden_size}, {"seed", seed},
        {"max_len", max_len},       {"layer_groups", layer_groups}, {"vocab_size", vocab_size},
    };
}

EncoderSettings EncoderSettings::from_json(const nlohmann::json& doc) {
    EncoderSettings settings;
    settings.encoder_id = doc.value("encoder_id", settings.encoder_id);
    settings.hidden_size = doc.value("hidden_size", settings.hidden_size);
    settings.seed = doc.value("seed", settings.seed);
    settings.max_len = doc.value("max_len", settings.max_len);
    settings.layer_groups = doc.value("layer_groups", settings.layer_groups);
    settings.vocab_size = doc.value("vocab_size", settings.vocab_size);
    return settings;
}

EncoderStack make_encoder_stack(const EncoderSettings& settings) {
    if (settings.encoder_id == "mock") {
        EncoderStack stack;
        stack.tokenizer = std::make_unique<HashingWordTokenizer>(settings.vocab_size);
        stack.encoder = std::make_unique<MockEncoder>(settings.hidden_size, settings.seed,
                                                      settings.layer_groups);
        return stack;
    }
    throw ConfigError("unknown encoder_id '" + settings.encoder_id + "' (available: mock)");
}

void save_embedding_cache(const std::filesystem::path& bin_path,
                          const std::filesystem::path& sidecar_path,
                          const std::vector<SegmentEmbeddingMatrix>& items,
                          const std::string& encoder_id) {
    if (items.empty()) {
        throw ValidationError("refusing to write an empty embedding cache");
    }
    const std::size_t segment_count = items.front().rows.rows();
    const std::size_t hidden_size = items.front().rows.cols();

    std::ofstream bin(bin_path, std::ios::binary);
    if (!bin) {
        throw IoError("cannot write embedding cache: " + bin_path.string());
    }
    std::vector<std::string> doc_ids;
    for (const auto& item : items) {
        if (item.rows.rows() != segment_count || item.rows.cols() != hidden_size) {
            throw ValidationError("embedding cache items must share one K x H shape");
        }
        doc_ids.push_back(item.doc_id);
        bin.write(reinterpret_cast<const char*>(item.rows.data()),
                  static_cast<std::streamsize>(item.rows.size() * sizeof(double)));
    }
    bin.close();

    std::ofstream sidecar(sidecar_path);
    if (!sidecar) {
        throw IoError("cannot write embedding cache sidecar: " + sidecar_path.string());
    }
    sidecar << nlohmann::json{{"doc_ids", doc_ids},
                              {"K", segment_count},
                              {"H", hidden_size},
                              {"encoder_id", encoder_id}}
                   .dump(2)
            << '\n';
}

EmbeddingCache load_embedding_cache(const std::filesystem::path& bin_path,
                                    const std::filesystem::path& sidecar_path) {
    std::ifstream sidecar(sidecar_path);
    if (!sidecar) {
        throw IoError("cannot open embedding cache sidecar: " + sidecar_path.string());
    }
    nlohmann::json meta = nlohmann::json::parse(sidecar, nullptr, true);

    EmbeddingCache cache;
    cache.segment_count = meta.at("K").get<std::size_t>();
    cache.hidden_size = meta.at("H").get<std::size_t>();
    cache.encoder_id = meta.at("encoder_id").get<std::string>();
    const auto doc_ids = meta.at("doc_ids").get<std::vector<std::string>>();

    std::ifstream bin(bin_path, std::ios::binary);
    if (!bin) {
        throw IoError("cannot open embedding cache: " + bin_path.string());
    }
    for (const auto& doc_id : doc_ids) {
        SegmentEmbeddingMatrix item;
        item.doc_id = doc_id;
        item.rows = Matrix(cache.segment_count, cache.hidden_size);
        bin.read(reinterpret_cast<char*>(item.rows.data()),
                 static_cast<std::streamsize>(item.rows.size() * sizeof(double)));
        if (!bin) {
            throw IoError("embedding cache truncated: " + bin_path.string());
        }
        cache.items.push_back(std::move(item));
    }
    return cache;
}

} // namespace segclass
