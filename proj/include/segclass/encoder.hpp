#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "segclass/matrix.hpp"
#include "segclass/segmenter.hpp"

namespace segclass {

// One tokenized segment: position 0 is the classification token, the last real
// token is the separator, the tail is padding masked out to 0.
struct TokenizedSegment {
    std::vector<std::int32_t> input_ids;
    std::vector<std::int32_t> attention_mask;
    std::size_t max_len = 0;

    std::vector<std::int32_t> real_ids() const;

    friend bool operator==(const TokenizedSegment&, const TokenizedSegment&) = default;
};

class Tokenizer {
public:
    virtual ~Tokenizer() = default;

    // Content ids only; special tokens are added by tokenize_segment.
    virtual std::vector<std::int32_t> encode_content(std::string_view text) const = 0;
    virtual std::int32_t cls_id() const = 0;
    virtual std::int32_t sep_id() const = 0;
    virtual std::int32_t pad_id() const = 0;
    virtual std::string tokenizer_id() const = 0;
};

// Deterministic word-level tokenizer: lowercased whitespace tokens hashed into
// a fixed id range. Stands in for a learned sub-word vocabulary; adapters for
// real tokenizers implement the same interface.
class HashingWordTokenizer final : public Tokenizer {
public:
    explicit HashingWordTokenizer(std::size_t vocab_size = 30522);

    std::vector<std::int32_t> encode_content(std::string_view text) const override;
    std::int32_t cls_id() const override { return 101; }
    std::int32_t sep_id() const override { return 102; }
    std::int32_t pad_id() const override { return 0; }
    std::string tokenizer_id() const override;

private:
    std::size_t vocab_size_;
};

// Truncates to the first max_len-2 content tokens, wraps with the special
// tokens and pads to max_len. max_len must be at least 3.
TokenizedSegment tokenize_segment(std::string_view text, const Tokenizer& tokenizer,
                                  std::size_t max_len);

// Produces the per-segment classification-token embedding.
class Encoder {
public:
    virtual ~Encoder() = default;

    virtual std::vector<double> encode_cls(const TokenizedSegment& segment) const = 0;
    virtual std::size_t hidden_size() const = 0;
    virtual std::size_t layer_group_count() const = 0;
    virtual std::string encoder_id() const = 0;
};

// Deterministic unit-norm pseudo-embedding keyed by a stable hash of the
// unpadded id sequence and the seed. Distinct sequences get (near-)orthogonal
// vectors; padding never changes the output.
std::vector<double> mock_encode(std::span<const std::int32_t> ids, std::uint64_t seed,
                                std::size_t hidden_size);

class MockEncoder final : public Encoder {
public:
    explicit MockEncoder(std::size_t hidden_size = 768, std::uint64_t seed = 0,
                         std::size_t layer_groups = 12);

    std::vector<double> encode_cls(const TokenizedSegment& segment) const override;
    std::size_t hidden_size() const override { return hidden_size_; }
    std::size_t layer_group_count() const override { return layer_groups_; }
    std::string encoder_id() const override { return "mock"; }

private:
    std::size_t hidden_size_;
    std::uint64_t seed_;
    std::size_t layer_groups_;
};

// K x H stack of per-segment embeddings for one document.
struct SegmentEmbeddingMatrix {
    std::string doc_id;
    Matrix rows;
};

SegmentEmbeddingMatrix encode_bundle(const SegmentBundle& bundle, const Tokenizer& tokenizer,
                                     const Encoder& encoder, std::size_t max_len);

// Selected by encoder_id in the run config; serialized into checkpoints so
// evaluate/predict can rebuild the same stack.
struct EncoderSettings {
    std::string encoder_id = "mock";
    std::size_t hidden_size = 768;
    std::uint64_t seed = 0;
    std::size_t max_len = 512;
    std::size_t layer_groups = 12;
    std::size_t vocab_size = 30522;

    nlohmann::json to_json() const;
    static EncoderSettings from_json(const nlohmann::json& doc);

    friend bool operator==(const EncoderSettings&, const EncoderSettings&) = default;
};

struct EncoderStack {
    std::unique_ptr<Tokenizer> tokenizer;
    std::unique_ptr<Encoder> encoder;
};

EncoderStack make_encoder_stack(const EncoderSettings& settings);

// Embedding cache: raw little-endian doubles (doc-major, K*H per doc) next to
// a JSON sidecar carrying {doc_ids, K, H, encoder_id}.
struct EmbeddingCache {
    std::size_t segment_count = 0;
    std::size_t hidden_size = 0;
    std::string encoder_id;
    std::vector<SegmentEmbeddingMatrix> items;
};

void save_embedding_cache(const std::filesystem::path& bin_path,
                          const std::filesystem::path& sidecar_path,
                          const std::vector<SegmentEmbeddingMatrix>& items,
                          const std::string& encoder_id);

EmbeddingCache load_embedding_cache(const std::filesystem::path& bin_path,
                                    const std::filesystem::path& sidecar_path);

} // namespace segclass
