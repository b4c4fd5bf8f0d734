#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "addrparse/address.hpp"
#include "addrparse/embedding.hpp"
#include "addrparse/nn/kernels.hpp"
#include "addrparse/nn/tape.hpp"

namespace addrparse {

// Dimensions and embedder choice. Defaults are desk-scale sizes.
struct ModelConfig {
    Variant variant = Variant::Composed;
    int subword_dim = 32;
    int composer_hidden = 64;  // word width of the composed embedder
    int fixed_word_dim = 64;   // word width of the fixed embedder
    int hidden = 128;          // encoder and decoder width
    int ngram_n = 2;
    std::size_t hash_buckets = 4096;
    int bpe_merges = 512;
    std::uint64_t seed = 0;

    int word_dim() const { return variant == Variant::Fixed ? fixed_word_dim : composer_hidden; }
    // The decoder's tag-input embedding matches the word width.
    int tag_input_dim() const { return word_dim(); }
};

// Embedder, LSTM encoder, LSTM decoder, learned tag-input embedding (8 tags +
// BOS) and the linear projection onto the 8 tags.
class ParserModel {
public:
    // All parameters zero; see create() for an initialized model.
    ParserModel(ModelConfig config, WordEmbedder embedder);

    // Seeded initialization. The composed variant needs a learned vocabulary.
    static ParserModel create(const ModelConfig& config, std::optional<BpeVocab> vocab = std::nullopt);

    const ModelConfig& config() const { return config_; }
    const WordEmbedder& embedder() const { return embedder_; }
    WordEmbedder& embedder() { return embedder_; }

    nn::LstmCellParams encoder;
    nn::LstmCellParams decoder;
    nn::Parameter tag_input;  // (8 + 1) x tag_input_dim, last row is BOS
    nn::Parameter proj_w;     // 8 x hidden
    nn::Parameter proj_b;     // 1 x 8

    // Trainable parameters in a fixed order (also the serialization order).
    std::vector<nn::Parameter*> parameters();
    std::vector<const nn::Parameter*> parameters() const;

private:
    ModelConfig config_;
    WordEmbedder embedder_;
};

struct EncoderOutput {
    nn::Matrix states;  // T x H
    nn::LstmState context;
};

EncoderOutput encode(const nn::Matrix& embedded, const ParserModel& model);

// Exactly `length` decoder steps. Step 1 reads BOS; later steps read the
// previous gold tag when teacher_tags is given, otherwise the previous argmax.
nn::Matrix decode(const nn::LstmState& context, int length, const ParserModel& model,
                  const std::vector<Tag>* teacher_tags = nullptr);

struct ParseResult {
    std::vector<std::string> tokens;
    std::vector<Tag> tags;
    nn::Matrix probabilities;  // T x 8, rows sum to one
};

ParseResult parse_tokens(const std::vector<std::string>& tokens, const ParserModel& model);
ParseResult parse(std::string_view raw, const ParserModel& model);

// Padded, time-major view of a group of addresses for the batched tape
// forward. Position t of example b is real iff mask[t][b] is 1.
struct Batch {
    std::vector<std::string> words;                // distinct tokens in the batch
    std::vector<std::vector<int>> word_rows;       // [t][b] index into words (0 on padding)
    std::vector<std::vector<int>> targets;         // [t][b] tag index (0 on padding)
    std::vector<std::vector<std::uint8_t>> mask;   // [t][b]
    std::vector<int> lengths;                      // per example
    std::size_t token_count = 0;

    std::size_t size() const { return lengths.size(); }
    std::size_t max_length() const { return mask.size(); }
};

Batch make_batch(std::span<const TaggedAddress* const> addresses);

// Memoizes per-word segmentations (composed) or fixed vectors across batches.
class WordCache {
public:
    const std::vector<int>& segmentation(const std::string& word, const SubwordComposer& composer);
    const nn::RowVector& fixed_vector(const std::string& word, const FixedNgramTable& table);

private:
    std::unordered_map<std::string, std::vector<int>> segments_;
    std::unordered_map<std::string, nn::RowVector> vectors_;
};

struct BatchForward {
    nn::Var loss_sum;  // summed cross-entropy over real positions (1x1)
    std::size_t token_count = 0;
    std::vector<std::vector<int>> predictions;  // [t][b] argmax tag
};

BatchForward forward_batch(nn::Tape& tape, ParserModel& model, const Batch& batch,
                           bool teacher_forcing, WordCache& cache);

// Free-running tags for every address, computed batch by batch. Same result
// as parse_tokens() on each address.
std::vector<std::vector<Tag>> tag_batched(const ParserModel& model, std::span<const TaggedAddress> corpus,
                                          std::size_t batch_size = 64);

}  // namespace addrparse
