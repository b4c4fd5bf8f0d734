#pragma once

#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "addrparse/nn/tape.hpp"
#include "addrparse/nn/tensor.hpp"
#include "addrparse/subword.hpp"

namespace addrparse {

// Frozen hashed n-gram vectors. A word is the sum of its n-gram rows.
struct FixedNgramTable {
    NgramSpec spec;
    nn::Matrix vectors;  // hash_buckets x d_word

    int dim() const { return static_cast<int>(vectors.cols()); }
};

// Rows drawn from U(-0.1, 0.1) with the given seed.
FixedNgramTable make_fixed_table(const NgramSpec& spec, int d_word, std::uint64_t seed);

nn::RowVector embed_word_fixed(std::string_view word, const FixedNgramTable& table);

// Trainable subword composition: subword vectors run through a forward and a
// backward LSTM; the two final hidden states are concatenated and projected by
// a fully connected layer back to the LSTM width.
struct SubwordComposer {
    BpeVocab vocab;
    int subword_dim = 0;
    int hidden_dim = 0;
    nn::Parameter table;  // |vocab| x subword_dim
    nn::LstmCellParams forward;
    nn::LstmCellParams backward;
    nn::Parameter fc_w;  // hidden x 2*hidden
    nn::Parameter fc_b;  // 1 x hidden

    SubwordComposer() = default;
    SubwordComposer(BpeVocab v, int subword_dim, int hidden_dim);

    void init(Rng& rng);
    int dim() const { return hidden_dim; }
    // Digit-normalized BPE segmentation.
    std::vector<int> subword_ids(std::string_view word) const;
    std::vector<nn::Parameter*> parameters();
};

nn::RowVector embed_word_composed(std::string_view word, const SubwordComposer& composer);

// Batched composition on a tape: one output row per segmented word.
nn::Var compose_words(nn::Tape& tape, SubwordComposer& composer,
                      const std::vector<std::vector<int>>& segmented);

enum class Variant { Fixed, Composed };

std::string_view variant_name(Variant v);
// Throws Error for anything other than "fixed" / "composed".
Variant parse_variant(std::string_view name);

class WordEmbedder {
public:
    explicit WordEmbedder(FixedNgramTable table) : impl_(std::move(table)) {}
    explicit WordEmbedder(SubwordComposer composer) : impl_(std::move(composer)) {}

    Variant variant() const { return is_fixed() ? Variant::Fixed : Variant::Composed; }
    bool is_fixed() const { return std::holds_alternative<FixedNgramTable>(impl_); }
    int dim() const;

    const FixedNgramTable& fixed() const { return std::get<FixedNgramTable>(impl_); }
    FixedNgramTable& fixed() { return std::get<FixedNgramTable>(impl_); }
    const SubwordComposer& composer() const { return std::get<SubwordComposer>(impl_); }
    SubwordComposer& composer() { return std::get<SubwordComposer>(impl_); }

    nn::RowVector embed_word(std::string_view word) const;
    // Trainable parameters; empty for the fixed table.
    std::vector<nn::Parameter*> parameters();

private:
    std::variant<FixedNgramTable, SubwordComposer> impl_;
};

// Row t is the embedding of tokens[t].
nn::Matrix embed_sequence(const std::vector<std::string>& tokens, const WordEmbedder& embedder);

}  // namespace addrparse
