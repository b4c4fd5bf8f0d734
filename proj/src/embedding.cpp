#include "addrparse/embedding.hpp"

#include <algorithm>

#include "addrparse/error.hpp"
#include "addrparse/nn/kernels.hpp"

namespace addrparse {

FixedNgramTable make_fixed_table(const NgramSpec& spec, int d_word, std::uint64_t seed) {
    FixedNgramTable t;
    t.spec = spec;
    t.vectors = nn::Matrix(static_cast<Eigen::Index>(spec.hash_buckets), d_word);
    Rng rng(derive_seed(seed, 0xf1ed));
    nn::fill_uniform(t.vectors, rng, 0.1);
    return t;
}

nn::RowVector embed_word_fixed(std::string_view word, const FixedNgramTable& table) {
    nn::RowVector out = nn::RowVector::Zero(table.vectors.cols());
    for (const auto& g : char_ngrams(word, table.spec)) {
        out += table.vectors.row(static_cast<Eigen::Index>(ngram_bucket(g, table.spec)));
    }
    return out;
}

SubwordComposer::SubwordComposer(BpeVocab v, int sub_dim, int hidden)
    : vocab(std::move(v)),
      subword_dim(sub_dim),
      hidden_dim(hidden),
      table("composer.subword_table", static_cast<Eigen::Index>(vocab.size()), sub_dim),
      forward("composer.forward", sub_dim, hidden),
      backward("composer.backward", sub_dim, hidden),
      fc_w("composer.fc_w", hidden, 2 * hidden),
      fc_b("composer.fc_b", 1, hidden) {}

void SubwordComposer::init(Rng& rng) {
    nn::fill_uniform(table.value, rng, std::sqrt(3.0));
    forward.init(rng);
    backward.init(rng);
    nn::fill_uniform(fc_w.value, rng, 1.0 / std::sqrt(static_cast<double>(hidden_dim)));
    fc_b.value.setZero();
}

std::vector<int> SubwordComposer::subword_ids(std::string_view word) const {
    return vocab.segment(normalize_digits(word));
}

std::vector<nn::Parameter*> SubwordComposer::parameters() {
    return {&table,           &forward.w_input, &forward.w_hidden, &forward.bias, &backward.w_input,
            &backward.w_hidden, &backward.bias, &fc_w,             &fc_b};
}

nn::RowVector embed_word_composed(std::string_view word, const SubwordComposer& c) {
    const auto ids = c.subword_ids(word);
    const int H = c.hidden_dim;
    nn::RowVector hf = nn::RowVector::Zero(H), cf = nn::RowVector::Zero(H);
    for (int id : ids) {
        auto s = nn::lstm_step(c.table.value.row(id), hf, cf, c.forward);
        hf = std::move(s.h);
        cf = std::move(s.c);
    }
    nn::RowVector hb = nn::RowVector::Zero(H), cb = nn::RowVector::Zero(H);
    for (auto it = ids.rbegin(); it != ids.rend(); ++it) {
        auto s = nn::lstm_step(c.table.value.row(*it), hb, cb, c.backward);
        hb = std::move(s.h);
        cb = std::move(s.c);
    }
    nn::RowVector both(2 * H);
    both << hf, hb;
    return both * c.fc_w.value.transpose() + c.fc_b.value;
}

nn::Var compose_words(nn::Tape& tape, SubwordComposer& c, const std::vector<std::vector<int>>& segmented) {
    if (segmented.empty()) throw Error("compose_words: no words");
    const auto U = static_cast<Eigen::Index>(segmented.size());
    std::size_t max_len = 0;
    for (const auto& s : segmented) {
        if (s.empty()) throw Error("compose_words: empty segmentation");
        max_len = std::max(max_len, s.size());
    }
    nn::Var table = tape.parameter(c.table);
    const nn::LstmVars fwd = nn::bind(tape, c.forward);
    const nn::LstmVars bwd = nn::bind(tape, c.backward);
    const nn::Matrix zero = nn::Matrix::Zero(U, 2 * c.hidden_dim);

    auto step_inputs = [&](std::size_t pos, std::vector<int>& rows, std::vector<std::uint8_t>& mask) {
        rows.assign(segmented.size(), BpeVocab::kUnkId);
        mask.assign(segmented.size(), 0);
        for (std::size_t u = 0; u < segmented.size(); ++u) {
            if (pos < segmented[u].size()) {
                rows[u] = segmented[u][pos];
                mask[u] = 1;
            }
        }
    };

    std::vector<int> rows;
    std::vector<std::uint8_t> mask;
    const nn::Var gates_f = nn::lstm_input_gates(table, fwd);
    const nn::Var gates_b = nn::lstm_input_gates(table, bwd);
    nn::Var state_f = tape.constant(zero);
    for (std::size_t pos = 0; pos < max_len; ++pos) {
        step_inputs(pos, rows, mask);
        state_f = nn::lstm_from_gates(nn::gather_rows(gates_f, rows), state_f, fwd, mask);
    }
    // Padded words hold the zero state until their last subword.
    nn::Var state_b = tape.constant(zero);
    for (std::size_t pos = max_len; pos-- > 0;) {
        step_inputs(pos, rows, mask);
        state_b = nn::lstm_from_gates(nn::gather_rows(gates_b, rows), state_b, bwd, mask);
    }
    nn::Var both = nn::concat_cols(nn::lstm_hidden(state_f), nn::lstm_hidden(state_b));
    return nn::linear(both, tape.parameter(c.fc_w), tape.parameter(c.fc_b));
}

std::string_view variant_name(Variant v) { return v == Variant::Fixed ? "fixed" : "composed"; }

Variant parse_variant(std::string_view name) {
    if (name == "fixed") return Variant::Fixed;
    if (name == "composed") return Variant::Composed;
    throw Error("unknown variant '" + std::string(name) + "' (expected fixed or composed)");
}

int WordEmbedder::dim() const {
    return is_fixed() ? fixed().dim() : composer().dim();
}

nn::RowVector WordEmbedder::embed_word(std::string_view word) const {
    return is_fixed() ? embed_word_fixed(word, fixed()) : embed_word_composed(word, composer());
}

std::vector<nn::Parameter*> WordEmbedder::parameters() {
    if (is_fixed()) return {};
    return composer().parameters();
}

nn::Matrix embed_sequence(const std::vector<std::string>& tokens, const WordEmbedder& embedder) {
    if (tokens.empty()) throw EmptyAddress();
    nn::Matrix out(static_cast<Eigen::Index>(tokens.size()), embedder.dim());
    for (std::size_t t = 0; t < tokens.size(); ++t) {
        out.row(static_cast<Eigen::Index>(t)) = embedder.embed_word(tokens[t]);
    }
    return out;
}

}  // namespace addrparse
