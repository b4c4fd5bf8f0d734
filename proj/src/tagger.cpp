#include "addrparse/tagger.hpp"

#include <algorithm>
#include <map>
#include <numeric>

#include "addrparse/error.hpp"

namespace addrparse {

namespace {

WordEmbedder zero_embedder(const ModelConfig& config, std::optional<BpeVocab> vocab) {
    if (config.variant == Variant::Fixed) {
        FixedNgramTable t;
        t.spec = NgramSpec{config.ngram_n, config.hash_buckets, config.seed};
        t.vectors = nn::Matrix::Zero(static_cast<Eigen::Index>(config.hash_buckets), config.fixed_word_dim);
        return WordEmbedder(std::move(t));
    }
    if (!vocab) throw Error("the composed variant needs a BPE vocabulary");
    return WordEmbedder(SubwordComposer(std::move(*vocab), config.subword_dim, config.composer_hidden));
}

int argmax(const nn::Matrix& m, Eigen::Index row) {
    Eigen::Index best = 0;
    m.row(row).maxCoeff(&best);
    return static_cast<int>(best);
}

}  // namespace

ParserModel::ParserModel(ModelConfig config, WordEmbedder embedder)
    : encoder("encoder", embedder.dim(), config.hidden),
      decoder("decoder", config.tag_input_dim(), config.hidden),
      tag_input("tag_input", kNumTags + 1, config.tag_input_dim()),
      proj_w("proj_w", kNumTags, config.hidden),
      proj_b("proj_b", 1, kNumTags),
      config_(std::move(config)),
      embedder_(std::move(embedder)) {
    if (embedder_.dim() != config_.word_dim()) {
        throw DimensionMismatch("embedder width " + std::to_string(embedder_.dim()) +
                                " differs from configured word width " +
                                std::to_string(config_.word_dim()));
    }
}

ParserModel ParserModel::create(const ModelConfig& config, std::optional<BpeVocab> vocab) {
    ParserModel m(config, zero_embedder(config, std::move(vocab)));
    Rng rng(derive_seed(config.seed, 0x7a66e7));
    if (m.embedder_.is_fixed()) {
        const NgramSpec spec = m.embedder_.fixed().spec;
        m.embedder_ = WordEmbedder(make_fixed_table(spec, config.fixed_word_dim, config.seed));
    } else {
        m.embedder_.composer().init(rng);
    }
    m.encoder.init(rng);
    m.decoder.init(rng);
    nn::fill_uniform(m.tag_input.value, rng, std::sqrt(3.0));
    nn::fill_uniform(m.proj_w.value, rng, 1.0 / std::sqrt(static_cast<double>(config.hidden)));
    m.proj_b.value.setZero();
    return m;
}

std::vector<nn::Parameter*> ParserModel::parameters() {
    auto out = embedder_.parameters();
    for (nn::Parameter* p : {&encoder.w_input, &encoder.w_hidden, &encoder.bias, &decoder.w_input,
                             &decoder.w_hidden, &decoder.bias, &tag_input, &proj_w, &proj_b}) {
        out.push_back(p);
    }
    return out;
}

std::vector<const nn::Parameter*> ParserModel::parameters() const {
    auto mutable_params = const_cast<ParserModel*>(this)->parameters();
    return {mutable_params.begin(), mutable_params.end()};
}

EncoderOutput encode(const nn::Matrix& embedded, const ParserModel& model) {
    if (embedded.rows() < 1) throw EmptyAddress();
    const int H = model.config().hidden;
    EncoderOutput out;
    out.states.resize(embedded.rows(), H);
    nn::LstmState s{nn::RowVector::Zero(H), nn::RowVector::Zero(H)};
    for (Eigen::Index t = 0; t < embedded.rows(); ++t) {
        s = nn::lstm_step(embedded.row(t), s.h, s.c, model.encoder);
        out.states.row(t) = s.h;
    }
    out.context = std::move(s);
    return out;
}

nn::Matrix decode(const nn::LstmState& context, int length, const ParserModel& model,
                  const std::vector<Tag>* teacher_tags) {
    if (length < 1) throw EmptyAddress();
    if (teacher_tags && static_cast<int>(teacher_tags->size()) != length) {
        throw LengthMismatch("decode: " + std::to_string(teacher_tags->size()) +
                             " teacher tags for " + std::to_string(length) + " steps");
    }
    nn::Matrix logits(length, kNumTags);
    nn::LstmState s = context;
    int input = kBosIndex;
    for (int t = 0; t < length; ++t) {
        s = nn::lstm_step(model.tag_input.value.row(input), s.h, s.c, model.decoder);
        logits.row(t) = s.h * model.proj_w.value.transpose() + model.proj_b.value;
        input = teacher_tags ? tag_index((*teacher_tags)[t]) : argmax(logits, t);
    }
    return logits;
}

ParseResult parse_tokens(const std::vector<std::string>& tokens, const ParserModel& model) {
    if (tokens.empty()) throw EmptyAddress();
    const auto enc = encode(embed_sequence(tokens, model.embedder()), model);
    const auto logits = decode(enc.context, static_cast<int>(tokens.size()), model);
    ParseResult r;
    r.tokens = tokens;
    r.probabilities = nn::softmax_rows(logits);
    for (Eigen::Index t = 0; t < logits.rows(); ++t) r.tags.push_back(tag_from_index(argmax(logits, t)));
    return r;
}

ParseResult parse(std::string_view raw, const ParserModel& model) {
    return parse_tokens(tokenize(raw), model);
}

Batch make_batch(std::span<const TaggedAddress* const> addresses) {
    if (addresses.empty()) throw Error("make_batch: no addresses");
    Batch b;
    std::map<std::string, int> index;
    std::size_t max_len = 0;
    for (const auto* a : addresses) max_len = std::max(max_len, a->tokens.size());
    const std::size_t B = addresses.size();
    b.word_rows.assign(max_len, std::vector<int>(B, 0));
    b.targets.assign(max_len, std::vector<int>(B, 0));
    b.mask.assign(max_len, std::vector<std::uint8_t>(B, 0));
    for (std::size_t i = 0; i < B; ++i) {
        const auto& a = *addresses[i];
        if (a.tokens.empty() || a.tokens.size() != a.tags.size()) {
            throw LengthMismatch("make_batch: malformed address");
        }
        b.lengths.push_back(static_cast<int>(a.tokens.size()));
        b.token_count += a.tokens.size();
        for (std::size_t t = 0; t < a.tokens.size(); ++t) {
            auto [it, inserted] = index.emplace(a.tokens[t], static_cast<int>(b.words.size()));
            if (inserted) b.words.push_back(a.tokens[t]);
            b.word_rows[t][i] = it->second;
            b.targets[t][i] = tag_index(a.tags[t]);
            b.mask[t][i] = 1;
        }
    }
    return b;
}

const std::vector<int>& WordCache::segmentation(const std::string& word, const SubwordComposer& composer) {
    auto it = segments_.find(word);
    if (it == segments_.end()) it = segments_.emplace(word, composer.subword_ids(word)).first;
    return it->second;
}

const nn::RowVector& WordCache::fixed_vector(const std::string& word, const FixedNgramTable& table) {
    auto it = vectors_.find(word);
    if (it == vectors_.end()) it = vectors_.emplace(word, embed_word_fixed(word, table)).first;
    return it->second;
}

namespace {

// Embeds the batch's distinct words; returns the table Var and remaps each
// word index to its row (words with identical segmentations share a row).
nn::Var embed_batch_words(nn::Tape& tape, ParserModel& model, const Batch& batch, WordCache& cache,
                          std::vector<int>& row_of_word) {
    row_of_word.assign(batch.words.size(), 0);
    if (model.embedder().is_fixed()) {
        const auto& table = model.embedder().fixed();
        nn::Matrix m(static_cast<Eigen::Index>(batch.words.size()), table.dim());
        for (std::size_t w = 0; w < batch.words.size(); ++w) {
            m.row(static_cast<Eigen::Index>(w)) = cache.fixed_vector(batch.words[w], table);
            row_of_word[w] = static_cast<int>(w);
        }
        return tape.constant(std::move(m));
    }
    auto& composer = model.embedder().composer();
    std::map<std::vector<int>, int> distinct;
    for (const auto& word : batch.words) distinct.emplace(cache.segmentation(word, composer), 0);
    // Longest segmentations first, so padding collects in the bottom rows.
    std::vector<const std::vector<int>*> order;
    for (const auto& [seg, row] : distinct) order.push_back(&seg);
    std::stable_sort(order.begin(), order.end(),
                     [](const auto* a, const auto* b) { return a->size() > b->size(); });
    std::vector<std::vector<int>> segmented;
    for (const auto* seg : order) {
        distinct[*seg] = static_cast<int>(segmented.size());
        segmented.push_back(*seg);
    }
    for (std::size_t w = 0; w < batch.words.size(); ++w) {
        row_of_word[w] = distinct.at(cache.segmentation(batch.words[w], composer));
    }
    return compose_words(tape, composer, segmented);
}

}  // namespace

BatchForward forward_batch(nn::Tape& tape, ParserModel& model, const Batch& batch,
                           bool teacher_forcing, WordCache& cache) {
    const auto B = static_cast<Eigen::Index>(batch.size());
    const int H = model.config().hidden;
    const std::size_t T = batch.max_length();

    std::vector<int> row_of_word;
    nn::Var words = embed_batch_words(tape, model, batch, cache, row_of_word);

    const nn::LstmVars enc = nn::bind(tape, model.encoder);
    const nn::Var word_gates = nn::lstm_input_gates(words, enc);
    nn::Var state = tape.constant(nn::Matrix::Zero(B, 2 * H));
    std::vector<int> rows(static_cast<std::size_t>(B));
    for (std::size_t t = 0; t < T; ++t) {
        for (Eigen::Index b = 0; b < B; ++b) rows[b] = row_of_word[batch.word_rows[t][b]];
        state = nn::lstm_from_gates(nn::gather_rows(word_gates, rows), state, enc, batch.mask[t]);
    }

    const nn::LstmVars dec = nn::bind(tape, model.decoder);
    const nn::Var tag_gates = nn::lstm_input_gates(tape.parameter(model.tag_input), dec);
    nn::Var proj_w = tape.parameter(model.proj_w);
    nn::Var proj_b = tape.parameter(model.proj_b);

    BatchForward out;
    out.token_count = batch.token_count;
    std::vector<int> inputs(static_cast<std::size_t>(B), kBosIndex);
    for (std::size_t t = 0; t < T; ++t) {
        state = nn::lstm_from_gates(nn::gather_rows(tag_gates, inputs), state, dec);
        nn::Var logits = nn::linear(nn::lstm_hidden(state), proj_w, proj_b);
        nn::Var step_loss = nn::cross_entropy_sum(logits, batch.targets[t], batch.mask[t]);
        out.loss_sum = out.loss_sum.valid() ? nn::add(out.loss_sum, step_loss) : step_loss;

        std::vector<int> predicted(static_cast<std::size_t>(B));
        for (Eigen::Index b = 0; b < B; ++b) predicted[b] = argmax(logits.value(), b);
        inputs = teacher_forcing ? batch.targets[t] : predicted;
        out.predictions.push_back(std::move(predicted));
    }
    return out;
}

std::vector<std::vector<Tag>> tag_batched(const ParserModel& model, std::span<const TaggedAddress> corpus,
                                          std::size_t batch_size) {
    if (batch_size < 1) throw Error("tag_batched: batch_size must be >= 1");
    // A tape without gradients only reads the parameters.
    auto& m = const_cast<ParserModel&>(model);
    WordCache cache;
    std::vector<std::vector<Tag>> out;
    for (std::size_t i = 0; i < corpus.size(); i += batch_size) {
        const auto end = std::min(corpus.size(), i + batch_size);
        std::vector<std::size_t> index(end - i);
        std::iota(index.begin(), index.end(), i);
        std::stable_sort(index.begin(), index.end(), [&](std::size_t a, std::size_t b) {
            return corpus[a].tokens.size() > corpus[b].tokens.size();
        });
        std::vector<const TaggedAddress*> group;
        for (std::size_t j : index) group.push_back(&corpus[j]);
        const Batch batch = make_batch(group);
        nn::Tape tape(false);
        const auto f = forward_batch(tape, m, batch, false, cache);
        out.resize(end);
        for (std::size_t b = 0; b < batch.size(); ++b) {
            auto& tags = out[index[b]];
            for (int t = 0; t < batch.lengths[b]; ++t) tags.push_back(tag_from_index(f.predictions[t][b]));
        }
    }
    return out;
}

}  // namespace addrparse
