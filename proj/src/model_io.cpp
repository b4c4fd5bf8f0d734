#include "addrparse/model_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "addrparse/error.hpp"

namespace addrparse {

using nlohmann::ordered_json;

namespace {

constexpr std::string_view kMagic = "addrparse-model";

struct Block {
    std::string name;
    const nn::Matrix* value;
};

std::vector<Block> blocks_of(const ParserModel& model) {
    std::vector<Block> out;
    if (model.embedder().is_fixed()) out.push_back({"fixed.vectors", &model.embedder().fixed().vectors});
    for (const nn::Parameter* p : model.parameters()) out.push_back({p->name, &p->value});
    return out;
}

void write_doubles(std::ostream& out, const nn::Matrix& m) {
    static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);
    for (Eigen::Index i = 0; i < m.size(); ++i) {
        std::uint64_t bits;
        std::memcpy(&bits, m.data() + i, sizeof bits);
        if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
        out.write(reinterpret_cast<const char*>(&bits), sizeof bits);
    }
}

void read_doubles(std::istream& in, nn::Matrix& m, const std::string& name) {
    for (Eigen::Index i = 0; i < m.size(); ++i) {
        std::uint64_t bits;
        if (!in.read(reinterpret_cast<char*>(&bits), sizeof bits)) {
            throw CorruptFile("model: truncated parameter block " + name);
        }
        if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
        std::memcpy(m.data() + i, &bits, sizeof bits);
    }
}

ordered_json header_of(const ParserModel& model, std::size_t vocab_bytes) {
    const auto& c = model.config();
    ordered_json h;
    h["variant"] = std::string(variant_name(c.variant));
    h["dims"] = {{"subword_dim", c.subword_dim},     {"composer_hidden", c.composer_hidden},
                 {"fixed_word_dim", c.fixed_word_dim}, {"hidden", c.hidden},
                 {"ngram_n", c.ngram_n},             {"hash_buckets", c.hash_buckets},
                 {"bpe_merges", c.bpe_merges}};
    h["seed"] = c.seed;
    h["tags"] = tag_names();
    h["vocab_bytes"] = vocab_bytes;
    auto& blocks = h["blocks"] = ordered_json::array();
    for (const auto& b : blocks_of(model)) {
        blocks.push_back({{"name", b.name}, {"rows", b.value->rows()}, {"cols", b.value->cols()}});
    }
    return h;
}

}  // namespace

void write_model(const ParserModel& model, std::ostream& out) {
    const std::string vocab = model.embedder().is_fixed() ? std::string() : model.embedder().composer().vocab.to_string();
    out << kMagic << ' ' << kModelFormatVersion << '\n';
    out << header_of(model, vocab.size()).dump() << '\n';
    out.write(vocab.data(), static_cast<std::streamsize>(vocab.size()));
    for (const auto& b : blocks_of(model)) write_doubles(out, *b.value);
}

ParserModel read_model(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw CorruptFile("model: empty file");
    std::istringstream first(line);
    std::string magic;
    int version = -1;
    if (!(first >> magic >> version) || magic != kMagic) throw CorruptFile("model: bad magic line");
    if (version != kModelFormatVersion) {
        throw VersionError("model: format version " + std::to_string(version) + ", expected " +
                           std::to_string(kModelFormatVersion));
    }
    if (!std::getline(in, line)) throw CorruptFile("model: missing header");
    ordered_json h;
    ModelConfig c;
    std::size_t vocab_bytes = 0;
    try {
        h = ordered_json::parse(line);
        if (h.at("tags").get<std::vector<std::string>>() != tag_names()) {
            throw SchemaError("model: tag set differs from this build's tags");
        }
        c.variant = parse_variant(h.at("variant").get<std::string>());
        const auto& d = h.at("dims");
        c.subword_dim = d.at("subword_dim").get<int>();
        c.composer_hidden = d.at("composer_hidden").get<int>();
        c.fixed_word_dim = d.at("fixed_word_dim").get<int>();
        c.hidden = d.at("hidden").get<int>();
        c.ngram_n = d.at("ngram_n").get<int>();
        c.hash_buckets = d.at("hash_buckets").get<std::size_t>();
        c.bpe_merges = d.at("bpe_merges").get<int>();
        c.seed = h.at("seed").get<std::uint64_t>();
        vocab_bytes = h.at("vocab_bytes").get<std::size_t>();
    } catch (const ordered_json::exception& e) {
        throw CorruptFile(std::string("model: bad header: ") + e.what());
    } catch (const SchemaError&) {
        throw;
    } catch (const Error& e) {
        throw CorruptFile(std::string("model: bad header: ") + e.what());
    }

    std::string vocab_text(vocab_bytes, '\0');
    if (vocab_bytes && !in.read(vocab_text.data(), static_cast<std::streamsize>(vocab_bytes))) {
        throw CorruptFile("model: truncated vocabulary");
    }

    std::optional<ParserModel> model;
    try {
        if (c.variant == Variant::Fixed) {
            FixedNgramTable t;
            t.spec = NgramSpec{c.ngram_n, c.hash_buckets, c.seed};
            t.vectors = nn::Matrix::Zero(static_cast<Eigen::Index>(c.hash_buckets), c.fixed_word_dim);
            model.emplace(c, WordEmbedder(std::move(t)));
        } else {
            model.emplace(c, WordEmbedder(SubwordComposer(BpeVocab::from_string(vocab_text), c.subword_dim,
                                                          c.composer_hidden)));
        }
    } catch (const VersionError&) {
        throw;
    } catch (const CorruptFile&) {
        throw;
    } catch (const Error& e) {
        throw CorruptFile(std::string("model: inconsistent header: ") + e.what());
    }

    std::vector<nn::Matrix*> targets;
    if (model->embedder().is_fixed()) {
        targets.push_back(&model->embedder().fixed().vectors);
    }
    for (nn::Parameter* p : model->parameters()) targets.push_back(&p->value);
    const auto& blocks = h.at("blocks");
    if (!blocks.is_array() || blocks.size() != targets.size()) {
        throw CorruptFile("model: block list does not match the architecture");
    }
    const auto expected = blocks_of(*model);
    for (std::size_t i = 0; i < targets.size(); ++i) {
        const auto& b = blocks[i];
        if (b.value("name", "") != expected[i].name || b.value("rows", -1) != targets[i]->rows() ||
            b.value("cols", -1) != targets[i]->cols()) {
            throw CorruptFile("model: unexpected block #" + std::to_string(i));
        }
        read_doubles(in, *targets[i], expected[i].name);
    }
    if (in.peek() != std::char_traits<char>::eof()) throw CorruptFile("model: trailing bytes");
    return std::move(*model);
}

void save_model(const ParserModel& model, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write model " + path.string());
    write_model(model, out);
    if (!out) throw IoError("write failed for " + path.string());
}

ParserModel load_model(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open model " + path.string());
    return read_model(in);
}

}  // namespace addrparse
