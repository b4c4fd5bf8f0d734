#include "addrparse/datagen.hpp"

#include <cmath>
#include <fstream>
#include <set>

#include "addrparse/error.hpp"
#include "addrparse/text.hpp"

namespace addrparse {

using nlohmann::json;

namespace {

std::string encode_utf8(char32_t cp) {
    std::string s;
    if (cp < 0x80) {
        s += static_cast<char>(cp);
    } else if (cp < 0x800) {
        s += static_cast<char>(0xC0 | (cp >> 6));
        s += static_cast<char>(0x80 | (cp & 0x3F));
    } else {
        s += static_cast<char>(0xE0 | (cp >> 12));
        s += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
        s += static_cast<char>(0x80 | (cp & 0x3F));
    }
    return s;
}

struct Alphabet {
    std::vector<std::string> lower;
    std::vector<std::string> upper;
};

Alphabet alphabet_for(Script script) {
    Alphabet a;
    switch (script) {
        case Script::Latin:
            for (char32_t c = U'a'; c <= U'z'; ++c) {
                a.lower.push_back(encode_utf8(c));
                a.upper.push_back(encode_utf8(c - 32));
            }
            break;
        case Script::CyrillicLike:
            for (char32_t c = 0x0430; c <= 0x044F; ++c) {
                a.lower.push_back(encode_utf8(c));
                a.upper.push_back(encode_utf8(c - 0x20));
            }
            break;
        case Script::HangulLike:
            // Syllable blocks without a final consonant; the script has no case.
            for (char32_t k = 0; k < 40; ++k) a.lower.push_back(encode_utf8(0xAC00 + 28 * k));
            a.upper = a.lower;
            break;
    }
    return a;
}

std::string random_word(const Alphabet& a, Rng& rng, int min_len, int max_len, bool capitalize) {
    const auto len = rng.range(min_len, max_len);
    std::string w;
    for (long long i = 0; i < len; ++i) {
        const auto& pool = (capitalize && i == 0) ? a.upper : a.lower;
        w += pool[rng.index(pool.size())];
    }
    return w;
}

std::vector<std::string> word_pool(const Alphabet& a, Rng& rng, int size, int min_len, int max_len,
                                   bool capitalize, std::set<std::string>& used) {
    std::vector<std::string> out;
    while (static_cast<int>(out.size()) < size) {
        auto w = random_word(a, rng, min_len, max_len, capitalize);
        if (used.insert(w).second) out.push_back(std::move(w));
    }
    return out;
}

const std::string& pick(const std::vector<std::string>& pool, Rng& rng) {
    return pool[rng.index(pool.size())];
}

void split_words(const std::string& phrase, std::vector<std::string>& out) {
    for (auto& w : tokenize(phrase)) out.push_back(std::move(w));
}

std::vector<std::string> postal_code(const Lexicon& lex, Rng& rng) {
    std::vector<std::string> tokens;
    std::string current;
    for (char c : lex.postal_format) {
        if (c == ' ') {
            if (!current.empty()) tokens.push_back(std::move(current));
            current.clear();
        } else if (c == 'A') {
            current += pick(lex.postal_letters, rng);
        } else if (c == '0') {
            current += static_cast<char>('0' + rng.index(10));
        } else {
            current += c;
        }
    }
    if (!current.empty()) tokens.push_back(std::move(current));
    return tokens;
}

std::vector<std::string> field_tokens(const FieldSpec& field, const Lexicon& lex, Rng& rng) {
    std::vector<std::string> out;
    const auto count = static_cast<int>(rng.range(field.min_tokens, field.max_tokens));
    switch (field.tag) {
        case Tag::StreetNumber:
            out.push_back(std::to_string(rng.range(lex.street_number_min, lex.street_number_max)));
            break;
        case Tag::StreetName:
            for (int i = 0; i < count; ++i) out.push_back(pick(lex.street_words, rng));
            break;
        case Tag::Unit:
            out.push_back(pick(lex.unit_designators, rng));
            out.push_back(std::to_string(rng.range(lex.unit_number_min, lex.unit_number_max)));
            break;
        case Tag::Municipality:
            for (int i = 0; i < count; ++i) out.push_back(pick(lex.municipality_words, rng));
            break;
        case Tag::Province:
            for (int i = 0; i < count; ++i) out.push_back(pick(lex.province_words, rng));
            break;
        case Tag::PostalCode:
            out = postal_code(lex, rng);
            break;
        case Tag::Orientation:
            out.push_back(pick(lex.orientations, rng));
            break;
        case Tag::GeneralDelivery:
            split_words(pick(lex.general_delivery, rng), out);
            break;
        case Tag::Bos:
        case Tag::Pad:
            throw Error("control tag in pattern");
    }
    return out;
}

bool postal_format_has_tokens(const std::string& fmt) {
    return fmt.find_first_not_of(' ') != std::string::npos;
}

}  // namespace

Lexicon synthesize_lexicon(std::string id, Script script, std::uint64_t seed, int pool_size) {
    const Alphabet a = alphabet_for(script);
    Rng rng(derive_seed(seed, 0x1e71c0));
    std::set<std::string> used;
    Lexicon lex;
    lex.id = std::move(id);
    lex.script = script;
    lex.street_words = word_pool(a, rng, pool_size, 3, 9, true, used);
    lex.municipality_words = word_pool(a, rng, pool_size, 4, 9, true, used);
    lex.province_words = word_pool(a, rng, std::max(4, pool_size / 4), 4, 9, true, used);
    lex.unit_designators = word_pool(a, rng, 3, 2, 4, false, used);
    lex.orientations = word_pool(a, rng, 4, 1, 5, true, used);
    for (int i = 0; i < 3; ++i) {
        const auto words = word_pool(a, rng, static_cast<int>(rng.range(1, 3)), 3, 8, false, used);
        lex.general_delivery.push_back(join(words, " "));
    }
    lex.postal_letters = a.upper;
    return lex;
}

void check_config(const GeneratorConfig& config) {
    if (config.samples_per_country < 1) throw ConfigError("samples_per_country must be >= 1");
    if (config.countries.empty()) throw ConfigError("countries: at least one country required");
    if (config.optional_probability < 0.0 || config.optional_probability > 1.0) {
        throw ConfigError("optional_probability must lie in [0, 1]");
    }
    for (const auto& c : config.countries) {
        if (c.code.empty()) throw ConfigError("countries: empty country code");
        if (c.pattern_ids.empty()) throw ConfigError("countries." + c.code + ".patterns: empty");
        for (int id : c.pattern_ids) {
            if (id < 1 || id > 5) {
                throw ConfigError("countries." + c.code + ".patterns: unknown id " + std::to_string(id));
            }
        }
        auto it = config.lexicons.find(c.lexicon_id);
        if (it == config.lexicons.end()) {
            throw ConfigError("countries." + c.code + ".lexicon: unknown lexicon '" + c.lexicon_id + "'");
        }
        const Lexicon& lex = it->second;
        const std::string where = "lexicons." + lex.id + ".";
        for (int id : c.pattern_ids) {
            for (const auto& field : pattern_by_id(id).field_order) {
                const std::vector<std::string>* pool = nullptr;
                const char* name = "";
                switch (field.tag) {
                    case Tag::StreetName: pool = &lex.street_words; name = "street_words"; break;
                    case Tag::Municipality: pool = &lex.municipality_words; name = "municipality_words"; break;
                    case Tag::Province: pool = &lex.province_words; name = "province_words"; break;
                    case Tag::Unit: pool = &lex.unit_designators; name = "unit_designators"; break;
                    case Tag::Orientation: pool = &lex.orientations; name = "orientations"; break;
                    case Tag::GeneralDelivery: pool = &lex.general_delivery; name = "general_delivery"; break;
                    case Tag::PostalCode:
                        if (!postal_format_has_tokens(lex.postal_format)) {
                            throw ConfigError(where + "postal_format: empty");
                        }
                        if (lex.postal_format.find('A') != std::string::npos && lex.postal_letters.empty()) {
                            throw ConfigError(where + "postal_letters: empty");
                        }
                        break;
                    case Tag::StreetNumber:
                        if (lex.street_number_min > lex.street_number_max || lex.street_number_min < 0) {
                            throw ConfigError(where + "street_number range invalid");
                        }
                        break;
                    default: break;
                }
                if (pool && pool->empty()) throw ConfigError(where + name + ": empty pool");
                if (pool && field.tag == Tag::GeneralDelivery) {
                    for (const auto& phrase : *pool) {
                        if (phrase.find_first_not_of(" \t") == std::string::npos) {
                            throw ConfigError(where + name + ": blank phrase");
                        }
                    }
                }
            }
        }
    }
}

namespace {

template <typename T>
T required(const json& j, const std::string& key, const std::string& where) {
    if (!j.contains(key)) throw ConfigError(where + key + ": missing");
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError(where + key + ": wrong type");
    }
}

template <typename T>
T optional_field(const json& j, const std::string& key, T fallback, const std::string& where) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError(where + key + ": wrong type");
    }
}

Lexicon parse_lexicon(const std::string& id, const json& j) {
    const std::string where = "lexicons." + id + ".";
    if (!j.is_object()) throw ConfigError(where + ": must be an object");
    const auto script_str = optional_field<std::string>(j, "script", "latin", where);
    const auto script = parse_script(script_str);
    if (!script) throw ConfigError(where + "script: unknown script '" + script_str + "'");

    Lexicon lex;
    if (j.contains("synthetic_seed")) {
        lex = synthesize_lexicon(id, *script, required<std::uint64_t>(j, "synthetic_seed", where),
                                 optional_field<int>(j, "pool_size", 60, where));
    } else {
        lex.id = id;
        lex.script = *script;
    }
    auto pool = [&](const char* key, std::vector<std::string>& dst) {
        if (j.contains(key)) dst = required<std::vector<std::string>>(j, key, where);
    };
    pool("street_words", lex.street_words);
    pool("municipality_words", lex.municipality_words);
    pool("province_words", lex.province_words);
    pool("unit_designators", lex.unit_designators);
    pool("orientations", lex.orientations);
    pool("general_delivery", lex.general_delivery);
    pool("postal_letters", lex.postal_letters);
    if (lex.postal_letters.empty()) {
        for (char c = 'A'; c <= 'Z'; ++c) lex.postal_letters.emplace_back(1, c);
    }
    lex.postal_format = optional_field<std::string>(j, "postal_format", lex.postal_format, where);
    lex.street_number_min = optional_field<int>(j, "street_number_min", lex.street_number_min, where);
    lex.street_number_max = optional_field<int>(j, "street_number_max", lex.street_number_max, where);
    return lex;
}

}  // namespace

GeneratorConfig parse_generator_config(const json& j) {
    if (!j.is_object()) throw ConfigError("config: top level must be an object");
    GeneratorConfig cfg;
    cfg.seed = required<std::uint64_t>(j, "seed", "");
    cfg.samples_per_country = required<int>(j, "samples_per_country", "");
    cfg.optional_probability = optional_field<double>(j, "optional_probability", 0.3, "");
    if (!j.contains("lexicons") || !j.at("lexicons").is_object()) {
        throw ConfigError("lexicons: missing or not an object");
    }
    for (const auto& [id, body] : j.at("lexicons").items()) cfg.lexicons[id] = parse_lexicon(id, body);
    if (!j.contains("countries") || !j.at("countries").is_array()) {
        throw ConfigError("countries: missing or not an array");
    }
    for (const auto& c : j.at("countries")) {
        CountryProfile p;
        p.code = required<std::string>(c, "code", "countries[].");
        const std::string where = "countries." + p.code + ".";
        p.pattern_ids = required<std::vector<int>>(c, "patterns", where);
        p.lexicon_id = required<std::string>(c, "lexicon", where);
        if (auto it = cfg.lexicons.find(p.lexicon_id); it != cfg.lexicons.end()) {
            p.script = it->second.script;
        }
        cfg.countries.push_back(std::move(p));
    }
    check_config(cfg);
    return cfg;
}

GeneratorConfig load_generator_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config " + path.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("config " + path.string() + ": " + e.what());
    }
    return parse_generator_config(j);
}

TaggedAddress generate_address(const CountryProfile& country, const Lexicon& lexicon,
                               const AddressPattern& pattern, double optional_probability,
                               Rng& rng) {
    std::vector<std::string> tokens;
    std::vector<Tag> tags;
    for (const auto& field : pattern.field_order) {
        if (field.optional && !rng.bernoulli(optional_probability)) continue;
        for (auto& tok : field_tokens(field, lexicon, rng)) {
            tokens.push_back(std::move(tok));
            tags.push_back(field.tag);
        }
    }
    return make_address(std::move(tokens), std::move(tags), country.code);
}

std::vector<TaggedAddress> generate(const GeneratorConfig& config) {
    check_config(config);
    std::vector<TaggedAddress> out;
    out.reserve(config.countries.size() * static_cast<std::size_t>(config.samples_per_country));
    for (std::size_t ci = 0; ci < config.countries.size(); ++ci) {
        const auto& country = config.countries[ci];
        const auto& lexicon = config.lexicons.at(country.lexicon_id);
        for (int i = 0; i < config.samples_per_country; ++i) {
            Rng rng(derive_seed(config.seed, ci, static_cast<std::uint64_t>(i)));
            const int pid = country.pattern_ids[rng.index(country.pattern_ids.size())];
            out.push_back(generate_address(country, lexicon, pattern_by_id(pid),
                                           config.optional_probability, rng));
        }
    }
    return out;
}

bool matches_pattern(const TaggedAddress& address, const AddressPattern& pattern) {
    std::size_t i = 0;
    for (const auto& field : pattern.field_order) {
        std::size_t run = 0;
        while (i < address.tags.size() && address.tags[i] == field.tag) {
            ++i;
            ++run;
        }
        if (run == 0 && !field.optional) return false;
    }
    return i == address.tags.size();
}

TaggedAddress reorder_to_pattern(const TaggedAddress& address, const AddressPattern& target) {
    for (Tag t : address.tags) {
        if (!target.contains(t)) {
            throw IncompatiblePattern("tag " + std::string(tag_name(t)) + " has no slot in pattern " +
                                      std::to_string(target.id));
        }
    }
    std::vector<std::string> tokens;
    std::vector<Tag> tags;
    for (const auto& field : target.field_order) {
        for (std::size_t i = 0; i < address.tags.size(); ++i) {
            if (address.tags[i] == field.tag) {
                tokens.push_back(address.tokens[i]);
                tags.push_back(field.tag);
            }
        }
    }
    return make_address(std::move(tokens), std::move(tags), address.country);
}

std::pair<std::vector<TaggedAddress>, std::vector<TaggedAddress>> split(
    std::span<const TaggedAddress> corpus, double train_fraction, std::uint64_t seed) {
    if (corpus.empty()) throw Error("cannot split an empty corpus");
    if (train_fraction < 0.0 || train_fraction > 1.0) throw Error("train_fraction must lie in [0, 1]");
    std::vector<std::size_t> order(corpus.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng rng(derive_seed(seed, 0x5b117));
    rng.shuffle(order);
    const auto n_train = static_cast<std::size_t>(
        std::ceil(train_fraction * static_cast<double>(corpus.size()) - 1e-9));
    std::pair<std::vector<TaggedAddress>, std::vector<TaggedAddress>> out;
    for (std::size_t i = 0; i < order.size(); ++i) {
        (i < n_train ? out.first : out.second).push_back(corpus[order[i]]);
    }
    return out;
}

}  // namespace addrparse
