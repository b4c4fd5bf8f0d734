#pragma once

#include "addrparse/datagen.hpp"
#include "addrparse/tagger.hpp"

namespace addrparse::testing {

inline std::vector<TaggedAddress> tiny_corpus(int per_country = 3, std::vector<int> patterns = {1, 4}) {
    GeneratorConfig cfg;
    cfg.seed = 3;
    cfg.samples_per_country = per_country;
    cfg.lexicons["l"] = synthesize_lexicon("l", Script::Latin, 9, 8);
    cfg.countries = {{"AA", std::move(patterns), "l", Script::Latin}};
    return generate(cfg);
}

inline ModelConfig tiny_config(Variant v, std::uint64_t seed = 11) {
    ModelConfig mc;
    mc.variant = v;
    mc.subword_dim = 4;
    mc.composer_hidden = 5;
    mc.fixed_word_dim = 5;
    mc.hidden = 6;
    mc.hash_buckets = 32;
    mc.bpe_merges = 20;
    mc.seed = seed;
    return mc;
}

}  // namespace addrparse::testing
