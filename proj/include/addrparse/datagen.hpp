#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "addrparse/address.hpp"
#include "addrparse/rng.hpp"

namespace addrparse {

// Word pools a synthetic country draws from. Multi-word entries (general
// delivery phrases) are split on spaces when emitted.
struct Lexicon {
    std::string id;
    Script script = Script::Latin;
    std::vector<std::string> street_words;
    std::vector<std::string> municipality_words;
    std::vector<std::string> province_words;
    std::vector<std::string> unit_designators;
    std::vector<std::string> orientations;
    std::vector<std::string> general_delivery;
    // 'A' draws a letter from postal_letters, '0' a digit, ' ' starts a new
    // token, anything else is copied.
    std::string postal_format = "A0A 0A0";
    std::vector<std::string> postal_letters;
    int street_number_min = 1;
    int street_number_max = 9999;
    int unit_number_min = 1;
    int unit_number_max = 999;
};

// Builds a lexicon whose words are random strings over the script's alphabet.
// Lexicons of the same script share characters but not words.
Lexicon synthesize_lexicon(std::string id, Script script, std::uint64_t seed, int pool_size = 60);

struct GeneratorConfig {
    std::uint64_t seed = 0;
    std::vector<CountryProfile> countries;
    int samples_per_country = 1;
    std::map<std::string, Lexicon> lexicons;
    double optional_probability = 0.3;
};

// Throws ConfigError naming the offending field.
void check_config(const GeneratorConfig& config);

GeneratorConfig parse_generator_config(const nlohmann::json& j);
GeneratorConfig load_generator_config(const std::filesystem::path& path);

// One record of the given pattern; optional fields are kept with probability
// optional_probability.
TaggedAddress generate_address(const CountryProfile& country, const Lexicon& lexicon,
                               const AddressPattern& pattern, double optional_probability,
                               Rng& rng);

// Country-major, then record index. Each record uses its own derived seed, so
// the output does not depend on evaluation order.
std::vector<TaggedAddress> generate(const GeneratorConfig& config);

// True if the tag sequence is a run of contiguous blocks following the
// pattern's field order with every mandatory field present.
bool matches_pattern(const TaggedAddress& address, const AddressPattern& pattern);

// Moves each tag block to its slot in target's field order. Tokens keep their
// relative order inside a block.
TaggedAddress reorder_to_pattern(const TaggedAddress& address, const AddressPattern& target);

// Seeded shuffle; the first ceil(train_fraction * n) records go to training.
std::pair<std::vector<TaggedAddress>, std::vector<TaggedAddress>> split(
    std::span<const TaggedAddress> corpus, double train_fraction, std::uint64_t seed);

}  // namespace addrparse
