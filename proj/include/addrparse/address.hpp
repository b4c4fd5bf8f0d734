#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace addrparse {

// The eight address components plus two control symbols. Bos is only ever a
// decoder input; Pad only appears inside padded training batches.
enum class Tag : std::uint8_t {
    StreetNumber = 0,
    StreetName,
    Unit,
    Municipality,
    Province,
    PostalCode,
    Orientation,
    GeneralDelivery,
    Bos,
    Pad,
};

inline constexpr int kNumTags = 8;
inline constexpr int kBosIndex = static_cast<int>(Tag::Bos);

inline constexpr std::array<Tag, kNumTags> kAllTags = {
    Tag::StreetNumber, Tag::StreetName,  Tag::Unit,        Tag::Municipality,
    Tag::Province,     Tag::PostalCode,  Tag::Orientation, Tag::GeneralDelivery,
};

constexpr int tag_index(Tag t) { return static_cast<int>(t); }
constexpr bool is_predictable(Tag t) { return tag_index(t) < kNumTags; }

std::string_view tag_name(Tag t);
// Case-sensitive; only the eight predictable tags are accepted.
std::optional<Tag> parse_tag(std::string_view name);
Tag tag_from_index(int index);

std::vector<std::string> tag_names();

struct TaggedAddress {
    std::string raw;
    std::vector<std::string> tokens;
    std::vector<Tag> tags;
    std::string country;

    bool operator==(const TaggedAddress&) const = default;
};

// Whitespace tokenization. Throws EmptyAddress when nothing is left.
std::vector<std::string> tokenize(std::string_view raw);

// Returns an empty string when the record is valid, otherwise a description of
// the first violated invariant.
std::string validate(const TaggedAddress& address);

// Builds a record from tokens/tags, setting raw to the space-joined tokens.
TaggedAddress make_address(std::vector<std::string> tokens, std::vector<Tag> tags,
                           std::string country);

struct FieldSpec {
    Tag tag;
    int min_tokens = 1;
    int max_tokens = 1;
    bool optional = false;
};

struct AddressPattern {
    int id = 0;
    std::vector<FieldSpec> field_order;

    bool contains(Tag t) const;
    // Position of t in field_order, or -1.
    int position(Tag t) const;
};

// The five component orders:
//   1  StreetNumber StreetName Municipality Province PostalCode
//   2  StreetName StreetNumber PostalCode Municipality Province
//   3  StreetNumber StreetName PostalCode Municipality
//   4  PostalCode Municipality StreetName StreetNumber
//   5  Province Municipality StreetName StreetNumber PostalCode
// Unit, Orientation and GeneralDelivery are optional fields slotted in around
// the street block.
const std::vector<AddressPattern>& builtin_patterns();
const AddressPattern& pattern_by_id(int id);

enum class Script { Latin, HangulLike, CyrillicLike };

std::string_view script_name(Script s);
std::optional<Script> parse_script(std::string_view name);

struct CountryProfile {
    std::string code;
    std::vector<int> pattern_ids;
    std::string lexicon_id;
    Script script = Script::Latin;
};

}  // namespace addrparse
