#include "addrparse/address.hpp"

#include <algorithm>
#include <cctype>

#include "addrparse/error.hpp"
#include "addrparse/text.hpp"

namespace addrparse {

namespace {

constexpr std::array<std::string_view, 10> kTagNames = {
    "StreetNumber", "StreetName",  "Unit",            "Municipality", "Province",
    "PostalCode",   "Orientation", "GeneralDelivery", "BOS",          "PAD",
};

bool is_space(char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f';
}

}  // namespace

std::string_view tag_name(Tag t) { return kTagNames[static_cast<std::size_t>(t)]; }

std::optional<Tag> parse_tag(std::string_view name) {
    for (int i = 0; i < kNumTags; ++i) {
        if (kTagNames[i] == name) return static_cast<Tag>(i);
    }
    return std::nullopt;
}

Tag tag_from_index(int index) {
    if (index < 0 || index >= kNumTags) {
        throw Error("tag index out of range: " + std::to_string(index));
    }
    return static_cast<Tag>(index);
}

std::vector<std::string> tag_names() {
    std::vector<std::string> out;
    for (Tag t : kAllTags) out.emplace_back(tag_name(t));
    return out;
}

std::vector<std::string> tokenize(std::string_view raw) {
    std::vector<std::string> tokens;
    std::size_t i = 0;
    while (i < raw.size()) {
        while (i < raw.size() && is_space(raw[i])) ++i;
        const std::size_t start = i;
        while (i < raw.size() && !is_space(raw[i])) ++i;
        if (i > start) tokens.emplace_back(raw.substr(start, i - start));
    }
    if (tokens.empty()) throw EmptyAddress();
    return tokens;
}

std::string validate(const TaggedAddress& address) {
    if (address.tokens.empty()) return "no tokens";
    if (address.tokens.size() != address.tags.size()) {
        return "length mismatch: " + std::to_string(address.tokens.size()) + " tokens, " +
               std::to_string(address.tags.size()) + " tags";
    }
    for (Tag t : address.tags) {
        if (!is_predictable(t)) return "control tag " + std::string(tag_name(t)) + " in record";
    }
    std::vector<std::string> expected;
    try {
        expected = tokenize(address.raw);
    } catch (const EmptyAddress&) {
        return "raw is empty";
    }
    if (expected != address.tokens) return "tokens do not match the tokenized raw text";
    return {};
}

TaggedAddress make_address(std::vector<std::string> tokens, std::vector<Tag> tags,
                           std::string country) {
    TaggedAddress a;
    a.raw = join(tokens, " ");
    a.tokens = std::move(tokens);
    a.tags = std::move(tags);
    a.country = std::move(country);
    return a;
}

bool AddressPattern::contains(Tag t) const { return position(t) >= 0; }

int AddressPattern::position(Tag t) const {
    for (std::size_t i = 0; i < field_order.size(); ++i) {
        if (field_order[i].tag == t) return static_cast<int>(i);
    }
    return -1;
}

const std::vector<AddressPattern>& builtin_patterns() {
    static const std::vector<AddressPattern> patterns = [] {
        const FieldSpec number{Tag::StreetNumber, 1, 1, false};
        const FieldSpec street{Tag::StreetName, 1, 3, false};
        const FieldSpec unit{Tag::Unit, 2, 2, true};
        const FieldSpec municipality{Tag::Municipality, 1, 2, false};
        const FieldSpec province{Tag::Province, 1, 2, false};
        const FieldSpec postal{Tag::PostalCode, 1, 2, false};
        const FieldSpec orientation{Tag::Orientation, 1, 1, true};
        const FieldSpec delivery{Tag::GeneralDelivery, 1, 3, true};
        return std::vector<AddressPattern>{
            {1, {number, street, orientation, unit, municipality, province, postal, delivery}},
            {2, {street, orientation, number, unit, postal, municipality, province, delivery}},
            {3, {number, street, orientation, unit, postal, municipality, delivery}},
            {4, {postal, municipality, street, orientation, number, unit, delivery}},
            {5, {province, municipality, street, orientation, number, unit, postal, delivery}},
        };
    }();
    return patterns;
}

const AddressPattern& pattern_by_id(int id) {
    const auto& all = builtin_patterns();
    if (id < 1 || id > static_cast<int>(all.size())) {
        throw ConfigError("unknown address pattern id " + std::to_string(id));
    }
    return all[static_cast<std::size_t>(id - 1)];
}

std::string_view script_name(Script s) {
    switch (s) {
        case Script::Latin: return "latin";
        case Script::HangulLike: return "hangul-like";
        case Script::CyrillicLike: return "cyrillic-like";
    }
    return "latin";
}

std::optional<Script> parse_script(std::string_view name) {
    for (Script s : {Script::Latin, Script::HangulLike, Script::CyrillicLike}) {
        if (script_name(s) == name) return s;
    }
    return std::nullopt;
}

}  // namespace addrparse
