#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "addrparse/address.hpp"

namespace addrparse {

// JSON Lines corpus: {"raw": ..., "tokens": [...], "tags": [...], "country": "XX"}
TaggedAddress parse_corpus_line(std::string_view line, std::size_t line_number);
std::string format_corpus_line(const TaggedAddress& address);

// Throws SchemaError carrying the 1-based line of the first bad record.
std::vector<TaggedAddress> load_corpus(const std::filesystem::path& path);
void save_corpus(std::span<const TaggedAddress> corpus, const std::filesystem::path& path);

}  // namespace addrparse
