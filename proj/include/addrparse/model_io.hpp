#pragma once

#include <filesystem>
#include <iosfwd>

#include "addrparse/tagger.hpp"

namespace addrparse {

inline constexpr int kModelFormatVersion = 1;

// Layout:
//   "addrparse-model <version>\n"
//   one-line JSON header: variant, dims, seed, tag list, vocab_bytes, blocks
//   BPE vocabulary text (vocab_bytes bytes, composed variant only)
//   parameter blocks as little-endian float64, row-major, in header order
// The fixed variant stores its frozen n-gram table as the first block.
void write_model(const ParserModel& model, std::ostream& out);
ParserModel read_model(std::istream& in);

void save_model(const ParserModel& model, const std::filesystem::path& path);
// Throws VersionError, CorruptFile, or SchemaError (tag list mismatch).
ParserModel load_model(const std::filesystem::path& path);

}  // namespace addrparse
