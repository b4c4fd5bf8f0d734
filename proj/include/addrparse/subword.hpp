#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace addrparse {

// Every ASCII decimal digit becomes '0'; everything else is kept.
std::string normalize_digits(std::string_view word);

inline constexpr std::string_view kEndOfWord = "</w>";
inline constexpr std::string_view kUnknownSymbol = "<unk>";

// Learned merge list plus the dense symbol table it induces. Symbol 0 is the
// unknown symbol, followed by the sorted initial characters and the end-of-word
// marker, then one entry per new merged symbol in merge order.
class BpeVocab {
public:
    static constexpr int kUnkId = 0;
    static constexpr int kFormatVersion = 1;

    BpeVocab();

    const std::vector<std::pair<std::string, std::string>>& merges() const { return merges_; }
    const std::vector<std::string>& symbols() const { return symbols_; }
    std::size_t size() const { return symbols_.size(); }
    std::size_t num_merges() const { return merges_.size(); }

    // kUnkId for unknown symbols.
    int id(std::string_view symbol) const;
    const std::string& symbol(int id) const { return symbols_.at(static_cast<std::size_t>(id)); }

    // Subword strings of word after applying every merge in learned order. The
    // last one carries the end-of-word marker. Characters missing from the
    // table are passed through as single symbols.
    std::vector<std::string> segment_symbols(std::string_view word) const;
    // Same segmentation mapped to ids; unknown symbols become kUnkId.
    std::vector<int> segment(std::string_view word) const;

    // Text format: header "bpe-vocab <version> <num_merges> <marker>", one
    // "left right" line per merge, "symbols <count>", then one symbol per line.
    void write(std::ostream& out) const;
    std::string to_string() const;
    static BpeVocab read(std::istream& in);
    static BpeVocab from_string(const std::string& text);
    void save(const std::filesystem::path& path) const;
    static BpeVocab load(const std::filesystem::path& path);

    bool operator==(const BpeVocab& other) const {
        return merges_ == other.merges_ && symbols_ == other.symbols_;
    }

private:
    friend BpeVocab learn_bpe(std::span<const std::string> words, int num_merges);

    void add_symbol(const std::string& s);
    void add_merge(std::pair<std::string, std::string> merge);

    std::vector<std::pair<std::string, std::string>> merges_;
    std::vector<std::string> symbols_;
    std::unordered_map<std::string, int> ids_;
    std::unordered_map<std::string, int> merge_rank_;
};

// Greedy BPE: each step merges the most frequent adjacent symbol pair (ties go
// to the lexicographically smallest pair). Stops early once no pair occurs
// at least twice. Words are expected to be digit-normalized already.
BpeVocab learn_bpe(std::span<const std::string> words, int num_merges);

// Concatenates subwords and strips the trailing end-of-word marker.
std::string detokenize(const std::vector<std::string>& subwords);

struct NgramSpec {
    int n = 2;
    std::size_t hash_buckets = 4096;
    std::uint64_t seed = 0;
};

// Spaces are dropped, then every run of n consecutive characters is returned
// in order. Words shorter than n yield nothing.
std::vector<std::string> char_ngrams(std::string_view word, const NgramSpec& spec);

// FNV-1a over the gram's bytes, salted with the spec seed, reduced modulo the
// bucket count.
std::size_t ngram_bucket(std::string_view gram, const NgramSpec& spec);

}  // namespace addrparse
