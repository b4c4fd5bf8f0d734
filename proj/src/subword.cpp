#include "addrparse/subword.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "addrparse/error.hpp"
#include "addrparse/text.hpp"

namespace addrparse {

std::string normalize_digits(std::string_view word) {
    std::string out(word);
    for (char& c : out) {
        if (c >= '0' && c <= '9') c = '0';
    }
    return out;
}

BpeVocab::BpeVocab() { add_symbol(std::string(kUnknownSymbol)); }

void BpeVocab::add_symbol(const std::string& s) {
    if (ids_.emplace(s, static_cast<int>(symbols_.size())).second) symbols_.push_back(s);
}

int BpeVocab::id(std::string_view symbol) const {
    auto it = ids_.find(std::string(symbol));
    return it == ids_.end() ? kUnkId : it->second;
}

namespace {

std::vector<std::string> initial_symbols(std::string_view word) {
    auto chars = utf8_chars(word);
    chars.emplace_back(kEndOfWord);
    return chars;
}

// Merges every non-overlapping occurrence of (left, right), scanning left to
// right.
void apply_merge(std::vector<std::string>& seq, const std::string& left, const std::string& right) {
    if (seq.size() < 2) return;
    std::vector<std::string> out;
    out.reserve(seq.size());
    std::size_t i = 0;
    while (i < seq.size()) {
        if (i + 1 < seq.size() && seq[i] == left && seq[i + 1] == right) {
            out.push_back(seq[i] + seq[i + 1]);
            i += 2;
        } else {
            out.push_back(std::move(seq[i]));
            ++i;
        }
    }
    seq = std::move(out);
}

std::string pair_key(const std::string& left, const std::string& right) {
    std::string key;
    key.reserve(left.size() + right.size() + 1);
    key += left;
    key += '\0';
    key += right;
    return key;
}

}  // namespace

void BpeVocab::add_merge(std::pair<std::string, std::string> merge) {
    merge_rank_.emplace(pair_key(merge.first, merge.second), static_cast<int>(merges_.size()));
    merges_.push_back(std::move(merge));
}

// Applying the lowest-ranked pair present until none is left gives the same
// result as applying the whole merge list in order.
std::vector<std::string> BpeVocab::segment_symbols(std::string_view word) const {
    auto seq = initial_symbols(word);
    while (seq.size() > 1) {
        int best = -1;
        for (std::size_t i = 0; i + 1 < seq.size(); ++i) {
            const auto it = merge_rank_.find(pair_key(seq[i], seq[i + 1]));
            if (it != merge_rank_.end() && (best < 0 || it->second < best)) best = it->second;
        }
        if (best < 0) break;
        const auto& [left, right] = merges_[static_cast<std::size_t>(best)];
        apply_merge(seq, left, right);
    }
    return seq;
}

std::vector<int> BpeVocab::segment(std::string_view word) const {
    std::vector<int> out;
    for (const auto& s : segment_symbols(word)) out.push_back(id(s));
    return out;
}

BpeVocab learn_bpe(std::span<const std::string> words, int num_merges) {
    if (words.empty()) throw Error("learn_bpe: empty corpus");
    if (num_merges < 0) throw Error("learn_bpe: num_merges must be >= 0");

    std::map<std::string, long long> freq;
    for (const auto& w : words) {
        if (!w.empty()) ++freq[w];
    }
    struct Entry {
        std::vector<std::string> seq;
        long long count;
    };
    std::vector<Entry> entries;
    std::set<std::string> alphabet;
    for (const auto& [w, c] : freq) {
        Entry e{initial_symbols(w), c};
        for (std::size_t i = 0; i + 1 < e.seq.size(); ++i) alphabet.insert(e.seq[i]);
        entries.push_back(std::move(e));
    }

    BpeVocab vocab;
    for (const auto& ch : alphabet) vocab.add_symbol(ch);
    vocab.add_symbol(std::string(kEndOfWord));

    for (int step = 0; step < num_merges; ++step) {
        std::map<std::pair<std::string, std::string>, long long> pairs;
        for (const auto& e : entries) {
            for (std::size_t i = 0; i + 1 < e.seq.size(); ++i) pairs[{e.seq[i], e.seq[i + 1]}] += e.count;
        }
        // std::map iterates pairs in lexicographic order, so the first maximum
        // is the tie-break winner.
        const std::pair<std::string, std::string>* best = nullptr;
        long long best_count = 1;
        for (const auto& [pair, count] : pairs) {
            if (count > best_count) {
                best = &pair;
                best_count = count;
            }
        }
        if (!best) break;
        const auto merge = *best;
        for (auto& e : entries) apply_merge(e.seq, merge.first, merge.second);
        vocab.add_merge(merge);
        vocab.add_symbol(merge.first + merge.second);
    }
    return vocab;
}

std::string detokenize(const std::vector<std::string>& subwords) {
    std::string out;
    for (const auto& s : subwords) out += s;
    if (out.size() >= kEndOfWord.size() &&
        out.compare(out.size() - kEndOfWord.size(), kEndOfWord.size(), kEndOfWord) == 0) {
        out.resize(out.size() - kEndOfWord.size());
    }
    return out;
}

void BpeVocab::write(std::ostream& out) const {
    out << "bpe-vocab " << kFormatVersion << ' ' << merges_.size() << ' ' << kEndOfWord << '\n';
    for (const auto& [l, r] : merges_) out << l << ' ' << r << '\n';
    out << "symbols " << symbols_.size() << '\n';
    for (const auto& s : symbols_) out << s << '\n';
}

std::string BpeVocab::to_string() const {
    std::ostringstream os;
    write(os);
    return os.str();
}

BpeVocab BpeVocab::read(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw CorruptFile("bpe vocab: missing header");
    std::istringstream header(line);
    std::string magic, marker;
    int version = 0;
    std::size_t n_merges = 0;
    if (!(header >> magic >> version >> n_merges >> marker) || magic != "bpe-vocab") {
        throw CorruptFile("bpe vocab: malformed header");
    }
    if (version != kFormatVersion) {
        throw VersionError("bpe vocab: format version " + std::to_string(version) + ", expected " +
                           std::to_string(kFormatVersion));
    }
    if (marker != kEndOfWord) throw CorruptFile("bpe vocab: unexpected end-of-word marker " + marker);

    BpeVocab v;
    v.symbols_.clear();
    v.ids_.clear();
    for (std::size_t i = 0; i < n_merges; ++i) {
        if (!std::getline(in, line)) throw CorruptFile("bpe vocab: truncated merge list");
        const auto sp = line.find(' ');
        if (sp == std::string::npos || sp == 0 || sp + 1 == line.size() ||
            line.find(' ', sp + 1) != std::string::npos) {
            throw CorruptFile("bpe vocab: malformed merge line " + std::to_string(i + 2));
        }
        v.add_merge({line.substr(0, sp), line.substr(sp + 1)});
    }
    if (!std::getline(in, line) || line.rfind("symbols ", 0) != 0) {
        throw CorruptFile("bpe vocab: missing symbol table");
    }
    std::size_t n_symbols = 0;
    try {
        n_symbols = std::stoul(line.substr(8));
    } catch (const std::exception&) {
        throw CorruptFile("bpe vocab: bad symbol count");
    }
    for (std::size_t i = 0; i < n_symbols; ++i) {
        if (!std::getline(in, line) || line.empty()) throw CorruptFile("bpe vocab: truncated symbol table");
        if (!v.ids_.emplace(line, static_cast<int>(v.symbols_.size())).second) {
            throw CorruptFile("bpe vocab: duplicate symbol " + line);
        }
        v.symbols_.push_back(line);
    }
    if (v.symbols_.empty() || v.symbols_[0] != kUnknownSymbol) {
        throw CorruptFile("bpe vocab: symbol 0 must be " + std::string(kUnknownSymbol));
    }
    return v;
}

BpeVocab BpeVocab::from_string(const std::string& text) {
    std::istringstream in(text);
    return read(in);
}

void BpeVocab::save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    write(out);
}

BpeVocab BpeVocab::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    return read(in);
}

std::vector<std::string> char_ngrams(std::string_view word, const NgramSpec& spec) {
    if (spec.n < 1) throw Error("char_ngrams: n must be >= 1");
    std::vector<std::string> chars;
    for (auto& c : utf8_chars(word)) {
        if (c != " ") chars.push_back(std::move(c));
    }
    std::vector<std::string> grams;
    const auto n = static_cast<std::size_t>(spec.n);
    for (std::size_t i = 0; i + n <= chars.size(); ++i) {
        std::string g;
        for (std::size_t k = 0; k < n; ++k) g += chars[i + k];
        grams.push_back(std::move(g));
    }
    return grams;
}

std::size_t ngram_bucket(std::string_view gram, const NgramSpec& spec) {
    if (spec.hash_buckets == 0) throw Error("ngram_bucket: hash_buckets must be >= 1");
    std::uint64_t h = 0xcbf29ce484222325ULL ^ (spec.seed * 0x100000001b3ULL);
    for (unsigned char c : gram) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return static_cast<std::size_t>(h % spec.hash_buckets);
}

}  // namespace addrparse
