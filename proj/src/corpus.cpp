#include "addrparse/corpus.hpp"

#include <fstream>
#include <json.hpp>

#include "addrparse/error.hpp"

namespace addrparse {

using nlohmann::ordered_json;

TaggedAddress parse_corpus_line(std::string_view line, std::size_t line_number) {
    ordered_json j;
    try {
        j = ordered_json::parse(line);
    } catch (const ordered_json::parse_error& e) {
        throw SchemaError(line_number, std::string("invalid JSON: ") + e.what());
    }
    if (!j.is_object()) throw SchemaError(line_number, "record is not an object");
    for (const char* field : {"raw", "tokens", "tags", "country"}) {
        if (!j.contains(field)) throw SchemaError(line_number, std::string("missing field '") + field + "'");
    }
    TaggedAddress a;
    try {
        a.raw = j.at("raw").get<std::string>();
        a.tokens = j.at("tokens").get<std::vector<std::string>>();
        a.country = j.at("country").get<std::string>();
        for (const auto& name : j.at("tags").get<std::vector<std::string>>()) {
            auto tag = parse_tag(name);
            if (!tag) throw SchemaError(line_number, "unknown tag '" + name + "'");
            a.tags.push_back(*tag);
        }
    } catch (const ordered_json::exception& e) {
        throw SchemaError(line_number, std::string("wrong field type: ") + e.what());
    }
    if (auto problem = validate(a); !problem.empty()) throw SchemaError(line_number, problem);
    return a;
}

std::string format_corpus_line(const TaggedAddress& address) {
    ordered_json j;
    j["raw"] = address.raw;
    j["tokens"] = address.tokens;
    auto& tags = j["tags"] = ordered_json::array();
    for (Tag t : address.tags) tags.push_back(std::string(tag_name(t)));
    j["country"] = address.country;
    return j.dump();
}

std::vector<TaggedAddress> load_corpus(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open corpus " + path.string());
    std::vector<TaggedAddress> out;
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
        ++n;
        if (line.empty()) continue;
        out.push_back(parse_corpus_line(line, n));
    }
    return out;
}

void save_corpus(std::span<const TaggedAddress> corpus, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write corpus " + path.string());
    for (const auto& a : corpus) {
        if (auto problem = validate(a); !problem.empty()) {
            throw SchemaError("refusing to save invalid record: " + problem);
        }
        out << format_corpus_line(a) << '\n';
    }
    if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace addrparse
