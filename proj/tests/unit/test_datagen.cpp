#include <doctest.h>

#include <algorithm>
#include <map>

#include "addrparse/corpus.hpp"
#include "addrparse/datagen.hpp"
#include "addrparse/error.hpp"

using namespace addrparse;

namespace {

GeneratorConfig two_country_config(int samples) {
    GeneratorConfig cfg;
    cfg.seed = 99;
    cfg.samples_per_country = samples;
    cfg.lexicons["lat"] = synthesize_lexicon("lat", Script::Latin, 5);
    cfg.lexicons["cyr"] = synthesize_lexicon("cyr", Script::CyrillicLike, 6);
    cfg.countries = {{"AA", {1, 2}, "lat", Script::Latin}, {"BB", {5}, "cyr", Script::CyrillicLike}};
    return cfg;
}

std::vector<std::pair<std::string, Tag>> pairs_of(const TaggedAddress& a) {
    std::vector<std::pair<std::string, Tag>> out;
    for (std::size_t i = 0; i < a.tokens.size(); ++i) out.emplace_back(a.tokens[i], a.tags[i]);
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace

TEST_CASE("generation is deterministic and valid") {
    const auto cfg = two_country_config(300);
    const auto a = generate(cfg);
    const auto b = generate(cfg);
    REQUIRE(a.size() == 600);
    CHECK(a == b);
    for (const auto& rec : a) {
        CHECK(validate(rec).empty());
        bool matched = false;
        const auto& profile = rec.country == "AA" ? cfg.countries[0] : cfg.countries[1];
        for (int id : profile.pattern_ids) matched = matched || matches_pattern(rec, pattern_by_id(id));
        CHECK(matched);
    }
    auto other = cfg;
    other.seed = 100;
    CHECK(generate(other) != a);
}

TEST_CASE("pattern 5 puts province and municipality before the street") {
    const auto corpus = generate(two_country_config(200));
    for (const auto& rec : corpus) {
        if (rec.country != "BB") continue;
        std::size_t first_street = rec.tags.size(), last_admin = 0;
        for (std::size_t i = 0; i < rec.tags.size(); ++i) {
            if (rec.tags[i] == Tag::StreetName) first_street = std::min(first_street, i);
            if (rec.tags[i] == Tag::Province || rec.tags[i] == Tag::Municipality) last_admin = i;
        }
        CHECK(last_admin < first_street);
    }
}

TEST_CASE("two-pattern country splits evenly between its patterns") {
    auto cfg = two_country_config(10000);
    cfg.countries.resize(1);
    const auto corpus = generate(cfg);
    std::map<int, int> histogram;
    for (const auto& rec : corpus) {
        for (int id : {1, 2}) {
            if (matches_pattern(rec, pattern_by_id(id))) {
                ++histogram[id];
                break;
            }
        }
    }
    REQUIRE(histogram[1] + histogram[2] == 10000);
    CHECK(histogram[1] / 10000.0 == doctest::Approx(0.5).epsilon(0.1));
    CHECK(std::abs(histogram[1] / 10000.0 - 0.5) <= 0.05);
}

TEST_CASE("optional fields appear with roughly the configured probability") {
    auto cfg = two_country_config(4000);
    cfg.countries.resize(1);
    cfg.optional_probability = 0.3;
    int with_unit = 0;
    for (const auto& rec : generate(cfg)) {
        with_unit += std::find(rec.tags.begin(), rec.tags.end(), Tag::Unit) != rec.tags.end();
    }
    CHECK(std::abs(with_unit / 4000.0 - 0.3) < 0.03);
}

TEST_CASE("reorder_to_pattern keeps the token/tag multiset") {
    const auto corpus = generate(two_country_config(500));
    for (const auto& rec : corpus) {
        for (int target : {1, 2, 5}) {
            const auto& p = pattern_by_id(target);
            const auto out = reorder_to_pattern(rec, p);
            CHECK(pairs_of(out) == pairs_of(rec));
            CHECK(validate(out).empty());
            CHECK(matches_pattern(out, p));
        }
    }
}

TEST_CASE("reorder_to_pattern fixed point and target order") {
    const auto corpus = generate(two_country_config(50));
    for (const auto& rec : corpus) {
        if (rec.country == "AA" && matches_pattern(rec, pattern_by_id(1))) {
            CHECK(reorder_to_pattern(rec, pattern_by_id(1)) == rec);
        }
        if (rec.country == "BB") {
            CHECK(reorder_to_pattern(rec, pattern_by_id(5)) == rec);
            CHECK(reorder_to_pattern(rec, pattern_by_id(1)).tags.front() == Tag::StreetNumber);
            CHECK_THROWS_AS(reorder_to_pattern(rec, pattern_by_id(3)), IncompatiblePattern);
        }
    }
}

TEST_CASE("split sizes and coverage") {
    auto corpus = generate(two_country_config(5));
    corpus.resize(10);
    auto [tr, va] = split(corpus, 0.8, 1);
    CHECK(tr.size() == 8);
    CHECK(va.size() == 2);
    auto one = std::vector<TaggedAddress>(corpus.begin(), corpus.begin() + 1);
    auto [t1, v1] = split(one, 0.8, 1);
    CHECK(t1.size() == 1);
    CHECK(v1.empty());

    const auto big = generate(two_country_config(5000));
    auto [bt, bv] = split(big, 0.8, 3);
    CHECK(bt.size() == 8000);
    std::vector<std::string> all, joined;
    for (const auto& r : big) all.push_back(format_corpus_line(r));
    for (const auto& r : bt) joined.push_back(format_corpus_line(r));
    for (const auto& r : bv) joined.push_back(format_corpus_line(r));
    std::sort(all.begin(), all.end());
    std::sort(joined.begin(), joined.end());
    CHECK(all == joined);
    auto [bt2, bv2] = split(big, 0.8, 3);
    CHECK(bt2 == bt);
}

TEST_CASE("config errors name the offending field") {
    auto cfg = two_country_config(10);
    cfg.lexicons["lat"].street_words.clear();
    try {
        check_config(cfg);
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("street_words") != std::string::npos);
    }
    auto missing = two_country_config(10);
    missing.countries[0].lexicon_id = "nope";
    CHECK_THROWS_AS(check_config(missing), ConfigError);
    auto zero = two_country_config(10);
    zero.samples_per_country = 0;
    CHECK_THROWS_AS(check_config(zero), ConfigError);

    const auto j = nlohmann::json::parse(R"({"seed": 1, "lexicons": {}, "countries": []})");
    try {
        parse_generator_config(j);
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("samples_per_country") != std::string::npos);
    }
}

TEST_CASE("synthetic scripts use disjoint alphabets") {
    const auto lat = synthesize_lexicon("a", Script::Latin, 1);
    const auto han = synthesize_lexicon("b", Script::HangulLike, 1);
    const auto cyr = synthesize_lexicon("c", Script::CyrillicLike, 1);
    auto bytes_of = [](const Lexicon& l) {
        std::string s;
        for (const auto& w : l.street_words) s += w;
        return s;
    };
    const auto ls = bytes_of(lat);
    CHECK(std::all_of(ls.begin(), ls.end(), [](char c) { return static_cast<unsigned char>(c) < 0x80; }));
    CHECK(bytes_of(han).find("\xea") != std::string::npos);  // U+AC00 block lead byte
    CHECK(bytes_of(cyr).find("\xd0") != std::string::npos);
    CHECK(synthesize_lexicon("a", Script::Latin, 1).street_words == lat.street_words);
}
