#include <doctest.h>

#include <cmath>

#include "addrparse/datagen.hpp"
#include "addrparse/error.hpp"
#include "addrparse/evaluation.hpp"
#include "addrparse/training.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using namespace addrparse;
using testing::tiny_config;
using testing::tiny_corpus;

TEST_CASE("sequence accuracy") {
    using T = Tag;
    const std::vector<Tag> gold{T::StreetNumber, T::StreetName, T::Municipality, T::Province};
    CHECK(sequence_accuracy(gold, gold) == 1.0);
    const std::vector<Tag> half{T::StreetNumber, T::StreetName, T::Province, T::Municipality};
    CHECK(sequence_accuracy(half, gold) == 0.5);
    const std::vector<Tag> three{T::StreetNumber, T::StreetName, T::Municipality};
    CHECK_THROWS_AS(sequence_accuracy(three, gold), LengthMismatch);
    CHECK_THROWS_AS(sequence_accuracy({}, {}), LengthMismatch);
}

TEST_CASE("corpus scoring is micro over tokens and macro over sequences") {
    std::vector<TaggedAddress> corpus{
        make_address({"1", "a"}, {Tag::StreetNumber, Tag::StreetName}, "AA"),
        make_address({"2", "b", "c", "d"}, {Tag::StreetNumber, Tag::StreetName, Tag::Municipality, Tag::Province},
                     "AB"),
    };
    // Tags everything as StreetNumber.
    const TagFunction constant = [](const TaggedAddress& a) {
        return std::vector<Tag>(a.tokens.size(), Tag::StreetNumber);
    };
    const auto s = evaluate_with(constant, corpus);
    CHECK(s.n == 6);
    CHECK(s.k == 2);
    CHECK(s.sequences == 2);
    CHECK(s.token_accuracy == doctest::Approx(2.0 / 6.0));
    CHECK(s.mean_sequence_accuracy == doctest::Approx((0.5 + 0.25) / 2));
    const auto by = evaluate_by_country(constant, corpus);
    CHECK(by.at("AA").k == 1);
    CHECK(by.at("AB").n == 4);
}

TEST_CASE("random baseline sits near one in eight") {
    const auto corpus = tiny_corpus(500, {1, 2, 3, 4, 5});
    const auto s = random_baseline(corpus, 1);
    CHECK(s.n > 3000);
    CHECK(std::abs(s.token_accuracy - 0.125) < 0.01);
    CHECK(random_baseline(corpus, 1).k == s.k);
}

TEST_CASE("seed aggregation") {
    const std::vector<double> v{0.99, 1.0};
    const auto s = aggregate_seeds(v);
    CHECK(s.mean == doctest::Approx(0.995));
    CHECK(s.std == doctest::Approx(std::sqrt(0.00005)));
    const std::vector<double> one{0.5};
    CHECK_THROWS_AS(aggregate_seeds(one), TooFewRuns);
}

TEST_CASE("z test") {
    const auto r = z_test(90, 100, 80, 100);
    CHECK(r.z == doctest::Approx(0.1 / std::sqrt(0.85 * 0.15 * 0.02)).epsilon(1e-12));
    CHECK_FALSE(r.reject);
    CHECK(r.pooled == doctest::Approx(0.85));
    CHECK(z_test(80, 100, 90, 100).z == doctest::Approx(-r.z).epsilon(1e-15));
    CHECK(z_test(50, 100, 50, 100).z == 0.0);
    CHECK(z_test(100, 100, 100, 100).z == 0.0);
    CHECK(z_test(0, 100, 0, 50).z == 0.0);
    CHECK(z_test(990, 1000, 900, 1000).reject);
    CHECK(std::abs(z_test(990, 1000, 900, 1000).z) > kZCritical);
    CHECK_THROWS(z_test(1, 0, 1, 2));
    CHECK_THROWS(z_test(5, 4, 1, 2));

    Rng rng(6);
    for (int i = 0; i < 200; ++i) {
        const auto n1 = static_cast<std::size_t>(rng.range(1, 100000));
        const auto n2 = static_cast<std::size_t>(rng.range(1, 100000));
        const auto k1 = static_cast<std::size_t>(rng.range(0, static_cast<long long>(n1)));
        const auto k2 = static_cast<std::size_t>(rng.range(0, static_cast<long long>(n2)));
        const double ref = testing::ref_z(static_cast<double>(k1), static_cast<double>(n1),
                                          static_cast<double>(k2), static_cast<double>(n2));
        const auto got = z_test(k1, n1, k2, n2);
        CHECK(std::abs(got.z - ref) < 1e-9);
        CHECK(got.reject == (std::abs(ref) > kZCritical));
    }
}

TEST_CASE("relation labels") {
    const std::vector<CountryProfile> training{{"AA", {1}, "x", Script::Latin}, {"AB", {2}, "y", Script::Latin}};
    CHECK(relation_to_training({"ZA", {1}, "x", Script::Latin}, training).label() == "shared-pattern+lexicon");
    CHECK(relation_to_training({"ZB", {2}, "q", Script::Latin}, training).label() == "shared-pattern");
    CHECK(relation_to_training({"ZC", {5}, "y", Script::Latin}, training).label() == "shared-lexicon");
    CHECK(relation_to_training({"ZD", {4}, "q", Script::Latin}, training).label() == "neither");
}

TEST_CASE("reports aggregate seeds per country") {
    auto corpus = tiny_corpus(10, {1, 2});
    for (std::size_t i = 0; i < 5; ++i) corpus[i].country = "AB";
    auto m1 = ParserModel::create(tiny_config(Variant::Fixed, 1));
    auto m2 = ParserModel::create(tiny_config(Variant::Fixed, 2));
    const std::vector<const ParserModel*> models{&m1, &m2};
    const std::vector<std::uint64_t> seeds{1, 2};
    const auto rep = build_report(models, seeds, corpus);
    REQUIRE(rep.countries.size() == 2);
    CHECK(rep.countries[0].country == "AA");
    const auto s1 = evaluate(m1, corpus);
    const auto s2 = evaluate(m2, corpus);
    CHECK(rep.overall.n == s1.n + s2.n);
    CHECK(rep.overall.k == s1.k + s2.k);
    CHECK(rep.overall.per_seed == std::vector<double>{s1.token_accuracy, s2.token_accuracy});
    CHECK(rep.overall.mean == doctest::Approx((s1.token_accuracy + s2.token_accuracy) / 2));

    const std::vector<const ParserModel*> single{&m1};
    const std::vector<std::uint64_t> one{1};
    CHECK(build_report(single, one, corpus).overall.std == 0.0);
    CHECK_THROWS_AS(build_report(std::vector<const ParserModel*>{}, std::vector<std::uint64_t>{}, corpus),
                    TooFewRuns);
}

TEST_CASE("zero-shot evaluation refuses training countries") {
    auto corpus = tiny_corpus(4, {1});
    auto m = ParserModel::create(tiny_config(Variant::Fixed));
    const std::vector<const ParserModel*> models{&m};
    const std::vector<std::uint64_t> seeds{1};
    const std::vector<CountryProfile> training{{"AA", {1}, "l", Script::Latin}};
    const std::vector<CountryProfile> unseen{{"ZZ", {1}, "l", Script::Latin}};
    CHECK_THROWS_AS(zero_shot_eval(models, seeds, corpus, training, unseen), Error);
    for (auto& a : corpus) a.country = "ZZ";
    const auto rep = zero_shot_eval(models, seeds, corpus, training, unseen);
    REQUIRE(rep.countries.size() == 1);
    CHECK(rep.countries[0].relation == "shared-pattern+lexicon");
}

TEST_CASE("reorder study") {
    const auto corpus = tiny_corpus(10, {1});
    auto m = ParserModel::create(tiny_config(Variant::Fixed));
    const std::vector<int> same{1};
    const auto r0 = reorder_study(m, corpus, same, 4);
    CHECK(r0.drop == 0.0);
    CHECK(r0.after.k == r0.before.k);

    const std::vector<int> two{1, 2};
    const auto r = reorder_study(m, corpus, two, 4);
    CHECK(r.records_per_target.at(1) == 5);
    CHECK(r.records_per_target.at(2) == 5);
    CHECK(r.after.n == r.before.n);
    CHECK(r.drop == doctest::Approx(r.before.token_accuracy - r.after.token_accuracy));
    const std::vector<int> bad{9};
    CHECK_THROWS(reorder_study(m, corpus, bad, 4));
}
