#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "addrparse/address.hpp"
#include "addrparse/tagger.hpp"

namespace addrparse {

// Rejection threshold of a two-sided test at alpha = 0.001.
inline constexpr double kZCritical = 3.290527;

// Fraction of positions where pred matches gold. Throws LengthMismatch.
double sequence_accuracy(std::span<const Tag> pred, std::span<const Tag> gold);

struct CorpusScore {
    std::size_t n = 0;  // tokens
    std::size_t k = 0;  // correctly tagged tokens
    std::size_t sequences = 0;
    double token_accuracy = 0.0;          // k / n
    double mean_sequence_accuracy = 0.0;  // mean of per-address accuracies
};

using TagFunction = std::function<std::vector<Tag>(const TaggedAddress&)>;

// Scores any tagger over a corpus (micro token accuracy and macro
// per-sequence accuracy).
CorpusScore evaluate_with(const TagFunction& tagger, std::span<const TaggedAddress> corpus);
CorpusScore evaluate(const ParserModel& model, std::span<const TaggedAddress> corpus);
std::map<std::string, CorpusScore> evaluate_by_country(const TagFunction& tagger,
                                                       std::span<const TaggedAddress> corpus);

// Uniformly random tag per token.
CorpusScore random_baseline(std::span<const TaggedAddress> corpus, std::uint64_t seed);

struct SeedStats {
    double mean = 0.0;
    double std = 0.0;  // sample standard deviation (n - 1)
};

// Throws TooFewRuns for fewer than two values.
SeedStats aggregate_seeds(std::span<const double> values);

struct ZTestResult {
    double z = 0.0;
    bool reject = false;
    std::size_t k1 = 0, n1 = 0, k2 = 0, n2 = 0;
    double pooled = 0.0;
};

// Pooled two-proportion z statistic of k1/n1 against k2/n2; positive when the
// first proportion is higher.
ZTestResult z_test(std::size_t k1, std::size_t n1, std::size_t k2, std::size_t n2);

// How an evaluation country relates to the training countries.
struct CountryRelation {
    bool shared_pattern = false;
    bool shared_lexicon = false;

    std::string label() const;
};

CountryRelation relation_to_training(const CountryProfile& country,
                                     std::span<const CountryProfile> training);

struct CountryRecord {
    std::string country;
    std::string relation;  // empty unless relations were supplied
    std::size_t n = 0;     // tokens summed over seeds
    std::size_t k = 0;     // correct tokens summed over seeds
    double token_accuracy = 0.0;
    double mean_sequence_accuracy = 0.0;
    std::vector<double> per_seed;  // token accuracy of each seed's model
    double mean = 0.0;
    double std = 0.0;
};

struct EvalReport {
    std::string variant;
    std::vector<std::uint64_t> seeds;
    std::vector<CountryRecord> countries;  // sorted by country code
    CountryRecord overall;
};

// One model per seed. A single model yields std = 0; no models raise
// TooFewRuns.
EvalReport build_report(std::span<const ParserModel* const> models,
                        std::span<const std::uint64_t> seeds, std::span<const TaggedAddress> corpus,
                        const std::map<std::string, CountryRelation>& relations = {});

// Evaluation on countries absent from training. Throws Error if any evaluated
// country code is also a training country.
EvalReport zero_shot_eval(std::span<const ParserModel* const> models,
                          std::span<const std::uint64_t> seeds, std::span<const TaggedAddress> corpus,
                          std::span<const CountryProfile> training,
                          std::span<const CountryProfile> unseen);

struct ReorderStudyResult {
    CorpusScore before;
    CorpusScore after;
    double drop = 0.0;  // before.token_accuracy - after.token_accuracy
    std::map<int, std::size_t> records_per_target;
};

// Re-scores the corpus after moving each address to one of the target
// patterns; a seeded shuffle splits the records evenly between targets.
ReorderStudyResult reorder_study(const ParserModel& model, std::span<const TaggedAddress> corpus,
                                 std::span<const int> target_patterns, std::uint64_t seed);

}  // namespace addrparse
