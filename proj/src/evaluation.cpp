#include "addrparse/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>
#include <set>

#include "addrparse/datagen.hpp"
#include "addrparse/error.hpp"

namespace addrparse {

double sequence_accuracy(std::span<const Tag> pred, std::span<const Tag> gold) {
    if (pred.size() != gold.size()) {
        throw LengthMismatch("sequence_accuracy: " + std::to_string(pred.size()) + " predictions for " +
                             std::to_string(gold.size()) + " gold tags");
    }
    if (gold.empty()) throw LengthMismatch("sequence_accuracy: empty sequence");
    std::size_t hits = 0;
    for (std::size_t i = 0; i < gold.size(); ++i) hits += pred[i] == gold[i];
    return static_cast<double>(hits) / static_cast<double>(gold.size());
}

CorpusScore evaluate_with(const TagFunction& tagger, std::span<const TaggedAddress> corpus) {
    if (corpus.empty()) throw Error("evaluate: empty corpus");
    CorpusScore s;
    double seq_total = 0.0;
    for (const auto& a : corpus) {
        const auto pred = tagger(a);
        seq_total += sequence_accuracy(pred, a.tags);
        for (std::size_t i = 0; i < pred.size(); ++i) s.k += pred[i] == a.tags[i];
        s.n += a.tags.size();
        ++s.sequences;
    }
    s.token_accuracy = static_cast<double>(s.k) / static_cast<double>(s.n);
    s.mean_sequence_accuracy = seq_total / static_cast<double>(s.sequences);
    return s;
}

namespace {

// Tags the corpus in batches up front; addresses outside it are parsed singly.
TagFunction model_tagger(const ParserModel& model, std::span<const TaggedAddress> corpus) {
    auto memo = std::make_shared<std::map<std::vector<std::string>, std::vector<Tag>>>();
    if (!corpus.empty()) {
        auto tags = tag_batched(model, corpus);
        for (std::size_t i = 0; i < corpus.size(); ++i) memo->emplace(corpus[i].tokens, std::move(tags[i]));
    }
    return [&model, memo](const TaggedAddress& a) {
        const auto it = memo->find(a.tokens);
        return it != memo->end() ? it->second : parse_tokens(a.tokens, model).tags;
    };
}

}  // namespace

CorpusScore evaluate(const ParserModel& model, std::span<const TaggedAddress> corpus) {
    return evaluate_with(model_tagger(model, corpus), corpus);
}

std::map<std::string, CorpusScore> evaluate_by_country(const TagFunction& tagger,
                                                       std::span<const TaggedAddress> corpus) {
    std::map<std::string, std::vector<TaggedAddress>> groups;
    for (const auto& a : corpus) groups[a.country].push_back(a);
    std::map<std::string, CorpusScore> out;
    for (const auto& [country, records] : groups) out[country] = evaluate_with(tagger, records);
    return out;
}

CorpusScore random_baseline(std::span<const TaggedAddress> corpus, std::uint64_t seed) {
    Rng rng(derive_seed(seed, 0x4a4d));
    return evaluate_with(
        [&rng](const TaggedAddress& a) {
            std::vector<Tag> out;
            for (std::size_t i = 0; i < a.tokens.size(); ++i) {
                out.push_back(tag_from_index(static_cast<int>(rng.index(kNumTags))));
            }
            return out;
        },
        corpus);
}

SeedStats aggregate_seeds(std::span<const double> values) {
    if (values.size() < 2) throw TooFewRuns();
    const double n = static_cast<double>(values.size());
    SeedStats s;
    s.mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.std = std::sqrt(ss / (n - 1.0));
    return s;
}

ZTestResult z_test(std::size_t k1, std::size_t n1, std::size_t k2, std::size_t n2) {
    if (n1 == 0 || n2 == 0) throw Error("z_test: sample sizes must be >= 1");
    if (k1 > n1 || k2 > n2) throw Error("z_test: successes exceed sample size");
    ZTestResult r{0.0, false, k1, n1, k2, n2, 0.0};
    const double dn1 = static_cast<double>(n1), dn2 = static_cast<double>(n2);
    r.pooled = static_cast<double>(k1 + k2) / (dn1 + dn2);
    if (r.pooled > 0.0 && r.pooled < 1.0) {
        const double se = std::sqrt(r.pooled * (1.0 - r.pooled) * (1.0 / dn1 + 1.0 / dn2));
        r.z = (static_cast<double>(k1) / dn1 - static_cast<double>(k2) / dn2) / se;
    }
    r.reject = std::abs(r.z) > kZCritical;
    return r;
}

std::string CountryRelation::label() const {
    if (shared_pattern && shared_lexicon) return "shared-pattern+lexicon";
    if (shared_pattern) return "shared-pattern";
    if (shared_lexicon) return "shared-lexicon";
    return "neither";
}

CountryRelation relation_to_training(const CountryProfile& country,
                                     std::span<const CountryProfile> training) {
    CountryRelation r;
    for (const auto& t : training) {
        if (t.lexicon_id == country.lexicon_id) r.shared_lexicon = true;
        for (int p : country.pattern_ids) {
            if (std::find(t.pattern_ids.begin(), t.pattern_ids.end(), p) != t.pattern_ids.end()) {
                r.shared_pattern = true;
            }
        }
    }
    return r;
}

namespace {

CountryRecord make_record(std::string name, const std::vector<CorpusScore>& per_seed) {
    CountryRecord rec;
    rec.country = std::move(name);
    double seq = 0.0;
    for (const auto& s : per_seed) {
        rec.n += s.n;
        rec.k += s.k;
        seq += s.mean_sequence_accuracy;
        rec.per_seed.push_back(s.token_accuracy);
    }
    rec.token_accuracy = static_cast<double>(rec.k) / static_cast<double>(rec.n);
    rec.mean_sequence_accuracy = seq / static_cast<double>(per_seed.size());
    if (per_seed.size() >= 2) {
        const auto stats = aggregate_seeds(rec.per_seed);
        rec.mean = stats.mean;
        rec.std = stats.std;
    } else {
        rec.mean = rec.per_seed.front();
        rec.std = 0.0;
    }
    return rec;
}

}  // namespace

EvalReport build_report(std::span<const ParserModel* const> models,
                        std::span<const std::uint64_t> seeds, std::span<const TaggedAddress> corpus,
                        const std::map<std::string, CountryRelation>& relations) {
    if (models.empty()) throw TooFewRuns();
    if (seeds.size() != models.size()) throw Error("build_report: one seed per model required");
    EvalReport report;
    report.variant = std::string(variant_name(models.front()->config().variant));
    report.seeds.assign(seeds.begin(), seeds.end());

    std::map<std::string, std::vector<CorpusScore>> by_country;
    std::vector<CorpusScore> overall;
    for (const ParserModel* m : models) {
        const auto tagger = model_tagger(*m, corpus);
        const auto scores = evaluate_by_country(tagger, corpus);
        CorpusScore all;
        double seq_weighted = 0.0;
        for (const auto& [country, s] : scores) {
            by_country[country].push_back(s);
            all.n += s.n;
            all.k += s.k;
            all.sequences += s.sequences;
            seq_weighted += s.mean_sequence_accuracy * static_cast<double>(s.sequences);
        }
        all.token_accuracy = static_cast<double>(all.k) / static_cast<double>(all.n);
        all.mean_sequence_accuracy = seq_weighted / static_cast<double>(all.sequences);
        overall.push_back(all);
    }
    for (const auto& [country, scores] : by_country) {
        auto rec = make_record(country, scores);
        if (auto it = relations.find(country); it != relations.end()) rec.relation = it->second.label();
        report.countries.push_back(std::move(rec));
    }
    report.overall = make_record("ALL", overall);
    return report;
}

EvalReport zero_shot_eval(std::span<const ParserModel* const> models,
                          std::span<const std::uint64_t> seeds, std::span<const TaggedAddress> corpus,
                          std::span<const CountryProfile> training,
                          std::span<const CountryProfile> unseen) {
    std::set<std::string> training_codes;
    for (const auto& t : training) training_codes.insert(t.code);
    std::map<std::string, CountryRelation> relations;
    for (const auto& u : unseen) {
        if (training_codes.count(u.code)) {
            throw Error("zero-shot country " + u.code + " is also a training country");
        }
        relations[u.code] = relation_to_training(u, training);
    }
    for (const auto& a : corpus) {
        if (training_codes.count(a.country)) {
            throw Error("zero-shot corpus contains training country " + a.country);
        }
    }
    return build_report(models, seeds, corpus, relations);
}

ReorderStudyResult reorder_study(const ParserModel& model, std::span<const TaggedAddress> corpus,
                                 std::span<const int> target_patterns, std::uint64_t seed) {
    if (corpus.empty()) throw Error("reorder_study: empty corpus");
    if (target_patterns.empty()) throw Error("reorder_study: no target patterns");
    ReorderStudyResult r;
    r.before = evaluate(model, corpus);

    std::vector<std::size_t> order(corpus.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(derive_seed(seed, 0x2e02de));
    rng.shuffle(order);
    std::vector<TaggedAddress> reordered(corpus.size());
    for (std::size_t i = 0; i < order.size(); ++i) {
        const int target = target_patterns[i % target_patterns.size()];
        reordered[order[i]] = reorder_to_pattern(corpus[order[i]], pattern_by_id(target));
        ++r.records_per_target[target];
    }
    r.after = evaluate(model, reordered);
    r.drop = r.before.token_accuracy - r.after.token_accuracy;
    return r;
}

}  // namespace addrparse
