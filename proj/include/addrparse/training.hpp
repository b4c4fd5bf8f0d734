#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "addrparse/tagger.hpp"

namespace addrparse {

struct TrainConfig {
    int epochs_max = 200;
    int batch_size = 32;
    double lr0 = 0.1;
    int plateau_patience = 10;
    double lr_factor = 0.1;
    int early_stop_patience = 15;
    double teacher_forcing_ratio = 0.5;
    nn::Precision lstm_precision = nn::Precision::Single;
    std::vector<std::uint64_t> seeds = {5, 10, 15, 20, 25};
    std::uint64_t retry_seed = 30;
    // A run counts as diverged once its epoch train loss exceeds this value
    // after divergence_grace_epochs epochs (or turns non-finite at any time).
    double divergence_threshold = 2.0 * std::log(8.0);
    int divergence_grace_epochs = 10;

    // Throws ConfigError.
    void validate() const;
};

struct EpochRecord {
    int epoch = 0;  // 1-based
    double train_loss = 0.0;
    double val_loss = 0.0;
    double lr = 0.0;  // learning rate in force after this epoch's schedule update
};

enum class StopReason { EarlyStopping, MaxEpochs };

std::string_view stop_reason_name(StopReason r);

struct TrainHistory {
    std::vector<EpochRecord> epochs;
    StopReason stop_reason = StopReason::MaxEpochs;
    int best_epoch = 0;
    double best_val_loss = 0.0;
    double wall_seconds = 0.0;
};

// Reduce-on-plateau schedule and early stopping, both driven by validation
// loss. An epoch improves only if its loss is strictly below the best so far.
class EpochController {
public:
    explicit EpochController(const TrainConfig& cfg);

    struct Decision {
        bool improved = false;
        bool stop = false;
        double lr = 0.0;
    };

    Decision end_epoch(double val_loss);
    double lr() const { return lr_; }
    double best() const { return best_; }

private:
    TrainConfig cfg_;
    double lr_;
    double best_;
    int since_best_ = 0;
    int since_reduction_ = 0;
};

// Length bucketing: the shuffled corpus is split into pools of
// kBucketBatches batches, each pool is sorted by length and cut into batches,
// and the batch order is shuffled. Inside every batch addresses are ordered
// longest first.
inline constexpr std::size_t kBucketBatches = 50;
std::vector<Batch> make_batches(std::span<const TaggedAddress> corpus, int batch_size, Rng& rng);
// Consecutive batches in corpus order (each batch still ordered longest first).
std::vector<Batch> make_batches(std::span<const TaggedAddress> corpus, int batch_size);

// Token-weighted mean cross-entropy with free-running decoding.
double corpus_loss(ParserModel& model, std::span<const Batch> batches, WordCache& cache,
                   nn::Precision precision = nn::Precision::Double);

using EpochCallback = std::function<void(const EpochRecord&)>;

// Teacher forcing is drawn per batch. The model ends up holding the parameters
// of its best validation epoch. Throws Diverged.
TrainHistory train(ParserModel& model, std::span<const TaggedAddress> train_set,
                   std::span<const TaggedAddress> val_set, const TrainConfig& cfg,
                   const EpochCallback& on_epoch = {});

// Vocabulary learned from the digit-normalized tokens of a corpus.
BpeVocab learn_corpus_vocab(std::span<const TaggedAddress> corpus, int num_merges);

struct SeedRun {
    std::uint64_t seed;
    ParserModel model;
    TrainHistory history;
};

struct TrainedModel {
    ParserModel model;
    TrainHistory history;
};

using SeedTrainer = std::function<TrainedModel(std::uint64_t seed)>;

// One run per configured seed. A Diverged run is replaced by a run with the
// retry seed; the retry seed is used at most once and its divergence raises
// ProtocolFailed.
std::vector<SeedRun> run_protocol(const SeedTrainer& trainer, const TrainConfig& cfg);

struct DatasetBundle {
    std::vector<TaggedAddress> train;
    std::vector<TaggedAddress> val;
};

// Learns the vocabulary once (composed variant) and trains every seed.
std::vector<SeedRun> run_protocol(const DatasetBundle& data, const TrainConfig& cfg,
                                  const ModelConfig& base, const EpochCallback& on_epoch = {});

}  // namespace addrparse
