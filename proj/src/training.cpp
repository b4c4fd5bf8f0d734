#include "addrparse/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

#ifdef __GLIBC__
#include <malloc.h>
#endif

#include "addrparse/error.hpp"
#include "addrparse/nn/optim.hpp"

namespace addrparse {

void TrainConfig::validate() const {
    if (epochs_max < 1) throw ConfigError("epochs_max must be >= 1");
    if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (!(lr0 > 0.0)) throw ConfigError("lr0 must be positive");
    if (plateau_patience < 1) throw ConfigError("plateau_patience must be >= 1");
    if (early_stop_patience < 1) throw ConfigError("early_stop_patience must be >= 1");
    if (!(lr_factor > 0.0 && lr_factor <= 1.0)) throw ConfigError("lr_factor must lie in (0, 1]");
    if (teacher_forcing_ratio < 0.0 || teacher_forcing_ratio > 1.0) {
        throw ConfigError("teacher_forcing_ratio must lie in [0, 1]");
    }
    if (seeds.empty()) throw ConfigError("seeds: at least one seed required");
}

std::string_view stop_reason_name(StopReason r) {
    return r == StopReason::EarlyStopping ? "early_stopping" : "max_epochs";
}

EpochController::EpochController(const TrainConfig& cfg)
    : cfg_(cfg), lr_(cfg.lr0), best_(std::numeric_limits<double>::infinity()) {}

EpochController::Decision EpochController::end_epoch(double val_loss) {
    Decision d;
    if (val_loss < best_) {
        best_ = val_loss;
        since_best_ = 0;
        since_reduction_ = 0;
        d.improved = true;
    } else {
        ++since_best_;
        ++since_reduction_;
        if (since_reduction_ >= cfg_.plateau_patience) {
            lr_ *= cfg_.lr_factor;
            since_reduction_ = 0;
        }
    }
    d.stop = since_best_ >= cfg_.early_stop_patience;
    d.lr = lr_;
    return d;
}

namespace {

void by_length(std::span<const TaggedAddress*> v) {
    std::stable_sort(v.begin(), v.end(), [](const TaggedAddress* a, const TaggedAddress* b) {
        return a->tokens.size() > b->tokens.size();
    });
}

std::vector<Batch> cut(std::vector<const TaggedAddress*>& order, std::size_t batch_size) {
    std::vector<Batch> out;
    for (std::size_t i = 0; i < order.size(); i += batch_size) {
        const auto end = std::min(order.size(), i + batch_size);
        const auto group = std::span(order).subspan(i, end - i);
        by_length(group);
        out.push_back(make_batch(group));
    }
    return out;
}

}  // namespace

std::vector<Batch> make_batches(std::span<const TaggedAddress> corpus, int batch_size, Rng& rng) {
    if (batch_size < 1) throw Error("make_batches: batch_size must be >= 1");
    const auto bs = static_cast<std::size_t>(batch_size);
    std::vector<const TaggedAddress*> order;
    order.reserve(corpus.size());
    for (const auto& a : corpus) order.push_back(&a);
    rng.shuffle(order);
    const std::size_t pool = bs * kBucketBatches;
    for (std::size_t i = 0; i < order.size(); i += pool) {
        by_length(std::span(order).subspan(i, std::min(pool, order.size() - i)));
    }
    auto out = cut(order, bs);
    rng.shuffle(out);
    return out;
}

std::vector<Batch> make_batches(std::span<const TaggedAddress> corpus, int batch_size) {
    if (batch_size < 1) throw Error("make_batches: batch_size must be >= 1");
    std::vector<const TaggedAddress*> order;
    for (const auto& a : corpus) order.push_back(&a);
    return cut(order, static_cast<std::size_t>(batch_size));
}

double corpus_loss(ParserModel& model, std::span<const Batch> batches, WordCache& cache,
                   nn::Precision precision) {
    double total = 0.0;
    std::size_t tokens = 0;
    for (const auto& b : batches) {
        nn::Tape tape(false, precision);
        auto f = forward_batch(tape, model, b, false, cache);
        total += f.loss_sum.scalar();
        tokens += f.token_count;
    }
    if (tokens == 0) throw AllMasked();
    return total / static_cast<double>(tokens);
}

namespace {

// Keep freed tape memory in the heap.
void retain_heap() {
#ifdef __GLIBC__
    static const bool once = [] {
        mallopt(M_MMAP_THRESHOLD, 32 << 20);
        mallopt(M_TRIM_THRESHOLD, 1 << 30);
        return true;
    }();
    (void)once;
#endif
}

std::vector<nn::Matrix> snapshot(const std::vector<nn::Parameter*>& params) {
    std::vector<nn::Matrix> out;
    out.reserve(params.size());
    for (const auto* p : params) out.push_back(p->value);
    return out;
}

void restore(const std::vector<nn::Parameter*>& params, const std::vector<nn::Matrix>& values) {
    for (std::size_t i = 0; i < params.size(); ++i) params[i]->value = values[i];
}

}  // namespace

TrainHistory train(ParserModel& model, std::span<const TaggedAddress> train_set,
                   std::span<const TaggedAddress> val_set, const TrainConfig& cfg,
                   const EpochCallback& on_epoch) {
    cfg.validate();
    retain_heap();
    if (train_set.empty()) throw Error("train: empty training set");
    if (val_set.empty()) throw Error("train: empty validation set");

    const auto start = std::chrono::steady_clock::now();
    const auto params = model.parameters();
    nn::zero_grad(params);
    Rng rng(derive_seed(model.config().seed, 0x7ea1));
    WordCache cache;
    const auto val_batches = make_batches(val_set, cfg.batch_size);

    EpochController controller(cfg);
    TrainHistory history;
    std::vector<nn::Matrix> best = snapshot(params);
    double lr = cfg.lr0;

    for (int epoch = 1; epoch <= cfg.epochs_max; ++epoch) {
        const auto batches = make_batches(train_set, cfg.batch_size, rng);
        double loss_total = 0.0;
        std::size_t tokens = 0;
        for (const auto& b : batches) {
            const bool teacher = rng.bernoulli(cfg.teacher_forcing_ratio);
            nn::Tape tape(true, cfg.lstm_precision);
            auto f = forward_batch(tape, model, b, teacher, cache);
            const double batch_sum = f.loss_sum.scalar();
            if (!std::isfinite(batch_sum)) throw Diverged(epoch, batch_sum);
            nn::Var loss = nn::scale(f.loss_sum, 1.0 / static_cast<double>(f.token_count));
            tape.backward(loss);
            nn::sgd_step(params, lr);
            nn::zero_grad(params);
            loss_total += batch_sum;
            tokens += f.token_count;
        }
        EpochRecord rec;
        rec.epoch = epoch;
        rec.train_loss = loss_total / static_cast<double>(tokens);
        if (!std::isfinite(rec.train_loss) ||
            (epoch > cfg.divergence_grace_epochs && rec.train_loss > cfg.divergence_threshold)) {
            throw Diverged(epoch, rec.train_loss);
        }
        rec.val_loss = corpus_loss(model, val_batches, cache, cfg.lstm_precision);
        const auto d = controller.end_epoch(rec.val_loss);
        rec.lr = d.lr;
        lr = d.lr;
        history.epochs.push_back(rec);
        if (d.improved) {
            best = snapshot(params);
            history.best_epoch = epoch;
            history.best_val_loss = rec.val_loss;
        }
        if (on_epoch) on_epoch(rec);
        if (d.stop) {
            history.stop_reason = StopReason::EarlyStopping;
            break;
        }
    }
    restore(params, best);
    history.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return history;
}

BpeVocab learn_corpus_vocab(std::span<const TaggedAddress> corpus, int num_merges) {
    std::vector<std::string> words;
    for (const auto& a : corpus) {
        for (const auto& t : a.tokens) words.push_back(normalize_digits(t));
    }
    return learn_bpe(words, num_merges);
}

std::vector<SeedRun> run_protocol(const SeedTrainer& trainer, const TrainConfig& cfg) {
    cfg.validate();
    std::vector<SeedRun> runs;
    bool retry_used = false;
    for (std::uint64_t seed : cfg.seeds) {
        try {
            auto t = trainer(seed);
            runs.push_back({seed, std::move(t.model), std::move(t.history)});
        } catch (const Diverged& e) {
            if (retry_used) {
                throw ProtocolFailed("seed " + std::to_string(seed) +
                                     " diverged and the retry seed was already spent: " + e.what());
            }
            retry_used = true;
            try {
                auto t = trainer(cfg.retry_seed);
                runs.push_back({cfg.retry_seed, std::move(t.model), std::move(t.history)});
            } catch (const Diverged& again) {
                throw ProtocolFailed("retry seed " + std::to_string(cfg.retry_seed) +
                                     " diverged as well: " + again.what());
            }
        }
    }
    return runs;
}

std::vector<SeedRun> run_protocol(const DatasetBundle& data, const TrainConfig& cfg,
                                  const ModelConfig& base, const EpochCallback& on_epoch) {
    std::optional<BpeVocab> vocab;
    if (base.variant == Variant::Composed) vocab = learn_corpus_vocab(data.train, base.bpe_merges);
    return run_protocol(
        [&](std::uint64_t seed) {
            ModelConfig mc = base;
            mc.seed = seed;
            auto model = ParserModel::create(mc, vocab);
            auto history = train(model, data.train, data.val, cfg, on_epoch);
            return TrainedModel{std::move(model), std::move(history)};
        },
        cfg);
}

}  // namespace addrparse
