#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "addrparse/nn/tape.hpp"
#include "addrparse/rng.hpp"
#include "addrparse/tagger.hpp"

namespace addrparse::testing {

struct GradCheckResult {
    double max_rel_error = 0.0;
    std::string worst;  // "block[row,col]"
    std::size_t checked = 0;
    std::map<std::string, std::size_t> per_block;
};

inline double rel_error(double analytic, double numeric, double floor = 1e-6) {
    return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
}

// Mean per-token loss of one batch.
inline double batch_loss(ParserModel& model, const Batch& batch, bool teacher) {
    nn::Tape tape(false);
    WordCache cache;
    auto f = forward_batch(tape, model, batch, teacher, cache);
    return f.loss_sum.scalar() / static_cast<double>(f.token_count);
}

// Central differences against reverse mode on `per_block` random entries of
// every parameter block.
inline GradCheckResult check_model_gradients(ParserModel& model, const Batch& batch, int per_block,
                                             std::uint64_t seed, bool teacher = true,
                                             double eps = 1e-5) {
    auto params = model.parameters();
    for (auto* p : params) p->zero_grad();
    {
        nn::Tape tape;
        WordCache cache;
        auto f = forward_batch(tape, model, batch, teacher, cache);
        tape.backward(nn::scale(f.loss_sum, 1.0 / static_cast<double>(f.token_count)));
    }
    GradCheckResult out;
    Rng rng(seed);
    for (auto* p : params) {
        for (int s = 0; s < per_block; ++s) {
            const auto r = static_cast<Eigen::Index>(rng.index(static_cast<std::size_t>(p->value.rows())));
            const auto c = static_cast<Eigen::Index>(rng.index(static_cast<std::size_t>(p->value.cols())));
            const double saved = p->value(r, c);
            p->value(r, c) = saved + eps;
            const double up = batch_loss(model, batch, teacher);
            p->value(r, c) = saved - eps;
            const double down = batch_loss(model, batch, teacher);
            p->value(r, c) = saved;
            const double numeric = (up - down) / (2.0 * eps);
            const double err = rel_error(p->grad(r, c), numeric);
            if (err > out.max_rel_error) {
                out.max_rel_error = err;
                out.worst = p->name + "[" + std::to_string(r) + "," + std::to_string(c) + "]";
            }
            ++out.checked;
            ++out.per_block[p->name];
        }
    }
    return out;
}

}  // namespace addrparse::testing
