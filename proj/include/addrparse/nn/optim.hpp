#pragma once

#include <span>

#include "addrparse/error.hpp"
#include "addrparse/nn/tensor.hpp"

namespace addrparse::nn {

// Plain SGD: p <- p - lr * g.
inline void sgd_step(std::span<Parameter* const> params, double lr) {
    if (!(lr > 0.0)) throw Error("sgd_step: learning rate must be positive");
    for (Parameter* p : params) p->value.noalias() -= lr * p->grad;
}

inline void zero_grad(std::span<Parameter* const> params) {
    for (Parameter* p : params) p->zero_grad();
}

}  // namespace addrparse::nn
