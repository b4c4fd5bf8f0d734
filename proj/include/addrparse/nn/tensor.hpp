#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstddef>
#include <string>
#include <utility>

#include "addrparse/rng.hpp"

namespace addrparse::nn {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowVector = Eigen::Matrix<double, 1, Eigen::Dynamic>;

// A trainable tensor. grad always has the shape of value.
struct Parameter {
    std::string name;
    Matrix value;
    Matrix grad;

    Parameter() = default;
    Parameter(std::string n, Matrix v)
        : name(std::move(n)), value(std::move(v)), grad(Matrix::Zero(value.rows(), value.cols())) {}
    Parameter(std::string n, Eigen::Index rows, Eigen::Index cols)
        : Parameter(std::move(n), Matrix::Zero(rows, cols)) {}

    std::size_t size() const { return static_cast<std::size_t>(value.size()); }
    void zero_grad() { grad.setZero(); }
};

inline void fill_uniform(Matrix& m, Rng& rng, double k) {
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(-k, k);
}

// Gate blocks are stacked in the order input, forget, cell candidate, output.
struct LstmCellParams {
    int input_dim = 0;
    int hidden_dim = 0;
    Parameter w_input;   // 4H x input_dim
    Parameter w_hidden;  // 4H x H
    Parameter bias;      // 1 x 4H

    LstmCellParams() = default;
    LstmCellParams(const std::string& prefix, int input, int hidden)
        : input_dim(input),
          hidden_dim(hidden),
          w_input(prefix + ".w_input", 4 * hidden, input),
          w_hidden(prefix + ".w_hidden", 4 * hidden, hidden),
          bias(prefix + ".bias", 1, 4 * hidden) {}

    // Weights ~ U(-1/sqrt(H), 1/sqrt(H)); forget-gate bias 1, other biases 0.
    void init(Rng& rng) {
        const double k = 1.0 / std::sqrt(static_cast<double>(hidden_dim));
        fill_uniform(w_input.value, rng, k);
        fill_uniform(w_hidden.value, rng, k);
        bias.value.setZero();
        bias.value.middleCols(hidden_dim, hidden_dim).setOnes();
    }
};

}  // namespace addrparse::nn
