#pragma once

#include <cstdint>
#include <span>

#include "addrparse/nn/tensor.hpp"

namespace addrparse::nn {

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Max-shifted softmax of each row.
RowVector softmax(const RowVector& logits);
Matrix softmax_rows(const Matrix& logits);

// Mean over unmasked rows of -log softmax(row)[target]. A mask value of 0
// excludes the row. Throws AllMasked when nothing remains.
double cross_entropy(const Matrix& logits, std::span<const int> targets,
                     std::span<const std::uint8_t> mask);

struct LstmState {
    RowVector h;
    RowVector c;
};

// One LSTM step for a single example.
LstmState lstm_step(const RowVector& x, const RowVector& h, const RowVector& c,
                    const LstmCellParams& p);

// Batched forward used by both lstm_step and the tape op. Rows of x, h, c are
// examples; gates holds the activated i, f, g, o blocks.
struct LstmForward {
    Matrix gates;   // B x 4H
    Matrix h;       // B x H
    Matrix c;       // B x H
    Matrix tanh_c;  // B x H
};

LstmForward lstm_forward(const Matrix& x, const Matrix& h, const Matrix& c, const Matrix& w_input,
                         const Matrix& w_hidden, const Matrix& bias);

}  // namespace addrparse::nn
