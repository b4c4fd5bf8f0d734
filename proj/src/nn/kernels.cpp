#include "addrparse/nn/kernels.hpp"

#include <cmath>
#include <string>

#include "addrparse/error.hpp"

namespace addrparse::nn {

RowVector softmax(const RowVector& logits) {
    RowVector e = (logits.array() - logits.maxCoeff()).exp().matrix();
    return e / e.sum();
}

Matrix softmax_rows(const Matrix& logits) {
    Matrix out(logits.rows(), logits.cols());
    for (Eigen::Index r = 0; r < logits.rows(); ++r) out.row(r) = softmax(logits.row(r));
    return out;
}

double cross_entropy(const Matrix& logits, std::span<const int> targets,
                     std::span<const std::uint8_t> mask) {
    if (targets.size() != static_cast<std::size_t>(logits.rows()) || mask.size() != targets.size()) {
        throw DimensionMismatch("cross_entropy: targets/mask length must equal logits rows");
    }
    double total = 0.0;
    std::size_t count = 0;
    for (Eigen::Index r = 0; r < logits.rows(); ++r) {
        if (!mask[r]) continue;
        const int t = targets[r];
        if (t < 0 || t >= logits.cols()) throw DimensionMismatch("cross_entropy: target out of range");
        const double m = logits.row(r).maxCoeff();
        const double lse = m + std::log((logits.row(r).array() - m).exp().sum());
        total += lse - logits(r, t);
        ++count;
    }
    if (count == 0) throw AllMasked();
    return total / static_cast<double>(count);
}

LstmForward lstm_forward(const Matrix& x, const Matrix& h, const Matrix& c, const Matrix& w_input,
                         const Matrix& w_hidden, const Matrix& bias) {
    const Eigen::Index H = w_hidden.cols();
    if (w_input.rows() != 4 * H || w_hidden.rows() != 4 * H || bias.cols() != 4 * H ||
        x.cols() != w_input.cols() || h.cols() != H || c.cols() != H || h.rows() != x.rows() ||
        c.rows() != x.rows()) {
        throw DimensionMismatch("lstm: input " + std::to_string(x.cols()) + ", hidden " +
                                std::to_string(h.cols()) + " do not fit weights " +
                                std::to_string(w_input.rows()) + "x" + std::to_string(w_input.cols()));
    }
    LstmForward f;
    f.gates.noalias() = x * w_input.transpose();
    f.gates.noalias() += h * w_hidden.transpose();
    f.gates.rowwise() += bias.row(0);

    auto g = f.gates.array();
    g.leftCols(2 * H) = 1.0 / (1.0 + (-g.leftCols(2 * H)).exp());
    g.middleCols(2 * H, H) = g.middleCols(2 * H, H).tanh();
    g.rightCols(H) = 1.0 / (1.0 + (-g.rightCols(H)).exp());

    f.c = (g.middleCols(H, H) * c.array() + g.leftCols(H) * g.middleCols(2 * H, H)).matrix();
    f.tanh_c = f.c.array().tanh().matrix();
    f.h = (g.rightCols(H) * f.tanh_c.array()).matrix();
    return f;
}

LstmState lstm_step(const RowVector& x, const RowVector& h, const RowVector& c,
                    const LstmCellParams& p) {
    if (x.cols() != p.input_dim || h.cols() != p.hidden_dim || c.cols() != p.hidden_dim) {
        throw DimensionMismatch("lstm_step: expected input " + std::to_string(p.input_dim) +
                                " and hidden " + std::to_string(p.hidden_dim));
    }
    auto f = lstm_forward(x, h, c, p.w_input.value, p.w_hidden.value, p.bias.value);
    return {f.h.row(0), f.c.row(0)};
}

}  // namespace addrparse::nn
