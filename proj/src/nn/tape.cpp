#include "addrparse/nn/tape.hpp"

#include <cmath>
#include <string>
#include <type_traits>

#include "addrparse/error.hpp"
#include "addrparse/nn/kernels.hpp"

namespace addrparse::nn {

Var Tape::constant(Matrix value) { return record(std::move(value), false, nullptr); }

Var Tape::variable(Matrix value) { return record(std::move(value), true, nullptr); }

Var Tape::parameter(Parameter& p) {
    Node n;
    n.param = &p;
    n.requires_grad = grad_enabled_;
    nodes_.push_back(std::move(n));
    return Var(this, static_cast<int>(nodes_.size() - 1));
}

Var Tape::record(Matrix value, bool requires_grad, BackwardFn fn) {
    Node n;
    n.value = std::move(value);
    n.requires_grad = requires_grad && grad_enabled_;
    if (n.requires_grad) n.backward = std::move(fn);
    nodes_.push_back(std::move(n));
    return Var(this, static_cast<int>(nodes_.size() - 1));
}

const Matrix& Tape::value(Var v) const {
    const Node& n = nodes_[v.id()];
    return n.param ? n.param->value : n.value;
}

Matrix Tape::grad(Var v) const {
    const Node& n = nodes_[v.id()];
    const Matrix& g = n.param ? n.param->grad : n.grad;
    if (g.size() == 0) return Matrix::Zero(value(v).rows(), value(v).cols());
    return g;
}

void Tape::accumulate_owned(Var v, Matrix&& delta) {
    Node& n = nodes_[v.id()];
    if (!n.requires_grad) return;
    Matrix& g = n.param ? n.param->grad : n.grad;
    if (g.size() == 0) {
        g = std::move(delta);
    } else {
        g += delta;
    }
}

Matrix* Tape::grad_storage(Var v) {
    Node& n = nodes_[v.id()];
    if (!n.requires_grad) return nullptr;
    Matrix& g = n.param ? n.param->grad : n.grad;
    if (g.size() == 0) g = Matrix::Zero(value(v).rows(), value(v).cols());
    return &g;
}

void Tape::backward(Var root) {
    const Matrix& out = value(root);
    if (out.rows() != 1 || out.cols() != 1) throw NotScalar();
    for (auto& n : nodes_) {
        if (!n.param) n.grad.resize(0, 0);
    }
    accumulate(root, Matrix::Ones(1, 1));
    for (int id = root.id(); id >= 0; --id) {
        Node& n = nodes_[id];
        if (!n.backward || n.grad.size() == 0) continue;
        n.backward(*this, n.grad);
    }
}

LstmVars bind(Tape& tape, LstmCellParams& p) {
    LstmVars v{tape.parameter(p.w_input), tape.parameter(p.w_hidden), tape.parameter(p.bias), nullptr, {}};
    if (tape.lstm_precision() == Precision::Single) {
        v.single = std::make_shared<LstmWeightsF>(
            LstmWeightsF{p.w_hidden.value.cast<float>(), MatrixF::Zero(p.w_hidden.value.rows(), p.w_hidden.value.cols())});
        const Var w = v.w_hidden;
        v.flush = tape.record(Matrix::Zero(1, 1), tape.requires_grad(w),
                              [w, acc = v.single](Tape& t, const Matrix&) {
                                  if (Matrix* gw = t.grad_storage(w)) *gw += acc->grad_w_hidden.cast<double>();
                                  acc->grad_w_hidden.setZero();
                              });
    }
    return v;
}

namespace {

bool any_grad(std::initializer_list<Var> vars) {
    for (Var v : vars) {
        if (v.valid() && v.tape().requires_grad(v)) return true;
    }
    return false;
}

void require_same_shape(Var a, Var b, const char* op) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        throw DimensionMismatch(std::string(op) + ": shape " + std::to_string(a.rows()) + "x" +
                                std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
                                std::to_string(b.cols()));
    }
}

}  // namespace

Var add(Var a, Var b) {
    require_same_shape(a, b, "add");
    Tape& t = a.tape();
    return t.record(a.value() + b.value(), any_grad({a, b}), [a, b](Tape& t, const Matrix& g) {
        t.accumulate(a, g);
        t.accumulate(b, g);
    });
}

Var mul(Var a, Var b) {
    require_same_shape(a, b, "mul");
    Tape& t = a.tape();
    Matrix out = a.value().cwiseProduct(b.value());
    return t.record(std::move(out), any_grad({a, b}), [a, b](Tape& t, const Matrix& g) {
        t.accumulate(a, g.cwiseProduct(b.value()));
        t.accumulate(b, g.cwiseProduct(a.value()));
    });
}

Var scale(Var a, double s) {
    Tape& t = a.tape();
    return t.record(a.value() * s, any_grad({a}),
                    [a, s](Tape& t, const Matrix& g) { t.accumulate(a, g * s); });
}

Var sum(Var a) {
    Tape& t = a.tape();
    Matrix out(1, 1);
    out(0, 0) = a.value().sum();
    return t.record(std::move(out), any_grad({a}), [a](Tape& t, const Matrix& g) {
        t.accumulate(a, Matrix::Constant(a.rows(), a.cols(), g(0, 0)));
    });
}

Var matmul(Var a, Var b) {
    if (a.cols() != b.rows()) throw DimensionMismatch("matmul: inner dimensions differ");
    Tape& t = a.tape();
    Matrix out = a.value() * b.value();
    return t.record(std::move(out), any_grad({a, b}), [a, b](Tape& t, const Matrix& g) {
        if (t.requires_grad(a)) t.accumulate(a, g * b.value().transpose());
        if (t.requires_grad(b)) t.accumulate(b, a.value().transpose() * g);
    });
}

Var sigmoid(Var a) {
    Tape& t = a.tape();
    Matrix out = (1.0 / (1.0 + (-a.value().array()).exp())).matrix();
    Matrix y = out;
    return t.record(std::move(out), any_grad({a}), [a, y](Tape& t, const Matrix& g) {
        t.accumulate(a, (g.array() * y.array() * (1.0 - y.array())).matrix());
    });
}

Var tanh(Var a) {
    Tape& t = a.tape();
    Matrix out = a.value().array().tanh().matrix();
    Matrix y = out;
    return t.record(std::move(out), any_grad({a}), [a, y](Tape& t, const Matrix& g) {
        t.accumulate(a, (g.array() * (1.0 - y.array().square())).matrix());
    });
}

Var linear(Var x, Var w, Var b) {
    if (x.cols() != w.cols()) {
        throw DimensionMismatch("linear: input width " + std::to_string(x.cols()) +
                                " vs weight " + std::to_string(w.rows()) + "x" +
                                std::to_string(w.cols()));
    }
    if (b.valid() && (b.rows() != 1 || b.cols() != w.rows())) {
        throw DimensionMismatch("linear: bias must be 1 x out");
    }
    Tape& t = x.tape();
    Matrix out;
    out.noalias() = x.value() * w.value().transpose();
    if (b.valid()) out.rowwise() += b.value().row(0);
    return t.record(std::move(out), any_grad({x, w, b}), [x, w, b](Tape& t, const Matrix& g) {
        if (t.requires_grad(x)) t.accumulate(x, g * w.value());
        if (Matrix* gw = t.grad_storage(w)) gw->noalias() += g.transpose() * x.value();
        if (b.valid()) {
            if (Matrix* gb = t.grad_storage(b)) *gb += g.colwise().sum();
        }
    });
}

Var concat_cols(Var a, Var b) {
    if (a.rows() != b.rows()) throw DimensionMismatch("concat_cols: row counts differ");
    Tape& t = a.tape();
    Matrix out(a.rows(), a.cols() + b.cols());
    out << a.value(), b.value();
    const auto ac = a.cols();
    const auto bc = b.cols();
    return t.record(std::move(out), any_grad({a, b}), [a, b, ac, bc](Tape& t, const Matrix& g) {
        t.accumulate(a, g.leftCols(ac));
        t.accumulate(b, g.rightCols(bc));
    });
}

Var slice_cols(Var a, Eigen::Index start, Eigen::Index count) {
    if (start < 0 || count < 0 || start + count > a.cols()) {
        throw DimensionMismatch("slice_cols: range out of bounds");
    }
    Tape& t = a.tape();
    Matrix out = a.value().middleCols(start, count);
    return t.record(std::move(out), any_grad({a}), [a, start, count](Tape& t, const Matrix& g) {
        if (Matrix* ga = t.grad_storage(a)) ga->middleCols(start, count) += g;
    });
}

Var gather_rows(Var table, std::vector<int> rows) {
    Tape& t = table.tape();
    const Matrix& src = table.value();
    Matrix out(static_cast<Eigen::Index>(rows.size()), src.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i] < 0 || rows[i] >= src.rows()) throw DimensionMismatch("gather_rows: index out of range");
        out.row(static_cast<Eigen::Index>(i)) = src.row(rows[i]);
    }
    return t.record(std::move(out), any_grad({table}),
                    [table, rows = std::move(rows)](Tape& t, const Matrix& g) {
                        Matrix* gt = t.grad_storage(table);
                        if (!gt) return;
                        for (std::size_t i = 0; i < rows.size(); ++i) {
                            gt->row(rows[i]) += g.row(static_cast<Eigen::Index>(i));
                        }
                    });
}

namespace {

template <typename S>
using MatT = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename S>
using ArrT = Eigen::Array<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename S>
const MatT<S>& hidden_weights(const LstmVars& p) {
    if constexpr (std::is_same_v<S, float>) {
        return p.single->w_hidden;
    } else {
        return p.w_hidden.value();
    }
}

// Rows past the last unmasked one are carried through without computing them.
template <typename S>
Var lstm_cell(Var in, Var state, const LstmVars& p, std::vector<std::uint8_t> mask) {
    const Eigen::Index H = p.w_hidden.cols();
    Eigen::Index n = in.rows();
    if (!mask.empty()) {
        while (n > 0 && !mask[static_cast<std::size_t>(n - 1)]) --n;
        mask.resize(static_cast<std::size_t>(n));
    }
    const S one(1);
    Tape& t = in.tape();
    const Matrix& s = state.value();
    MatT<S> h_prev = s.topLeftCorner(n, H).template cast<S>();
    ArrT<S> c_prev = s.topRightCorner(n, H).template cast<S>();

    ArrT<S> gates = in.value().topRows(n).template cast<S>();
    gates.matrix().noalias() += h_prev * hidden_weights<S>(p).transpose();
    gates.leftCols(2 * H) = one / (one + (-gates.leftCols(2 * H)).exp());
    gates.middleCols(2 * H, H) = gates.middleCols(2 * H, H).tanh();
    gates.rightCols(H) = one / (one + (-gates.rightCols(H)).exp());
    const ArrT<S> c = gates.middleCols(H, H) * c_prev + gates.leftCols(H) * gates.middleCols(2 * H, H);
    ArrT<S> tanh_c = c.tanh();

    Matrix out = s;
    out.topLeftCorner(n, H) = (gates.rightCols(H) * tanh_c).matrix().template cast<double>();
    out.topRightCorner(n, H) = c.matrix().template cast<double>();
    for (std::size_t r = 0; r < mask.size(); ++r) {
        if (!mask[r]) out.row(static_cast<Eigen::Index>(r)) = s.row(static_cast<Eigen::Index>(r));
    }
    const bool needs = any_grad({in, state, p.w_hidden});
    auto fn = [in, state, p, H, n, one, mask = std::move(mask), gates = std::move(gates),
               tanh_c = std::move(tanh_c), c_prev = std::move(c_prev),
               h_prev = std::move(h_prev)](Tape& t, const Matrix& g) {
        const auto i = gates.leftCols(H);
        const auto fg = gates.middleCols(H, H);
        const auto cand = gates.middleCols(2 * H, H);
        const auto o = gates.rightCols(H);
        ArrT<S> dh = g.topLeftCorner(n, H).template cast<S>();
        ArrT<S> dc = g.topRightCorner(n, H).template cast<S>();
        for (std::size_t r = 0; r < mask.size(); ++r) {
            if (!mask[r]) {
                dh.row(static_cast<Eigen::Index>(r)).setZero();
                dc.row(static_cast<Eigen::Index>(r)).setZero();
            }
        }
        const ArrT<S> dc_total = dc + dh * o * (one - tanh_c.square());
        MatT<S> dz(n, 4 * H);
        dz.leftCols(H) = (dc_total * cand * i * (one - i)).matrix();
        dz.middleCols(H, H) = (dc_total * c_prev * fg * (one - fg)).matrix();
        dz.middleCols(2 * H, H) = (dc_total * i * (one - cand.square())).matrix();
        dz.rightCols(H) = (dh * tanh_c * o * (one - o)).matrix();

        if (t.requires_grad(in)) t.accumulate_top_rows(in, dz.template cast<double>());
        if (t.requires_grad(state)) {
            Matrix ds = g;
            if constexpr (std::is_same_v<S, double>) {
                ds.topLeftCorner(n, H).noalias() = dz * hidden_weights<S>(p);
            } else {
                MatT<S> dh_prev(n, H);
                dh_prev.noalias() = dz * hidden_weights<S>(p);
                ds.topLeftCorner(n, H) = dh_prev.template cast<double>();
            }
            ds.topRightCorner(n, H) = (dc_total * fg).matrix().template cast<double>();
            for (std::size_t r = 0; r < mask.size(); ++r) {
                if (!mask[r]) ds.row(static_cast<Eigen::Index>(r)) = g.row(static_cast<Eigen::Index>(r));
            }
            t.accumulate_owned(state, std::move(ds));
        }
        if (t.requires_grad(p.w_hidden)) {
            if constexpr (std::is_same_v<S, double>) {
                t.grad_storage(p.w_hidden)->noalias() += dz.transpose() * h_prev;
            } else {
                p.single->grad_w_hidden.noalias() += dz.transpose() * h_prev;
                t.accumulate(p.flush, Matrix::Ones(1, 1));
            }
        }
    };
    return t.record(std::move(out), needs, std::move(fn));
}

}  // namespace

Var lstm_input_gates(Var x, const LstmVars& p) {
    if (x.cols() != p.w_input.cols()) {
        throw DimensionMismatch("lstm: input width " + std::to_string(x.cols()) + " does not fit weights " +
                                std::to_string(p.w_input.rows()) + "x" + std::to_string(p.w_input.cols()));
    }
    return linear(x, p.w_input, p.bias);
}

Var lstm_from_gates(Var input_gates, Var state, const LstmVars& p, std::vector<std::uint8_t> mask) {
    const Eigen::Index H = p.w_hidden.cols();
    if (input_gates.cols() != 4 * H) throw DimensionMismatch("lstm: input gates must be B x 4H");
    if (state.cols() != 2 * H || state.rows() != input_gates.rows()) {
        throw DimensionMismatch("lstm: state must be B x 2H");
    }
    if (!mask.empty() && mask.size() != static_cast<std::size_t>(input_gates.rows())) {
        throw DimensionMismatch("lstm: mask length must equal batch size");
    }
    if (p.single) return lstm_cell<float>(input_gates, state, p, std::move(mask));
    return lstm_cell<double>(input_gates, state, p, std::move(mask));
}

Var lstm(Var x, Var state, const LstmVars& p, std::vector<std::uint8_t> mask) {
    return lstm_from_gates(lstm_input_gates(x, p), state, p, std::move(mask));
}

Var lstm_hidden(Var state) { return slice_cols(state, 0, state.cols() / 2); }

Var cross_entropy_sum(Var logits, std::vector<int> targets, std::vector<std::uint8_t> mask) {
    const Matrix& z = logits.value();
    if (targets.size() != static_cast<std::size_t>(z.rows()) || mask.size() != targets.size()) {
        throw DimensionMismatch("cross_entropy_sum: targets/mask length must equal logits rows");
    }
    Matrix probs = softmax_rows(z);
    Matrix out = Matrix::Zero(1, 1);
    for (Eigen::Index r = 0; r < z.rows(); ++r) {
        if (!mask[r]) continue;
        const int tgt = targets[r];
        if (tgt < 0 || tgt >= z.cols()) throw DimensionMismatch("cross_entropy_sum: target out of range");
        const double m = z.row(r).maxCoeff();
        out(0, 0) += m + std::log((z.row(r).array() - m).exp().sum()) - z(r, tgt);
    }
    Tape& t = logits.tape();
    return t.record(std::move(out), any_grad({logits}),
                    [logits, targets = std::move(targets), mask = std::move(mask),
                     probs = std::move(probs)](Tape& t, const Matrix& g) {
                        Matrix d = probs * g(0, 0);
                        for (Eigen::Index r = 0; r < d.rows(); ++r) {
                            if (!mask[r]) {
                                d.row(r).setZero();
                            } else {
                                d(r, targets[r]) -= g(0, 0);
                            }
                        }
                        t.accumulate(logits, d);
                    });
}

}  // namespace addrparse::nn
