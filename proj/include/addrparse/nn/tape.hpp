#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <memory>
#include <vector>

#include "addrparse/nn/tensor.hpp"

namespace addrparse::nn {

class Tape;

// Arithmetic used inside the fused LSTM op. Single keeps parameters and
// gradients in double but runs the op's products and activations in float.
enum class Precision { Double, Single };

// Handle to a value recorded on a Tape.
class Var {
public:
    Var() = default;

    bool valid() const { return tape_ != nullptr; }
    int id() const { return id_; }
    Tape& tape() const { return *tape_; }
    const Matrix& value() const;
    Eigen::Index rows() const { return value().rows(); }
    Eigen::Index cols() const { return value().cols(); }
    // Convenience for 1x1 results.
    double scalar() const { return value()(0, 0); }

private:
    friend class Tape;

// Arithmetic used inside the fused LSTM op. Single keeps parameters and
// gradients in double but runs the op's products and activations in float.
enum class Precision { Double, Single };
    Var(Tape* tape, int id) : tape_(tape), id_(id) {}

    Tape* tape_ = nullptr;
    int id_ = -1;
};

// Reverse-mode recorder. Operations append nodes in evaluation order;
// backward() walks them in reverse. Parameter leaves accumulate straight into
// Parameter::grad, so several backward passes add up until zero_grad().
class Tape {
public:
    using BackwardFn = std::function<void(Tape&, const Matrix& out_grad)>;

    // With grad_enabled = false nothing is recorded for backward; used for
    // evaluation passes.
    explicit Tape(bool grad_enabled = true, Precision lstm_precision = Precision::Double)
        : grad_enabled_(grad_enabled), lstm_precision_(lstm_precision) {}
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    Var constant(Matrix value);
    Var parameter(Parameter& p);
    // Leaf whose gradient is kept on the tape (see grad()).
    Var variable(Matrix value);

    const Matrix& value(Var v) const;
    // Gradient of the last backward() root w.r.t. v; zero if v was unreachable.
    Matrix grad(Var v) const;
    bool requires_grad(Var v) const { return nodes_[v.id()].requires_grad; }

    // Throws NotScalar unless root is 1x1.
    void backward(Var root);

    std::size_t size() const { return nodes_.size(); }
    Precision lstm_precision() const { return lstm_precision_; }

    // Used by op implementations.
    Var record(Matrix value, bool requires_grad, BackwardFn fn);
    // Adds delta into v's gradient; no-op for nodes that do not need one.
    template <typename Expr>
    void accumulate(Var v, const Expr& delta) {
        Node& n = nodes_[v.id()];
        if (!n.requires_grad) return;
        Matrix& g = n.param ? n.param->grad : n.grad;
        if (g.size() == 0) {
            g = delta;
        } else {
            g += delta;
        }
    }
    // Adds delta into the first delta.rows() rows of v's gradient.
    template <typename Expr>
    void accumulate_top_rows(Var v, const Expr& delta) {
        Node& n = nodes_[v.id()];
        if (!n.requires_grad) return;
        Matrix& g = n.param ? n.param->grad : n.grad;
        if (g.size() == 0) {
            const Matrix& val = n.param ? n.param->value : n.value;
            g.resize(val.rows(), val.cols());
            g.topRows(delta.rows()) = delta;
            g.bottomRows(val.rows() - delta.rows()).setZero();
        } else {
            g.topRows(delta.rows()) += delta;
        }
    }
    // Moves delta in when v has no gradient yet.
    void accumulate_owned(Var v, Matrix&& delta);
    // Direct access for sparse updates (row scatter).
    Matrix* grad_storage(Var v);

private:
    struct Node {
        Matrix value;
        Parameter* param = nullptr;
        Matrix grad;
        bool requires_grad = false;
        BackwardFn backward;
    };

    std::deque<Node> nodes_;
    bool grad_enabled_ = true;
    Precision lstm_precision_ = Precision::Double;
};

inline const Matrix& Var::value() const { return tape_->value(*this); }

using MatrixF = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct LstmWeightsF {
    MatrixF w_hidden;
    MatrixF grad_w_hidden;  // summed over steps, added to the double gradient once
};

// Weight blocks of an LSTM bound to a tape. single holds a float copy of the
// recurrent weights when the tape runs the op in single precision.
struct LstmVars {
    Var w_input;
    Var w_hidden;
    Var bias;
    std::shared_ptr<LstmWeightsF> single;
    Var flush;  // its backward runs after every step's and moves grad_w_hidden over
};

LstmVars bind(Tape& tape, LstmCellParams& p);

// Elementwise and algebraic ops. Shapes must agree exactly; there is no
// broadcasting other than the bias row in linear().
Var add(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double s);
Var sum(Var a);
Var matmul(Var a, Var b);
Var sigmoid(Var a);
Var tanh(Var a);
// x W^T + b, with W stored out x in and b a 1 x out row (b may be invalid).
Var linear(Var x, Var w, Var b = {});
Var concat_cols(Var a, Var b);
Var slice_cols(Var a, Eigen::Index start, Eigen::Index count);
Var gather_rows(Var table, std::vector<int> rows);

// LSTM step over a batch. state is B x 2H laid out as [h | c]. Rows whose
// mask entry is 0 carry their state through unchanged (used for padding).
Var lstm(Var x, Var state, const LstmVars& p, std::vector<std::uint8_t> mask = {});
// x W_input^T + bias. Projecting a whole table once and gathering its rows
// per step is equivalent to calling lstm() on the gathered inputs.
Var lstm_input_gates(Var x, const LstmVars& p);
// The step of lstm() given precomputed input gates (B x 4H).
Var lstm_from_gates(Var input_gates, Var state, const LstmVars& p, std::vector<std::uint8_t> mask = {});
Var lstm_hidden(Var state);

// Sum over unmasked rows of -log softmax(logits)[target]; returns 1x1.
Var cross_entropy_sum(Var logits, std::vector<int> targets, std::vector<std::uint8_t> mask);

}  // namespace addrparse::nn
