#include <doctest.h>

#include <cmath>

#include "addrparse/error.hpp"
#include "addrparse/nn/kernels.hpp"
#include "addrparse/nn/optim.hpp"
#include "addrparse/nn/tape.hpp"
#include "support/oracles.hpp"

using namespace addrparse;
using namespace addrparse::nn;

namespace {

Matrix random_matrix(Eigen::Index r, Eigen::Index c, Rng& rng, double k = 1.0) {
    Matrix m(r, c);
    fill_uniform(m, rng, k);
    return m;
}

std::vector<double> row_vec(const Matrix& m, Eigen::Index r = 0) {
    return std::vector<double>(m.row(r).data(), m.row(r).data() + m.cols());
}

// Central differences of f around every entry of x.
template <typename F>
Matrix numeric_grad(Matrix x, F f, double eps = 1e-6) {
    Matrix g(x.rows(), x.cols());
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        for (Eigen::Index j = 0; j < x.cols(); ++j) {
            const double s = x(i, j);
            x(i, j) = s + eps;
            const double up = f(x);
            x(i, j) = s - eps;
            const double down = f(x);
            x(i, j) = s;
            g(i, j) = (up - down) / (2 * eps);
        }
    }
    return g;
}

double max_abs_diff(const Matrix& a, const Matrix& b) { return (a - b).cwiseAbs().maxCoeff(); }

}  // namespace

TEST_CASE("softmax examples") {
    RowVector a(2);
    a << 0.0, 0.0;
    CHECK(softmax(a)(0) == doctest::Approx(0.5).epsilon(1e-15));
    RowVector c = RowVector::Constant(8, 3.7);
    for (double p : softmax(c)) CHECK(std::abs(p - 0.125) < 1e-15);
    RowVector v(3);
    v << 1.0, 2.0, 3.0;
    const double z = std::exp(1.0) + std::exp(2.0) + std::exp(3.0);
    const RowVector s = softmax(v);
    CHECK(std::abs(s(0) - std::exp(1.0) / z) < 1e-12);
    CHECK(std::abs(s(1) - std::exp(2.0) / z) < 1e-12);
    CHECK(std::abs(s(2) - std::exp(3.0) / z) < 1e-12);
    RowVector big(2);
    big << 1000.0, 1000.0;
    CHECK(softmax(big)(1) == doctest::Approx(0.5));
}

TEST_CASE("cross-entropy examples") {
    Matrix uniform = Matrix::Zero(3, 8);
    std::vector<int> t{0, 3, 7};
    std::vector<std::uint8_t> m{1, 1, 1};
    CHECK(std::abs(cross_entropy(uniform, t, m) - std::log(8.0)) < 1e-12);

    double prev = 1e9;
    for (double gap : {1.0, 5.0, 10.0, 30.0}) {
        Matrix conf = Matrix::Zero(1, 8);
        conf(0, 2) = gap;
        std::vector<int> t1{2};
        std::vector<std::uint8_t> m1{1};
        const double l = cross_entropy(conf, t1, m1);
        CHECK(l < prev);
        prev = l;
    }
    CHECK(prev < 1e-10);

    Rng rng(4);
    Matrix logits = random_matrix(5, 8, rng, 3.0);
    std::vector<int> t5{1, 0, 7, 4, 4};
    std::vector<std::uint8_t> m5{1, 0, 1, 1, 0};
    double expected = 0.0;
    for (int r : {0, 2, 3}) {
        double denom = 0.0;
        for (int k = 0; k < 8; ++k) denom += std::exp(logits(r, k));
        expected += -std::log(std::exp(logits(r, t5[r])) / denom);
    }
    expected /= 3.0;
    CHECK(std::abs(cross_entropy(logits, t5, m5) - expected) < 1e-10);

    std::vector<std::uint8_t> none(5, 0);
    CHECK_THROWS_AS(cross_entropy(logits, t5, none), AllMasked);
}

TEST_CASE("lstm_step examples") {
    LstmCellParams p("t", 2, 3);
    RowVector x = RowVector::Ones(2), h = RowVector::Zero(3), c = RowVector::Zero(3);
    auto s = lstm_step(x, h, c, p);
    CHECK(s.h.cwiseAbs().maxCoeff() == 0.0);
    CHECK(s.c.cwiseAbs().maxCoeff() == 0.0);

    c << 1.0, -2.0, 0.5;
    s = lstm_step(x, h, c, p);
    for (int j = 0; j < 3; ++j) {
        CHECK(std::abs(s.c(j) - 0.5 * c(j)) < 1e-15);
        CHECK(std::abs(s.h(j) - 0.5 * std::tanh(0.5 * c(j))) < 1e-15);
    }

    Rng rng(8);
    fill_uniform(p.w_input.value, rng, 1.0);
    fill_uniform(p.w_hidden.value, rng, 1.0);
    fill_uniform(p.bias.value, rng, 1.0);
    x = random_matrix(1, 2, rng);
    h = random_matrix(1, 3, rng);
    c = random_matrix(1, 3, rng);
    s = lstm_step(x, h, c, p);
    const auto ref = testing::ref_lstm_step(row_vec(x), row_vec(h), row_vec(c), p.w_input.value,
                                            p.w_hidden.value, p.bias.value);
    for (int j = 0; j < 3; ++j) {
        CHECK(std::abs(s.h(j) - ref.h[j]) < 1e-10);
        CHECK(std::abs(s.c(j) - ref.c[j]) < 1e-10);
    }
    CHECK_THROWS_AS(lstm_step(RowVector::Ones(5), h, c, p), DimensionMismatch);
}

TEST_CASE("backward of simple functions") {
    Tape t;
    Var w = t.variable(Matrix::Constant(1, 1, 3.0));
    t.backward(mul(w, w));
    CHECK(t.grad(w)(0, 0) == doctest::Approx(6.0));

    Tape t2;
    Var m = t2.variable(Matrix::Ones(2, 2));
    CHECK_THROWS_AS(t2.backward(m), NotScalar);
}

TEST_CASE("tape ops agree with finite differences") {
    Rng rng(12);
    const Matrix a0 = random_matrix(3, 4, rng), b0 = random_matrix(3, 4, rng);
    const Matrix w0 = random_matrix(5, 4, rng), bias0 = random_matrix(1, 5, rng);
    const Matrix coeff = random_matrix(3, 5, rng);

    // f(a) = sum(coeff .* tanh(sigmoid(a .* b + a) W^T + bias)) with extra ops mixed in.
    auto build = [&](Tape& t, const Matrix& a, const Matrix& w) {
        Var av = t.variable(a);
        Var bv = t.constant(b0);
        Var wv = t.variable(w);
        Var inner = sigmoid(add(mul(av, bv), scale(av, 0.7)));
        Var lin = linear(inner, wv, t.constant(bias0));
        Var both = concat_cols(nn::tanh(lin), av);
        Var picked = slice_cols(both, 0, 5);
        Var rows = gather_rows(picked, {2, 0, 0});
        Var out = sum(mul(rows, t.constant(coeff)));
        Var extra = sum(matmul(av, t.constant(w0.transpose())));
        return std::tuple{av, wv, add(out, scale(extra, 0.1))};
    };
    Tape t;
    auto [av, wv, loss] = build(t, a0, w0);
    t.backward(loss);
    auto f_a = [&](const Matrix& a) {
        Tape tt(false);
        return std::get<2>(build(tt, a, w0)).scalar();
    };
    auto f_w = [&](const Matrix& w) {
        Tape tt(false);
        return std::get<2>(build(tt, a0, w)).scalar();
    };
    CHECK(max_abs_diff(t.grad(av), numeric_grad(a0, f_a)) < 1e-8);
    CHECK(max_abs_diff(t.grad(wv), numeric_grad(w0, f_w)) < 1e-8);
}

TEST_CASE("masked lstm op carries state and blocks gradients") {
    Rng rng(21);
    LstmCellParams p("m", 3, 4);
    p.init(rng);
    const Matrix x = random_matrix(2, 3, rng);
    const Matrix s0 = random_matrix(2, 8, rng, 0.5);
    Tape t;
    LstmVars vars = bind(t, p);
    Var xv = t.variable(x);
    Var sv = t.variable(s0);
    Var out = lstm(xv, sv, vars, {1, 0});
    CHECK(max_abs_diff(out.value().row(1), s0.row(1)) == 0.0);
    const auto ref = testing::ref_lstm_step(row_vec(x), std::vector<double>(s0.data(), s0.data() + 4),
                                            std::vector<double>(s0.data() + 4, s0.data() + 8),
                                            p.w_input.value, p.w_hidden.value, p.bias.value);
    for (int j = 0; j < 4; ++j) CHECK(std::abs(out.value()(0, j) - ref.h[j]) < 1e-12);
    t.backward(sum(out));
    CHECK(t.grad(xv).row(1).cwiseAbs().maxCoeff() == 0.0);
    CHECK(t.grad(sv).row(1).isApprox(RowVector::Ones(8)));

    auto f = [&](const Matrix& xx) {
        Tape tt(false);
        LstmVars v = bind(tt, p);
        return sum(lstm(tt.constant(xx), tt.constant(s0), v, {1, 0})).scalar();
    };
    CHECK(max_abs_diff(t.grad(xv), numeric_grad(x, f)) < 1e-8);
}

TEST_CASE("cross_entropy_sum gradient is softmax minus one-hot") {
    Rng rng(5);
    const Matrix z = random_matrix(3, 8, rng, 2.0);
    Tape t;
    Var zv = t.variable(z);
    t.backward(cross_entropy_sum(zv, {1, 2, 3}, {1, 1, 0}));
    const Matrix g = t.grad(zv);
    const Matrix p = softmax_rows(z);
    for (int r = 0; r < 2; ++r) {
        for (int k = 0; k < 8; ++k) {
            CHECK(std::abs(g(r, k) - (p(r, k) - (k == r + 1 ? 1.0 : 0.0))) < 1e-14);
        }
    }
    CHECK(g.row(2).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("sgd step") {
    Parameter p("p", 1, 2);
    p.value << 1.0, 5.0;
    p.grad << 2.0, 0.0;
    std::vector<Parameter*> ps{&p};
    sgd_step(ps, 0.1);
    CHECK(p.value(0, 0) == doctest::Approx(0.8));
    CHECK(p.value(0, 1) == 5.0);
    zero_grad(ps);
    CHECK(p.grad.cwiseAbs().maxCoeff() == 0.0);
    CHECK_THROWS(sgd_step(ps, 0.0));
}
