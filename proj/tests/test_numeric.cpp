#include <doctest.h>

#include <cmath>
#include <set>

#include "drnn/errors.hpp"
#include "drnn/matrix.hpp"
#include "drnn/rng.hpp"

using namespace drnn;

namespace {

// naive triple loop, the oracle matmul is checked against
Matrix matmul_naive(const Matrix& a, const Matrix& b) {
    Matrix c(a.rows(), b.cols());
    for (int i = 0; i < a.rows(); ++i)
        for (int j = 0; j < b.cols(); ++j) {
            double s = 0.0;
            for (int k = 0; k < a.cols(); ++k) s += a(i, k) * b(k, j);
            c(i, j) = s;
        }
    return c;
}

}  // namespace

TEST_CASE("rng determinism and stream independence") {
    Rng a(42), b(42);
    for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
    Rng c(43);
    CHECK(Rng(42).next_u64() != c.next_u64());
    CHECK(Rng::derive(7, 1) != Rng::derive(7, 2));
    CHECK(Rng::derive(7, 1) == Rng::derive(7, 1));
}

TEST_CASE("rng uniform range and moments") {
    Rng rng(123);
    double sum = 0.0, sum2 = 0.0;
    const int n = 20000;
    for (int i = 0; i < n; ++i) {
        const double u = rng.uniform();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
        sum += u;
        sum2 += u * u;
    }
    CHECK(std::abs(sum / n - 0.5) < 0.01);
    CHECK(std::abs(sum2 / n - 1.0 / 3.0) < 0.01);
}

TEST_CASE("rng normal moments") {
    Rng rng(321);
    double sum = 0.0, sum2 = 0.0;
    const int n = 20000;
    for (int i = 0; i < n; ++i) {
        const double x = rng.normal();
        sum += x;
        sum2 += x * x;
    }
    CHECK(std::abs(sum / n) < 0.03);
    CHECK(std::abs(sum2 / n - 1.0) < 0.05);
}

TEST_CASE("rng uniform_int covers the range without bias artifacts") {
    Rng rng(5);
    std::set<int> seen;
    for (int i = 0; i < 1000; ++i) {
        const int v = rng.uniform_int(7);
        CHECK(v >= 0);
        CHECK(v < 7);
        seen.insert(v);
    }
    CHECK(seen.size() == 7);
    CHECK_THROWS_AS(rng.uniform_int(0), ConfigError);
}

TEST_CASE("matmul agrees with the naive triple loop") {
    Rng rng(9);
    const Matrix a = standard_normal(7, 5, rng);
    const Matrix b = standard_normal(5, 11, rng);
    CHECK(max_abs_diff(matmul(a, b), matmul_naive(a, b)) < 1e-13);

    // transposed variants against explicit transposes
    Matrix at(5, 7);
    for (int i = 0; i < 7; ++i)
        for (int j = 0; j < 5; ++j) at(j, i) = a(i, j);
    CHECK(max_abs_diff(matmul_tn(a, matmul(a, b)), matmul(at, matmul(a, b))) < 1e-13);
    Matrix bt(11, 5);
    for (int i = 0; i < 5; ++i)
        for (int j = 0; j < 11; ++j) bt(j, i) = b(i, j);
    CHECK(max_abs_diff(matmul_nt(a, bt), matmul(a, b)) < 1e-13);
}

TEST_CASE("matmul is bit-reproducible") {
    Rng rng(10);
    const Matrix a = standard_normal(6, 6, rng);
    const Matrix b = standard_normal(6, 6, rng);
    const Matrix c1 = matmul(a, b);
    const Matrix c2 = matmul(a, b);
    for (int i = 0; i < 6; ++i)
        for (int j = 0; j < 6; ++j) CHECK(c1(i, j) == c2(i, j));
}

TEST_CASE("matmul rejects mismatched shapes") {
    CHECK_THROWS_AS(matmul(Matrix(2, 3), Matrix(4, 2)), DimensionError);
}

TEST_CASE("elementwise helpers") {
    Matrix a = Matrix::filled(2, 2, 3.0);
    const Matrix b = Matrix::filled(2, 2, 2.0);
    CHECK(hadamard(a, b)(1, 1) == 6.0);
    CHECK(add(a, b)(0, 0) == 5.0);
    CHECK(sub(a, b)(0, 1) == 1.0);
    axpy_inplace(a, -0.5, b);
    CHECK(a(0, 0) == 2.0);
    Matrix row(1, 2);
    row(0, 0) = 1.0;
    row(0, 1) = -1.0;
    add_row_inplace(a, row);
    CHECK(a(1, 0) == 3.0);
    CHECK(a(1, 1) == 1.0);
    const Matrix cs = col_sum(a);
    CHECK(cs(0, 0) == 6.0);
    CHECK(cs(0, 1) == 2.0);
}

TEST_CASE("col_block round trip") {
    Matrix m(2, 6);
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 6; ++j) m(i, j) = 10 * i + j;
    const Matrix blk = col_block(m, 1, 2);
    CHECK(blk(1, 0) == 12.0);
    Matrix dst(2, 6);
    add_col_block(dst, 1, 2, blk);
    CHECK(dst(1, 2) == 12.0);
    CHECK(dst(1, 0) == 0.0);
}

TEST_CASE("softmax cross entropy on uniform logits gives ln(classes)") {
    const int C = 8;
    Matrix logits(4, C);
    std::vector<int> labels{0, 3, 5, 7};
    const SoftmaxResult r = softmax_cross_entropy(logits, labels);
    CHECK(r.loss == doctest::Approx(std::log(8.0)).epsilon(1e-12));
    // gradient rows sum to zero
    for (int i = 0; i < 4; ++i) {
        double s = 0.0;
        for (int c = 0; c < C; ++c) s += r.dlogits(i, c);
        CHECK(std::abs(s) < 1e-14);
    }
    CHECK_THROWS_AS(softmax_cross_entropy(logits, {0, 1, 2, 8}), IndexError);
}

TEST_CASE("softmax is stable under large shifts") {
    Matrix logits(1, 3);
    logits(0, 0) = 1000.0;
    logits(0, 1) = 999.0;
    logits(0, 2) = 998.0;
    const SoftmaxResult r = softmax_cross_entropy(logits, {0});
    CHECK(std::isfinite(r.loss));
    CHECK(r.dlogits.all_finite());
}

TEST_CASE("softmax gradient matches finite differences") {
    Rng rng(77);
    Parameter p("logits", standard_normal(3, 5, rng));
    const std::vector<int> labels{1, 4, 0};
    const auto f = [&]() { return softmax_cross_entropy(p.value, labels).loss; };
    p.grad = softmax_cross_entropy(p.value, labels).dlogits;
    CHECK(finite_diff_check(f, {&p}, 1e-6) < 1e-7);
}

TEST_CASE("rmsprop single step matches hand arithmetic") {
    Parameter p("w", Matrix::filled(1, 1, 1.0));
    p.grad = Matrix::filled(1, 1, 2.0);
    rmsprop_step(p, 0.001, 0.9, 1e-8);
    // acc = 0.1*4 = 0.4; value = 1 - 0.001*2/sqrt(0.4 + 1e-8)
    const double expected = 1.0 - 0.001 * 2.0 / std::sqrt(0.4 + 1e-8);
    CHECK(p.value(0, 0) == doctest::Approx(expected).epsilon(1e-14));
    CHECK(p.grad(0, 0) == 0.0);  // cleared after the step

    p.grad = Matrix::filled(1, 1, std::nan(""));
    CHECK_THROWS_AS(rmsprop_step(p, 0.001, 0.9, 1e-8), NumericError);
}

TEST_CASE("rmsprop drives a quadratic toward its minimum") {
    Parameter p("x", Matrix::filled(1, 1, 3.0));
    for (int i = 0; i < 4000; ++i) {
        p.grad = Matrix::filled(1, 1, 2.0 * p.value(0, 0));
        rmsprop_step(p, 0.01, 0.9, 1e-8);
    }
    CHECK(std::abs(p.value(0, 0)) < 0.05);
}

TEST_CASE("finite_diff_check flags a wrong gradient") {
    Parameter p("x", Matrix::filled(1, 1, 0.7));
    const auto f = [&]() { return p.value(0, 0) * p.value(0, 0); };
    p.grad = Matrix::filled(1, 1, 2.0 * 0.7);
    CHECK(finite_diff_check(f, {&p}, 1e-5) < 1e-9);
    p.grad = Matrix::filled(1, 1, 1.9);  // deliberately off
    CHECK(finite_diff_check(f, {&p}, 1e-5) > 1e-2);
}

TEST_CASE("standard_normal is seed-deterministic") {
    Rng a(2024), b(2024);
    const Matrix m1 = standard_normal(3, 4, a);
    const Matrix m2 = standard_normal(3, 4, b);
    CHECK(max_abs_diff(m1, m2) == 0.0);
}
