#include <stdexcept>
#include "cfa/linalg.hpp"
#include "cfa/rng.hpp"
#include "doctest.h"

using namespace cfa;

namespace {

Matrix random_matrix(std::size_t r, std::size_t c, Rng& rng) {
    Matrix m(r, c);
    for (double& v : m.data) v = 2.0 * rng.uniform_real() - 1.0;
    return m;
}

// Naive triple loop, independent of the kernel implementations.
Matrix naive_matmul(const Matrix& a, const Matrix& b) {
    Matrix c(a.rows, b.cols);
    for (std::size_t i = 0; i < a.rows; ++i)
        for (std::size_t j = 0; j < b.cols; ++j) {
            double acc = 0.0;
            for (std::size_t k = 0; k < a.cols; ++k)
                acc += a.at(i, k) * b.at(k, j);
            c.at(i, j) = acc;
        }
    return c;
}

Matrix transpose(const Matrix& a) {
    Matrix t(a.cols, a.rows);
    for (std::size_t i = 0; i < a.rows; ++i)
        for (std::size_t j = 0; j < a.cols; ++j) t.at(j, i) = a.at(i, j);
    return t;
}

bool approx_equal(const Matrix& a, const Matrix& b, double tol) {
    if (!a.same_shape(b)) return false;
    for (std::size_t i = 0; i < a.data.size(); ++i)
        if (std::abs(a.data[i] - b.data[i]) > tol) return false;
    return true;
}

bool bitwise_equal(const Matrix& a, const Matrix& b) {
    return a.same_shape(b) && a.data == b.data;
}

}  // namespace

TEST_CASE("dense kernels match the naive oracle") {
    Rng rng(1);
    for (int round = 0; round < 5; ++round) {
        std::size_t n = 3 + rng.uniform_index(20);
        std::size_t k = 3 + rng.uniform_index(20);
        std::size_t m = 3 + rng.uniform_index(20);
        Matrix a = random_matrix(n, k, rng);
        Matrix b = random_matrix(k, m, rng);
        CHECK(approx_equal(matmul(a, b), naive_matmul(a, b), 1e-12));
        Matrix at = random_matrix(k, n, rng);  // A^T B with A stored as k x n
        CHECK(approx_equal(matmul_ta(at, b), naive_matmul(transpose(at), b),
                           1e-12));
        Matrix bt = random_matrix(m, k, rng);
        CHECK(approx_equal(matmul_tb(a, bt), naive_matmul(a, transpose(bt)),
                           1e-12));
    }
}

TEST_CASE("dense kernels reject mismatched shapes") {
    Matrix a(3, 4);
    Matrix b(5, 6);
    CHECK_THROWS_AS(matmul(a, b), std::invalid_argument);
    CHECK_THROWS_AS(matmul_ta(a, b), std::invalid_argument);
    CHECK_THROWS_AS(matmul_tb(a, b), std::invalid_argument);
}

TEST_CASE("parallel kernels agree with the serial reference bit for bit") {
    Rng rng(2);
    for (int round = 0; round < 5; ++round) {
        std::size_t n = 5 + rng.uniform_index(40);
        std::size_t k = 5 + rng.uniform_index(40);
        std::size_t m = 5 + rng.uniform_index(40);
        Matrix a = random_matrix(n, k, rng);
        Matrix b = random_matrix(k, m, rng);
        CHECK(bitwise_equal(matmul(a, b), matmul_serial(a, b)));
        Matrix at = random_matrix(k, n, rng);
        CHECK(bitwise_equal(matmul_ta(at, b), matmul_ta_serial(at, b)));
        Matrix bt = random_matrix(m, k, rng);
        CHECK(bitwise_equal(matmul_tb(a, bt), matmul_tb_serial(a, bt)));
    }
}

TEST_CASE("spmm equals densified product and its serial reference") {
    Rng rng(3);
    const std::size_t n = 30;
    SparseMatrix s;
    s.n = n;
    s.row_ptr.push_back(0);
    Matrix dense(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (rng.uniform_real() < 0.15) {
                double v = 2.0 * rng.uniform_real() - 1.0;
                s.col.push_back(j);
                s.val.push_back(v);
                dense.at(i, j) = v;
            }
        }
        s.row_ptr.push_back(s.col.size());
    }
    Matrix x = random_matrix(n, 7, rng);
    CHECK(approx_equal(spmm(s, x), naive_matmul(dense, x), 1e-12));
    CHECK(bitwise_equal(spmm(s, x), spmm_serial(s, x)));
}
