#pragma once

#include <cstddef>
#include <vector>

namespace cfa {

// Dense row-major matrix of doubles. The model is tiny, so 64-bit floats
// everywhere; precision beats speed at this scale.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

    double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
    double* row(std::size_t r) { return data.data() + r * cols; }
    const double* row(std::size_t r) const { return data.data() + r * cols; }

    bool same_shape(const Matrix& o) const {
        return rows == o.rows && cols == o.cols;
    }
};

// Compressed sparse rows; square n x n.
struct SparseMatrix {
    std::size_t n = 0;
    std::vector<std::size_t> row_ptr;  // n + 1
    std::vector<std::size_t> col;
    std::vector<double> val;
};

// All kernels come in two flavors: a serial reference and an OpenMP-parallel
// default. Every output element is produced by exactly one thread with a
// fixed accumulation order, so the two flavors agree bit for bit; tests
// assert exact equality and the bench tool compares their wall time.

// C = A * B
Matrix matmul_serial(const Matrix& a, const Matrix& b);
Matrix matmul(const Matrix& a, const Matrix& b);

// C = A^T * B
Matrix matmul_ta_serial(const Matrix& a, const Matrix& b);
Matrix matmul_ta(const Matrix& a, const Matrix& b);

// C = A * B^T
Matrix matmul_tb_serial(const Matrix& a, const Matrix& b);
Matrix matmul_tb(const Matrix& a, const Matrix& b);

// Y = S * X   (CSR times dense)
Matrix spmm_serial(const SparseMatrix& s, const Matrix& x);
Matrix spmm(const SparseMatrix& s, const Matrix& x);

}  // namespace cfa
