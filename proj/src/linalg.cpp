#include "cfa/linalg.hpp"

#include <stdexcept>

namespace cfa {

namespace {

void require(bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(what);
}

}  // namespace

namespace {

inline void matmul_row(const Matrix& a, const Matrix& b, Matrix& c,
                       std::size_t i) {
    for (std::size_t k = 0; k < a.cols; ++k) {
        double aik = a.at(i, k);
        if (aik == 0.0) continue;
        const double* brow = b.row(k);
        double* crow = c.row(i);
        for (std::size_t j = 0; j < b.cols; ++j) crow[j] += aik * brow[j];
    }
}

inline void matmul_ta_row(const Matrix& a, const Matrix& b, Matrix& c,
                          std::size_t i) {
    // c[i][j] = sum_k a[k][i] * b[k][j]
    for (std::size_t k = 0; k < a.rows; ++k) {
        double aki = a.at(k, i);
        if (aki == 0.0) continue;
        const double* brow = b.row(k);
        double* crow = c.row(i);
        for (std::size_t j = 0; j < b.cols; ++j) crow[j] += aki * brow[j];
    }
}

inline void matmul_tb_row(const Matrix& a, const Matrix& b, Matrix& c,
                          std::size_t i) {
    const double* arow = a.row(i);
    for (std::size_t j = 0; j < b.rows; ++j) {
        const double* brow = b.row(j);
        double acc = 0.0;
        for (std::size_t k = 0; k < a.cols; ++k) acc += arow[k] * brow[k];
        c.at(i, j) = acc;
    }
}

inline void spmm_row(const SparseMatrix& s, const Matrix& x, Matrix& y,
                     std::size_t i) {
    double* yrow = y.row(i);
    for (std::size_t p = s.row_ptr[i]; p < s.row_ptr[i + 1]; ++p) {
        double v = s.val[p];
        const double* xrow = x.row(s.col[p]);
        for (std::size_t j = 0; j < x.cols; ++j) yrow[j] += v * xrow[j];
    }
}

}  // namespace

Matrix matmul_serial(const Matrix& a, const Matrix& b) {
    require(a.cols == b.rows, "matmul: inner dimensions differ");
    Matrix c(a.rows, b.cols);
    for (std::size_t i = 0; i < a.rows; ++i) matmul_row(a, b, c, i);
    return c;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
    require(a.cols == b.rows, "matmul: inner dimensions differ");
    Matrix c(a.rows, b.cols);
    const auto n = static_cast<long long>(a.rows);
#pragma omp parallel for schedule(static)
    for (long long i = 0; i < n; ++i)
        matmul_row(a, b, c, static_cast<std::size_t>(i));
    return c;
}

Matrix matmul_ta_serial(const Matrix& a, const Matrix& b) {
    require(a.rows == b.rows, "matmul_ta: row counts differ");
    Matrix c(a.cols, b.cols);
    for (std::size_t i = 0; i < a.cols; ++i) matmul_ta_row(a, b, c, i);
    return c;
}

Matrix matmul_ta(const Matrix& a, const Matrix& b) {
    require(a.rows == b.rows, "matmul_ta: row counts differ");
    Matrix c(a.cols, b.cols);
    const auto n = static_cast<long long>(a.cols);
#pragma omp parallel for schedule(static)
    for (long long i = 0; i < n; ++i)
        matmul_ta_row(a, b, c, static_cast<std::size_t>(i));
    return c;
}

Matrix matmul_tb_serial(const Matrix& a, const Matrix& b) {
    require(a.cols == b.cols, "matmul_tb: column counts differ");
    Matrix c(a.rows, b.rows);
    for (std::size_t i = 0; i < a.rows; ++i) matmul_tb_row(a, b, c, i);
    return c;
}

Matrix matmul_tb(const Matrix& a, const Matrix& b) {
    require(a.cols == b.cols, "matmul_tb: column counts differ");
    Matrix c(a.rows, b.rows);
    const auto n = static_cast<long long>(a.rows);
#pragma omp parallel for schedule(static)
    for (long long i = 0; i < n; ++i)
        matmul_tb_row(a, b, c, static_cast<std::size_t>(i));
    return c;
}

Matrix spmm_serial(const SparseMatrix& s, const Matrix& x) {
    require(s.n == x.rows, "spmm: dimension mismatch");
    Matrix y(s.n, x.cols);
    for (std::size_t i = 0; i < s.n; ++i) spmm_row(s, x, y, i);
    return y;
}

Matrix spmm(const SparseMatrix& s, const Matrix& x) {
    require(s.n == x.rows, "spmm: dimension mismatch");
    Matrix y(s.n, x.cols);
    const auto n = static_cast<long long>(s.n);
#pragma omp parallel for schedule(static)
    for (long long i = 0; i < n; ++i) spmm_row(s, x, y, static_cast<std::size_t>(i));
    return y;
}

}  // namespace cfa
