#include "cfa/hausdorff.hpp"

#include <cmath>
#include <limits>
#include <vector>

#include "cfa/errors.hpp"

namespace cfa {

namespace {

void check_inputs(const Matrix& a, const Matrix& b) {
    if (a.rows == 0 || b.rows == 0)
        throw EmptySetError("directed hausdorff over an empty point set");
    if (a.cols != b.cols)
        throw EmptySetError("point sets differ in dimension");
}

// Minimum squared distance from row i of `a` to the rows of `b`. The running
// minimum prunes inner accumulation; the surviving minimum is accumulated in
// full, in index order, so the value matches the naive double loop exactly.
double row_min_sq(const Matrix& a, std::size_t i, const Matrix& b) {
    const double* x = a.row(i);
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < b.rows; ++j) {
        const double* y = b.row(j);
        double s = 0.0;
        for (std::size_t k = 0; k < a.cols; ++k) {
            double d = x[k] - y[k];
            s += d * d;
            if (s > best) break;
        }
        if (s < best) best = s;
    }
    return best;
}

}  // namespace

double directed_hausdorff_serial(const Matrix& a, const Matrix& b) {
    check_inputs(a, b);
    double worst = 0.0;
    for (std::size_t i = 0; i < a.rows; ++i) {
        double m = row_min_sq(a, i, b);
        if (m > worst) worst = m;
    }
    return std::sqrt(worst);
}

double directed_hausdorff(const Matrix& a, const Matrix& b) {
    check_inputs(a, b);
    std::vector<double> mins(a.rows);
#pragma omp parallel for schedule(static)
    for (long long i = 0; i < static_cast<long long>(a.rows); ++i)
        mins[static_cast<std::size_t>(i)] =
            row_min_sq(a, static_cast<std::size_t>(i), b);
    double worst = 0.0;
    for (double m : mins)
        if (m > worst) worst = m;
    return std::sqrt(worst);
}

}  // namespace cfa
