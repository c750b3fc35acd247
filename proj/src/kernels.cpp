#include "arreid/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>

namespace arreid::kernels {

namespace {

// Row kernels shared by both variants; the variants differ only in how rows
// are distributed, which keeps them bitwise identical.

void gemm_row(ConstMatrixView a, ConstMatrixView b, MatrixView c, std::size_t i, bool accumulate) {
    double* out = c.data + i * c.cols;
    if (!accumulate) std::fill(out, out + c.cols, 0.0);
    const double* arow = a.data + i * a.cols;
    for (std::size_t k = 0; k < a.cols; ++k) {
        const double aik = arow[k];
        if (aik == 0.0) continue;
        const double* brow = b.data + k * b.cols;
        for (std::size_t j = 0; j < b.cols; ++j) out[j] += aik * brow[j];
    }
}

void gemm_tn_row(ConstMatrixView a, ConstMatrixView b, MatrixView c, std::size_t i, bool accumulate) {
    double* out = c.data + i * c.cols;
    if (!accumulate) std::fill(out, out + c.cols, 0.0);
    for (std::size_t k = 0; k < a.rows; ++k) {
        const double aki = a.data[k * a.cols + i];
        if (aki == 0.0) continue;
        const double* brow = b.data + k * b.cols;
        for (std::size_t j = 0; j < b.cols; ++j) out[j] += aki * brow[j];
    }
}

void gemm_nt_row(ConstMatrixView a, ConstMatrixView b, MatrixView c, std::size_t i, bool accumulate) {
    double* out = c.data + i * c.cols;
    const double* arow = a.data + i * a.cols;
    for (std::size_t j = 0; j < b.rows; ++j) {
        const double* brow = b.data + j * b.cols;
        double acc = 0.0;
        for (std::size_t k = 0; k < a.cols; ++k) acc += arow[k] * brow[k];
        out[j] = accumulate ? out[j] + acc : acc;
    }
}

double squared_distance(const double* x, const double* y, std::size_t d) {
    double acc = 0.0;
    for (std::size_t k = 0; k < d; ++k) {
        const double diff = x[k] - y[k];
        acc += diff * diff;
    }
    return acc < 0.0 ? 0.0 : acc;
}

void squared_row(ConstMatrixView x, MatrixView out, std::size_t i) {
    for (std::size_t j = 0; j < x.rows; ++j) {
        out(i, j) = i == j ? 0.0 : squared_distance(x.data + i * x.cols, x.data + j * x.cols, x.cols);
    }
}

void euclidean_row(ConstMatrixView x, MatrixView out, std::size_t i) {
    for (std::size_t j = 0; j < x.rows; ++j) {
        out(i, j) = i == j ? 0.0 : std::sqrt(squared_distance(x.data + i * x.cols, x.data + j * x.cols, x.cols));
    }
}

void cross_row(ConstMatrixView a, ConstMatrixView b, MatrixView out, std::size_t i) {
    for (std::size_t j = 0; j < b.rows; ++j) {
        out(i, j) = squared_distance(a.data + i * a.cols, b.data + j * b.cols, a.cols);
    }
}

template <typename RowFn>
void for_rows_serial(std::size_t rows, RowFn&& fn) {
    for (std::size_t i = 0; i < rows; ++i) fn(i);
}

template <typename RowFn>
void for_rows_omp(std::size_t rows, RowFn&& fn) {
    const auto n = static_cast<std::int64_t>(rows);
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < n; ++i) fn(static_cast<std::size_t>(i));
}

}  // namespace

namespace serial {

void gemm(ConstMatrixView a, ConstMatrixView b, MatrixView c, bool accumulate) {
    assert(a.cols == b.rows && c.rows == a.rows && c.cols == b.cols);
    for_rows_serial(c.rows, [&](std::size_t i) { gemm_row(a, b, c, i, accumulate); });
}

void gemm_tn(ConstMatrixView a, ConstMatrixView b, MatrixView c, bool accumulate) {
    assert(a.rows == b.rows && c.rows == a.cols && c.cols == b.cols);
    for_rows_serial(c.rows, [&](std::size_t i) { gemm_tn_row(a, b, c, i, accumulate); });
}

void gemm_nt(ConstMatrixView a, ConstMatrixView b, MatrixView c, bool accumulate) {
    assert(a.cols == b.cols && c.rows == a.rows && c.cols == b.rows);
    for_rows_serial(c.rows, [&](std::size_t i) { gemm_nt_row(a, b, c, i, accumulate); });
}

void squared_distances(ConstMatrixView x, MatrixView out) {
    assert(out.rows == x.rows && out.cols == x.rows);
    for_rows_serial(x.rows, [&](std::size_t i) { squared_row(x, out, i); });
}

void euclidean_distances(ConstMatrixView x, MatrixView out) {
    assert(out.rows == x.rows && out.cols == x.rows);
    for_rows_serial(x.rows, [&](std::size_t i) { euclidean_row(x, out, i); });
}

void cross_squared_distances(ConstMatrixView a, ConstMatrixView b, MatrixView out) {
    assert(a.cols == b.cols && out.rows == a.rows && out.cols == b.rows);
    for_rows_serial(a.rows, [&](std::size_t i) { cross_row(a, b, out, i); });
}

}  // namespace serial

namespace omp {

void gemm(ConstMatrixView a, ConstMatrixView b, MatrixView c, bool accumulate) {
    assert(a.cols == b.rows && c.rows == a.rows && c.cols == b.cols);
    for_rows_omp(c.rows, [&](std::size_t i) { gemm_row(a, b, c, i, accumulate); });
}

void gemm_tn(ConstMatrixView a, ConstMatrixView b, MatrixView c, bool accumulate) {
    assert(a.rows == b.rows && c.rows == a.cols && c.cols == b.cols);
    for_rows_omp(c.rows, [&](std::size_t i) { gemm_tn_row(a, b, c, i, accumulate); });
}

void gemm_nt(ConstMatrixView a, ConstMatrixView b, MatrixView c, bool accumulate) {
    assert(a.cols == b.cols && c.rows == a.rows && c.cols == b.rows);
    for_rows_omp(c.rows, [&](std::size_t i) { gemm_nt_row(a, b, c, i, accumulate); });
}

void squared_distances(ConstMatrixView x, MatrixView out) {
    assert(out.rows == x.rows && out.cols == x.rows);
    for_rows_omp(x.rows, [&](std::size_t i) { squared_row(x, out, i); });
}

void euclidean_distances(ConstMatrixView x, MatrixView out) {
    assert(out.rows == x.rows && out.cols == x.rows);
    for_rows_omp(x.rows, [&](std::size_t i) { euclidean_row(x, out, i); });
}

void cross_squared_distances(ConstMatrixView a, ConstMatrixView b, MatrixView out) {
    assert(a.cols == b.cols && out.rows == a.rows && out.cols == b.rows);
    for_rows_omp(a.rows, [&](std::size_t i) { cross_row(a, b, out, i); });
}

}  // namespace omp

void gemm(Exec exec, ConstMatrixView a, ConstMatrixView b, MatrixView c, bool accumulate) {
    exec == Exec::parallel ? omp::gemm(a, b, c, accumulate) : serial::gemm(a, b, c, accumulate);
}

void gemm_tn(Exec exec, ConstMatrixView a, ConstMatrixView b, MatrixView c, bool accumulate) {
    exec == Exec::parallel ? omp::gemm_tn(a, b, c, accumulate) : serial::gemm_tn(a, b, c, accumulate);
}

void gemm_nt(Exec exec, ConstMatrixView a, ConstMatrixView b, MatrixView c, bool accumulate) {
    exec == Exec::parallel ? omp::gemm_nt(a, b, c, accumulate) : serial::gemm_nt(a, b, c, accumulate);
}

void squared_distances(Exec exec, ConstMatrixView x, MatrixView out) {
    exec == Exec::parallel ? omp::squared_distances(x, out) : serial::squared_distances(x, out);
}

void euclidean_distances(Exec exec, ConstMatrixView x, MatrixView out) {
    exec == Exec::parallel ? omp::euclidean_distances(x, out) : serial::euclidean_distances(x, out);
}

void cross_squared_distances(Exec exec, ConstMatrixView a, ConstMatrixView b, MatrixView out) {
    exec == Exec::parallel ? omp::cross_squared_distances(a, b, out)
                           : serial::cross_squared_distances(a, b, out);
}

double pairwise_sum(std::span<const double> values) {
    if (values.size() <= 8) {
        double acc = 0.0;
        for (double v : values) acc += v;
        return acc;
    }
    const std::size_t half = values.size() / 2;
    return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

}  // namespace arreid::kernels
