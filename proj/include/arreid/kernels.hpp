#pragma once

// Dense numeric kernels used across the library. Each kernel exists twice:
// `serial` is the straightforward reference, `omp` splits the outermost
// output loop across OpenMP threads. Both perform the same floating-point
// operations in the same order per output element, so results are bitwise
// identical; tests assert exactly that.

#include <cstddef>
#include <span>

#include "arreid/matrix.hpp"

namespace arreid {

enum class Exec { serial, parallel };

namespace kernels {

namespace serial {
// c (+)= a * b          a: m×k, b: k×n, c: m×n
void gemm(ConstMatrixView a, ConstMatrixView b, MatrixView c, bool accumulate);
// c (+)= aᵀ * b         a: k×m, b: k×n, c: m×n
void gemm_tn(ConstMatrixView a, ConstMatrixView b, MatrixView c, bool accumulate);
// c (+)= a * bᵀ         a: m×k, b: n×k, c: m×n
void gemm_nt(ConstMatrixView a, ConstMatrixView b, MatrixView c, bool accumulate);
// out[i][j] = Σ_k (x_i[k] − x_j[k])², symmetric, zero diagonal, clamped ≥ 0
void squared_distances(ConstMatrixView x, MatrixView out);
// out[i][j] = ‖x_i − x_j‖₂
void euclidean_distances(ConstMatrixView x, MatrixView out);
// out[i][j] = squared distance between row i of a and row j of b
void cross_squared_distances(ConstMatrixView a, ConstMatrixView b, MatrixView out);
}  // namespace serial

namespace omp {
void gemm(ConstMatrixView a, ConstMatrixView b, MatrixView c, bool accumulate);
void gemm_tn(ConstMatrixView a, ConstMatrixView b, MatrixView c, bool accumulate);
void gemm_nt(ConstMatrixView a, ConstMatrixView b, MatrixView c, bool accumulate);
void squared_distances(ConstMatrixView x, MatrixView out);
void euclidean_distances(ConstMatrixView x, MatrixView out);
void cross_squared_distances(ConstMatrixView a, ConstMatrixView b, MatrixView out);
}  // namespace omp

void gemm(Exec exec, ConstMatrixView a, ConstMatrixView b, MatrixView c, bool accumulate = false);
void gemm_tn(Exec exec, ConstMatrixView a, ConstMatrixView b, MatrixView c, bool accumulate = false);
void gemm_nt(Exec exec, ConstMatrixView a, ConstMatrixView b, MatrixView c, bool accumulate = false);
void squared_distances(Exec exec, ConstMatrixView x, MatrixView out);
void euclidean_distances(Exec exec, ConstMatrixView x, MatrixView out);
void cross_squared_distances(Exec exec, ConstMatrixView a, ConstMatrixView b, MatrixView out);

// Pairwise (tree) summation with a fixed split order; used wherever a
// reduction must not depend on thread count.
double pairwise_sum(std::span<const double> values);

}  // namespace kernels
}  // namespace arreid
