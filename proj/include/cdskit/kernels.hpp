#pragma once

// Dense arithmetic kernels behind the solvers.
//
// Every kernel has a portable scalar reference and, on x86-64, an AVX2/FMA
// variant. The variant is chosen once at startup from CPUID; setting
// CDSKIT_SIMD=scalar in the environment forces the reference path.
// Both tables are exposed so tests can check them against each other.

#include <cstddef>
#include <string_view>

namespace cdskit::kernels {

struct KernelTable {
    std::string_view name;

    /// sum_i a[i] * b[i]
    double (*dot)(const double* a, const double* b, std::size_t n);

    /// y = M x for a row-major rows x cols matrix with leading dimension ld.
    void (*gemv)(const double* m, std::size_t rows, std::size_t cols, std::size_t ld,
                 const double* x, double* y);

    /// ||a - b||^2
    double (*squared_distance)(const double* a, const double* b, std::size_t n);

    /// c = a * b, all row-major and densely packed: a is n x k, b is k x m, c is n x m.
    void (*gemm)(const double* a, const double* b, double* c, std::size_t n, std::size_t k,
                 std::size_t m);

    /// One replicator step on precomputed payoffs:
    /// x_next[i] = x[i] * (shift + wx[i]) / denom. Returns max_i |x_next[i] - x[i]|.
    double (*replicator_update)(const double* x, const double* wx, double shift, double denom,
                                double* x_next, std::size_t n);

    /// y = M x for a symmetric n x n row-major matrix, reading only the upper
    /// triangle. Half the memory traffic of gemv on large payoff matrices.
    void (*symv)(const double* m, std::size_t n, std::size_t ld, const double* x, double* y);
};

const KernelTable& scalar_table();

/// Null when the build or the CPU lacks AVX2+FMA.
const KernelTable* avx2_table();

/// Table used by the library: AVX2 when available, unless CDSKIT_SIMD=scalar.
const KernelTable& active();

}  // namespace cdskit::kernels
