// AVX2/FMA variants. This translation unit is compiled with -mavx2 -mfma and
// must only be entered after the dispatcher has confirmed CPU support.

#include "kernels_impl.hpp"

#include <algorithm>
#include <cmath>
#include <immintrin.h>

namespace cdskit::kernels {

namespace {

inline double hsum(__m256d v)
{
    const __m128d lo = _mm256_castpd256_pd128(v);
    const __m128d hi = _mm256_extractf128_pd(v, 1);
    const __m128d s = _mm_add_pd(lo, hi);
    return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

double dot_avx2(const double* a, const double* b, std::size_t n)
{
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
        acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
    }
    for (; i + 4 <= n; i += 4)
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    double s = hsum(_mm256_add_pd(acc0, acc1));
    for (; i < n; ++i)
        s += a[i] * b[i];
    return s;
}

void gemv_avx2(const double* m, std::size_t rows, std::size_t cols, std::size_t ld, const double* x, double* y)
{
    for (std::size_t r = 0; r < rows; ++r)
        y[r] = dot_avx2(m + r * ld, x, cols);
}

void symv_avx2(const double* m, std::size_t n, std::size_t ld, const double* x, double* y)
{
    std::fill(y, y + n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const double* row = m + i * ld;
        const double xi = x[i];
        const __m256d vxi = _mm256_set1_pd(xi);
        __m256d acc = _mm256_setzero_pd();
        std::size_t j = i + 1;
        for (; j + 4 <= n; j += 4) {
            const __m256d w = _mm256_loadu_pd(row + j);
            acc = _mm256_fmadd_pd(w, _mm256_loadu_pd(x + j), acc);
            _mm256_storeu_pd(y + j, _mm256_fmadd_pd(w, vxi, _mm256_loadu_pd(y + j)));
        }
        double s = row[i] * xi + hsum(acc);
        for (; j < n; ++j) {
            s += row[j] * x[j];
            y[j] += row[j] * xi;
        }
        y[i] += s;
    }
}

double squared_distance_avx2(const double* a, const double* b, std::size_t n)
{
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
        acc = _mm256_fmadd_pd(d, d, acc);
    }
    double s = hsum(acc);
    for (; i < n; ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

void gemm_avx2(const double* a, const double* b, double* c, std::size_t n, std::size_t k, std::size_t m)
{
    std::fill(c, c + n * m, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        double* crow = c + i * m;
        for (std::size_t p = 0; p < k; ++p) {
            const double aip = a[i * k + p];
            if (aip == 0.0)
                continue;
            const __m256d av = _mm256_set1_pd(aip);
            const double* brow = b + p * m;
            std::size_t j = 0;
            for (; j + 4 <= m; j += 4) {
                const __m256d cv = _mm256_loadu_pd(crow + j);
                _mm256_storeu_pd(crow + j, _mm256_fmadd_pd(av, _mm256_loadu_pd(brow + j), cv));
            }
            for (; j < m; ++j)
                crow[j] += aip * brow[j];
        }
    }
}

double replicator_update_avx2(const double* x, const double* wx, double shift, double denom, double* x_next,
                              std::size_t n)
{
    const __m256d sv = _mm256_set1_pd(shift);
    const __m256d dv = _mm256_set1_pd(denom);
    const __m256d sign_mask = _mm256_set1_pd(-0.0);
    __m256d change = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d xv = _mm256_loadu_pd(x + i);
        const __m256d num = _mm256_mul_pd(xv, _mm256_add_pd(sv, _mm256_loadu_pd(wx + i)));
        const __m256d nx = _mm256_div_pd(num, dv);
        _mm256_storeu_pd(x_next + i, nx);
        change = _mm256_max_pd(change, _mm256_andnot_pd(sign_mask, _mm256_sub_pd(nx, xv)));
    }
    alignas(32) double lanes[4];
    _mm256_store_pd(lanes, change);
    double out = std::max(std::max(lanes[0], lanes[1]), std::max(lanes[2], lanes[3]));
    for (; i < n; ++i) {
        x_next[i] = x[i] * (shift + wx[i]) / denom;
        out = std::max(out, std::abs(x_next[i] - x[i]));
    }
    return out;
}

}  // namespace

namespace detail {

const KernelTable& avx2_table_unchecked()
{
    static const KernelTable table{
        "avx2", &dot_avx2, &gemv_avx2, &squared_distance_avx2, &gemm_avx2, &replicator_update_avx2,
        &symv_avx2,
    };
    return table;
}

}  // namespace detail

}  // namespace cdskit::kernels
