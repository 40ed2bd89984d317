#include "cdskit/kernels.hpp"
#include "kernels_impl.hpp"

#include <algorithm>
#include <cmath>

namespace cdskit::kernels {

namespace {

double dot_scalar(const double* a, const double* b, std::size_t n)
{
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        s += a[i] * b[i];
    return s;
}

void gemv_scalar(const double* m, std::size_t rows, std::size_t cols, std::size_t ld, const double* x,
                 double* y)
{
    for (std::size_t r = 0; r < rows; ++r)
        y[r] = dot_scalar(m + r * ld, x, cols);
}

void symv_scalar(const double* m, std::size_t n, std::size_t ld, const double* x, double* y)
{
    std::fill(y, y + n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const double* row = m + i * ld;
        const double xi = x[i];
        double s = row[i] * xi;
        for (std::size_t j = i + 1; j < n; ++j) {
            s += row[j] * x[j];
            y[j] += row[j] * xi;
        }
        y[i] += s;
    }
}

double squared_distance_scalar(const double* a, const double* b, std::size_t n)
{
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

void gemm_scalar(const double* a, const double* b, double* c, std::size_t n, std::size_t k, std::size_t m)
{
    std::fill(c, c + n * m, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        double* crow = c + i * m;
        for (std::size_t p = 0; p < k; ++p) {
            const double aip = a[i * k + p];
            if (aip == 0.0)
                continue;
            const double* brow = b + p * m;
            for (std::size_t j = 0; j < m; ++j)
                crow[j] += aip * brow[j];
        }
    }
}

double replicator_update_scalar(const double* x, const double* wx, double shift, double denom, double* x_next,
                                std::size_t n)
{
    double change = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        x_next[i] = x[i] * (shift + wx[i]) / denom;
        change = std::max(change, std::abs(x_next[i] - x[i]));
    }
    return change;
}

}  // namespace

const KernelTable& scalar_table()
{
    static const KernelTable table{
        "scalar", &dot_scalar, &gemv_scalar, &squared_distance_scalar, &gemm_scalar, &replicator_update_scalar,
        &symv_scalar,
    };
    return table;
}

}  // namespace cdskit::kernels
