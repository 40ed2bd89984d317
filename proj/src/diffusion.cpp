#include "cdskit/diffusion.hpp"
#include "cdskit/kernels.hpp"
#include "cdskit/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace cdskit {

namespace {

std::vector<Index> top_k_neighbours(const Matrix& a, Index row, std::size_t k)
{
    std::vector<Index> order;
    for (Index j = 0; j < static_cast<Index>(a.cols()); ++j)
        if (j != row)
            order.push_back(j);
    const std::size_t keep = std::min(k, order.size());
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(keep), order.end(),
                      [&](Index x, Index y) {
                          const double ax = a(Eigen::Index(row), Eigen::Index(x));
                          const double ay = a(Eigen::Index(row), Eigen::Index(y));
                          return ax != ay ? ax > ay : x < y;
                      });
    order.resize(keep);
    return order;
}

Matrix symmetrise_max(const Matrix& l)
{
    return l.cwiseMax(l.transpose());
}

void normalise_rows(Matrix& v)
{
    for (Eigen::Index i = 0; i < v.rows(); ++i) {
        const double s = v.row(i).sum();
        if (s != 0.0)
            v.row(i) /= s;
    }
}

}  // namespace

void DiffusionConfig::validate(Index n) const
{
    if (iterations < 1)
        throw InputError("diffusion: iterations must be at least 1");
    if (!(teleport >= 0.0 && teleport <= 1.0))
        throw InputError("diffusion: teleport must lie in [0, 1]");
    const bool needs_k = init == InitScheme::A4_knn_transition || transition == TransitionScheme::B3_knn ||
                         transition == TransitionScheme::B4_dominant_neighbors;
    if (needs_k && (k < 1 || (n > 1 && k > n - 1)))
        throw InputError("diffusion: k must lie in [1, n-1] (k=" + std::to_string(k) + ", n=" + std::to_string(n) +
                         ")");
    solver.validate();
}

InitScheme parse_init_scheme(std::string_view name)
{
    if (name == "A1")
        return InitScheme::A1_affinity;
    if (name == "A2")
        return InitScheme::A2_identity;
    if (name == "A3")
        return InitScheme::A3_transition;
    if (name == "A4")
        return InitScheme::A4_knn_transition;
    throw InputError("unknown init scheme '" + std::string(name) + "' (expected A1..A4)");
}

TransitionScheme parse_transition_scheme(std::string_view name)
{
    static constexpr std::string_view names[] = {"B1", "B2", "B3", "B4", "B5", "B6"};
    for (std::size_t i = 0; i < 6; ++i)
        if (name == names[i])
            return static_cast<TransitionScheme>(i);
    throw InputError("unknown transition scheme '" + std::string(name) + "' (expected B1..B6)");
}

std::string_view to_string(InitScheme s)
{
    static constexpr std::string_view names[] = {"A1", "A2", "A3", "A4"};
    return names[static_cast<int>(s)];
}

std::string_view to_string(TransitionScheme s)
{
    static constexpr std::string_view names[] = {"B1", "B2", "B3", "B4", "B5", "B6"};
    return names[static_cast<int>(s)];
}

Matrix transition_matrix(const Matrix& a)
{
    Matrix p = a;
    normalise_rows(p);
    return p;
}

Matrix knn_sparsify(const Matrix& a, std::size_t k)
{
    Matrix out = Matrix::Zero(a.rows(), a.cols());
    for (Index i = 0; i < static_cast<Index>(a.rows()); ++i)
        for (Index j : top_k_neighbours(a, i, k))
            out(Eigen::Index(i), Eigen::Index(j)) = a(Eigen::Index(i), Eigen::Index(j));
    return out;
}

Matrix build_locally_constrained_affinity(const AffinityMatrix& a, const DiffusionConfig& config)
{
    config.validate(a.size());
    const Matrix& w = a.weights();
    const Index n = a.size();
    switch (config.transition) {
    case TransitionScheme::B1_transition:
        return symmetrise_max(transition_matrix(w));
    case TransitionScheme::B2_ppr: {
        Matrix l = config.teleport * transition_matrix(w);
        l.diagonal().array() += 1.0 - config.teleport;
        return symmetrise_max(l);
    }
    case TransitionScheme::B3_knn:
        return symmetrise_max(knn_sparsify(w, config.k));
    case TransitionScheme::B5_affinity:
        return w;
    case TransitionScheme::B4_dominant_neighbors:
    case TransitionScheme::B6_cds:
        break;
    }

    const bool local = config.transition == TransitionScheme::B4_dominant_neighbors;
    Matrix l = Matrix::Zero(w.rows(), w.cols());
    parallel_for(n, [&](std::size_t i) {
        std::vector<Index> kept;
        try {
            if (local) {
                std::vector<Index> ids = top_k_neighbours(w, i, config.k);
                ids.push_back(i);
                std::sort(ids.begin(), ids.end());
                const auto pos = static_cast<Index>(std::lower_bound(ids.begin(), ids.end(), i) - ids.begin());
                const ClusterResult r = extract_cds(a.submatrix(ids), {pos}, config.solver);
                for (Index v : r.support)
                    kept.push_back(ids[v]);
            } else {
                kept = extract_cds(a, {i}, config.solver).support;
            }
        } catch (const std::exception&) {
            kept = top_k_neighbours(w, i, std::min<std::size_t>(config.k, n > 0 ? n - 1 : 0));
        }
        for (Index j : kept)
            if (j != i)
                l(Eigen::Index(i), Eigen::Index(j)) = w(Eigen::Index(i), Eigen::Index(j));
    });
    return symmetrise_max(l);
}

Matrix initial_affinity(const AffinityMatrix& a, const DiffusionConfig& config)
{
    const Matrix& w = a.weights();
    switch (config.init) {
    case InitScheme::A1_affinity:
        return w;
    case InitScheme::A2_identity:
        return Matrix::Identity(w.rows(), w.cols());
    case InitScheme::A3_transition:
        return transition_matrix(w);
    case InitScheme::A4_knn_transition:
        return transition_matrix(knn_sparsify(w, config.k));
    }
    return w;
}

Matrix diffuse(const Matrix& v0, const Matrix& l, std::size_t iterations)
{
    if (l.rows() != l.cols() || v0.rows() != l.rows() || v0.cols() != l.rows())
        throw InputError("diffuse: V0 and L must be square of the same size");
    const auto& k = kernels::active();
    const auto n = static_cast<std::size_t>(l.rows());
    Matrix v = v0;
    Matrix tmp(l.rows(), l.cols());
    for (std::size_t t = 0; t < iterations; ++t) {
        k.gemm(l.data(), v.data(), tmp.data(), n, n, n);
        k.gemm(tmp.data(), l.data(), v.data(), n, n, n);
        normalise_rows(v);
    }
    return v;
}

Matrix normalize_transition(const Matrix& l)
{
    if (l.rows() != l.cols())
        throw InputError("normalize_transition: L must be square");
    Vector d = l.rowwise().sum();
    for (Eigen::Index i = 0; i < d.size(); ++i)
        d[i] = d[i] > 0.0 ? 1.0 / std::sqrt(d[i]) : 0.0;
    return d.asDiagonal() * l * d.asDiagonal();
}

Matrix run_diffusion(const AffinityMatrix& a, const DiffusionConfig& config)
{
    config.validate(a.size());
    return diffuse(initial_affinity(a, config), normalize_transition(build_locally_constrained_affinity(a, config)),
                   config.iterations);
}

RankedList rank(const Matrix& v, Index query, SelfMatch self)
{
    if (query >= static_cast<Index>(v.rows()))
        throw InputError("rank: query " + std::to_string(query) + " out of range");
    const auto row = v.row(Eigen::Index(query));
    std::vector<Index> order;
    for (Index j = 0; j < static_cast<Index>(v.cols()); ++j)
        if (j != query)
            order.push_back(j);
    std::stable_sort(order.begin(), order.end(),
                     [&](Index x, Index y) { return row[Eigen::Index(x)] > row[Eigen::Index(y)]; });

    RankedList out;
    out.query = query;
    if (self == SelfMatch::First) {
        out.ids.push_back(query);
        out.scores.push_back(row.maxCoeff());
    }
    for (Index j : order) {
        out.ids.push_back(j);
        out.scores.push_back(row[Eigen::Index(j)]);
    }
    return out;
}

}  // namespace cdskit
