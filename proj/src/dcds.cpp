#include "cdskit/dcds.hpp"
#include "cdskit/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace cdskit {

namespace {

double probe_alpha(const AffinityMatrix& a, Index probe, double margin)
{
    return (1.0 + margin) * alpha_bound(a, {probe});
}

void require_square(const Matrix& m, Eigen::Index n, const char* what)
{
    if (m.rows() != n || m.cols() != n)
        throw InputError(std::string(what) + ": expected " + std::to_string(n) + "x" + std::to_string(n) +
                         ", got " + std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
}

}  // namespace

void MiniBatch::validate() const
{
    if (features.rows() < 1)
        throw InputError("mini-batch: no items");
    if (!features.allFinite())
        throw InputError("mini-batch: non-finite feature value");
    if (labels.size() != static_cast<std::size_t>(features.rows()))
        throw InputError("mini-batch: " + std::to_string(labels.size()) + " labels for " +
                         std::to_string(features.rows()) + " items");
    if (identities * per_identity != labels.size())
        throw InputError("mini-batch: M = " + std::to_string(labels.size()) + " is not k * omega = " +
                         std::to_string(identities) + " * " + std::to_string(per_identity));
    std::vector<long> distinct = labels;
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    if (distinct.size() != identities)
        throw InputError("mini-batch: expected " + std::to_string(identities) + " identities, found " +
                         std::to_string(distinct.size()));
    for (long id : distinct)
        if (static_cast<std::size_t>(std::count(labels.begin(), labels.end(), id)) != per_identity)
            throw InputError("mini-batch: identity " + std::to_string(id) + " does not have " +
                             std::to_string(per_identity) + " items");
}

AffinityMatrix batch_affinity(const Matrix& features)
{
    Matrix a = (features * features.transpose()).cwiseMax(0.0);
    a = 0.5 * (a + a.transpose());
    a.diagonal().setZero();
    return AffinityMatrix(std::move(a));
}

Matrix modified_affinity(const Matrix& a, Index probe, double alpha)
{
    if (probe >= static_cast<Index>(a.rows()))
        throw InputError("modified_affinity: probe out of range");
    Matrix b = a;
    for (Eigen::Index i = 0; i < b.rows(); ++i)
        if (static_cast<Index>(i) != probe)
            b(i, i) -= alpha;
    return b;
}

void FusionParams::validate() const
{
    if (!(beta >= 0.0 && beta <= 1.0))
        throw InputError("dcds: beta must lie in [0, 1]");
    if (!(delta > 0.0 && delta < 1.0))
        throw InputError("dcds: delta must lie in (0, 1)");
    if (!(margin > 0.0))
        throw InputError("dcds: margin must be positive");
}

Vector unrolled_replicator(const Matrix& b, double shift, std::size_t steps)
{
    const Eigen::Index n = b.rows();
    Vector x = Vector::Constant(n, 1.0 / static_cast<double>(n));
    for (std::size_t t = 0; t < steps; ++t) {
        const Vector bx = b * x;
        const double denom = shift + x.dot(bx);
        if (denom <= 0.0)
            break;
        x = (x.array() * (shift + bx.array())).matrix() / denom;
    }
    return x;
}

Matrix batch_cds(const AffinityMatrix& a, const FusionParams& params)
{
    params.validate();
    const Index m = a.size();
    Matrix y(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
    parallel_for(m, [&](std::size_t i) {
        const double alpha = probe_alpha(a, i, params.margin);
        y.row(Eigen::Index(i)) = unrolled_replicator(modified_affinity(a.weights(), i, alpha), alpha, params.unroll);
    });
    return y;
}

FusedScores fuse(const Matrix& y, const Matrix& s_prime, const Matrix& d_prime, const FusionParams& params)
{
    params.validate();
    require_square(y, y.rows(), "fuse: Y");
    require_square(s_prime, y.rows(), "fuse: S'");
    require_square(d_prime, y.rows(), "fuse: D'");
    FusedScores out;
    out.similarity = ((params.beta * y).array() * ((1.0 - params.beta) * s_prime).array()).matrix();
    out.dissimilarity =
        ((params.beta * (params.delta - y.array())) * ((1.0 - params.beta) * d_prime).array()).matrix();
    return out;
}

Matrix target_matrix(const std::vector<long>& labels)
{
    const auto n = static_cast<Eigen::Index>(labels.size());
    Matrix g(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j)
            g(i, j) = labels[std::size_t(i)] == labels[std::size_t(j)] ? 1.0 : 0.0;
    return g;
}

double pairwise_cross_entropy(const FusedScores& scores, const Matrix& target)
{
    const Eigen::Index n = target.rows();
    require_square(scores.similarity, n, "cross entropy: F_s");
    require_square(scores.dissimilarity, n, "cross entropy: F_d");
    double total = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            const double s = scores.similarity(i, j);
            const double d = scores.dissimilarity(i, j);
            const double top = std::max(s, d);
            const double log_norm = top + std::log(std::exp(s - top) + std::exp(d - top));
            total -= (target(i, j) > 0.5 ? s : d) - log_norm;
        }
    }
    return n ? total / static_cast<double>(n * n) : 0.0;
}

Matrix unroll_jacobian(const Matrix& a, Index probe, double alpha, std::size_t steps)
{
    const Eigen::Index n = a.rows();
    const Matrix b = modified_affinity(a, probe, alpha);
    const double shift = alpha;
    Matrix jac = Matrix::Zero(n, n * n);

    Vector x = Vector::Constant(n, 1.0 / static_cast<double>(n));
    // dx[:, k*n + l] = d x / d a_kl
    Matrix dx = Matrix::Zero(n, n * n);
    for (std::size_t t = 0; t < steps; ++t) {
        const Vector bx = b * x;
        const double denom = shift + x.dot(bx);
        if (denom <= 0.0)
            break;
        const Vector g = (shift + bx.array()).matrix();
        const Vector next = (x.array() * g.array()).matrix() / denom;
        const Vector sym_bx = bx + b.transpose() * x;
        const Matrix b_dx = b * dx;

        Matrix dnext(n, n * n);
        for (Eigen::Index k = 0; k < n; ++k) {
            for (Eigen::Index l = 0; l < n; ++l) {
                const Eigen::Index c = k * n + l;
                // dB = E_kl: d(Bx) = e_k x_l + B dx, d(x'Bx) = x_k x_l + dx'(B + B')x
                Vector dg = b_dx.col(c);
                dg[k] += x[l];
                const double dden = x[k] * x[l] + dx.col(c).dot(sym_bx);
                dnext.col(c) = ((dx.col(c).array() * g.array() + x.array() * dg.array()).matrix() - next * dden) / denom;
            }
        }
        x = next;
        dx = std::move(dnext);
    }
    for (Eigen::Index k = 0; k < n; ++k)
        for (Eigen::Index l = 0; l < n; ++l)
            if (k != l)
                jac.col(k * n + l) = dx.col(k * n + l);
    return jac;
}

GradCheckReport grad_check(const AffinityMatrix& a, Index probe, std::size_t steps, double h, double margin)
{
    const Eigen::Index n = static_cast<Eigen::Index>(a.size());
    if (n > 8)
        throw InputError("grad_check: M = " + std::to_string(n) + " exceeds 8");
    if (probe >= a.size())
        throw InputError("grad_check: probe out of range");
    if (!(h > 0.0))
        throw InputError("grad_check: step must be positive");
    const double alpha = probe_alpha(a, probe, margin);
    const Matrix jac = unroll_jacobian(a.weights(), probe, alpha, steps);

    GradCheckReport report;
    for (Eigen::Index k = 0; k < n; ++k) {
        for (Eigen::Index l = 0; l < n; ++l) {
            if (k == l)
                continue;
            Matrix plus = a.weights(), minus = a.weights();
            plus(k, l) += h;
            minus(k, l) -= h;
            const Vector xp = unrolled_replicator(modified_affinity(plus, probe, alpha), alpha, steps);
            const Vector xm = unrolled_replicator(modified_affinity(minus, probe, alpha), alpha, steps);
            const Vector fd = (xp - xm) / (2.0 * h);
            for (Eigen::Index i = 0; i < n; ++i) {
                const double g = jac(i, k * n + l);
                if (!std::isfinite(g) || !std::isfinite(fd[i])) {
                    report.finite = false;
                    continue;
                }
                const double rel = std::abs(g - fd[i]) / std::max(std::abs(g), 1e-8);
                report.max_relative_error = std::max(report.max_relative_error, rel);
                report.max_abs_gradient = std::max(report.max_abs_gradient, std::abs(g));
                ++report.entries;
            }
        }
    }
    return report;
}

ExpansionResult constraint_expansion(const AffinityMatrix& a, Index probe, std::size_t k_nn,
                                     const SolverParams& params)
{
    const Index n = a.size();
    if (probe >= n)
        throw InputError("constraint_expansion: probe out of range");
    if (k_nn < 1 || k_nn >= n)
        throw InputError("constraint_expansion: k must lie in [1, M-1]");
    const Matrix& w = a.weights();
    const auto raw = w.row(Eigen::Index(probe));

    std::vector<Index> others;
    for (Index j = 0; j < n; ++j)
        if (j != probe)
            others.push_back(j);
    std::stable_sort(others.begin(), others.end(),
                     [&](Index x, Index y) { return raw[Eigen::Index(x)] > raw[Eigen::Index(y)]; });

    std::vector<Index> local(others.begin(), others.begin() + static_cast<std::ptrdiff_t>(k_nn));
    local.push_back(probe);
    local = make_vertex_set(std::move(local));
    const auto pos = static_cast<Index>(std::lower_bound(local.begin(), local.end(), probe) - local.begin());
    const ClusterResult first = extract_cds(a.submatrix(local), {pos}, params);

    ExpansionResult out;
    double best = 0.0;
    for (Index v : first.support) {
        if (v == pos)
            continue;
        const double score = first.x[Eigen::Index(v)];
        if (!out.picked || score > best || (score == best && raw[Eigen::Index(local[v])] > raw[Eigen::Index(*out.picked)])) {
            best = score;
            out.picked = local[v];
        }
    }

    VertexSet seeds{probe};
    if (out.picked)
        seeds = make_vertex_set({probe, *out.picked});
    const ClusterResult full = extract_cds(a, seeds, params);
    auto membership = [&](Index j) { return contains(full.support, j) ? full.x[Eigen::Index(j)] : 0.0; };

    std::stable_sort(others.begin(), others.end(), [&](Index x, Index y) {
        const double mx = membership(x), my = membership(y);
        if (mx != my)
            return mx > my;
        return raw[Eigen::Index(x)] > raw[Eigen::Index(y)];
    });
    out.ranking.query = probe;
    for (Index j : others) {
        out.ranking.ids.push_back(j);
        out.ranking.scores.push_back(membership(j));
    }
    return out;
}

}  // namespace cdskit
