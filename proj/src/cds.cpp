#include "cdskit/cds.hpp"
#include "cdskit/kernels.hpp"
#include "cdskit/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <Eigen/QR>

namespace cdskit {

namespace {

void require_symmetric(const Matrix& w)
{
    if (w.rows() != w.cols())
        throw InputError("replicator dynamics: payoff matrix must be square");
    const double scale = w.size() ? w.cwiseAbs().maxCoeff() : 0.0;
    if (!std::isfinite(scale))
        throw InputError("replicator dynamics: payoff matrix has non-finite entries");
    const double tol = 1e-12 * scale;
    for (Eigen::Index i = 0; i < w.rows(); ++i)
        for (Eigen::Index j = i + 1; j < w.cols(); ++j)
            if (std::abs(w(i, j) - w(j, i)) > tol)
                throw InputError("replicator dynamics: payoff matrix is not symmetric at (" + std::to_string(i) +
                                 ", " + std::to_string(j) + ")");
}

void require_simplex(const Vector& x, Index n)
{
    if (static_cast<Index>(x.size()) != n)
        throw InputError("start vector has dimension " + std::to_string(x.size()) + ", expected " +
                         std::to_string(n));
    if ((x.array() < 0.0).any() || !x.allFinite())
        throw InputError("start vector has negative or non-finite entries");
    if (std::abs(x.sum() - 1.0) > 1e-9)
        throw InputError("start vector does not sum to 1");
}

void require_seeds(const VertexSet& s, Index n, const char* who)
{
    if (s.empty())
        throw InputError(std::string(who) + ": constraint set must be non-empty");
    for (std::size_t k = 0; k < s.size(); ++k) {
        if (s[k] >= n)
            throw InputError(std::string(who) + ": constraint vertex " + std::to_string(s[k]) + " out of range");
        if (k > 0 && s[k] <= s[k - 1])
            throw InputError(std::string(who) + ": constraint set must be sorted and duplicate-free");
    }
}

double minimal_safe_shift(const Matrix& w)
{
    return w.size() ? std::max(0.0, -w.minCoeff()) : 0.0;
}

struct NegativeNumerator {};

ClusterResult replicate(const Matrix& w, double shift, const Vector& start, const SolverParams& params)
{
    const auto& k = kernels::active();
    const auto n = static_cast<std::size_t>(w.rows());
    Vector x = start;
    Vector next(w.rows());
    Vector wx(w.rows());

    ClusterResult out;
    out.shift = shift;
    for (std::size_t it = 0;; ++it) {
        k.symv(w.data(), n, n, x.data(), wx.data());
        const double payoff = k.dot(x.data(), wx.data(), n);
        if (params.record_trace)
            out.payoff_trace.push_back(payoff);
        if (it == params.max_iters)
            break;

        for (std::size_t i = 0; i < n; ++i)
            if (x[Eigen::Index(i)] > 0.0 && shift + wx[Eigen::Index(i)] < 0.0)
                throw NegativeNumerator{};

        const double denom = shift + payoff;
        if (denom <= 0.0) {
            // every x_i (C + (Wx)_i) vanishes: stationary
            out.converged = true;
            break;
        }
        const double change = k.replicator_update(x.data(), wx.data(), shift, denom, next.data(), n);
        next /= next.sum();
        x.swap(next);
        out.iterations = it + 1;
        if (change < params.tol) {
            out.converged = true;
            k.symv(w.data(), n, n, x.data(), wx.data());
            if (params.record_trace)
                out.payoff_trace.push_back(k.dot(x.data(), wx.data(), n));
            break;
        }
    }

    out.payoff = k.dot(x.data(), wx.data(), n);
    out.support = support_of(x, params.support_cutoff);
    out.kkt_residual = kkt_residual(w, x, params.support_cutoff);
    out.x = std::move(x);
    return out;
}

}  // namespace

void SolverParams::validate() const
{
    if (!(margin > 0.0))
        throw InputError("solver: margin must be positive");
    if (!(tol > 0.0))
        throw InputError("solver: tolerance must be positive");
    if (!(support_cutoff >= 0.0 && support_cutoff < 1.0))
        throw InputError("solver: support cutoff must lie in [0, 1)");
    if (alpha && !std::isfinite(*alpha))
        throw InputError("solver: alpha must be finite");
    if (shift && !std::isfinite(*shift))
        throw InputError("solver: shift must be finite");
    if (const auto* ms = std::get_if<MultiStart>(&start); ms && ms->count == 0)
        throw InputError("solver: multi-start needs at least one start");
}

ClusterResult ReplicatorDynamics::solve(const Matrix& w, double shift, const Vector& start,
                                        const SolverParams& params) const
{
    require_symmetric(w);
    require_simplex(start, static_cast<Index>(w.rows()));
    ClusterResult r;
    try {
        r = replicate(w, shift, start, params);
    } catch (const NegativeNumerator&) {
        const double raised = std::max(shift, minimal_safe_shift(w));
        r = replicate(w, raised, start, params);
    }
    if (!params.refine)
        return r;
    if (auto refined = refine_on_face(w, r.x, params.support_cutoff)) {
        r.x = std::move(*refined);
        r.payoff = r.x.dot(w * r.x);
        r.support = support_of(r.x, params.support_cutoff);
        r.kkt_residual = kkt_residual(w, r.x, params.support_cutoff);
        r.converged = true;
    }
    return r;
}

std::optional<Vector> refine_on_face(const Matrix& w, const Vector& x0, double support_cutoff)
{
    const Eigen::Index n = w.rows();
    const double scale = std::max(1.0, n ? w.cwiseAbs().maxCoeff() : 0.0);
    Vector x = x0;
    for (Eigen::Index i = 0; i < n; ++i)
        if (!(x[i] > support_cutoff * x0.maxCoeff()))
            x[i] = 0.0;
    x /= x.sum();

    for (Eigen::Index round = 0; round < n; ++round) {
        const VertexSet face = support_of(x, 0.0);
        const auto m = static_cast<Eigen::Index>(face.size());
        // [W_ff -1; 1' 0] [y; lambda] = [0; 1]
        Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(m + 1, m + 1);
        Eigen::VectorXd rhs = Eigen::VectorXd::Zero(m + 1);
        for (Eigen::Index r = 0; r < m; ++r) {
            for (Eigen::Index c = 0; c < m; ++c)
                kkt(r, c) = w(Eigen::Index(face[std::size_t(r)]), Eigen::Index(face[std::size_t(c)]));
            kkt(r, m) = -1.0;
            kkt(m, r) = 1.0;
        }
        rhs[m] = 1.0;
        Eigen::FullPivLU<Eigen::MatrixXd> lu(kkt);
        lu.setThreshold(1e-10);
        Eigen::VectorXd sol;
        if (lu.isInvertible()) {
            sol = lu.solve(rhs);
        } else {
            // a flat face: take the minimum-norm stationary point if there is one
            Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(kkt);
            cod.setThreshold(1e-10);
            sol = cod.solve(rhs);
            if ((kkt * sol - rhs).norm() > 1e-9 * scale)
                return std::nullopt;
        }

        Vector y = Vector::Zero(n);
        for (Eigen::Index r = 0; r < m; ++r)
            y[Eigen::Index(face[std::size_t(r)])] = sol[r];

        // walk from x towards y until the first component reaches zero
        double step = 1.0;
        Eigen::Index blocking = -1;
        for (Index v : face) {
            const auto i = Eigen::Index(v);
            if (y[i] < 0.0 && x[i] / (x[i] - y[i]) < step) {
                step = x[i] / (x[i] - y[i]);
                blocking = i;
            }
        }
        if (blocking < 0) {
            const double payoff = y.dot(w * y);
            if (payoff < x0.dot(w * x0) - 1e-12 * scale)
                return std::nullopt;
            if (kkt_residual(w, y, 0.0) > 1e-9 * scale)
                return std::nullopt;
            return y;
        }
        x += step * (y - x);
        x[blocking] = 0.0;
        x = x.cwiseMax(0.0);
        x /= x.sum();
    }
    return std::nullopt;
}

const SimplexSolver& default_solver()
{
    static const ReplicatorDynamics solver;
    return solver;
}

VertexSet support_of(const Vector& x, double support_cutoff)
{
    VertexSet s;
    if (x.size() == 0)
        return s;
    const double threshold = support_cutoff * x.maxCoeff();
    for (Eigen::Index i = 0; i < x.size(); ++i)
        if (x[i] > threshold && x[i] > 0.0)
            s.push_back(static_cast<Index>(i));
    return s;
}

double kkt_residual(const Matrix& w, const Vector& x, double support_cutoff)
{
    const Vector wx = w * x;
    const double lambda = x.dot(wx);
    const double threshold = support_cutoff * (x.size() ? x.maxCoeff() : 0.0);
    double residual = 0.0;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        const double gap = wx[i] - lambda;
        if (x[i] > threshold && x[i] > 0.0)
            residual = std::max(residual, std::abs(gap));
        else
            residual = std::max(residual, std::max(0.0, gap));
    }
    return residual;
}

EigenEstimate largest_eigenvalue(const Matrix& sym)
{
    EigenEstimate est;
    const Eigen::Index n = sym.rows();
    if (n == 0)
        return est;
    const double spread = sym.cwiseAbs().rowwise().sum().maxCoeff();
    if (spread == 0.0)
        return est;

    // B + spread*I has spectrum in [0, 2*spread], so its dominant eigenvector
    // is the one for lambda_max(B) even when B has a larger negative eigenvalue.
    const auto& k = kernels::active();
    const auto un = static_cast<std::size_t>(n);
    Vector v = Vector::Constant(n, 1.0 / std::sqrt(static_cast<double>(n)));
    Vector bv(n);
    double rho = 0.0;
    constexpr std::size_t kMaxIters = 20000;
    constexpr double kRelTol = 1e-10;
    bool converged = false;
    for (std::size_t it = 1; it <= kMaxIters; ++it) {
        k.gemv(sym.data(), un, un, un, v.data(), bv.data());
        const double next_rho = v.dot(bv);
        const double residual = (bv - next_rho * v).norm();
        est.iterations = it;
        if (it > 1 && std::abs(next_rho - rho) <= kRelTol * std::abs(next_rho) &&
            residual <= 1e-5 * spread) {
            rho = next_rho;
            converged = true;
            break;
        }
        rho = next_rho;
        bv += spread * v;
        const double norm = bv.norm();
        if (norm == 0.0)
            break;
        v = bv / norm;
    }
    if (converged) {
        est.value = rho;
        return est;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> dense(Eigen::MatrixXd(sym), Eigen::EigenvaluesOnly);
    est.value = dense.eigenvalues().maxCoeff();
    est.used_dense_fallback = true;
    return est;
}

double alpha_bound(const AffinityMatrix& a, const VertexSet& s)
{
    std::vector<Index> rest;
    rest.reserve(a.size());
    for (Index v = 0; v < a.size(); ++v)
        if (!contains(s, v))
            rest.push_back(v);
    if (rest.empty())
        return 0.0;
    return largest_eigenvalue(a.submatrix(rest).weights()).value;
}

Matrix constrained_payoff_matrix(const AffinityMatrix& a, const VertexSet& s, double alpha)
{
    Matrix w = a.weights();
    for (Index v = 0; v < a.size(); ++v)
        if (!contains(s, v))
            w(Eigen::Index(v), Eigen::Index(v)) -= alpha;
    return w;
}

Vector barycenter(Index n)
{
    return Vector::Constant(static_cast<Eigen::Index>(n), 1.0 / static_cast<double>(n));
}

std::vector<Vector> multistart_points(Index n, const MultiStart& ms)
{
    std::vector<Vector> starts;
    const double base = 1.0 / static_cast<double>(n);
    const double amplitude = std::min(1e-3, 0.5 * base);
    for (std::size_t s = 0; s < ms.count; ++s) {
        Rng rng(ms.seed, s);
        Vector x(static_cast<Eigen::Index>(n));
        for (Eigen::Index i = 0; i < x.size(); ++i)
            x[i] = base + amplitude * (2.0 * rng.uniform() - 1.0);
        starts.push_back(x / x.sum());
    }
    return starts;
}

namespace {

std::vector<Vector> start_points(Index n, const StartPoint& start)
{
    if (std::holds_alternative<BarycenterStart>(start))
        return {barycenter(n)};
    if (const auto* e = std::get_if<ExplicitStart>(&start))
        return {e->x};
    return multistart_points(n, std::get<MultiStart>(start));
}

}  // namespace

std::vector<ClusterResult> run_replicator_all(const Matrix& w, const SolverParams& params)
{
    params.validate();
    const double shift = params.shift ? *params.shift : minimal_safe_shift(w);
    std::vector<ClusterResult> runs;
    for (const Vector& x0 : start_points(static_cast<Index>(w.rows()), params.start))
        runs.push_back(default_solver().solve(w, shift, x0, params));
    return runs;
}

ClusterResult run_replicator(const Matrix& w, const SolverParams& params)
{
    auto runs = run_replicator_all(w, params);
    auto best = std::max_element(runs.begin(), runs.end(),
                                 [](const ClusterResult& a, const ClusterResult& b) { return a.payoff < b.payoff; });
    return std::move(*best);
}

std::vector<VertexSet> distinct_supports(const std::vector<ClusterResult>& runs)
{
    std::vector<VertexSet> out;
    for (const auto& r : runs)
        if (std::find(out.begin(), out.end(), r.support) == out.end())
            out.push_back(r.support);
    return out;
}

std::vector<ClusterResult> extract_dominant_sets(const AffinityMatrix& a, const SolverParams& params,
                                                 const SimplexSolver& solver)
{
    params.validate();
    const double top = a.size() ? a.weights().maxCoeff() : 0.0;
    const double alpha = params.alpha ? *params.alpha : -0.5 * top;
    Matrix w = a.weights();
    w.diagonal().array() -= alpha;
    const double shift = params.shift ? *params.shift : minimal_safe_shift(w);
    std::vector<ClusterResult> runs;
    for (const Vector& x0 : start_points(a.size(), params.start)) {
        runs.push_back(solver.solve(w, shift, x0, params));
        runs.back().alpha = alpha;
    }
    return runs;
}

double auto_alpha(const AffinityMatrix& a, const VertexSet& s, double margin)
{
    const double bound = alpha_bound(a, s);
    if (bound > 0.0)
        return (1.0 + margin) * bound;
    // V \ S has no edges: any positive alpha is above the bound.
    return std::max(a.weights().maxCoeff(), margin);
}

ClusterResult extract_cds(const AffinityMatrix& a, const VertexSet& s, const SolverParams& params,
                          const SimplexSolver& solver)
{
    params.validate();
    require_seeds(s, a.size(), "extract_cds");
    const double alpha = params.alpha ? *params.alpha : auto_alpha(a, s, params.margin);
    const Matrix w = constrained_payoff_matrix(a, s, alpha);
    const double shift = params.shift ? *params.shift : alpha;

    std::optional<ClusterResult> best;
    for (const Vector& x0 : start_points(a.size(), params.start)) {
        ClusterResult r = solver.solve(w, shift, x0, params);
        if (!best || r.payoff > best->payoff)
            best = std::move(r);
    }
    best->alpha = alpha;
    return std::move(*best);
}

PeelOffResult peel_off_extract(const AffinityMatrix& a, const VertexSet& s, const SolverParams& params,
                               const SimplexSolver& solver)
{
    require_seeds(s, a.size(), "peel_off_extract");
    PeelOffResult out;

    std::vector<Index> remaining(a.size());
    std::iota(remaining.begin(), remaining.end(), Index{0});
    VertexSet pending = s;

    auto emit = [&](ClusterResult r, const std::vector<Index>& local_to_global) {
        VertexSet global;
        Vector x = Vector::Zero(static_cast<Eigen::Index>(a.size()));
        for (Index local : r.support)
            global.push_back(local_to_global[local]);
        for (Eigen::Index i = 0; i < r.x.size(); ++i)
            x[Eigen::Index(local_to_global[std::size_t(i)])] = r.x[i];
        r.support = make_vertex_set(std::move(global));
        r.x = std::move(x);
        pending = set_difference(pending, r.support);
        remaining = set_difference(remaining, r.support);
        out.union_support = set_union(out.union_support, r.support);
        out.clusters.push_back(std::move(r));
    };

    auto singleton = [&](Index v) {
        ClusterResult r;
        r.x = Vector::Zero(static_cast<Eigen::Index>(a.size()));
        r.x[Eigen::Index(v)] = 1.0;
        r.support = {v};
        r.converged = true;
        std::vector<Index> identity(a.size());
        std::iota(identity.begin(), identity.end(), Index{0});
        emit(std::move(r), identity);
    };

    while (!pending.empty()) {
        const AffinityMatrix sub = a.submatrix(remaining);

        // seeds with no edge left in the remaining graph form their own clusters
        bool isolated_found = false;
        for (Index v : VertexSet(pending)) {
            const auto local = static_cast<Index>(std::lower_bound(remaining.begin(), remaining.end(), v) -
                                                  remaining.begin());
            if (sub.degree(local) == 0.0) {
                singleton(v);
                isolated_found = true;
            }
        }
        if (isolated_found)
            continue;

        VertexSet local_seeds;
        for (Index v : pending)
            local_seeds.push_back(static_cast<Index>(std::lower_bound(remaining.begin(), remaining.end(), v) -
                                                     remaining.begin()));
        ClusterResult r = extract_cds(sub, local_seeds, params, solver);
        if (set_intersection(r.support, local_seeds).empty()) {
            // cannot happen above the bound; keep the loop finite regardless
            singleton(pending.front());
            continue;
        }
        emit(std::move(r), remaining);
    }
    return out;
}

}  // namespace cdskit
