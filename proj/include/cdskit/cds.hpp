#pragma once

// Dominant sets and constrained dominant sets.
//
// A constrained dominant set for seeds S is read off a local maximiser of
//     x' (A - alpha * I_S) x   over the standard simplex,
// where I_S is the identity with the diagonal zeroed on S. Choosing alpha
// above the largest eigenvalue of A restricted to V \ S forces every local
// maximiser to put mass on S. Local maximisers are found with discrete
// replicator dynamics.

#include <cstdint>
#include <memory>
#include <optional>
#include <variant>
#include <vector>

#include "cdskit/graph.hpp"
#include "cdskit/types.hpp"

namespace cdskit {

struct BarycenterStart {};
struct ExplicitStart {
    Vector x;
};
/// `count` starts at the barycenter plus deterministic seeded noise of
/// amplitude min(1e-3, 1/(2n)) per coordinate.
struct MultiStart {
    std::size_t count = 16;
    std::uint64_t seed = 0;
};
using StartPoint = std::variant<BarycenterStart, ExplicitStart, MultiStart>;

struct SolverParams {
    /// nullopt selects auto_alpha(A, S, margin), or -max(A)/2 for the
    /// unconstrained problem.
    std::optional<double> alpha;
    double margin = 1e-4;
    /// Replicator shift C; nullopt selects C = alpha.
    std::optional<double> shift;
    std::size_t max_iters = 10000;
    /// Stop when max_i |x_i(t+1) - x_i(t)| < tol.
    double tol = 1e-10;
    StartPoint start = BarycenterStart{};
    /// i is in the support when x_i > support_cutoff * max(x).
    double support_cutoff = 1e-6;
    bool record_trace = false;
    /// After the dynamics stop, move to the exact stationary point of the
    /// reached face when that point is a KKT point with no lower payoff.
    /// Replicator dynamics approach degenerate solutions only sublinearly.
    bool refine = true;

    void validate() const;
};

struct ClusterResult {
    Vector x;
    VertexSet support;
    double payoff = 0.0;
    double kkt_residual = 0.0;
    std::size_t iterations = 0;
    bool converged = false;
    double alpha = 0.0;
    double shift = 0.0;
    /// x(t)' W x(t) for every visited iterate, when requested.
    std::vector<double> payoff_trace;
};

struct PeelOffResult {
    std::vector<ClusterResult> clusters;  ///< supports and x use the caller's vertex ids
    VertexSet union_support;
};

/// Solver interface for the simplex-constrained quadratic program. Replicator
/// dynamics is the only implementation; faster dynamics can be slotted in here.
class SimplexSolver {
public:
    virtual ~SimplexSolver() = default;
    virtual ClusterResult solve(const Matrix& w, double shift, const Vector& start,
                                const SolverParams& params) const = 0;
};

class ReplicatorDynamics final : public SimplexSolver {
public:
    ClusterResult solve(const Matrix& w, double shift, const Vector& start,
                        const SolverParams& params) const override;
};

const SimplexSolver& default_solver();

// --- dominant-set combinatorics (oracle scale) -------------------------------

/// a_ij - mean_{k in S} a_ik, for i in S and j outside S.
double phi(const AffinityMatrix& a, const VertexSet& s, Index i, Index j);

inline constexpr std::size_t kMaxOracleSetSize = 15;

/// Recursive weight w_S(i); exponential in |S|, so |S| <= 15.
double node_weight(const AffinityMatrix& a, const VertexSet& s, Index i);

/// Internal coherence (every W(T) > 0 and w_S(i) > 0) and external
/// incoherence (w_{S+j}(j) <= 0 for every outside j). |S| <= 15.
bool is_dominant_set(const AffinityMatrix& a, const VertexSet& s);

/// x_i = w_S(i) / sum_j w_S(j) on S, 0 elsewhere. Requires a dominant set.
Vector weighted_characteristic_vector(const AffinityMatrix& a, const VertexSet& s);

/// Every maximal clique of a 0/1 affinity, by exhaustive subset enumeration (n <= 20).
std::vector<VertexSet> brute_force_maximal_cliques(const AffinityMatrix& a);

// --- spectral bound -----------------------------------------------------------

struct EigenEstimate {
    double value = 0.0;
    std::size_t iterations = 0;
    bool used_dense_fallback = false;
};

/// Largest eigenvalue of a symmetric matrix: shifted power iteration to a
/// 1e-10 relative tolerance, dense eigensolver when that does not converge.
EigenEstimate largest_eigenvalue(const Matrix& sym);

/// lambda_max of the principal submatrix of A on V \ S; 0 when S = V.
double alpha_bound(const AffinityMatrix& a, const VertexSet& s);

/// (1 + margin) * alpha_bound(A, S). When the bound is zero this would give
/// alpha = 0, which is not strictly above it; max(max(A), margin) is used
/// instead.
double auto_alpha(const AffinityMatrix& a, const VertexSet& s, double margin);

// --- solving --------------------------------------------------------------------

/// A - alpha * I_S.
Matrix constrained_payoff_matrix(const AffinityMatrix& a, const VertexSet& s, double alpha);

Vector barycenter(Index n);
std::vector<Vector> multistart_points(Index n, const MultiStart& ms);

/// Replicator dynamics on symmetric W. With params.shift unset, C is the
/// smallest value keeping W + C non-negative. If a numerator turns negative
/// the shift is raised to that value and the run restarted once.
ClusterResult run_replicator(const Matrix& w, const SolverParams& params);

/// One run per start point of params.start (MultiStart expands to its count).
std::vector<ClusterResult> run_replicator_all(const Matrix& w, const SolverParams& params);

/// Distinct supports across runs, in first-seen order.
std::vector<VertexSet> distinct_supports(const std::vector<ClusterResult>& runs);

/// max( max_{i in supp} |(Wx)_i - x'Wx|, max_{i not in supp} ((Wx)_i - x'Wx)_+ ).
double kkt_residual(const Matrix& w, const Vector& x, double support_cutoff = 1e-6);

VertexSet support_of(const Vector& x, double support_cutoff = 1e-6);

/// Exact stationary point of f on the face spanned by the support of x,
/// reached by active-set steps that drop components driven negative. Returns
/// nullopt when the face system is singular or the point found is not a KKT
/// point of the full problem with payoff at least x'Wx.
std::optional<Vector> refine_on_face(const Matrix& w, const Vector& x, double support_cutoff = 1e-6);

/// Local solutions of x'(A - alpha I)x from every start of params.start, the
/// S = {} case of the constrained program. The default alpha = -max(A)/2 is
/// the regularisation under which unweighted maximal cliques are exactly the
/// strict local maximisers.
std::vector<ClusterResult> extract_dominant_sets(const AffinityMatrix& a, const SolverParams& params = {},
                                                 const SimplexSolver& solver = default_solver());

/// Constrained dominant set for non-empty seeds S; with a MultiStart start the
/// highest-payoff run is returned.
ClusterResult extract_cds(const AffinityMatrix& a, const VertexSet& s, const SolverParams& params = {},
                          const SimplexSolver& solver = default_solver());

/// Repeatedly extracts a constrained dominant set on the remaining graph with
/// the remaining seeds and deletes its support, until every seed is covered.
/// A seed with no remaining edges becomes a singleton cluster.
PeelOffResult peel_off_extract(const AffinityMatrix& a, const VertexSet& s, const SolverParams& params = {},
                               const SimplexSolver& solver = default_solver());

}  // namespace cdskit
