#pragma once

// Toy-scale differentiable CDS block: a fixed-depth replicator unroll per
// constraint, similarity/dissimilarity fusion, targets, and gradient checks.

#include <vector>

#include "cdskit/cds.hpp"
#include "cdskit/graph.hpp"
#include "cdskit/metrics.hpp"

namespace cdskit {

/// M = k * omega items, labels grouping them by identity.
struct MiniBatch {
    Matrix features;
    std::vector<long> labels;
    std::size_t identities = 0;
    std::size_t per_identity = 0;

    Index size() const { return static_cast<Index>(features.rows()); }
    void validate() const;
};

/// max(0, f_i . f_j) with a zero diagonal.
AffinityMatrix batch_affinity(const Matrix& features);

/// A - alpha * I_p: alpha subtracted on the diagonal except at p.
Matrix modified_affinity(const Matrix& a, Index probe, double alpha);

struct FusionParams {
    double beta = 0.9;
    double delta = 0.3;
    std::size_t unroll = 20;
    double margin = 1e-4;

    void validate() const;
};

/// T replicator steps x <- x (C + Bx) / (C + x'Bx) from the barycenter, no
/// convergence test. A non-positive denominator leaves x unchanged.
Vector unrolled_replicator(const Matrix& b, double shift, std::size_t steps);

/// Row i is the unrolled iterate on B_i = A - alpha_i I_i, alpha_i =
/// (1 + margin) * alpha_bound(A, {i}), C = alpha_i.
Matrix batch_cds(const AffinityMatrix& a, const FusionParams& params = {});

struct FusedScores {
    Matrix similarity;     ///< F_s = (beta Y) ⊙ ((1 - beta) S')
    Matrix dissimilarity;  ///< F_d = (beta (delta - Y)) ⊙ ((1 - beta) D')
};

FusedScores fuse(const Matrix& y, const Matrix& s_prime, const Matrix& d_prime, const FusionParams& params = {});

/// G(i, j) = 1 when items i and j share a label.
Matrix target_matrix(const std::vector<long>& labels);

/// Mean two-class cross-entropy over all pairs, with logits (F_d, F_s) and
/// class "same" taken from the target matrix.
double pairwise_cross_entropy(const FusedScores& scores, const Matrix& target);

/// d x_T / d a_kl for every off-diagonal (k, l), by forward accumulation,
/// alpha and C held at their values for the unperturbed A. Entry (i, k*M+l).
Matrix unroll_jacobian(const Matrix& a, Index probe, double alpha, std::size_t steps);

struct GradCheckReport {
    double max_relative_error = 0.0;
    double max_abs_gradient = 0.0;
    std::size_t entries = 0;
    bool finite = true;
};

/// Compares unroll_jacobian against central differences with step h;
/// relative error uses max(|g|, 1e-8) with g the analytic value. M <= 8.
GradCheckReport grad_check(const AffinityMatrix& a, Index probe, std::size_t steps, double h = 1e-5,
                           double margin = 1e-4);

/// Ranking for a probe with one expanded constraint: CDS({probe}) on the
/// k-NN subgraph picks its strongest non-probe member, then CDS({probe,
/// picked}) on the full graph ranks the others by membership, raw similarity
/// and index. Without a non-probe member the ranking uses CDS({probe}) alone.
struct ExpansionResult {
    RankedList ranking;
    std::optional<Index> picked;
};

ExpansionResult constraint_expansion(const AffinityMatrix& a, Index probe, std::size_t k_nn,
                                     const SolverParams& params = {});

}  // namespace cdskit
