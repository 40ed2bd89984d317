#pragma once

// Retrieval re-ranking by diffusion V <- L V L over a locally constrained
// transition matrix L.

#include <string_view>

#include "cdskit/cds.hpp"
#include "cdskit/graph.hpp"
#include "cdskit/metrics.hpp"

namespace cdskit {

enum class InitScheme { A1_affinity, A2_identity, A3_transition, A4_knn_transition };
enum class TransitionScheme { B1_transition, B2_ppr, B3_knn, B4_dominant_neighbors, B5_affinity, B6_cds };

struct DiffusionConfig {
    std::size_t iterations = 200;
    InitScheme init = InitScheme::A1_affinity;
    TransitionScheme transition = TransitionScheme::B6_cds;
    /// Neighbourhood size for A4, B3, B4 and for the B6 fallback rows (capped at n-1 there).
    std::size_t k = 10;
    /// B2: L = teleport * P + (1 - teleport) * I.
    double teleport = 0.85;
    SolverParams solver;

    void validate(Index n) const;
};

/// "A1".."A4" / "B1".."B6"; throws InputError otherwise.
InitScheme parse_init_scheme(std::string_view name);
TransitionScheme parse_transition_scheme(std::string_view name);
std::string_view to_string(InitScheme s);
std::string_view to_string(TransitionScheme s);

/// Row-normalised A; all-zero rows stay zero.
Matrix transition_matrix(const Matrix& a);

/// A with every row reduced to its k largest off-diagonal entries (ties by index).
Matrix knn_sparsify(const Matrix& a, std::size_t k);

/// Transition matrix L for the chosen scheme, symmetrised as max(L, L^T).
/// B6 keeps a_ij when j lies in CDS({i}); a node whose solve throws falls
/// back to its k-NN row.
Matrix build_locally_constrained_affinity(const AffinityMatrix& a, const DiffusionConfig& config);

Matrix initial_affinity(const AffinityMatrix& a, const DiffusionConfig& config);

/// D^{-1/2} L D^{-1/2} with D the row sums (zero rows stay zero). Every
/// connected component then has spectral radius 1, so repeated L V L does not
/// collapse onto the component with the largest eigenvalue.
Matrix normalize_transition(const Matrix& l);

/// V_{t+1} = L V_t L, each iterate row-normalised (zero rows left as they are).
Matrix diffuse(const Matrix& v0, const Matrix& l, std::size_t iterations);

/// initial_affinity -> build_locally_constrained_affinity -> normalize_transition -> diffuse.
Matrix run_diffusion(const AffinityMatrix& a, const DiffusionConfig& config);

enum class SelfMatch { First, Exclude };

/// Items sorted by v(query, .) descending, ties by index. With
/// SelfMatch::First the query leads the list with the row maximum as score.
RankedList rank(const Matrix& v, Index query, SelfMatch self = SelfMatch::First);

}  // namespace cdskit
