#pragma once

// Query-adaptive late fusion of several similarity channels.

#include <string>
#include <vector>

#include "cdskit/cds.hpp"
#include "cdskit/graph.hpp"
#include "cdskit/metrics.hpp"

namespace cdskit {

struct FeatureChannel {
    std::string name;
    AffinityMatrix similarity;
};

struct ScoredId {
    Index id;
    double score;
};

/// Keeps the first neighbour and then n_{i+1} while s_{i+1} / s_i > npc.
/// Expects scores sorted descending; a non-positive s_i ends the walk.
std::vector<Index> incremental_nn_select(const std::vector<ScoredId>& ranked, double npc);

/// CDS of the query on the complete graph over nn ∪ {query}, using the
/// channel's (normalised) affinities. Support and x use global ids.
ClusterResult query_cds(const AffinityMatrix& a, Index query, const std::vector<Index>& nn,
                        const SolverParams& params = {});

/// zeta = scale * (1 - max(x) + min(x)) / |x|.
double dynamic_threshold(const std::vector<double>& x, double scale);

/// Members whose score is below zeta, except the query, are dropped.
std::vector<Index> detect_outliers(const std::vector<Index>& members, const std::vector<double>& scores,
                                   double zeta, Index query);

/// -sum p log p / log m for a probability vector of length m; 0 when m = 1.
double normalized_entropy(const std::vector<double>& p);

/// normalized_entropy of softmax(x).
double membership_entropy(const std::vector<double>& x);

struct ChannelCluster {
    double entropy = 0.0;
    std::size_t size = 0;
};

/// PIW_i proportional to (1 - H_i) + |C_i| / sum_j |C_j|; uniform when every
/// term is zero.
std::vector<double> compute_piw(const std::vector<ChannelCluster>& clusters);

struct VoteNormalizers {
    double eta = 0.0;    ///< 0 selects the number of phi sets (z)
    double theta = 0.0;  ///< 0 selects z
    double iota = 1.0;
};

struct VoteScores {
    std::vector<double> v1, v2, v3;  ///< indexed by item id

    double total(Index id) const { return v1[id] + v2[id] + v3[id]; }
};

/// With z channels: the phi sets are the z intersections of z-1 NN sets,
/// kappa is the intersection of all phi sets. v1 counts phi memberships,
/// v2 CDS-set memberships and v3 kappa membership, each divided by its
/// normaliser. All votes are zero when z < 2.
VoteScores vote(const std::vector<std::vector<Index>>& nn_sets, const std::vector<std::vector<Index>>& cds_sets,
                Index n, const VoteNormalizers& norm = {});

/// F = lambda * prod_i sim_i^PIW_i + (1 - lambda) * (v1 + v2 + v3).
std::vector<double> final_similarity(const std::vector<std::vector<double>>& sims, const std::vector<double>& piw,
                                     const VoteScores& votes, double lambda);

struct FusionConfig {
    double npc = 0.9;
    double threshold_scale = 1.0;  ///< Lambda in the zeta rule
    double lambda = 0.7;
    VoteNormalizers votes;
    SolverParams solver;

    void validate() const;
};

struct ChannelTrace {
    std::vector<Index> nn;
    std::vector<Index> cluster;  ///< CDS support after outlier removal, query included
    double entropy = 0.0;
};

struct FusionResult {
    RankedList ranking;  ///< query excluded
    std::vector<double> piw;
    std::vector<ChannelTrace> channels;
};

/// Channels are min-max normalised column-wise before use.
std::vector<AffinityMatrix> normalize_channels(const std::vector<FeatureChannel>& channels);

/// Full pipeline for one query on pre-normalised channel matrices.
FusionResult retrieve(Index query, const std::vector<AffinityMatrix>& normalized, const FusionConfig& config = {});

/// Every query, in parallel, on raw channels.
std::vector<FusionResult> retrieve_all(const std::vector<FeatureChannel>& channels, const FusionConfig& config = {});

}  // namespace cdskit
