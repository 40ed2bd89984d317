#include "cdskit/fusion.hpp"
#include "cdskit/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace cdskit {

std::vector<Index> incremental_nn_select(const std::vector<ScoredId>& ranked, double npc)
{
    if (!(npc > 0.0 && npc <= 1.0))
        throw InputError("incremental_nn_select: npc must lie in (0, 1]");
    std::vector<Index> out;
    if (ranked.empty())
        return out;
    out.push_back(ranked[0].id);
    for (std::size_t i = 1; i < ranked.size(); ++i) {
        const double prev = ranked[i - 1].score;
        if (prev <= 0.0 || ranked[i].score / prev <= npc)
            break;
        out.push_back(ranked[i].id);
    }
    return out;
}

ClusterResult query_cds(const AffinityMatrix& a, Index query, const std::vector<Index>& nn,
                        const SolverParams& params)
{
    if (query >= a.size())
        throw InputError("query_cds: query " + std::to_string(query) + " out of range");
    std::vector<Index> ids = nn;
    ids.push_back(query);
    ids = make_vertex_set(std::move(ids));
    const auto pos = static_cast<Index>(std::lower_bound(ids.begin(), ids.end(), query) - ids.begin());
    ClusterResult r = extract_cds(a.submatrix(ids), {pos}, params);

    Vector x = Vector::Zero(static_cast<Eigen::Index>(a.size()));
    VertexSet support;
    for (std::size_t k = 0; k < ids.size(); ++k)
        x[Eigen::Index(ids[k])] = r.x[Eigen::Index(k)];
    for (Index v : r.support)
        support.push_back(ids[v]);
    r.x = std::move(x);
    r.support = std::move(support);
    return r;
}

double dynamic_threshold(const std::vector<double>& x, double scale)
{
    if (x.empty())
        throw InputError("dynamic_threshold: empty score vector");
    const auto [lo, hi] = std::minmax_element(x.begin(), x.end());
    return scale * (1.0 - *hi + *lo) / static_cast<double>(x.size());
}

std::vector<Index> detect_outliers(const std::vector<Index>& members, const std::vector<double>& scores,
                                   double zeta, Index query)
{
    if (members.size() != scores.size())
        throw InputError("detect_outliers: members and scores differ in length");
    std::vector<Index> kept;
    for (std::size_t k = 0; k < members.size(); ++k)
        if (members[k] == query || scores[k] >= zeta)
            kept.push_back(members[k]);
    return kept;
}

double normalized_entropy(const std::vector<double>& p)
{
    if (p.size() <= 1)
        return 0.0;
    double h = 0.0;
    for (double v : p)
        if (v > 0.0)
            h -= v * std::log(v);
    return std::clamp(h / std::log(static_cast<double>(p.size())), 0.0, 1.0);
}

double membership_entropy(const std::vector<double>& x)
{
    if (x.empty())
        throw InputError("membership_entropy: empty cluster");
    const double top = *std::max_element(x.begin(), x.end());
    std::vector<double> p(x.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i)
        sum += p[i] = std::exp(x[i] - top);
    for (double& v : p)
        v /= sum;
    return normalized_entropy(p);
}

std::vector<double> compute_piw(const std::vector<ChannelCluster>& clusters)
{
    if (clusters.empty())
        throw InputError("compute_piw: no channels");
    double total_size = 0.0;
    for (const auto& c : clusters)
        total_size += static_cast<double>(c.size);
    std::vector<double> theta(clusters.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < clusters.size(); ++i) {
        const double share = total_size > 0.0 ? static_cast<double>(clusters[i].size) / total_size : 0.0;
        sum += theta[i] = std::max(0.0, 1.0 - clusters[i].entropy) + share;
    }
    for (double& t : theta)
        t = sum > 0.0 ? t / sum : 1.0 / static_cast<double>(clusters.size());
    return theta;
}

VoteScores vote(const std::vector<std::vector<Index>>& nn_sets, const std::vector<std::vector<Index>>& cds_sets,
                Index n, const VoteNormalizers& norm)
{
    const std::size_t z = nn_sets.size();
    VoteScores out{std::vector<double>(n, 0.0), std::vector<double>(n, 0.0), std::vector<double>(n, 0.0)};
    if (z < 2)
        return out;
    if (cds_sets.size() != z)
        throw InputError("vote: need one CDS set per channel");

    std::vector<VertexSet> nn(z);
    for (std::size_t c = 0; c < z; ++c)
        nn[c] = make_vertex_set(nn_sets[c]);

    std::vector<VertexSet> phi(z);
    for (std::size_t skip = 0; skip < z; ++skip) {
        bool first = true;
        for (std::size_t c = 0; c < z; ++c) {
            if (c == skip)
                continue;
            phi[skip] = first ? nn[c] : set_intersection(phi[skip], nn[c]);
            first = false;
        }
    }
    VertexSet kappa = phi[0];
    for (std::size_t k = 1; k < z; ++k)
        kappa = set_intersection(kappa, phi[k]);

    const double eta = norm.eta > 0.0 ? norm.eta : static_cast<double>(z);
    const double theta = norm.theta > 0.0 ? norm.theta : static_cast<double>(z);
    const double iota = norm.iota > 0.0 ? norm.iota : 1.0;
    auto tally = [n](std::vector<double>& into, const std::vector<Index>& ids, double weight) {
        for (Index id : ids) {
            if (id >= n)
                throw InputError("vote: id " + std::to_string(id) + " out of range");
            into[id] += weight;
        }
    };
    for (const auto& s : phi)
        tally(out.v1, s, 1.0 / eta);
    for (const auto& s : cds_sets)
        tally(out.v2, make_vertex_set(s), 1.0 / theta);
    tally(out.v3, kappa, 1.0 / iota);
    return out;
}

std::vector<double> final_similarity(const std::vector<std::vector<double>>& sims, const std::vector<double>& piw,
                                     const VoteScores& votes, double lambda)
{
    if (sims.empty() || sims.size() != piw.size())
        throw InputError("final_similarity: need one PIW per channel");
    if (!(lambda >= 0.0 && lambda <= 1.0))
        throw InputError("final_similarity: lambda must lie in [0, 1]");
    const std::size_t n = sims[0].size();
    std::vector<double> out(n);
    for (std::size_t j = 0; j < n; ++j) {
        double ns = 1.0;
        for (std::size_t c = 0; c < sims.size(); ++c) {
            if (sims[c].size() != n)
                throw InputError("final_similarity: channels differ in length");
            if (piw[c] > 0.0)
                ns *= std::pow(std::max(sims[c][j], 0.0), piw[c]);
        }
        const double v = votes.v1.empty() ? 0.0 : votes.total(j);
        out[j] = lambda * ns + (1.0 - lambda) * v;
    }
    return out;
}

void FusionConfig::validate() const
{
    if (!(npc > 0.0 && npc <= 1.0))
        throw InputError("fusion: npc must lie in (0, 1]");
    if (!(lambda >= 0.0 && lambda <= 1.0))
        throw InputError("fusion: lambda must lie in [0, 1]");
    if (!(threshold_scale >= 0.0))
        throw InputError("fusion: threshold scale must be non-negative");
    solver.validate();
}

std::vector<AffinityMatrix> normalize_channels(const std::vector<FeatureChannel>& channels)
{
    if (channels.empty())
        throw InputError("fusion: at least one channel is required");
    std::vector<AffinityMatrix> out;
    for (const auto& c : channels) {
        if (c.similarity.size() != channels[0].similarity.size())
            throw InputError("fusion: channel '" + c.name + "' has a different size");
        out.push_back(minmax_normalize_columns(c.similarity));
    }
    return out;
}

FusionResult retrieve(Index query, const std::vector<AffinityMatrix>& normalized, const FusionConfig& config)
{
    config.validate();
    if (normalized.empty())
        throw InputError("fusion: at least one channel is required");
    const Index n = normalized[0].size();
    if (query >= n)
        throw InputError("fusion: query " + std::to_string(query) + " out of range");

    FusionResult out;
    std::vector<std::vector<Index>> nn_sets, cds_sets;
    std::vector<ChannelCluster> clusters;
    std::vector<std::vector<double>> sims;
    for (const auto& a : normalized) {
        std::vector<ScoredId> ranked;
        std::vector<double> row(n);
        for (Index j = 0; j < n; ++j) {
            row[j] = a(query, j);
            if (j != query)
                ranked.push_back({j, row[j]});
        }
        std::stable_sort(ranked.begin(), ranked.end(),
                         [](const ScoredId& x, const ScoredId& y) { return x.score > y.score; });

        ChannelTrace trace;
        trace.nn = incremental_nn_select(ranked, config.npc);
        const ClusterResult r = query_cds(a, query, trace.nn, config.solver);

        std::vector<double> scores;
        for (Index v : r.support)
            scores.push_back(r.x[Eigen::Index(v)]);
        const double zeta = dynamic_threshold(scores, config.threshold_scale);
        trace.cluster = detect_outliers(r.support, scores, zeta, query);

        std::vector<double> kept_scores;
        for (Index v : trace.cluster)
            kept_scores.push_back(r.x[Eigen::Index(v)]);
        trace.entropy = membership_entropy(kept_scores);
        clusters.push_back({trace.entropy, trace.cluster.size()});

        nn_sets.push_back(trace.nn);
        std::vector<Index> gallery_members;
        for (Index v : trace.cluster)
            if (v != query)
                gallery_members.push_back(v);
        cds_sets.push_back(gallery_members);
        sims.push_back(std::move(row));
        out.channels.push_back(std::move(trace));
    }

    out.piw = compute_piw(clusters);
    const VoteScores votes = vote(nn_sets, cds_sets, n, config.votes);
    const std::vector<double> fused = final_similarity(sims, out.piw, votes, config.lambda);

    std::vector<Index> order;
    for (Index j = 0; j < n; ++j)
        if (j != query)
            order.push_back(j);
    std::stable_sort(order.begin(), order.end(), [&](Index x, Index y) { return fused[x] > fused[y]; });
    out.ranking.query = query;
    for (Index j : order) {
        out.ranking.ids.push_back(j);
        out.ranking.scores.push_back(fused[j]);
    }
    return out;
}

std::vector<FusionResult> retrieve_all(const std::vector<FeatureChannel>& channels, const FusionConfig& config)
{
    const std::vector<AffinityMatrix> normalized = normalize_channels(channels);
    const Index n = normalized[0].size();
    std::vector<FusionResult> out(n);
    parallel_for(n, [&](std::size_t q) { out[q] = retrieve(q, normalized, config); });
    return out;
}

}  // namespace cdskit
