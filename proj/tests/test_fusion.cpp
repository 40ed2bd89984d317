#include "doctest.h"

#include "cdskit/fixtures.hpp"
#include "cdskit/fusion.hpp"
#include "cdskit/rng.hpp"

#include "scenarios.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

using namespace cdskit;

namespace {

std::vector<ScoredId> scored(std::initializer_list<double> scores)
{
    std::vector<ScoredId> out;
    Index id = 0;
    for (double s : scores)
        out.push_back({id++, s});
    return out;
}

VertexSet ids(std::initializer_list<Index> v) { return make_vertex_set(v); }

VertexSet one_based(std::initializer_list<Index> v)
{
    VertexSet s;
    for (Index i : v)
        s.push_back(i - 1);
    return make_vertex_set(s);
}

}  // namespace

TEST_CASE("incremental NN selection walks consecutive ratios")
{
    CHECK(incremental_nn_select(scored({0.9, 0.89, 0.88, 0.30}), 0.9) == std::vector<Index>{0, 1, 2});
    CHECK(incremental_nn_select(scored({0.5, 0.5, 0.5, 0.5}), 0.9).size() == 4);
    CHECK(incremental_nn_select(scored({1.0, 0.5, 0.2, 0.01}), 1e-9).size() == 4);
    CHECK(incremental_nn_select({}, 0.9).empty());
    CHECK(incremental_nn_select(scored({0.7, 0.0, 0.0}), 0.5) == std::vector<Index>{0});
    CHECK_THROWS_AS(incremental_nn_select(scored({1.0}), 0.0), InputError);
    CHECK_THROWS_AS(incremental_nn_select(scored({1.0}), 1.5), InputError);
}

TEST_CASE("raising npc never enlarges the neighbour set")
{
    Rng rng(5);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> s(20);
        for (double& v : s)
            v = rng.uniform();
        std::sort(s.rbegin(), s.rend());
        std::vector<ScoredId> ranked;
        for (std::size_t i = 0; i < s.size(); ++i)
            ranked.push_back({i, s[i]});
        std::size_t prev = ranked.size() + 1;
        for (double npc = 0.05; npc <= 1.0; npc += 0.05) {
            const std::size_t k = incremental_nn_select(ranked, npc).size();
            CHECK(k <= prev);
            prev = k;
        }
    }
}

TEST_CASE("query_cds on small graphs")
{
    SUBCASE("star centred at the query keeps the whole star")
    {
        Matrix m = Matrix::Zero(5, 5);
        for (Eigen::Index j = 1; j < 5; ++j)
            m(0, j) = m(j, 0) = 1.0;
        const ClusterResult r = query_cds(AffinityMatrix(m), 0, {1, 2, 3, 4});
        CHECK(r.support == ids({0, 1, 2, 3, 4}));
    }
    SUBCASE("query disconnected from its neighbours stays alone")
    {
        Matrix m = Matrix::Zero(4, 4);
        m(1, 2) = m(2, 1) = m(2, 3) = m(3, 2) = 1.0;
        const ClusterResult r = query_cds(AffinityMatrix(m), 0, {1, 2, 3});
        CHECK(r.support == ids({0}));
    }
    SUBCASE("G8 rooted at node 5")
    {
        const ClusterResult r = query_cds(fixtures::g8(), 4, {0, 1, 2, 3, 5, 6, 7});
        CHECK(r.support == one_based({4, 5, 6, 7, 8}));
        CHECK(r.x.size() == 8);
        CHECK(r.x.sum() == doctest::Approx(1.0));
    }
    SUBCASE("only the NN subgraph is used")
    {
        const ClusterResult r = query_cds(fixtures::g8(), 4, {5, 7});
        CHECK(r.support == one_based({5, 6, 8}));
        CHECK(r.x[0] == 0.0);
    }
    CHECK_THROWS_AS(query_cds(fixtures::g8(), 8, {}), InputError);
}

TEST_CASE("dynamic threshold and outlier removal")
{
    CHECK(dynamic_threshold({0.25, 0.25, 0.25, 0.25}, 1.0) == doctest::Approx(0.25));
    CHECK(dynamic_threshold({0.25, 0.25, 0.25, 0.25}, 2.0) == doctest::Approx(0.5));
    CHECK(dynamic_threshold({1.0, 0.0, 0.0}, 1.0) == 0.0);
    CHECK(dynamic_threshold({0.5, 0.3, 0.2}, 1.0) == doctest::Approx(0.7 / 3.0).epsilon(1e-12));
    CHECK_THROWS_AS(dynamic_threshold({}, 1.0), InputError);

    CHECK(detect_outliers({0, 1, 2}, {0.6, 0.35, 0.05}, 0.15, 0) == std::vector<Index>{0, 1});
    CHECK(detect_outliers({0, 1, 2}, {0.4, 0.3, 0.3}, 0.1, 0) == std::vector<Index>{0, 1, 2});
    CHECK(detect_outliers({3, 1}, {0.01, 0.99}, 0.5, 3) == std::vector<Index>{3, 1});
    CHECK(detect_outliers({7}, {1.0}, 2.0, 7) == std::vector<Index>{7});
    CHECK_THROWS_AS(detect_outliers({0, 1}, {1.0}, 0.1, 0), InputError);
}

TEST_CASE("entropy values and bounds")
{
    const double h = -(0.7 * std::log(0.7) + 0.2 * std::log(0.2) + 0.1 * std::log(0.1)) / std::log(3.0);
    CHECK(normalized_entropy({0.7, 0.2, 0.1}) == doctest::Approx(h).epsilon(1e-14));
    CHECK(normalized_entropy({0.7, 0.2, 0.1}) == doctest::Approx(0.7300).epsilon(1e-4));
    CHECK(normalized_entropy({1.0}) == 0.0);
    CHECK(normalized_entropy({0.0, 1.0, 0.0}) == 0.0);
    CHECK(normalized_entropy({0.25, 0.25, 0.25, 0.25}) == doctest::Approx(1.0));

    CHECK(membership_entropy({1.0}) == 0.0);
    CHECK(membership_entropy({0.2, 0.2, 0.2, 0.2, 0.2}) == doctest::Approx(1.0));
    // softmax of (0.5, 0.3, 0.2)
    const double e[] = {std::exp(0.5), std::exp(0.3), std::exp(0.2)};
    const double z = e[0] + e[1] + e[2];
    double hs = 0.0;
    for (double v : e)
        hs -= v / z * std::log(v / z);
    CHECK(membership_entropy({0.5, 0.3, 0.2}) == doctest::Approx(hs / std::log(3.0)).epsilon(1e-14));
    CHECK_THROWS_AS(membership_entropy({}), InputError);

    Rng rng(8);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<double> x(1 + rng.below(10));
        double s = 0.0;
        for (double& v : x)
            s += v = rng.uniform();
        for (double& v : x)
            v /= s;
        const double hm = membership_entropy(x);
        const double hn = normalized_entropy(x);
        CHECK(hm >= 0.0);
        CHECK(hm <= 1.0);
        CHECK(hn >= 0.0);
        CHECK(hn <= 1.0);
    }
}

TEST_CASE("PIW weights")
{
    CHECK(compute_piw({{0.3, 4}}) == std::vector<double>{1.0});
    const auto same = compute_piw({{0.4, 3}, {0.4, 3}});
    CHECK(same[0] == doctest::Approx(0.5));
    CHECK(same[1] == doctest::Approx(0.5));
    const auto w = compute_piw({{0.0, 3}, {1.0, 3}});
    CHECK(w[0] == doctest::Approx(0.75));
    CHECK(w[1] == doctest::Approx(0.25));
    const auto degenerate = compute_piw({{1.0, 0}, {1.0, 0}, {1.0, 0}});
    for (double v : degenerate)
        CHECK(v == doctest::Approx(1.0 / 3.0));
    CHECK_THROWS_AS(compute_piw({}), InputError);

    Rng rng(2);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<ChannelCluster> cs(1 + rng.below(5));
        for (auto& c : cs)
            c = {rng.uniform(), rng.below(8)};
        const auto piw = compute_piw(cs);
        CHECK(std::accumulate(piw.begin(), piw.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-12));
        for (double v : piw)
            CHECK(v >= 0.0);
    }
}

TEST_CASE("vote counts")
{
    // z = 3, node 0 in every NN and CDS set
    const std::vector<std::vector<Index>> nn = {{0, 1, 2}, {0, 1}, {0, 3}};
    const std::vector<std::vector<Index>> cds = {{0, 1}, {0}, {0, 2}};
    const VoteNormalizers unit{1.0, 1.0, 1.0};
    const VoteScores v = vote(nn, cds, 5, unit);
    CHECK(v.v1[0] == 3.0);
    CHECK(v.v2[0] == 3.0);
    CHECK(v.v3[0] == 1.0);
    // node 1: phi sets NN2∩NN3={0}, NN1∩NN3={0}, NN1∩NN2={0,1}
    CHECK(v.v1[1] == 1.0);
    CHECK(v.v2[1] == 1.0);
    CHECK(v.v3[1] == 0.0);
    CHECK(v.total(4) == 0.0);

    const VoteScores d = vote(nn, cds, 5);
    CHECK(d.v1[0] == doctest::Approx(1.0));
    CHECK(d.v2[0] == doctest::Approx(1.0));
    CHECK(d.v3[0] == 1.0);

    const VoteScores same = vote({{1, 2}, {1, 2}}, {{}, {}}, 4);
    CHECK(same.v3[1] == 1.0);
    CHECK(same.v3[2] == 1.0);
    CHECK(same.v3[3] == 0.0);

    const VoteScores single = vote({{1, 2}}, {{1}}, 3);
    CHECK(single.total(1) == 0.0);
    CHECK_THROWS_AS(vote({{7}, {7}}, {{}, {}}, 3), InputError);
}

TEST_CASE("final similarity")
{
    const VoteScores votes{{0.5, 0.0}, {0.5, 1.0}, {1.0, 0.0}};
    const std::vector<std::vector<double>> sims = {{0.8, 0.4}, {0.2, 0.9}};
    const auto only_ns = final_similarity(sims, {0.5, 0.5}, votes, 1.0);
    CHECK(only_ns[0] == doctest::Approx(std::sqrt(0.8 * 0.2)));
    CHECK(only_ns[1] == doctest::Approx(std::sqrt(0.4 * 0.9)));
    const auto only_votes = final_similarity(sims, {0.5, 0.5}, votes, 0.0);
    CHECK(only_votes[0] == doctest::Approx(2.0));
    CHECK(only_votes[1] == doctest::Approx(1.0));
    CHECK(final_similarity({{0.8}, {0.2}}, {1.0, 0.0}, VoteScores{}, 1.0)[0] == doctest::Approx(0.8));
    CHECK(final_similarity({{0.0}, {0.5}}, {0.5, 0.5}, VoteScores{}, 1.0)[0] == 0.0);
    CHECK_THROWS_AS(final_similarity(sims, {1.0}, votes, 0.5), InputError);
    CHECK_THROWS_AS(final_similarity(sims, {0.5, 0.5}, votes, 1.5), InputError);
}

TEST_CASE("single channel with lambda = 1 ranks by the normalised channel")
{
    const AffinityMatrix a = fixtures::random_affinity(15, 3);
    const std::vector<FeatureChannel> channels = {{"only", a}};
    const auto normalized = normalize_channels(channels);
    FusionConfig c;
    c.lambda = 1.0;
    for (Index q = 0; q < 15; ++q) {
        const FusionResult r = retrieve(q, normalized, c);
        CHECK(r.piw == std::vector<double>{1.0});
        CHECK(r.ranking.ids == rank(normalized[0].weights(), q, SelfMatch::Exclude).ids);
        CHECK(contains(make_vertex_set(r.channels[0].cluster), q));
    }
}

TEST_CASE("query survives every stage")
{
    const auto set = scenario::three_channel_set(1);
    const auto results = retrieve_all(set.channels);
    for (Index q = 0; q < results.size(); ++q) {
        const auto& r = results[q];
        CHECK(r.ranking.query == q);
        CHECK(std::find(r.ranking.ids.begin(), r.ranking.ids.end(), q) == r.ranking.ids.end());
        CHECK(r.ranking.ids.size() == results.size() - 1);
        for (const auto& ch : r.channels)
            CHECK(std::find(ch.cluster.begin(), ch.cluster.end(), q) != ch.cluster.end());
        CHECK(std::accumulate(r.piw.begin(), r.piw.end(), 0.0) == doctest::Approx(1.0));
    }
}

TEST_CASE("channel order does not change the fused ranking")
{
    const auto set = scenario::three_channel_set(4);
    std::vector<FeatureChannel> reversed(set.channels.rbegin(), set.channels.rend());
    const auto a = retrieve_all(set.channels);
    const auto b = retrieve_all(reversed);
    for (std::size_t q = 0; q < a.size(); ++q) {
        CHECK(a[q].ranking.ids == b[q].ranking.ids);
        for (std::size_t c = 0; c < 3; ++c)
            CHECK(a[q].piw[c] == doctest::Approx(b[q].piw[2 - c]).epsilon(1e-12));
    }
}

TEST_CASE("class-pure channel outweighs a shuffled one")
{
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
        const auto set = scenario::two_channel_set(seed);
        double a = 0.0, b = 0.0;
        for (const auto& r : retrieve_all(set.channels)) {
            a += r.piw[0];
            b += r.piw[1];
        }
        CHECK(a > b);
    }
}

TEST_CASE("three planted channels: fusion beats the best channel on average")
{
    double fused_sum = 0.0, best_sum = 0.0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto set = scenario::three_channel_set(seed);
        std::vector<double> single;
        for (const auto& normalized : normalize_channels(set.channels))
            single.push_back(scenario::single_channel_map(normalized, set.labels));
        std::sort(single.rbegin(), single.rend());
        const double fused = scenario::fused_map(retrieve_all(set.channels), set.labels);
        CAPTURE(seed);
        CHECK(fused > single[1]);
        fused_sum += fused;
        best_sum += single[0];
    }
    CHECK(fused_sum >= best_sum);
}

TEST_CASE("fusion configuration is validated")
{
    const std::vector<FeatureChannel> channels = {{"a", fixtures::random_affinity(4, 1)},
                                                  {"b", fixtures::random_affinity(5, 1)}};
    CHECK_THROWS_AS(normalize_channels(channels), InputError);
    CHECK_THROWS_AS(normalize_channels({}), InputError);
    FusionConfig c;
    c.npc = 0.0;
    CHECK_THROWS_AS(retrieve(0, normalize_channels({channels[0]}), c), InputError);
    CHECK_THROWS_AS(retrieve(9, normalize_channels({channels[0]}), {}), InputError);
}
