#include "cdskit/cds.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <string>
#include <unordered_map>

namespace cdskit {

namespace {

void require_member(const VertexSet& s, Index v, Index n, bool inside, const char* who)
{
    if (v >= n)
        throw InputError(std::string(who) + ": vertex " + std::to_string(v) + " out of range");
    if (contains(s, v) != inside)
        throw InputError(std::string(who) + ": vertex " + std::to_string(v) +
                         (inside ? " must belong to S" : " must lie outside S"));
}

void require_oracle_set(const AffinityMatrix& a, const VertexSet& s, const char* who)
{
    if (s.empty())
        throw InputError(std::string(who) + ": set must be non-empty");
    if (s.size() > kMaxOracleSetSize)
        throw InputError(std::string(who) + ": set size " + std::to_string(s.size()) + " exceeds oracle limit " +
                         std::to_string(kMaxOracleSetSize));
    if (make_vertex_set(s) != s)
        throw InputError(std::string(who) + ": set must be sorted and duplicate-free");
    if (s.back() >= a.size())
        throw InputError(std::string(who) + ": vertex " + std::to_string(s.back()) + " out of range");
}

// Memoised w_T(i) for subsets T of a small universe, addressed by bitmask.
class WeightTable {
public:
    WeightTable(const AffinityMatrix& a, std::vector<Index> universe) : a_(a), u_(std::move(universe)) {}

    double weight(std::uint32_t mask, unsigned i)
    {
        if ((mask & (mask - 1)) == 0)
            return 1.0;
        const std::uint64_t key = (std::uint64_t(mask) << 5) | i;
        if (auto it = memo_.find(key); it != memo_.end())
            return it->second;

        const std::uint32_t rest = mask & ~(1u << i);
        const double size = static_cast<double>(std::popcount(rest));
        double total = 0.0;
        for (unsigned j = 0; j < u_.size(); ++j) {
            if (!(rest & (1u << j)))
                continue;
            // phi_{rest}(j, i) = a_ji - mean_{k in rest} a_jk
            double row = 0.0;
            for (unsigned k = 0; k < u_.size(); ++k)
                if (rest & (1u << k))
                    row += a_(u_[j], u_[k]);
            total += (a_(u_[j], u_[i]) - row / size) * weight(rest, j);
        }
        memo_.emplace(key, total);
        return total;
    }

    double total_weight(std::uint32_t mask)
    {
        double sum = 0.0;
        for (unsigned i = 0; i < u_.size(); ++i)
            if (mask & (1u << i))
                sum += weight(mask, i);
        return sum;
    }

private:
    const AffinityMatrix& a_;
    std::vector<Index> u_;
    std::unordered_map<std::uint64_t, double> memo_;
};

// w_T scales like max(a)^(|T|-1), so the zero test is relative to that.
double weight_tolerance(const AffinityMatrix& a, std::size_t set_size)
{
    const double scale = a.size() ? a.weights().maxCoeff() : 0.0;
    return 1e-10 * std::pow(std::max(scale, 1e-300), static_cast<double>(set_size) - 1.0);
}

}  // namespace

double phi(const AffinityMatrix& a, const VertexSet& s, Index i, Index j)
{
    if (s.empty())
        throw InputError("phi: S must be non-empty");
    require_member(s, i, a.size(), true, "phi");
    require_member(s, j, a.size(), false, "phi");
    double row = 0.0;
    for (Index k : s)
        row += a(i, k);
    return a(i, j) - row / static_cast<double>(s.size());
}

double node_weight(const AffinityMatrix& a, const VertexSet& s, Index i)
{
    require_oracle_set(a, s, "node_weight");
    require_member(s, i, a.size(), true, "node_weight");
    WeightTable table(a, s);
    const auto pos = static_cast<unsigned>(std::lower_bound(s.begin(), s.end(), i) - s.begin());
    return table.weight((1u << s.size()) - 1u, pos);
}

bool is_dominant_set(const AffinityMatrix& a, const VertexSet& s)
{
    require_oracle_set(a, s, "is_dominant_set");
    const auto m = static_cast<unsigned>(s.size());
    const std::uint32_t full = (1u << m) - 1u;

    WeightTable inside(a, s);
    for (std::uint32_t t = 1; t <= full; ++t)
        if (inside.total_weight(t) <= weight_tolerance(a, std::size_t(std::popcount(t))))
            return false;
    for (unsigned i = 0; i < m; ++i)
        if (inside.weight(full, i) <= weight_tolerance(a, m))
            return false;

    for (Index j = 0; j < a.size(); ++j) {
        if (contains(s, j))
            continue;
        std::vector<Index> extended = s;
        extended.push_back(j);
        WeightTable outside(a, extended);
        if (outside.weight((1u << (m + 1)) - 1u, m) > weight_tolerance(a, m + 1))
            return false;
    }
    return true;
}

Vector weighted_characteristic_vector(const AffinityMatrix& a, const VertexSet& s)
{
    if (!is_dominant_set(a, s))
        throw InputError("weighted_characteristic_vector: set is not dominant");
    WeightTable table(a, s);
    const std::uint32_t full = (1u << s.size()) - 1u;
    Vector x = Vector::Zero(static_cast<Eigen::Index>(a.size()));
    for (unsigned i = 0; i < s.size(); ++i)
        x[Eigen::Index(s[i])] = table.weight(full, i);
    return x / x.sum();
}

std::vector<VertexSet> brute_force_maximal_cliques(const AffinityMatrix& a)
{
    const Index n = a.size();
    if (n > 20)
        throw InputError("brute_force_maximal_cliques: n = " + std::to_string(n) + " exceeds 20");
    std::vector<std::uint32_t> adj(n, 0);
    for (Index i = 0; i < n; ++i) {
        for (Index j = 0; j < n; ++j) {
            const double v = a(i, j);
            if (v != 0.0 && v != 1.0)
                throw InputError("brute_force_maximal_cliques: affinity must be binary");
            if (v == 1.0)
                adj[i] |= 1u << j;
        }
    }

    std::vector<VertexSet> cliques;
    if (n == 0)
        return cliques;
    const std::uint32_t count = 1u << n;
    // common[m]: vertices adjacent to every member of m; is_clique[m] built from the lowest member.
    std::vector<std::uint32_t> common(count);
    std::vector<char> is_clique(count, 0);
    common[0] = count - 1u;
    is_clique[0] = 1;
    for (std::uint32_t m = 1; m < count; ++m) {
        const unsigned low = static_cast<unsigned>(std::countr_zero(m));
        const std::uint32_t rest = m & (m - 1);
        common[m] = common[rest] & adj[low];
        is_clique[m] = is_clique[rest] && (rest & ~adj[low]) == 0;
        if (is_clique[m] && (common[m] & ~m) == 0) {
            VertexSet c;
            for (unsigned v = 0; v < n; ++v)
                if (m & (1u << v))
                    c.push_back(v);
            cliques.push_back(std::move(c));
        }
    }
    std::sort(cliques.begin(), cliques.end());
    return cliques;
}

}  // namespace cdskit
