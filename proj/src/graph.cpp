#include "cdskit/graph.hpp"
#include "cdskit/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace cdskit {

namespace {

void require_finite(const Matrix& m, const char* what)
{
    for (Eigen::Index i = 0; i < m.size(); ++i) {
        if (!std::isfinite(m.data()[i])) {
            std::ostringstream msg;
            msg << what << ": non-finite value at row " << i / m.cols() << ", column " << i % m.cols();
            throw InputError(msg.str());
        }
    }
}

Matrix pairwise_squared_distances(const Matrix& f)
{
    const auto& k = kernels::active();
    const Eigen::Index n = f.rows();
    const auto d = static_cast<std::size_t>(f.cols());
    Matrix out = Matrix::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = i + 1; j < n; ++j) {
            const double s = k.squared_distance(f.row(i).data(), f.row(j).data(), d);
            out(i, j) = s;
            out(j, i) = s;
        }
    }
    return out;
}

}  // namespace

FeatureTable::FeatureTable(Matrix values, std::vector<long> labels)
    : values_(std::move(values)), labels_(std::move(labels))
{
    if (values_.rows() < 1)
        throw InputError("feature table needs at least one row");
    require_finite(values_, "feature table");
    if (!labels_.empty() && labels_.size() != static_cast<std::size_t>(values_.rows()))
        throw InputError("feature table: " + std::to_string(labels_.size()) + " labels for " +
                         std::to_string(values_.rows()) + " rows");
}

std::string AffinityIssue::describe() const
{
    std::ostringstream out;
    switch (kind) {
    case Kind::NotSquare:
        out << "matrix is not square";
        break;
    case Kind::NonFinite:
        out << "non-finite entry at (" << row << ", " << col << ")";
        break;
    case Kind::Negative:
        out << "negative entry " << -magnitude << " at (" << row << ", " << col << ")";
        break;
    case Kind::NonzeroDiagonal:
        out << "diagonal entry " << magnitude << " at index " << row;
        break;
    case Kind::Asymmetric:
        out << "symmetry defect " << magnitude << " between (" << row << ", " << col << ") and (" << col << ", "
            << row << ")";
        break;
    }
    return out.str();
}

std::string AffinityReport::summary(std::size_t max_lines) const
{
    std::ostringstream out;
    for (std::size_t i = 0; i < issues.size() && i < max_lines; ++i)
        out << (i ? "; " : "") << issues[i].describe();
    if (issues.size() > max_lines)
        out << "; ... (" << issues.size() - max_lines << " more)";
    return out.str();
}

AffinityReport validate_affinity(const Matrix& m)
{
    AffinityReport report;
    using Kind = AffinityIssue::Kind;
    if (m.rows() != m.cols()) {
        report.issues.push_back({Kind::NotSquare, static_cast<Index>(m.rows()), static_cast<Index>(m.cols()), 0.0});
        return report;
    }
    const Eigen::Index n = m.rows();
    double scale = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            const double v = m(i, j);
            if (!std::isfinite(v))
                report.issues.push_back({Kind::NonFinite, Index(i), Index(j), 0.0});
            else
                scale = std::max(scale, std::abs(v));
        }
    }
    const double sym_tol = 1e-12 * scale;
    for (Eigen::Index i = 0; i < n; ++i) {
        if (std::isfinite(m(i, i)) && m(i, i) != 0.0)
            report.issues.push_back({Kind::NonzeroDiagonal, Index(i), Index(i), m(i, i)});
        for (Eigen::Index j = 0; j < n; ++j) {
            const double v = m(i, j);
            if (std::isfinite(v) && v < 0.0)
                report.issues.push_back({Kind::Negative, Index(i), Index(j), -v});
            if (j > i && std::isfinite(v) && std::isfinite(m(j, i))) {
                const double defect = std::abs(v - m(j, i));
                if (defect > sym_tol)
                    report.issues.push_back({Kind::Asymmetric, Index(i), Index(j), defect});
            }
        }
    }
    return report;
}

AffinityMatrix::AffinityMatrix(Matrix m) : w_(std::move(m))
{
    const auto report = validate_affinity(w_);
    if (!report.ok())
        throw InputError("invalid affinity matrix: " + report.summary());
}

AffinityMatrix AffinityMatrix::zeros(Index n)
{
    const auto en = static_cast<Eigen::Index>(n);
    return AffinityMatrix(Matrix::Zero(en, en), Trusted{});
}

AffinityMatrix AffinityMatrix::submatrix(const std::vector<Index>& ids) const
{
    const auto k = static_cast<Eigen::Index>(ids.size());
    Matrix sub(k, k);
    for (Eigen::Index r = 0; r < k; ++r) {
        if (ids[std::size_t(r)] >= size())
            throw InputError("submatrix index " + std::to_string(ids[std::size_t(r)]) + " out of range");
        for (Eigen::Index c = 0; c < k; ++c)
            sub(r, c) = w_(Eigen::Index(ids[std::size_t(r)]), Eigen::Index(ids[std::size_t(c)]));
    }
    return AffinityMatrix(std::move(sub), Trusted{});
}

double AffinityMatrix::degree(Index i) const
{
    return w_.row(static_cast<Eigen::Index>(i)).sum();
}

DistanceMatrix::DistanceMatrix(Matrix d) : d_(std::move(d))
{
    if (d_.rows() != d_.cols())
        throw InputError("distance matrix must be square");
    require_finite(d_, "distance matrix");
    const Eigen::Index n = d_.rows();
    const double scale = n ? d_.cwiseAbs().maxCoeff() : 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        if (d_(i, i) != 0.0)
            throw InputError("distance matrix: nonzero diagonal at index " + std::to_string(i));
        for (Eigen::Index j = 0; j < n; ++j) {
            if (d_(i, j) < 0.0)
                throw InputError("distance matrix: negative entry at (" + std::to_string(i) + ", " +
                                 std::to_string(j) + ")");
            if (std::abs(d_(i, j) - d_(j, i)) > 1e-12 * scale)
                throw InputError("distance matrix: asymmetric at (" + std::to_string(i) + ", " +
                                 std::to_string(j) + ")");
        }
    }
}

AffinityMatrix build_gaussian_affinity(const FeatureTable& features, double sigma)
{
    if (!(sigma > 0.0) || !std::isfinite(sigma))
        throw InputError("gaussian affinity: sigma must be positive");
    const Matrix sq = pairwise_squared_distances(features.values());
    const double denom = 2.0 * sigma * sigma;
    Matrix a = (-sq.array() / denom).exp().matrix();
    a.diagonal().setZero();
    return AffinityMatrix(std::move(a));
}

AffinityMatrix build_self_tuning_affinity(const FeatureTable& features, Index k)
{
    const Index n = features.rows();
    if (k < 1 || k >= n)
        throw InputError("self-tuning affinity: need 1 <= k < n (k=" + std::to_string(k) +
                         ", n=" + std::to_string(n) + ")");
    const Matrix sq = pairwise_squared_distances(features.values());
    const auto en = static_cast<Eigen::Index>(n);

    Vector local_scale(en);
    std::vector<double> dist;
    for (Eigen::Index i = 0; i < en; ++i) {
        dist.clear();
        for (Eigen::Index j = 0; j < en; ++j)
            if (j != i)
                dist.push_back(std::sqrt(sq(i, j)));
        std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());
        double mean = 0.0;
        for (Index p = 0; p < k; ++p)
            mean += dist[p];
        local_scale(i) = std::max(mean / static_cast<double>(k), kSelfTuningSigmaFloor);
    }

    Matrix a(en, en);
    for (Eigen::Index i = 0; i < en; ++i)
        for (Eigen::Index j = 0; j < en; ++j)
            a(i, j) = i == j ? 0.0 : std::exp(-sq(i, j) / (local_scale(i) * local_scale(j)));
    return AffinityMatrix(std::move(a));
}

AffinityMatrix distance_to_similarity(const DistanceMatrix& dist, double sigma)
{
    if (!(sigma > 0.0) || !std::isfinite(sigma))
        throw InputError("distance_to_similarity: sigma must be positive");
    Matrix a = (-dist.distances().array() / (2.0 * sigma * sigma)).exp().matrix();
    a.diagonal().setZero();
    return AffinityMatrix(std::move(a));
}

DistanceMatrix euclidean_distances(const FeatureTable& features)
{
    Matrix d = pairwise_squared_distances(features.values()).array().sqrt().matrix();
    return DistanceMatrix(std::move(d));
}

Matrix minmax_scale_columns(const Matrix& w)
{
    Matrix scaled(w.rows(), w.cols());
    for (Eigen::Index c = 0; c < w.cols(); ++c) {
        const double lo = w.col(c).minCoeff();
        const double hi = w.col(c).maxCoeff();
        if (hi - lo <= 0.0) {
            scaled.col(c).setZero();
            continue;
        }
        scaled.col(c) = (w.col(c).array() - lo) / (hi - lo);
    }
    return scaled;
}

AffinityMatrix minmax_normalize_columns(const AffinityMatrix& a)
{
    const Matrix scaled = minmax_scale_columns(a.weights());
    Matrix sym = 0.5 * (scaled + scaled.transpose());
    sym.diagonal().setZero();
    return AffinityMatrix(std::move(sym));
}

}  // namespace cdskit
