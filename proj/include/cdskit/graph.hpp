#pragma once

// Affinity-matrix construction and validation.

#include <optional>
#include <string>
#include <vector>

#include "cdskit/types.hpp"

namespace cdskit {

/// n x d table of item features, optionally with class labels.
class FeatureTable {
public:
    explicit FeatureTable(Matrix values, std::vector<long> labels = {});

    Index rows() const { return static_cast<Index>(values_.rows()); }
    Index dims() const { return static_cast<Index>(values_.cols()); }
    const Matrix& values() const { return values_; }
    const std::vector<long>& labels() const { return labels_; }
    bool has_labels() const { return !labels_.empty(); }

private:
    Matrix values_;
    std::vector<long> labels_;
};

struct AffinityIssue {
    enum class Kind { NotSquare, NonFinite, Negative, NonzeroDiagonal, Asymmetric };
    Kind kind;
    Index row = 0;
    Index col = 0;
    double magnitude = 0.0;

    std::string describe() const;
};

/// Empty when the matrix satisfies every AffinityMatrix invariant.
struct AffinityReport {
    std::vector<AffinityIssue> issues;

    bool ok() const { return issues.empty(); }
    std::string summary(std::size_t max_lines = 8) const;
};

/// Symmetry tolerance is relative: |a_ij - a_ji| <= 1e-12 * max|a|.
AffinityReport validate_affinity(const Matrix& m);

/// Symmetric, non-negative edge weights with an exactly zero diagonal.
class AffinityMatrix {
public:
    /// Throws InputError carrying the validation summary when `m` is invalid.
    explicit AffinityMatrix(Matrix m);

    static AffinityMatrix zeros(Index n);

    Index size() const { return static_cast<Index>(w_.rows()); }
    const Matrix& weights() const { return w_; }
    double operator()(Index i, Index j) const { return w_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)); }

    /// Principal submatrix on `ids` (in the given order).
    AffinityMatrix submatrix(const std::vector<Index>& ids) const;

    /// Degree (row sum) of vertex i.
    double degree(Index i) const;

private:
    struct Trusted {};
    AffinityMatrix(Matrix m, Trusted) : w_(std::move(m)) {}
    Matrix w_;
};

/// Pairwise distances: non-negative, symmetric, zero diagonal.
class DistanceMatrix {
public:
    explicit DistanceMatrix(Matrix d);

    Index size() const { return static_cast<Index>(d_.rows()); }
    const Matrix& distances() const { return d_; }

private:
    Matrix d_;
};

/// a_ij = exp(-||f_i - f_j||^2 / (2 sigma^2)), zero diagonal.
AffinityMatrix build_gaussian_affinity(const FeatureTable& features, double sigma);

/// a_ij = exp(-||f_i - f_j||^2 / (sigma_i sigma_j)) with sigma_i the mean
/// distance from f_i to its k nearest neighbours (self excluded), floored at
/// 1e-12.
AffinityMatrix build_self_tuning_affinity(const FeatureTable& features, Index k = 7);

/// a_ij = exp(-d_ij / (2 sigma^2)); the distance enters unsquared.
AffinityMatrix distance_to_similarity(const DistanceMatrix& dist, double sigma);

/// Euclidean distances between feature rows.
DistanceMatrix euclidean_distances(const FeatureTable& features);

/// Column-wise min-max scaling to [0, 1]; constant columns become zero.
Matrix minmax_scale_columns(const Matrix& m);

/// minmax_scale_columns, then (A + A^T) / 2 and a zeroed diagonal.
AffinityMatrix minmax_normalize_columns(const AffinityMatrix& a);

inline constexpr double kSelfTuningSigmaFloor = 1e-12;

}  // namespace cdskit
