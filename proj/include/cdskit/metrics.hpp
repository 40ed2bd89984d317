#pragma once

// Retrieval and segmentation scores.

#include <optional>
#include <vector>

#include "cdskit/types.hpp"

namespace cdskit {

/// Gallery ordering for one query, best first.
struct RankedList {
    Index query = 0;
    std::vector<Index> ids;
    std::vector<double> scores;
};

/// Average precision of one list with the query removed from its own
/// gallery. nullopt when no other item shares the query's label.
std::optional<double> average_precision(const RankedList& list, const std::vector<long>& labels);

struct MapResult {
    double value = 0.0;
    std::size_t evaluated = 0;
    std::size_t skipped = 0;  ///< queries without any relevant item
};

MapResult mean_average_precision(const std::vector<RankedList>& lists, const std::vector<long>& labels);

/// Fraction of queries with a relevant item within the first r positions
/// (query excluded), one value per entry of `ranks`. Queries without any
/// relevant item are skipped.
std::vector<double> cmc(const std::vector<RankedList>& lists, const std::vector<long>& labels,
                        const std::vector<std::size_t>& ranks = {1, 5});

/// Mean number of same-label items in the first four positions, query included.
double ns_score(const std::vector<RankedList>& lists, const std::vector<long>& labels);

/// |first R positions ∩ class of query| / |class of query|, query included.
double bulls_eye(const RankedList& list, const std::vector<long>& labels, std::size_t r);

double mean_bulls_eye(const std::vector<RankedList>& lists, const std::vector<long>& labels, std::size_t r);

struct SegmentationScores {
    double error_rate = 0.0;
    double jaccard = 0.0;
    double dsc = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double f_measure = 0.0;
    bool pixel_weighted = false;
};

inline constexpr double kFMeasureBeta2 = 0.3;

/// Scores of a predicted foreground against ground truth over items
/// 0..n-1. Items are weighted by `pixel_counts` when given, else counted.
/// The error rate is taken over `region` (default: every item).
/// Empty-set conventions: recall is 1 when both sets are empty and 0 when
/// only the ground truth is; precision likewise with the roles swapped.
SegmentationScores segmentation_metrics(const VertexSet& predicted, const VertexSet& truth, Index n,
                                        const std::vector<double>& pixel_counts = {},
                                        const std::optional<VertexSet>& region = std::nullopt);

}  // namespace cdskit
