#pragma once

// Deterministic test graphs and planted synthetic datasets.

#include <cstdint>
#include <vector>

#include "cdskit/dcds.hpp"
#include "cdskit/fusion.hpp"
#include "cdskit/graph.hpp"
#include "cdskit/segmentation.hpp"

namespace cdskit::fixtures {

/// Eight vertices (ids 0..7 here, 1..8 in the usual drawing) with unit edges
/// 1-2, 2-3, 4-5, 5-6, 5-7, 5-8, 6-8, 7-8.
AffinityMatrix g8();

struct LabeledPoints {
    Matrix features;
    std::vector<long> labels;
};

/// Isotropic Gaussian blobs with centres drawn in [0.25, 0.75]^dims and the
/// points clipped to the unit box. Labels are blob ids in point order.
LabeledPoints make_blobs(std::size_t blobs, std::size_t per_blob, std::size_t dims, double spread, std::uint64_t seed);

/// Parallel 2-d bars of unit length, `spacing` apart along x. Points are
/// spread evenly along each bar with jitter; `width` is the x noise.
LabeledPoints make_elongated_blobs(std::size_t blobs, std::size_t per_blob, double spacing, double width,
                                   std::uint64_t seed);

/// Gaussian-kernel channel whose cluster structure follows `structure`:
/// items sharing a structure label are drawn around a common centre.
AffinityMatrix planted_channel(const std::vector<long>& structure, std::size_t dims, double spread, double sigma,
                               std::uint64_t seed);

/// Labels 0..classes-1, per_class items each, in blocks.
std::vector<long> block_labels(std::size_t classes, std::size_t per_class);

/// A uniformly shuffled copy of labels.
std::vector<long> shuffled(std::vector<long> labels, std::uint64_t seed);

struct SegmentationFixture {
    FeatureTable features;
    VertexSet foreground;
    VertexSet background;
};

/// Two separated feature blobs: ids [0, n_fg) are foreground.
SegmentationFixture make_segmentation_blobs(std::size_t n_fg, std::size_t n_bg, std::size_t dims, double separation,
                                            std::uint64_t seed);

struct CosegFixture {
    std::vector<CosegImage> images;
    std::vector<VertexSet> objects;  ///< ground-truth local ids per image
};

/// side x side superpixel grids with 4-neighbour adjacency and a centred
/// object block of size object x object. The object appearance is shared;
/// each image gets its own background appearance.
CosegFixture make_coseg_pair(std::size_t side, std::size_t object, std::uint64_t seed);

/// k identities, omega items each; unit-norm features around an identity
/// prototype with Gaussian noise of the given level.
MiniBatch make_dcds_batch(std::size_t identities, std::size_t per_identity, std::size_t dims, double noise,
                          std::uint64_t seed);

/// Symmetric matrix with U[0, 1] off-diagonal entries.
AffinityMatrix random_affinity(std::size_t n, std::uint64_t seed);

/// Erdos-Renyi 0/1 affinity.
AffinityMatrix random_binary_affinity(std::size_t n, double edge_probability, std::uint64_t seed);

}  // namespace cdskit::fixtures
