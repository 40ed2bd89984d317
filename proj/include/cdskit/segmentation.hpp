#pragma once

// Constrained segmentation and co-segmentation over precomputed superpixel
// features. A mask is the set of foreground superpixel ids.

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "cdskit/cds.hpp"
#include "cdskit/graph.hpp"
#include "cdskit/metrics.hpp"

namespace cdskit {

enum class AnnotationMode { ScribbleFg, ScribbleFgBg, BoundingBox };

/// For ScribbleFgBg, labels[k] is 1 (foreground) or 0 (background) for ids[k].
/// For BoundingBox, ids are the superpixels on or outside the box.
struct Annotation {
    AnnotationMode mode = AnnotationMode::ScribbleFg;
    std::vector<Index> ids;
    std::vector<int> labels;
};

AnnotationMode parse_annotation_mode(const std::string& name);

struct GaussianKernel {
    double sigma = 1.0;
};
struct SelfTuningKernel {
    Index k = 7;
};
using AffinityKernel = std::variant<GaussianKernel, SelfTuningKernel>;

AffinityMatrix build_affinity(const FeatureTable& features, const AffinityKernel& kernel);

struct SegmentationResult {
    VertexSet mask;
    VertexSet uds;
    std::vector<VertexSet> clusters;
    std::vector<std::string> warnings;
};

/// Scribble modes return the UDS grown from the foreground ids; bounding-box
/// mode returns its complement. Background labels of ScribbleFgBg switch to
/// error_tolerant_segment.
SegmentationResult segment(const AffinityMatrix& a, const Annotation& annotation, const SolverParams& params = {});

/// Peel-off from the foreground scribbles; clusters that contain a
/// background-scribbled superpixel are discarded.
SegmentationResult error_tolerant_segment(const AffinityMatrix& a, const VertexSet& fg, const VertexSet& bg,
                                          const SolverParams& params = {});

// --- co-segmentation ----------------------------------------------------------

/// Per-image superpixel data. Rows of color/sift/hog are superpixels.
struct CosegImage {
    Matrix color;
    Matrix sift;
    Matrix hog;
    Matrix adjacency;  ///< 0/1, symmetric
    Vector objectness; ///< P_f in [0, 1]

    Index size() const { return static_cast<Index>(color.rows()); }
    void validate(const std::string& what) const;
};

/// Geodesic distances over the adjacency graph weighted by Euclidean feature
/// distance; e_pq = max(D) - D_pq + min(D) for adjacent pairs, 0 otherwise,
/// max and min over finite off-diagonal entries.
Matrix geodesic_adjacency_similarity(const Matrix& features, const Matrix& adjacency);

/// A_m(i, j) = P_f(i) P_f(j), zero diagonal.
Matrix objectness_affinity(const Vector& objectness);

/// M = A_m / 2 + (A_c + A_s + A_h) / 6.
Matrix coseg_payoff(const Matrix& color, const Matrix& sift, const Matrix& hog, const Matrix& objectness);

/// Joint affinity over the concatenated superpixels of all images: geodesic
/// similarity inside each image; across images max(D) - D + min(D) on
/// Euclidean distance for color and HoG and the dot product for SIFT. Each
/// channel is min-max normalised before coseg_payoff.
struct JointGraph {
    AffinityMatrix payoff;
    std::vector<Index> offsets;  ///< first joint id of each image, plus the total

    VertexSet image_nodes(std::size_t image) const;
    /// Joint ids restricted to one image, as local ids.
    VertexSet localise(const VertexSet& joint, std::size_t image) const;
};

JointGraph build_joint_graph(const std::vector<CosegImage>& images);

struct CosegResult {
    std::vector<VertexSet> masks;  ///< local ids per image
    VertexSet o1, o2;              ///< joint ids
    std::vector<std::string> warnings;
};

/// extract_cds with S = image-1 nodes gives O2, with S = image-2 nodes gives
/// O1; the masks are O1 ∩ O2 split per image.
CosegResult coseg_unsupervised(const CosegImage& first, const CosegImage& second, const SolverParams& params = {});

struct Scribbles {
    std::size_t image = 0;
    std::vector<Index> fg;  ///< local ids
    std::vector<Index> bg;
};

/// Stage 1 on each scribbled image: peel-off from fg gives O1, from bg gives
/// O2; F = (O1 \ O2) ∪ fg, B = (O2 \ O1) ∪ bg. Stage 2 on the joint graph with
/// F-B affinities zeroed: peel-off from F gives O1', from B gives O2'; the
/// masks are O1' \ O2' per image.
CosegResult coseg_interactive(const std::vector<CosegImage>& images, const std::vector<Scribbles>& scribbles,
                              const SolverParams& params = {});

}  // namespace cdskit
