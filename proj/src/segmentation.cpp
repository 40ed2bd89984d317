#include "cdskit/segmentation.hpp"

#include <algorithm>
#include <string>

namespace cdskit {

namespace {

VertexSet checked_ids(const std::vector<Index>& ids, Index n, const char* what)
{
    for (Index id : ids)
        if (id >= n)
            throw InputError(std::string(what) + ": superpixel id " + std::to_string(id) + " out of range (n=" +
                             std::to_string(n) + ")");
    return make_vertex_set(ids);
}

}  // namespace

AnnotationMode parse_annotation_mode(const std::string& name)
{
    if (name == "scribble_fg")
        return AnnotationMode::ScribbleFg;
    if (name == "scribble_fg_bg")
        return AnnotationMode::ScribbleFgBg;
    if (name == "bounding_box")
        return AnnotationMode::BoundingBox;
    throw InputError("unknown annotation mode '" + name + "' (expected scribble_fg, scribble_fg_bg, bounding_box)");
}

AffinityMatrix build_affinity(const FeatureTable& features, const AffinityKernel& kernel)
{
    if (const auto* g = std::get_if<GaussianKernel>(&kernel))
        return build_gaussian_affinity(features, g->sigma);
    return build_self_tuning_affinity(features, std::get<SelfTuningKernel>(kernel).k);
}

SegmentationResult segment(const AffinityMatrix& a, const Annotation& annotation, const SolverParams& params)
{
    if (annotation.ids.empty())
        throw InputError("segment: annotation has no constrained superpixels");
    if (annotation.mode == AnnotationMode::ScribbleFgBg) {
        if (annotation.labels.size() != annotation.ids.size())
            throw InputError("segment: scribble_fg_bg needs one label per id");
        std::vector<Index> fg, bg;
        for (std::size_t k = 0; k < annotation.ids.size(); ++k) {
            if (annotation.labels[k] != 0 && annotation.labels[k] != 1)
                throw InputError("segment: labels must be 0 (background) or 1 (foreground)");
            (annotation.labels[k] == 1 ? fg : bg).push_back(annotation.ids[k]);
        }
        if (fg.empty())
            throw InputError("segment: no foreground scribbles");
        return error_tolerant_segment(a, checked_ids(fg, a.size(), "segment"), checked_ids(bg, a.size(), "segment"),
                                      params);
    }

    const VertexSet seeds = checked_ids(annotation.ids, a.size(), "segment");
    const PeelOffResult peel = peel_off_extract(a, seeds, params);
    SegmentationResult out;
    out.uds = peel.union_support;
    for (const auto& c : peel.clusters)
        out.clusters.push_back(c.support);
    if (annotation.mode == AnnotationMode::BoundingBox) {
        VertexSet all(a.size());
        for (Index i = 0; i < a.size(); ++i)
            all[i] = i;
        out.mask = set_difference(all, out.uds);
    } else {
        out.mask = out.uds;
    }
    return out;
}

SegmentationResult error_tolerant_segment(const AffinityMatrix& a, const VertexSet& fg_in, const VertexSet& bg_in,
                                          const SolverParams& params)
{
    SegmentationResult out;
    VertexSet fg = checked_ids(fg_in, a.size(), "error_tolerant_segment");
    VertexSet bg = checked_ids(bg_in, a.size(), "error_tolerant_segment");
    const VertexSet conflict = set_intersection(fg, bg);
    if (!conflict.empty()) {
        out.warnings.push_back(std::to_string(conflict.size()) +
                               " superpixel(s) scribbled as both foreground and background; labels dropped");
        fg = set_difference(fg, conflict);
        bg = set_difference(bg, conflict);
    }
    if (fg.empty()) {
        out.warnings.push_back("no foreground scribbles left; mask is empty");
        return out;
    }

    const PeelOffResult peel = peel_off_extract(a, fg, params);
    out.uds = peel.union_support;
    for (const auto& c : peel.clusters) {
        out.clusters.push_back(c.support);
        if (set_intersection(c.support, bg).empty())
            out.mask = set_union(out.mask, c.support);
    }
    if (out.mask.empty())
        out.warnings.push_back("every extracted cluster contains a background scribble; mask is empty");
    return out;
}

}  // namespace cdskit
