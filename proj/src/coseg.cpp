#include "cdskit/segmentation.hpp"

#include <cmath>
#include <limits>
#include <queue>
#include <string>

namespace cdskit {

namespace {

void require_shape(const Matrix& m, Eigen::Index rows, Eigen::Index cols, const std::string& what)
{
    if (m.rows() != rows || m.cols() != cols)
        throw InputError(what + ": expected " + std::to_string(rows) + "x" + std::to_string(cols) + ", got " +
                         std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
}

Matrix all_pairs_geodesic(const Matrix& features, const Matrix& adjacency)
{
    const Eigen::Index n = features.rows();
    const double inf = std::numeric_limits<double>::infinity();
    Matrix d = Matrix::Constant(n, n, inf);
    using Item = std::pair<double, Eigen::Index>;
    for (Eigen::Index src = 0; src < n; ++src) {
        std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
        d(src, src) = 0.0;
        heap.push({0.0, src});
        while (!heap.empty()) {
            const auto [dist, u] = heap.top();
            heap.pop();
            if (dist > d(src, u))
                continue;
            for (Eigen::Index v = 0; v < n; ++v) {
                if (v == u || adjacency(u, v) == 0.0)
                    continue;
                const double nd = dist + (features.row(u) - features.row(v)).norm();
                if (nd < d(src, v)) {
                    d(src, v) = nd;
                    heap.push({nd, v});
                }
            }
        }
    }
    return d;
}

Matrix flipped_distance(const Matrix& d)
{
    if (d.size() == 0)
        return d;
    const double hi = d.maxCoeff();
    const double lo = d.minCoeff();
    return ((hi + lo) - d.array()).matrix();
}

Matrix euclidean_block(const Matrix& a, const Matrix& b)
{
    Matrix d(a.rows(), b.rows());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < b.rows(); ++j)
            d(i, j) = (a.row(i) - b.row(j)).norm();
    return d;
}

Matrix normalised_channel(const Matrix& raw)
{
    const Matrix scaled = minmax_scale_columns(raw);
    Matrix sym = 0.5 * (scaled + scaled.transpose());
    sym.diagonal().setZero();
    return sym;
}

AffinityMatrix zero_between(const AffinityMatrix& a, const VertexSet& f, const VertexSet& b)
{
    Matrix w = a.weights();
    for (Index i : f)
        for (Index j : b) {
            w(Eigen::Index(i), Eigen::Index(j)) = 0.0;
            w(Eigen::Index(j), Eigen::Index(i)) = 0.0;
        }
    return AffinityMatrix(std::move(w));
}

}  // namespace

void CosegImage::validate(const std::string& what) const
{
    const Eigen::Index n = color.rows();
    if (n < 1)
        throw InputError(what + ": image has no superpixels");
    if (sift.rows() != n || hog.rows() != n)
        throw InputError(what + ": color, sift and hog must have one row per superpixel");
    require_shape(adjacency, n, n, what + " adjacency");
    if (objectness.size() != n)
        throw InputError(what + ": objectness needs one value per superpixel");
    for (const Matrix* m : {&color, &sift, &hog, &adjacency})
        if (!m->allFinite())
            throw InputError(what + ": non-finite feature value");
    for (Eigen::Index i = 0; i < n; ++i) {
        if (!(objectness[i] >= 0.0 && objectness[i] <= 1.0))
            throw InputError(what + ": objectness " + std::to_string(i) + " outside [0, 1]");
        for (Eigen::Index j = 0; j < n; ++j)
            if (adjacency(i, j) != adjacency(j, i))
                throw InputError(what + ": adjacency is not symmetric");
    }
}

Matrix geodesic_adjacency_similarity(const Matrix& features, const Matrix& adjacency)
{
    const Eigen::Index n = features.rows();
    require_shape(adjacency, n, n, "geodesic_adjacency_similarity adjacency");
    const Matrix d = all_pairs_geodesic(features, adjacency);
    double hi = -1.0, lo = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j)
            if (i != j && std::isfinite(d(i, j))) {
                hi = std::max(hi, d(i, j));
                lo = std::min(lo, d(i, j));
            }
    Matrix e = Matrix::Zero(n, n);
    if (hi < 0.0)
        return e;
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j)
            if (i != j && adjacency(i, j) != 0.0 && std::isfinite(d(i, j)))
                e(i, j) = hi - d(i, j) + lo;
    return e;
}

Matrix objectness_affinity(const Vector& objectness)
{
    Matrix m = objectness * objectness.transpose();
    m.diagonal().setZero();
    return m;
}

Matrix coseg_payoff(const Matrix& color, const Matrix& sift, const Matrix& hog, const Matrix& objectness)
{
    const Eigen::Index n = objectness.rows();
    require_shape(objectness, n, n, "coseg_payoff objectness");
    require_shape(color, n, n, "coseg_payoff color");
    require_shape(sift, n, n, "coseg_payoff sift");
    require_shape(hog, n, n, "coseg_payoff hog");
    return 0.5 * objectness + (color + sift + hog) / 6.0;
}

VertexSet JointGraph::image_nodes(std::size_t image) const
{
    VertexSet out;
    for (Index i = offsets.at(image); i < offsets.at(image + 1); ++i)
        out.push_back(i);
    return out;
}

VertexSet JointGraph::localise(const VertexSet& joint, std::size_t image) const
{
    VertexSet out;
    for (Index i : joint)
        if (i >= offsets.at(image) && i < offsets.at(image + 1))
            out.push_back(i - offsets[image]);
    return out;
}

JointGraph build_joint_graph(const std::vector<CosegImage>& images)
{
    if (images.empty())
        throw InputError("co-segmentation: no images");
    std::vector<Index> offsets{0};
    for (std::size_t k = 0; k < images.size(); ++k) {
        images[k].validate("image " + std::to_string(k));
        if (images[k].color.cols() != images[0].color.cols() || images[k].sift.cols() != images[0].sift.cols() ||
            images[k].hog.cols() != images[0].hog.cols())
            throw InputError("co-segmentation: images disagree on feature dimensions");
        offsets.push_back(offsets.back() + images[k].size());
    }
    const auto n = static_cast<Eigen::Index>(offsets.back());
    Matrix ac = Matrix::Zero(n, n), as = Matrix::Zero(n, n), ah = Matrix::Zero(n, n);
    Vector pf(n);
    for (std::size_t p = 0; p < images.size(); ++p) {
        const auto op = static_cast<Eigen::Index>(offsets[p]);
        const auto np = static_cast<Eigen::Index>(images[p].size());
        pf.segment(op, np) = images[p].objectness;
        for (std::size_t q = 0; q < images.size(); ++q) {
            const auto oq = static_cast<Eigen::Index>(offsets[q]);
            const auto nq = static_cast<Eigen::Index>(images[q].size());
            if (p == q) {
                ac.block(op, op, np, np) = geodesic_adjacency_similarity(images[p].color, images[p].adjacency);
                as.block(op, op, np, np) = geodesic_adjacency_similarity(images[p].sift, images[p].adjacency);
                ah.block(op, op, np, np) = geodesic_adjacency_similarity(images[p].hog, images[p].adjacency);
            } else {
                ac.block(op, oq, np, nq) = flipped_distance(euclidean_block(images[p].color, images[q].color));
                as.block(op, oq, np, nq) = (images[p].sift * images[q].sift.transpose()).cwiseMax(0.0);
                ah.block(op, oq, np, nq) = flipped_distance(euclidean_block(images[p].hog, images[q].hog));
            }
        }
    }
    Matrix m = coseg_payoff(normalised_channel(ac), normalised_channel(as), normalised_channel(ah),
                            objectness_affinity(pf));
    m = 0.5 * (m + m.transpose());
    m.diagonal().setZero();
    return JointGraph{AffinityMatrix(std::move(m)), std::move(offsets)};
}

CosegResult coseg_unsupervised(const CosegImage& first, const CosegImage& second, const SolverParams& params)
{
    const JointGraph g = build_joint_graph({first, second});
    CosegResult out;
    out.o2 = extract_cds(g.payoff, g.image_nodes(0), params).support;
    out.o1 = extract_cds(g.payoff, g.image_nodes(1), params).support;
    const VertexSet common = set_intersection(out.o1, out.o2);
    if (common.empty())
        out.warnings.push_back("the two extractions share no superpixel; masks are empty");
    out.masks = {g.localise(common, 0), g.localise(common, 1)};
    return out;
}

CosegResult coseg_interactive(const std::vector<CosegImage>& images, const std::vector<Scribbles>& scribbles,
                              const SolverParams& params)
{
    if (scribbles.empty())
        throw InputError("interactive co-segmentation needs scribbles on at least one image");
    const JointGraph g = build_joint_graph(images);
    CosegResult out;

    VertexSet f_all, b_all;
    for (const auto& s : scribbles) {
        if (s.image >= images.size())
            throw InputError("scribbles reference image " + std::to_string(s.image) + " of " +
                             std::to_string(images.size()));
        VertexSet fg = make_vertex_set(s.fg), bg = make_vertex_set(s.bg);
        for (const VertexSet* ids : {&fg, &bg})
            if (!ids->empty() && ids->back() >= images[s.image].size())
                throw InputError("scribble id " + std::to_string(ids->back()) + " out of range for image " +
                                 std::to_string(s.image));
        const VertexSet conflict = set_intersection(fg, bg);
        if (!conflict.empty()) {
            out.warnings.push_back(std::to_string(conflict.size()) + " superpixel(s) of image " +
                                   std::to_string(s.image) + " scribbled as both fg and bg; labels dropped");
            fg = set_difference(fg, conflict);
            bg = set_difference(bg, conflict);
        }
        if (fg.empty() || bg.empty())
            throw InputError("image " + std::to_string(s.image) + " needs both fg and bg scribbles");

        const VertexSet local_nodes = g.image_nodes(s.image);
        const AffinityMatrix local = g.payoff.submatrix(local_nodes);
        const VertexSet o1 = peel_off_extract(local, fg, params).union_support;
        const VertexSet o2 = peel_off_extract(local, bg, params).union_support;
        const VertexSet f = set_union(set_difference(o1, o2), fg);
        const VertexSet b = set_union(set_difference(o2, o1), bg);
        const Index base = g.offsets[s.image];
        for (Index i : f)
            f_all.push_back(base + i);
        for (Index i : b)
            b_all.push_back(base + i);
    }
    f_all = make_vertex_set(f_all);
    b_all = make_vertex_set(b_all);

    const AffinityMatrix edited = zero_between(g.payoff, f_all, b_all);
    out.o1 = peel_off_extract(edited, f_all, params).union_support;
    out.o2 = peel_off_extract(edited, b_all, params).union_support;
    const VertexSet fg = set_difference(out.o1, out.o2);
    for (std::size_t k = 0; k < images.size(); ++k)
        out.masks.push_back(g.localise(fg, k));
    return out;
}

}  // namespace cdskit
