#include "cdskit/fixtures.hpp"
#include "cdskit/rng.hpp"

#include <algorithm>
#include <numeric>

namespace cdskit::fixtures {

AffinityMatrix g8()
{
    Matrix m = Matrix::Zero(8, 8);
    const int edges[][2] = {{1, 2}, {2, 3}, {4, 5}, {5, 6}, {5, 7}, {5, 8}, {6, 8}, {7, 8}};
    for (const auto& e : edges) {
        m(e[0] - 1, e[1] - 1) = 1.0;
        m(e[1] - 1, e[0] - 1) = 1.0;
    }
    return AffinityMatrix(std::move(m));
}

LabeledPoints make_blobs(std::size_t blobs, std::size_t per_blob, std::size_t dims, double spread, std::uint64_t seed)
{
    Rng rng(seed);
    const auto d = static_cast<Eigen::Index>(dims);
    Matrix centres(static_cast<Eigen::Index>(blobs), d);
    for (Eigen::Index c = 0; c < centres.rows(); ++c)
        for (Eigen::Index j = 0; j < d; ++j)
            centres(c, j) = rng.uniform(0.25, 0.75);

    LabeledPoints out;
    out.features.resize(static_cast<Eigen::Index>(blobs * per_blob), d);
    Eigen::Index row = 0;
    for (std::size_t c = 0; c < blobs; ++c) {
        for (std::size_t p = 0; p < per_blob; ++p, ++row) {
            for (Eigen::Index j = 0; j < d; ++j)
                out.features(row, j) = std::clamp(centres(Eigen::Index(c), j) + spread * rng.normal(), 0.0, 1.0);
            out.labels.push_back(static_cast<long>(c));
        }
    }
    return out;
}

LabeledPoints make_elongated_blobs(std::size_t blobs, std::size_t per_blob, double spacing, double width,
                                   std::uint64_t seed)
{
    Rng rng(seed);
    const double offset = rng.uniform(0.0, 0.1);
    LabeledPoints out;
    out.features.resize(static_cast<Eigen::Index>(blobs * per_blob), 2);
    Eigen::Index row = 0;
    for (std::size_t c = 0; c < blobs; ++c) {
        for (std::size_t p = 0; p < per_blob; ++p, ++row) {
            out.features(row, 0) = offset + static_cast<double>(c) * spacing + width * rng.normal();
            out.features(row, 1) = (static_cast<double>(p) + 0.5 + rng.uniform(-0.3, 0.3)) / static_cast<double>(per_blob);
            out.labels.push_back(static_cast<long>(c));
        }
    }
    return out;
}

AffinityMatrix planted_channel(const std::vector<long>& structure, std::size_t dims, double spread, double sigma,
                               std::uint64_t seed)
{
    Rng rng(seed);
    const long groups = structure.empty() ? 0 : *std::max_element(structure.begin(), structure.end()) + 1;
    const auto d = static_cast<Eigen::Index>(dims);
    Matrix centres(groups, d);
    for (Eigen::Index c = 0; c < groups; ++c)
        for (Eigen::Index j = 0; j < d; ++j)
            centres(c, j) = rng.uniform();
    Matrix f(static_cast<Eigen::Index>(structure.size()), d);
    for (Eigen::Index i = 0; i < f.rows(); ++i)
        for (Eigen::Index j = 0; j < d; ++j)
            f(i, j) = centres(structure[std::size_t(i)], j) + spread * rng.normal();
    return build_gaussian_affinity(FeatureTable(std::move(f)), sigma);
}

std::vector<long> block_labels(std::size_t classes, std::size_t per_class)
{
    std::vector<long> labels;
    for (std::size_t c = 0; c < classes; ++c)
        labels.insert(labels.end(), per_class, static_cast<long>(c));
    return labels;
}

std::vector<long> shuffled(std::vector<long> labels, std::uint64_t seed)
{
    Rng rng(seed);
    for (std::size_t i = labels.size(); i > 1; --i)
        std::swap(labels[i - 1], labels[rng.below(i)]);
    return labels;
}

SegmentationFixture make_segmentation_blobs(std::size_t n_fg, std::size_t n_bg, std::size_t dims, double separation,
                                            std::uint64_t seed)
{
    Rng rng(seed);
    const auto d = static_cast<Eigen::Index>(dims);
    Matrix f(static_cast<Eigen::Index>(n_fg + n_bg), d);
    VertexSet fg, bg;
    for (Eigen::Index i = 0; i < f.rows(); ++i) {
        const bool is_fg = static_cast<std::size_t>(i) < n_fg;
        for (Eigen::Index j = 0; j < d; ++j)
            f(i, j) = (is_fg || j != 0 ? 0.0 : separation) + rng.normal();
        (is_fg ? fg : bg).push_back(static_cast<Index>(i));
    }
    return {FeatureTable(std::move(f)), fg, bg};
}

CosegFixture make_coseg_pair(std::size_t side, std::size_t object, std::uint64_t seed)
{
    Rng rng(seed);
    const auto n = static_cast<Eigen::Index>(side * side);
    const std::size_t lo = (side - object) / 2;
    auto in_object = [&](std::size_t r, std::size_t c) {
        return r >= lo && r < lo + object && c >= lo && c < lo + object;
    };

    auto appearance = [&](Eigen::Index dims) {
        Vector v(dims);
        for (Eigen::Index j = 0; j < dims; ++j)
            v[j] = rng.uniform();
        return v;
    };
    const Vector obj_color = appearance(3), obj_sift = appearance(16), obj_hog = appearance(8);

    CosegFixture out;
    for (int image = 0; image < 2; ++image) {
        const Vector bg_color = appearance(3), bg_sift = appearance(16), bg_hog = appearance(8);
        CosegImage img;
        img.color.resize(n, 3);
        img.sift.resize(n, 16);
        img.hog.resize(n, 8);
        img.adjacency = Matrix::Zero(n, n);
        img.objectness.resize(n);
        VertexSet truth;
        for (std::size_t r = 0; r < side; ++r) {
            for (std::size_t c = 0; c < side; ++c) {
                const auto i = static_cast<Eigen::Index>(r * side + c);
                const bool obj = in_object(r, c);
                if (obj)
                    truth.push_back(static_cast<Index>(i));
                const Vector& col = obj ? obj_color : bg_color;
                const Vector& sift = obj ? obj_sift : bg_sift;
                const Vector& hog = obj ? obj_hog : bg_hog;
                for (Eigen::Index j = 0; j < 3; ++j)
                    img.color(i, j) = col[j] + 0.03 * rng.normal();
                for (Eigen::Index j = 0; j < 16; ++j)
                    img.sift(i, j) = sift[j] + 0.03 * rng.normal();
                for (Eigen::Index j = 0; j < 8; ++j)
                    img.hog(i, j) = hog[j] + 0.03 * rng.normal();
                img.objectness[i] = obj ? rng.uniform(0.7, 0.9) : rng.uniform(0.05, 0.3);
                if (c + 1 < side)
                    img.adjacency(i, i + 1) = img.adjacency(i + 1, i) = 1.0;
                if (r + 1 < side)
                    img.adjacency(i, i + Eigen::Index(side)) = img.adjacency(i + Eigen::Index(side), i) = 1.0;
            }
        }
        out.images.push_back(std::move(img));
        out.objects.push_back(std::move(truth));
    }
    return out;
}

MiniBatch make_dcds_batch(std::size_t identities, std::size_t per_identity, std::size_t dims, double noise,
                          std::uint64_t seed)
{
    Rng rng(seed);
    const auto d = static_cast<Eigen::Index>(dims);
    MiniBatch batch;
    batch.identities = identities;
    batch.per_identity = per_identity;
    batch.features.resize(static_cast<Eigen::Index>(identities * per_identity), d);
    Eigen::Index row = 0;
    for (std::size_t id = 0; id < identities; ++id) {
        Vector proto(d);
        for (Eigen::Index j = 0; j < d; ++j)
            proto[j] = rng.normal();
        proto.normalize();
        for (std::size_t k = 0; k < per_identity; ++k, ++row) {
            Vector v = proto;
            for (Eigen::Index j = 0; j < d; ++j)
                v[j] += noise * rng.normal();
            batch.features.row(row) = v.normalized().transpose();
            batch.labels.push_back(static_cast<long>(id));
        }
    }
    return batch;
}

AffinityMatrix random_affinity(std::size_t n, std::uint64_t seed)
{
    Rng rng(seed);
    const auto en = static_cast<Eigen::Index>(n);
    Matrix m = Matrix::Zero(en, en);
    for (Eigen::Index i = 0; i < en; ++i)
        for (Eigen::Index j = i + 1; j < en; ++j)
            m(i, j) = m(j, i) = rng.uniform();
    return AffinityMatrix(std::move(m));
}

AffinityMatrix random_binary_affinity(std::size_t n, double edge_probability, std::uint64_t seed)
{
    Rng rng(seed);
    const auto en = static_cast<Eigen::Index>(n);
    Matrix m = Matrix::Zero(en, en);
    for (Eigen::Index i = 0; i < en; ++i)
        for (Eigen::Index j = i + 1; j < en; ++j)
            if (rng.bernoulli(edge_probability))
                m(i, j) = m(j, i) = 1.0;
    return AffinityMatrix(std::move(m));
}

}  // namespace cdskit::fixtures
