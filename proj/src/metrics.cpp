#include "cdskit/metrics.hpp"

#include <algorithm>
#include <string>

namespace cdskit {

namespace {

long label_of(const std::vector<long>& labels, Index id)
{
    if (id >= labels.size())
        throw InputError("ranked id " + std::to_string(id) + " has no label (" + std::to_string(labels.size()) +
                         " labels)");
    return labels[id];
}

std::size_t class_size(const std::vector<long>& labels, long label)
{
    return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), label));
}

}  // namespace

std::optional<double> average_precision(const RankedList& list, const std::vector<long>& labels)
{
    const long target = label_of(labels, list.query);
    const std::size_t relevant = class_size(labels, target) - 1;
    if (relevant == 0)
        return std::nullopt;
    std::size_t rank = 0;
    std::size_t hits = 0;
    double sum = 0.0;
    for (Index id : list.ids) {
        if (id == list.query)
            continue;
        ++rank;
        if (label_of(labels, id) == target) {
            ++hits;
            sum += static_cast<double>(hits) / static_cast<double>(rank);
        }
    }
    return sum / static_cast<double>(relevant);
}

MapResult mean_average_precision(const std::vector<RankedList>& lists, const std::vector<long>& labels)
{
    MapResult out;
    double sum = 0.0;
    for (const auto& list : lists) {
        if (auto ap = average_precision(list, labels)) {
            sum += *ap;
            ++out.evaluated;
        } else {
            ++out.skipped;
        }
    }
    out.value = out.evaluated ? sum / static_cast<double>(out.evaluated) : 0.0;
    return out;
}

std::vector<double> cmc(const std::vector<RankedList>& lists, const std::vector<long>& labels,
                        const std::vector<std::size_t>& ranks)
{
    std::vector<double> hits(ranks.size(), 0.0);
    std::size_t evaluated = 0;
    for (const auto& list : lists) {
        const long target = label_of(labels, list.query);
        if (class_size(labels, target) < 2)
            continue;
        ++evaluated;
        std::size_t first = 0;
        std::size_t rank = 0;
        for (Index id : list.ids) {
            if (id == list.query)
                continue;
            ++rank;
            if (label_of(labels, id) == target) {
                first = rank;
                break;
            }
        }
        for (std::size_t k = 0; k < ranks.size(); ++k)
            if (first != 0 && first <= ranks[k])
                hits[k] += 1.0;
    }
    for (double& h : hits)
        h = evaluated ? h / static_cast<double>(evaluated) : 0.0;
    return hits;
}

double ns_score(const std::vector<RankedList>& lists, const std::vector<long>& labels)
{
    if (lists.empty())
        return 0.0;
    double total = 0.0;
    for (const auto& list : lists) {
        const long target = label_of(labels, list.query);
        const std::size_t top = std::min<std::size_t>(4, list.ids.size());
        for (std::size_t k = 0; k < top; ++k)
            if (label_of(labels, list.ids[k]) == target)
                total += 1.0;
    }
    return total / static_cast<double>(lists.size());
}

double bulls_eye(const RankedList& list, const std::vector<long>& labels, std::size_t r)
{
    if (r > list.ids.size())
        throw InputError("bulls_eye: R = " + std::to_string(r) + " exceeds list length " +
                         std::to_string(list.ids.size()));
    const long target = label_of(labels, list.query);
    std::size_t hits = 0;
    for (std::size_t k = 0; k < r; ++k)
        if (label_of(labels, list.ids[k]) == target)
            ++hits;
    return static_cast<double>(hits) / static_cast<double>(class_size(labels, target));
}

double mean_bulls_eye(const std::vector<RankedList>& lists, const std::vector<long>& labels, std::size_t r)
{
    if (lists.empty())
        return 0.0;
    double total = 0.0;
    for (const auto& list : lists)
        total += bulls_eye(list, labels, r);
    return total / static_cast<double>(lists.size());
}

SegmentationScores segmentation_metrics(const VertexSet& predicted, const VertexSet& truth, Index n,
                                        const std::vector<double>& pixel_counts,
                                        const std::optional<VertexSet>& region)
{
    if (!pixel_counts.empty() && pixel_counts.size() != n)
        throw InputError("segmentation_metrics: " + std::to_string(pixel_counts.size()) + " pixel counts for " +
                         std::to_string(n) + " superpixels");
    for (const VertexSet* s : {&predicted, &truth})
        if (!s->empty() && s->back() >= n)
            throw InputError("segmentation_metrics: superpixel id " + std::to_string(s->back()) + " out of range");

    auto weight = [&](Index i) { return pixel_counts.empty() ? 1.0 : pixel_counts[i]; };
    auto mass = [&](const VertexSet& s) {
        double m = 0.0;
        for (Index i : s)
            m += weight(i);
        return m;
    };

    SegmentationScores out;
    out.pixel_weighted = !pixel_counts.empty();
    const double inter = mass(set_intersection(predicted, truth));
    const double uni = mass(set_union(predicted, truth));
    const double p = mass(predicted);
    const double g = mass(truth);

    out.jaccard = uni > 0.0 ? inter / uni : 1.0;
    out.dsc = p + g > 0.0 ? 2.0 * inter / (p + g) : 1.0;
    out.recall = g > 0.0 ? inter / g : (p > 0.0 ? 0.0 : 1.0);
    out.precision = p > 0.0 ? inter / p : (g > 0.0 ? 0.0 : 1.0);
    const double denom = kFMeasureBeta2 * out.precision + out.recall;
    out.f_measure = denom > 0.0 ? (1.0 + kFMeasureBeta2) * out.precision * out.recall / denom : 0.0;

    double wrong = 0.0;
    double total = 0.0;
    auto count_item = [&](Index i) {
        total += weight(i);
        if (contains(predicted, i) != contains(truth, i))
            wrong += weight(i);
    };
    if (region) {
        for (Index i : *region) {
            if (i >= n)
                throw InputError("segmentation_metrics: region id " + std::to_string(i) + " out of range");
            count_item(i);
        }
    } else {
        for (Index i = 0; i < n; ++i)
            count_item(i);
    }
    out.error_rate = total > 0.0 ? wrong / total : 0.0;
    return out;
}

}  // namespace cdskit
