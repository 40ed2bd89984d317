#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace cdskit {

using Index = std::size_t;

/// Dense row-major storage shared by every module. Row-major keeps each row
/// contiguous, which is what the SIMD kernels stream over.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

/// Sorted, duplicate-free list of vertex ids.
using VertexSet = std::vector<Index>;

/// Malformed or out-of-contract input. The CLI maps this to exit code 2.
class InputError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// An iterative solver ran out of budget. The CLI maps this to exit code 3.
class ConvergenceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

VertexSet make_vertex_set(std::vector<Index> ids);
VertexSet set_union(const VertexSet& a, const VertexSet& b);
VertexSet set_intersection(const VertexSet& a, const VertexSet& b);
VertexSet set_difference(const VertexSet& a, const VertexSet& b);
bool contains(const VertexSet& s, Index v);

}  // namespace cdskit
