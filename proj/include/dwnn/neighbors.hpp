#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "dwnn/core.hpp"

namespace dwnn::neighbors {

// Training indices sorted by ascending squared distance to a query point,
// ties broken by ascending original index. `distances` holds squared
// Euclidean distances (monotone-equivalent to Euclidean).
struct NeighborOrdering {
    std::vector<std::uint32_t> indices;
    std::vector<double> distances;
};

namespace detail {

struct Candidate {
    double dist2;
    std::uint32_t index;
    bool operator<(const Candidate& o) const {
        return dist2 < o.dist2 || (dist2 == o.dist2 && index < o.index);
    }
};

inline void check_m(std::size_t m, std::size_t n, const char* who) {
    if (m < 1 || m > n)
        throw std::out_of_range(std::string(who) + ": m=" + std::to_string(m) +
                                " out of range [1, " + std::to_string(n) + "]");
}

}  // namespace detail

// Brute-force exact m-nearest retrieval; the reference implementation every
// accelerated path must match bit for bit.
inline NeighborOrdering order_neighbors(const Dataset& data, QueryPoint x, std::size_t m) {
    detail::check_m(m, data.n, "order_neighbors");
    if (x.size() != data.d)
        throw std::invalid_argument("order_neighbors: query dimension " + std::to_string(x.size()) +
                                    " does not match dataset dimension " + std::to_string(data.d));
    std::vector<detail::Candidate> all(data.n);
    for (std::uint32_t i = 0; i < data.n; ++i)
        all[i] = {squared_distance_unchecked(data.features.data() + std::size_t{i} * data.d, x.data(), data.d), i};
    std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(m), all.end());
    NeighborOrdering out;
    out.indices.reserve(m);
    out.distances.reserve(m);
    for (std::size_t i = 0; i < m; ++i) {
        out.indices.push_back(all[i].index);
        out.distances.push_back(all[i].dist2);
    }
    return out;
}

// Exact k-d tree over a copy of the training points. Queries return the same
// ordering as order_neighbors (lexicographic (distance, index) selection);
// pruning uses strict inequality so equal-distance points on the far side of
// a split are still visited and tie-broken by index.
class KdTree {
public:
    KdTree() = default;

    explicit KdTree(const Dataset& data) : d_(data.d), n_(data.n) {
        if (n_ == 0) throw std::invalid_argument("KdTree: empty dataset");
        order_.resize(n_);
        std::iota(order_.begin(), order_.end(), 0u);
        nodes_.reserve(2 * n_ / leaf_size + 2);
        root_ = build(0, n_, data);
        // Copy points into leaf-slot order for cache-friendly leaf scans.
        points_.resize(n_ * d_);
        for (std::size_t slot = 0; slot < n_; ++slot)
            std::copy_n(data.features.data() + std::size_t{order_[slot]} * d_, d_, points_.data() + slot * d_);
    }

    std::size_t size() const { return n_; }
    std::size_t dim() const { return d_; }

    NeighborOrdering query(QueryPoint x, std::size_t m) const {
        detail::check_m(m, n_, "KdTree::query");
        if (x.size() != d_)
            throw std::invalid_argument("KdTree::query: query dimension " + std::to_string(x.size()) +
                                        " does not match tree dimension " + std::to_string(d_));
        std::vector<detail::Candidate> heap;
        heap.reserve(m);
        search(root_, x.data(), m, heap);
        std::sort_heap(heap.begin(), heap.end());
        NeighborOrdering out;
        out.indices.reserve(m);
        out.distances.reserve(m);
        for (const auto& c : heap) {
            out.indices.push_back(c.index);
            out.distances.push_back(c.dist2);
        }
        return out;
    }

private:
    static constexpr std::size_t leaf_size = 16;

    struct Node {
        double split = 0.0;
        std::int32_t axis = -1;  // -1 marks a leaf
        std::uint32_t left = 0, right = 0;
        std::uint32_t begin = 0, end = 0;
    };

    std::uint32_t build(std::size_t begin, std::size_t end, const Dataset& data) {
        const auto id = static_cast<std::uint32_t>(nodes_.size());
        nodes_.emplace_back();
        if (end - begin <= leaf_size) {
            nodes_[id].begin = static_cast<std::uint32_t>(begin);
            nodes_[id].end = static_cast<std::uint32_t>(end);
            return id;
        }
        // Split on the axis with the widest spread over this node's points.
        std::size_t axis = 0;
        double best_spread = -1.0;
        for (std::size_t j = 0; j < d_; ++j) {
            double lo = std::numeric_limits<double>::infinity(), hi = -lo;
            for (std::size_t i = begin; i < end; ++i) {
                const double v = data.features[std::size_t{order_[i]} * d_ + j];
                lo = std::min(lo, v);
                hi = std::max(hi, v);
            }
            if (hi - lo > best_spread) {
                best_spread = hi - lo;
                axis = j;
            }
        }
        const std::size_t mid = begin + (end - begin) / 2;
        std::nth_element(order_.begin() + static_cast<std::ptrdiff_t>(begin),
                         order_.begin() + static_cast<std::ptrdiff_t>(mid),
                         order_.begin() + static_cast<std::ptrdiff_t>(end),
                         [&](std::uint32_t a, std::uint32_t b) {
                             const double va = data.features[std::size_t{a} * d_ + axis];
                             const double vb = data.features[std::size_t{b} * d_ + axis];
                             return va < vb || (va == vb && a < b);
                         });
        nodes_[id].axis = static_cast<std::int32_t>(axis);
        nodes_[id].split = data.features[std::size_t{order_[mid]} * d_ + axis];
        const std::uint32_t left = build(begin, mid, data);
        const std::uint32_t right = build(mid, end, data);
        nodes_[id].left = left;
        nodes_[id].right = right;
        return id;
    }

    void search(std::uint32_t id, const double* x, std::size_t m, std::vector<detail::Candidate>& heap) const {
        const Node& node = nodes_[id];
        if (node.axis < 0) {
            for (std::uint32_t slot = node.begin; slot < node.end; ++slot) {
                detail::Candidate c{squared_distance_unchecked(points_.data() + std::size_t{slot} * d_, x, d_),
                                    order_[slot]};
                if (heap.size() < m) {
                    heap.push_back(c);
                    std::push_heap(heap.begin(), heap.end());
                } else if (c < heap.front()) {
                    std::pop_heap(heap.begin(), heap.end());
                    heap.back() = c;
                    std::push_heap(heap.begin(), heap.end());
                }
            }
            return;
        }
        const double delta = x[node.axis] - node.split;
        const std::uint32_t near = delta < 0.0 ? node.left : node.right;
        const std::uint32_t far = delta < 0.0 ? node.right : node.left;
        search(near, x, m, heap);
        if (heap.size() < m || delta * delta <= heap.front().dist2) search(far, x, m, heap);
    }

    std::size_t d_ = 0;
    std::size_t n_ = 0;
    std::uint32_t root_ = 0;
    std::vector<Node> nodes_;
    std::vector<std::uint32_t> order_;  // slot -> original index
    std::vector<double> points_;        // slot-major copy of the training points
};

inline NeighborOrdering order_neighbors_tree(const KdTree& tree, QueryPoint x, std::size_t m) {
    return tree.query(x, m);
}

}  // namespace dwnn::neighbors
