#pragma once

// Experimental design and the nearest-neighbor classification surrogate.
//
// The surrogate assigns to any query the label of the nearest design
// point, i.e. the design's Voronoi partition. Queries run through a kd
// tree whose answers match a brute-force scan exactly, ties included:
// candidates are ordered by (squared distance, insertion index) and the
// tree never prunes a subtree that could still hold an equal-distance
// point with a lower index.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "rarering/points.hpp"

namespace rarering {

struct EventLabel {
    int code = 0;
    std::string name;
};

inline constexpr int label_safe = 0;
inline constexpr int label_failure = 1;
inline constexpr int label_no_result = 2;

struct Neighbor {
    int index = -1;
    double dist2 = std::numeric_limits<double>::infinity();
};

inline bool neighbor_less(const Neighbor& a, const Neighbor& b) {
    if (a.dist2 != b.dist2) return a.dist2 < b.dist2;
    return a.index < b.index;
}

// Static kd tree over a flat point array. Splits on the widest-extent
// axis at the median; query results are brute-force equivalent.
class KdTree {
public:
    KdTree() = default;

    KdTree(const PointBlock& points) { build(points.data(), points.dim()); }
    KdTree(const std::vector<double>& coords, int dim) { build(coords, dim); }

    std::size_t size() const { return count_; }

    Neighbor nearest(const double* q) const {
        Neighbor best;
        if (count_ > 0) search_one(root_, q, best);
        return best;
    }

    // The k best neighbors in (dist2, index) order; fewer if the tree is
    // smaller than k.
    void k_nearest(const double* q, int k, std::vector<Neighbor>& out) const {
        out.clear();
        if (count_ == 0 || k < 1) return;
        search_k(root_, q, static_cast<std::size_t>(k), out);
    }

private:
    struct Node {
        int point = -1;
        int axis = 0;
        int left = -1;
        int right = -1;
    };

    void build(const std::vector<double>& coords, int dim) {
        dim_ = dim;
        coords_ = coords;
        count_ = dim == 0 ? 0 : coords.size() / dim;
        nodes_.clear();
        nodes_.reserve(count_);
        if (count_ == 0) { root_ = -1; return; }
        std::vector<int> idx(count_);
        for (std::size_t i = 0; i < count_; ++i) idx[i] = static_cast<int>(i);
        root_ = build_node(idx.data(), idx.data() + count_);
    }

    int build_node(int* first, int* last) {
        std::ptrdiff_t n = last - first;
        if (n <= 0) return -1;
        // Widest-extent axis of this subset.
        int axis = 0;
        double best_extent = -1.0;
        for (int a = 0; a < dim_; ++a) {
            double lo = std::numeric_limits<double>::infinity();
            double hi = -lo;
            for (int* it = first; it != last; ++it) {
                double v = coords_[static_cast<std::size_t>(*it) * dim_ + a];
                lo = std::min(lo, v);
                hi = std::max(hi, v);
            }
            if (hi - lo > best_extent) { best_extent = hi - lo; axis = a; }
        }
        int* mid = first + n / 2;
        std::nth_element(first, mid, last, [&](int a, int b) {
            double va = coords_[static_cast<std::size_t>(a) * dim_ + axis];
            double vb = coords_[static_cast<std::size_t>(b) * dim_ + axis];
            if (va != vb) return va < vb;
            return a < b;
        });
        Node node;
        node.point = *mid;
        node.axis = axis;
        int self = static_cast<int>(nodes_.size());
        nodes_.push_back(node);
        int left = build_node(first, mid);
        int right = build_node(mid + 1, last);
        nodes_[self].left = left;
        nodes_[self].right = right;
        return self;
    }

    void search_one(int node_idx, const double* q, Neighbor& best) const {
        const Node& node = nodes_[node_idx];
        const double* p = coords_.data() + static_cast<std::size_t>(node.point) * dim_;
        Neighbor cand{node.point, squared_distance(q, p, dim_)};
        if (neighbor_less(cand, best)) best = cand;
        double diff = q[node.axis] - p[node.axis];
        int near = diff < 0.0 ? node.left : node.right;
        int far = diff < 0.0 ? node.right : node.left;
        if (near >= 0) search_one(near, q, best);
        // <= keeps equal-distance lower-index candidates reachable.
        if (far >= 0 && diff * diff <= best.dist2) search_one(far, q, best);
    }

    void search_k(int node_idx, const double* q, std::size_t k, std::vector<Neighbor>& heap) const {
        const Node& node = nodes_[node_idx];
        const double* p = coords_.data() + static_cast<std::size_t>(node.point) * dim_;
        Neighbor cand{node.point, squared_distance(q, p, dim_)};
        if (heap.size() < k) {
            heap.insert(std::upper_bound(heap.begin(), heap.end(), cand, neighbor_less), cand);
        } else if (neighbor_less(cand, heap.back())) {
            heap.pop_back();
            heap.insert(std::upper_bound(heap.begin(), heap.end(), cand, neighbor_less), cand);
        }
        double diff = q[node.axis] - p[node.axis];
        int near = diff < 0.0 ? node.left : node.right;
        int far = diff < 0.0 ? node.right : node.left;
        if (near >= 0) search_k(near, q, k, heap);
        double worst = heap.size() < k ? std::numeric_limits<double>::infinity() : heap.back().dist2;
        if (far >= 0 && diff * diff <= worst) search_k(far, q, k, heap);
    }

    int dim_ = 0;
    std::size_t count_ = 0;
    int root_ = -1;
    std::vector<double> coords_;
    std::vector<Node> nodes_;
};

// The evaluated design: points in evaluation order, their label codes and
// optional raw outputs. No two points may coincide within 1e-12.
class ExperimentalDesign {
public:
    explicit ExperimentalDesign(int dim) : points_(dim) {
        if (dim < 1) throw std::invalid_argument("ExperimentalDesign: need dim >= 1");
    }

    int dim() const { return points_.dim(); }
    std::size_t size() const { return points_.size(); }

    void add_point(std::span<const double> x, int code,
                   std::optional<double> raw = std::nullopt) {
        if (static_cast<int>(x.size()) != dim())
            throw std::invalid_argument("add_point: dimension mismatch");
        for (double v : x)
            if (!std::isfinite(v)) throw std::invalid_argument("add_point: non-finite coordinate");
        if (size() > 0) {
            Neighbor nn = index().nearest(x.data());
            if (nn.dist2 < 1e-24)
                throw std::invalid_argument("add_point: duplicate point (within 1e-12)");
        }
        points_.push_back(x);
        codes_.push_back(code);
        raws_.push_back(raw ? *raw : std::numeric_limits<double>::quiet_NaN());
        has_raw_.push_back(raw.has_value() ? 1 : 0);
        norms_.push_back(points_.norm(points_.size() - 1));
        ++version_;
    }

    std::span<const double> point(std::size_t i) const { return points_.row(i); }
    const double* point_ptr(std::size_t i) const { return points_.row_ptr(i); }
    int code(std::size_t i) const { return codes_[i]; }
    std::optional<double> raw(std::size_t i) const {
        if (!has_raw_[i]) return std::nullopt;
        return raws_[i];
    }
    double norm(std::size_t i) const { return norms_[i]; }
    const PointBlock& points() const { return points_; }
    const std::vector<int>& codes() const { return codes_; }

    std::size_t count_of(int code) const {
        std::size_t n = 0;
        for (int c : codes_) n += (c == code) ? 1 : 0;
        return n;
    }
    std::vector<int> indices_with_code(int code) const {
        std::vector<int> out;
        for (std::size_t i = 0; i < codes_.size(); ++i)
            if (codes_[i] == code) out.push_back(static_cast<int>(i));
        return out;
    }
    std::vector<int> indices_not_code(int code) const {
        std::vector<int> out;
        for (std::size_t i = 0; i < codes_.size(); ++i)
            if (codes_[i] != code) out.push_back(static_cast<int>(i));
        return out;
    }

    // Distinct codes in order of first appearance.
    std::vector<int> present_codes() const {
        std::vector<int> out;
        for (int c : codes_)
            if (std::find(out.begin(), out.end(), c) == out.end()) out.push_back(c);
        return out;
    }

    // The spatial index over the current design; rebuilt lazily after
    // modifications.
    const KdTree& index() const {
        if (index_version_ != version_) {
            tree_ = KdTree(points_);
            index_version_ = version_;
        }
        return tree_;
    }

    int classify(const double* q) const {
        if (size() == 0) throw std::logic_error("classify: empty design");
        return codes_[static_cast<std::size_t>(index().nearest(q).index)];
    }
    int classify(std::span<const double> q) const { return classify(q.data()); }

    // Codes of the two nearest design points, in (dist, index) order.
    std::pair<int, int> two_nearest_labels(const double* q) const {
        if (size() < 2) throw std::logic_error("two_nearest_labels: need >= 2 points");
        std::vector<Neighbor> nn;
        index().k_nearest(q, 2, nn);
        return {codes_[static_cast<std::size_t>(nn[0].index)],
                codes_[static_cast<std::size_t>(nn[1].index)]};
    }

    std::vector<int> classify_batch(const PointBlock& queries) const {
        if (queries.dim() != dim()) throw std::invalid_argument("classify_batch: dim mismatch");
        std::vector<int> out(queries.size());
        const KdTree& t = index();
        for (std::size_t i = 0; i < queries.size(); ++i)
            out[i] = codes_[static_cast<std::size_t>(t.nearest(queries.row_ptr(i)).index)];
        return out;
    }

private:
    PointBlock points_;
    std::vector<int> codes_;
    std::vector<double> raws_;
    std::vector<std::uint8_t> has_raw_;
    std::vector<double> norms_;
    std::uint64_t version_ = 0;
    mutable std::uint64_t index_version_ = ~0ull;
    mutable KdTree tree_;
};

} // namespace rarering
