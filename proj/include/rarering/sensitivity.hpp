#pragma once

// Gradient-free global sensitivity shares.
//
// For a rare node, the direction toward the centroid of its K nearest
// safe nodes stands in for the (unavailable) gradient of the performance
// function; squared direction cosines split that node's contribution
// across coordinates. Averaging over rare nodes sampled proportional to
// the Gaussian density gives per-variable shares that sum to one exactly.
// A weighted form covers node sets carrying importance-sampling weights.

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "rarering/classifier.hpp"
#include "rarering/gaussian_geometry.hpp"
#include "rarering/points.hpp"

namespace rarering {

struct DirectionShares {
    std::vector<double> alpha_sq;     // flat, n_used x dim
    std::vector<int> node_index;      // rare node index per row
    int n_skipped = 0;                // no safe neighbor in reach or zero offset
};

struct SensitivityConfig {
    int k_neighbors = 5;
    // Rare nodes whose nearest safe node lies beyond this many cloud
    // widths are skipped as geometric outliers.
    double guard_radius_factor = 3.0;
};

// Per-node squared direction cosines toward the local safe centroid.
// `safe_mask[i]` marks usable safe nodes; rare rows are selected by
// `rare_mask`. Both index into `nodes`.
inline DirectionShares direction_shares(const PointBlock& nodes,
                                        const std::vector<char>& rare_mask,
                                        const std::vector<char>& safe_mask,
                                        const SensitivityConfig& cfg = {}) {
    const int dim = nodes.dim();
    if (rare_mask.size() != nodes.size() || safe_mask.size() != nodes.size())
        throw std::invalid_argument("direction_shares: mask size mismatch");
    if (cfg.k_neighbors < 1) throw std::invalid_argument("direction_shares: need k >= 1");

    PointBlock safe(dim);
    for (std::size_t i = 0; i < nodes.size(); ++i)
        if (safe_mask[i]) safe.push_back(nodes.row(i));
    if (safe.size() == 0) throw std::logic_error("direction_shares: no safe nodes");

    double sigma = exploitation_sigma(SpaceDim(dim));
    double guard2 = cfg.guard_radius_factor * sigma;
    guard2 *= guard2;

    KdTree tree(safe);
    DirectionShares out;
    std::vector<Neighbor> nn;
    std::vector<double> centroid(dim);
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        if (!rare_mask[i]) continue;
        tree.k_nearest(nodes.row_ptr(i), cfg.k_neighbors, nn);
        if (nn.empty() || nn.front().dist2 > guard2) { ++out.n_skipped; continue; }
        for (int k = 0; k < dim; ++k) centroid[k] = 0.0;
        for (const auto& nb : nn) {
            const double* p = safe.row_ptr(static_cast<std::size_t>(nb.index));
            for (int k = 0; k < dim; ++k) centroid[k] += p[k];
        }
        double norm2 = 0.0;
        const double* x = nodes.row_ptr(i);
        for (int k = 0; k < dim; ++k) {
            centroid[k] = centroid[k] / static_cast<double>(nn.size()) - x[k];
            norm2 += centroid[k] * centroid[k];
        }
        if (norm2 <= 0.0) { ++out.n_skipped; continue; }
        for (int k = 0; k < dim; ++k)
            out.alpha_sq.push_back(centroid[k] * centroid[k] / norm2);
        out.node_index.push_back(static_cast<int>(i));
    }
    return out;
}

struct SensitivityResult {
    std::vector<double> s_sq;   // one share per variable, sums to 1
    int n_used = 0;
    int n_skipped = 0;
};

// Averages the per-node shares, optionally weighted (weights indexed like
// `nodes`; used for importance-sampled node sets). With no usable nodes
// the result is empty rather than fabricated.
inline SensitivityResult sensitivity_indices(const PointBlock& nodes,
                                             const std::vector<char>& rare_mask,
                                             const std::vector<char>& safe_mask,
                                             const SensitivityConfig& cfg = {},
                                             std::span<const double> weights = {}) {
    const int dim = nodes.dim();
    DirectionShares shares = direction_shares(nodes, rare_mask, safe_mask, cfg);
    SensitivityResult out;
    out.n_skipped = shares.n_skipped;
    out.n_used = static_cast<int>(shares.node_index.size());
    if (out.n_used == 0) return out;

    out.s_sq.assign(dim, 0.0);
    double total_weight = 0.0;
    for (std::size_t row = 0; row < shares.node_index.size(); ++row) {
        double w = 1.0;
        if (!weights.empty()) {
            std::size_t node = static_cast<std::size_t>(shares.node_index[row]);
            if (node >= weights.size())
                throw std::invalid_argument("sensitivity_indices: weights size mismatch");
            w = weights[node];
        }
        total_weight += w;
        for (int k = 0; k < dim; ++k)
            out.s_sq[k] += w * shares.alpha_sq[row * dim + k];
    }
    if (total_weight <= 0.0) { out.s_sq.clear(); out.n_used = 0; return out; }
    for (int k = 0; k < dim; ++k) out.s_sq[k] /= total_weight;
    return out;
}

// First-order shares from a single design point: squared components over
// the squared distance.
inline std::vector<double> form_alpha_from_design_point(std::span<const double> design_point) {
    double beta2 = 0.0;
    for (double v : design_point) beta2 += v * v;
    if (!(beta2 > 0.0))
        throw std::domain_error("form_alpha_from_design_point: zero design point");
    std::vector<double> out(design_point.size());
    for (std::size_t k = 0; k < design_point.size(); ++k)
        out[k] = design_point[k] * design_point[k] / beta2;
    return out;
}

} // namespace rarering
