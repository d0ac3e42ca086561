#pragma once

// Space-filling exploration plan: concentric layers at geometrically
// decreasing exterior contents p_i = 10^-i, each carrying a direction set
// sized so that sparser regions still get meaningful coverage. The layer
// count rule and radii depend only on the dimension, so plans can be
// tabulated without generating any points.

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "rarering/direction_sampling.hpp"
#include "rarering/gaussian_geometry.hpp"

namespace rarering {

// Number of exploration points for a layer with the given exterior content.
inline int layer_count(double prob_outside, SpaceDim dim) {
    if (!(prob_outside > 0.0) || prob_outside > 1.0)
        throw std::domain_error("layer_count: need prob_outside in (0,1]");
    double n = dim.n_var;
    return static_cast<int>(std::floor(-n * std::log(prob_outside / n)));
}

struct ExplorationLayer {
    int level = 0;                    // 1-based; exterior content 10^-level
    double prob_outside = 0.0;
    double radius = 0.0;
    PointBlock points;
    std::vector<std::uint8_t> consumed;
    int generation = 0;               // bumped on enrichment for fresh scrambles

    std::size_t remaining() const {
        std::size_t r = 0;
        for (auto c : consumed) r += c ? 0 : 1;
        return r;
    }
};

struct ExplorationPlan {
    int n_var = 0;
    std::uint64_t seed = 0;
    double oversample = 7.0;
    std::vector<ExplorationLayer> layers;

    SpaceDim dim() const { return SpaceDim(n_var); }

    std::size_t total_points() const {
        std::size_t t = 0;
        for (const auto& l : layers) t += l.points.size();
        return t;
    }
    std::size_t total_remaining() const {
        std::size_t t = 0;
        for (const auto& l : layers) t += l.remaining();
        return t;
    }

    void consume(int level, std::size_t point_index) {
        auto& layer = layer_at(level);
        if (point_index >= layer.consumed.size())
            throw std::out_of_range("ExplorationPlan::consume: bad point index");
        layer.consumed[point_index] = 1;
    }

    ExplorationLayer& layer_at(int level) {
        for (auto& l : layers)
            if (l.level == level) return l;
        throw std::out_of_range("ExplorationPlan: no such level");
    }
    const ExplorationLayer& layer_at(int level) const {
        for (const auto& l : layers)
            if (l.level == level) return l;
        throw std::out_of_range("ExplorationPlan: no such level");
    }
};

namespace detail {

inline constexpr std::uint64_t plan_stream_tag = 0x706c616eull;   // direction scrambles

inline ExplorationLayer build_layer(int level, int count, SpaceDim dim,
                                    const RngStream& root, double oversample,
                                    int generation) {
    ExplorationLayer layer;
    layer.level = level;
    layer.prob_outside = std::pow(10.0, -level);
    layer.radius = radius_for_pout(layer.prob_outside, dim);
    layer.generation = generation;
    // Independent scramble per (level, generation).
    RngStream stream = root.child(plan_stream_tag,
                                  static_cast<std::uint64_t>(level) * 1000 + generation);
    SpreadConfig cfg;
    cfg.oversample = oversample;
    DirectionSet dirs = spread_directions(stream, static_cast<std::size_t>(count), dim, cfg);
    layer.points = PointBlock(dim.n_var);
    layer.points.reserve(dirs.size());
    for (std::size_t i = 0; i < dirs.size(); ++i) {
        double* row = layer.points.append_row();
        const double* d = dirs.row_ptr(i);
        for (int k = 0; k < dim.n_var; ++k) row[k] = layer.radius * d[k];
    }
    layer.consumed.assign(layer.points.size(), 0);
    return layer;
}

} // namespace detail

// Builds layers 1..max_level. Each layer's direction set gets its own
// scramble derived from (seed, level), so enrichment and rebuilds never
// shift the other layers' points.
inline ExplorationPlan build_plan(SpaceDim dim, int max_level, std::uint64_t seed,
                                  double oversample = 7.0) {
    if (max_level < 1) throw std::invalid_argument("build_plan: need max_level >= 1");
    ExplorationPlan plan;
    plan.n_var = dim.n_var;
    plan.seed = seed;
    plan.oversample = oversample;
    RngStream root(seed);
    for (int level = 1; level <= max_level; ++level) {
        int count = layer_count(std::pow(10.0, -level), dim);
        if (count < 1) count = 1;
        plan.layers.push_back(detail::build_layer(level, count, dim, root, oversample, 0));
    }
    return plan;
}

// Appends `extra_levels` deeper layers.
inline void enrich_plan(ExplorationPlan& plan, int extra_levels) {
    if (extra_levels < 0) throw std::invalid_argument("enrich_plan: extra_levels >= 0");
    int deepest = 0;
    for (const auto& l : plan.layers) deepest = std::max(deepest, l.level);
    RngStream root(plan.seed);
    SpaceDim dim = plan.dim();
    for (int level = deepest + 1; level <= deepest + extra_levels; ++level) {
        int count = layer_count(std::pow(10.0, -level), dim);
        if (count < 1) count = 1;
        plan.layers.push_back(detail::build_layer(level, count, dim, root, plan.oversample, 0));
    }
}

// Adds `extra_points` fresh directions to an existing layer (new scramble
// generation; already consumed points are untouched).
inline void enrich_layer(ExplorationPlan& plan, int level, int extra_points) {
    if (extra_points < 1) throw std::invalid_argument("enrich_layer: extra_points >= 1");
    auto& layer = plan.layer_at(level);
    RngStream root(plan.seed);
    ExplorationLayer fresh = detail::build_layer(level, extra_points, plan.dim(), root,
                                                 plan.oversample, layer.generation + 1);
    layer.generation = fresh.generation;
    for (std::size_t i = 0; i < fresh.points.size(); ++i) {
        layer.points.push_back(fresh.points.row(i));
        layer.consumed.push_back(0);
    }
}

} // namespace rarering
