#pragma once

// Candidate generation and ranking for the sequential design.
//
// Exploitation candidates are Gaussian clouds around every rare design
// point, censored down to the dots whose two nearest design neighbors
// disagree, i.e. dots near the current classification boundary.
// Exploration candidates are the unconsumed plan points. Both compete
// through one score: the geometric mean of the Gaussian point density at
// the candidate and at its nearest design point, amplified by the
// nearest-design distance raised to the dimension. The score is evaluated
// in log space; a candidate coinciding with a design point scores zero.

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

#include "rarering/classifier.hpp"
#include "rarering/exploration_plan.hpp"
#include "rarering/gaussian_geometry.hpp"
#include "rarering/points.hpp"
#include "rarering/rng.hpp"

namespace rarering {

enum class CandidateOrigin : std::uint8_t { exploration = 0, exploitation = 1 };

// Structure-of-arrays candidate pool; metadata rows parallel `coords`.
struct CandidatePool {
    int dim = 0;
    PointBlock coords;
    std::vector<CandidateOrigin> origin;
    std::vector<int> level;          // exploration: plan level, else -1
    std::vector<int> point_index;    // exploration: index within layer, else -1
    std::vector<int> seed_index;     // exploitation: ED index of the seed, else -1
    std::vector<double> psi;
    std::vector<double> nearest_dist;
    std::vector<int> nearest_ed;

    explicit CandidatePool(int d) : dim(d), coords(d) {}
    std::size_t size() const { return coords.size(); }

    void push(std::span<const double> x, CandidateOrigin o, int lvl, int pidx, int sidx) {
        coords.push_back(x);
        origin.push_back(o);
        level.push_back(lvl);
        point_index.push_back(pidx);
        seed_index.push_back(sidx);
        psi.push_back(0.0);
        nearest_dist.push_back(0.0);
        nearest_ed.push_back(-1);
    }
};

struct ExploitationConfig {
    int dots_per_seed = 1000;
    bool censor_rare_vs_safe_only = false;   // default: any label disagreement
};

struct ExploitationDots {
    PointBlock dots;
    std::vector<int> seed_ed_index;   // per dot
    double sigma = 1.0;

    explicit ExploitationDots(int dim) : dots(dim) {}
};

// Isotropic Gaussian dots around every design point not labeled safe.
inline ExploitationDots generate_exploitation_dots(RngStream& rng, const ExperimentalDesign& ed,
                                                   const ExploitationConfig& cfg,
                                                   int safe_code = label_safe) {
    if (cfg.dots_per_seed < 1) throw std::invalid_argument("generate_exploitation_dots: dots_per_seed >= 1");
    SpaceDim dim(ed.dim());
    ExploitationDots out(dim.n_var);
    out.sigma = exploitation_sigma(dim);
    std::vector<int> seeds = ed.indices_not_code(safe_code);
    out.dots.reserve(seeds.size() * static_cast<std::size_t>(cfg.dots_per_seed));
    for (int s : seeds) {
        const double* seed = ed.point_ptr(static_cast<std::size_t>(s));
        for (int d = 0; d < cfg.dots_per_seed; ++d) {
            double* row = out.dots.append_row();
            for (int k = 0; k < dim.n_var; ++k)
                row[k] = seed[k] + out.sigma * rng.normal();
            out.seed_ed_index.push_back(s);
        }
    }
    return out;
}

// Keeps the dots whose two nearest design neighbors carry different
// labels (or specifically rare vs. safe when configured so). Returns
// indices into `dots`.
inline std::vector<std::size_t> censor_candidates(const ExperimentalDesign& ed,
                                                  const PointBlock& dots,
                                                  const ExploitationConfig& cfg = {},
                                                  int safe_code = label_safe) {
    if (ed.size() < 2) throw std::logic_error("censor_candidates: need >= 2 design points");
    std::vector<std::size_t> kept;
    const KdTree& tree = ed.index();
    std::vector<Neighbor> nn;
    nn.reserve(2);
    for (std::size_t i = 0; i < dots.size(); ++i) {
        tree.k_nearest(dots.row_ptr(i), 2, nn);
        int c1 = ed.code(static_cast<std::size_t>(nn[0].index));
        int c2 = ed.code(static_cast<std::size_t>(nn[1].index));
        bool keep = cfg.censor_rare_vs_safe_only
            ? (c1 == safe_code) != (c2 == safe_code)
            : c1 != c2;
        if (keep) kept.push_back(i);
    }
    return kept;
}

// Scores every candidate in place. Uses the log-space form
//   log psi = (log f(candidate) + log f(nearest)) / 2 + n_var * log dist.
inline void score_psi(const ExperimentalDesign& ed, CandidatePool& pool) {
    if (ed.size() == 0) throw std::logic_error("score_psi: empty design");
    SpaceDim dim(ed.dim());
    const KdTree& tree = ed.index();
    for (std::size_t i = 0; i < pool.size(); ++i) {
        const double* x = pool.coords.row_ptr(i);
        Neighbor nn = tree.nearest(x);
        double l = std::sqrt(nn.dist2);
        pool.nearest_dist[i] = l;
        pool.nearest_ed[i] = nn.index;
        if (l < 1e-12) { pool.psi[i] = 0.0; continue; }
        double rho_c = pool.coords.norm(i);
        double rho_s = ed.norm(static_cast<std::size_t>(nn.index));
        double log_psi = 0.5 * (point_log_density(rho_c, dim) + point_log_density(rho_s, dim))
                       + dim.n_var * std::log(l);
        pool.psi[i] = std::exp(log_psi);
    }
}

// Index of the best candidate: maximum score, ties broken toward
// exploitation and then toward the lower pool index.
inline std::size_t select_best(const CandidatePool& pool) {
    if (pool.size() == 0) throw std::logic_error("select_best: empty pool");
    std::size_t best = 0;
    for (std::size_t i = 1; i < pool.size(); ++i) {
        if (pool.psi[i] > pool.psi[best]) { best = i; continue; }
        if (pool.psi[i] == pool.psi[best]
            && pool.origin[i] == CandidateOrigin::exploitation
            && pool.origin[best] == CandidateOrigin::exploration) {
            best = i;
        }
    }
    return best;
}

// Unconsumed exploration points plus censored exploitation dots around the
// current rare set. Scores are left at zero; call score_psi afterwards.
inline CandidatePool assemble_pool(const ExplorationPlan& plan, const ExperimentalDesign& ed,
                                   RngStream& rng, const ExploitationConfig& cfg = {},
                                   int safe_code = label_safe) {
    if (plan.n_var != ed.dim()) throw std::invalid_argument("assemble_pool: dim mismatch");
    CandidatePool pool(plan.n_var);

    bool any_rare = false;
    for (std::size_t i = 0; i < ed.size(); ++i)
        if (ed.code(i) != safe_code) { any_rare = true; break; }
    if (any_rare && ed.size() >= 2) {
        ExploitationDots dots = generate_exploitation_dots(rng, ed, cfg, safe_code);
        std::vector<std::size_t> kept = censor_candidates(ed, dots.dots, cfg, safe_code);
        for (std::size_t i : kept)
            pool.push(dots.dots.row(i), CandidateOrigin::exploitation, -1, -1,
                      dots.seed_ed_index[i]);
    }

    for (const auto& layer : plan.layers)
        for (std::size_t i = 0; i < layer.points.size(); ++i)
            if (!layer.consumed[i])
                pool.push(layer.points.row(i), CandidateOrigin::exploration,
                          layer.level, static_cast<int>(i), -1);

    return pool;
}

} // namespace rarering
