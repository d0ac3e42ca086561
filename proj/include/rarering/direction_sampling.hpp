#pragma once

// Unit directions on the sphere in n_var dimensions.
//
// Single directions come from normalizing a vector of independent standard
// normals (inverse-cdf from uniforms). Well-spread direction sets are made
// by oversampling a scrambled digital sequence and thinning the pool with
// a repulsive pressure rule: every point presses on every other with
// 1/distance^n_var (chordal metric), and the most-pressed point is removed
// until the requested count remains. Removal updates pressures by
// subtracting the removed point's contributions, which is equivalent to
// masking its row and column in the pairwise matrix.

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

#include "rarering/points.hpp"
#include "rarering/gaussian_geometry.hpp"
#include "rarering/rng.hpp"

namespace rarering {

using DirectionSet = PointBlock;

// Maps a vector of uniforms in (0,1) to a unit direction.
inline void direction_from_uniforms(std::span<const double> u, double* out) {
    double norm2 = 0.0;
    for (std::size_t k = 0; k < u.size(); ++k) {
        out[k] = normal_ppf(u[k]);
        norm2 += out[k] * out[k];
    }
    if (norm2 == 0.0) { out[0] = 1.0; norm2 = 1.0; }  // unreachable for open-interval uniforms
    double inv = 1.0 / std::sqrt(norm2);
    for (std::size_t k = 0; k < u.size(); ++k) out[k] *= inv;
}

// One uniformly distributed unit direction.
inline std::vector<double> sample_direction(RngStream& rng, SpaceDim dim) {
    std::vector<double> u(dim.n_var);
    for (auto& v : u) v = rng.uniform();
    std::vector<double> out(dim.n_var);
    direction_from_uniforms(u, out.data());
    return out;
}

namespace detail {

// 1/d^n for squared distance d2; integer exponent by squaring.
inline double pressure_term(double d2, int n) {
    double q = 1.0 / d2;
    double r = 1.0;
    double base = q;
    int e = n / 2;
    while (e > 0) {
        if (e & 1) r *= base;
        base *= base;
        e >>= 1;
    }
    if (n & 1) r *= std::sqrt(q);
    return r;
}

// Pressure bookkeeping: coincident pairs (within 1e-12) contribute an
// infinite term, attributed to the later-indexed point only so that
// duplicates are evicted first, earliest copy kept.
struct PressureCell {
    int inf_count = 0;
    double finite = 0.0;
};

inline bool pressure_less(const PressureCell& a, const PressureCell& b) {
    if (a.inf_count != b.inf_count) return a.inf_count < b.inf_count;
    return a.finite < b.finite;
}

} // namespace detail

// Thins `pool` down to n points by iterative removal of the point under
// maximum pressure. Deterministic: exact pressure ties break toward the
// lowest index. Returns the survivors in pool order.
inline DirectionSet thin_by_pressure(const DirectionSet& pool, std::size_t n, SpaceDim dim) {
    const std::size_t m = pool.size();
    if (n > m) throw std::invalid_argument("thin_by_pressure: n exceeds pool size");
    if (n == m) return pool;
    const int nd = dim.n_var;
    constexpr double dup2 = 1e-24;   // squared coincidence threshold

    std::vector<detail::PressureCell> pressure(m);
    std::vector<char> alive(m, 1);

    // Cache the pairwise terms when the pool is small enough; otherwise
    // recompute on removal. Both paths evaluate the identical expression,
    // so results match bit for bit.
    const bool cache = m <= 1500;
    std::vector<double> terms;
    if (cache) terms.assign(m * m, 0.0);

    for (std::size_t i = 0; i < m; ++i) {
        const double* pi = pool.row_ptr(i);
        for (std::size_t j = i + 1; j < m; ++j) {
            double d2 = squared_distance(pi, pool.row_ptr(j), nd);
            if (d2 < dup2) {
                pressure[j].inf_count += 1;
                if (cache) terms[i * m + j] = -1.0;   // marker: duplicate pair
            } else {
                double t = detail::pressure_term(d2, nd);
                if (!std::isfinite(t)) {
                    pressure[j].inf_count += 1;
                    if (cache) terms[i * m + j] = -1.0;
                } else {
                    pressure[i].finite += t;
                    pressure[j].finite += t;
                    if (cache) terms[i * m + j] = t;
                }
            }
        }
    }

    std::size_t remaining = m;
    while (remaining > n) {
        std::size_t worst = m;
        for (std::size_t i = 0; i < m; ++i) {
            if (!alive[i]) continue;
            if (worst == m || detail::pressure_less(pressure[worst], pressure[i])) worst = i;
        }
        alive[worst] = 0;
        --remaining;
        const double* pw = pool.row_ptr(worst);
        for (std::size_t i = 0; i < m; ++i) {
            if (!alive[i]) continue;
            std::size_t lo = std::min(i, worst), hi = std::max(i, worst);
            double t;
            if (cache) {
                t = terms[lo * m + hi];
            } else {
                double d2 = squared_distance(pw, pool.row_ptr(i), nd);
                if (d2 < dup2) t = -1.0;
                else {
                    t = detail::pressure_term(d2, nd);
                    if (!std::isfinite(t)) t = -1.0;
                }
            }
            if (t < 0.0) {
                if (i == hi) pressure[i].inf_count -= 1;
            } else {
                pressure[i].finite -= t;
            }
        }
    }

    DirectionSet kept(nd);
    kept.reserve(n);
    for (std::size_t i = 0; i < m; ++i)
        if (alive[i]) kept.push_back(pool.row(i));
    return kept;
}

struct SpreadConfig {
    double oversample = 7.0;    // pool size multiplier before thinning
};

// n well-spread unit directions. The pool comes from a digitally shifted
// Sobol sequence seeded off `rng` (plain uniforms above the supported
// sequence dimension); near-coincident pool entries (< ~1e-6 rad apart)
// are dropped before thinning when the count allows it.
inline DirectionSet spread_directions(RngStream& rng, std::size_t n, SpaceDim dim,
                                      const SpreadConfig& cfg = {}) {
    if (n == 0) throw std::invalid_argument("spread_directions: need n >= 1");
    if (!(cfg.oversample >= 1.0)) throw std::invalid_argument("spread_directions: oversample >= 1");
    const int nd = dim.n_var;
    const std::size_t pool_n = static_cast<std::size_t>(std::ceil(cfg.oversample * static_cast<double>(n)));

    DirectionSet pool(nd);
    pool.reserve(pool_n);
    if (nd <= SobolSequence::max_dim) {
        SobolSequence seq(nd, rng);
        for (std::size_t i = 0; i < pool_n; ++i) {
            auto u = seq.next();
            direction_from_uniforms(u, pool.append_row());
        }
    } else {
        std::vector<double> u(nd);
        for (std::size_t i = 0; i < pool_n; ++i) {
            for (auto& v : u) v = rng.uniform();
            direction_from_uniforms(u, pool.append_row());
        }
    }

    // Chord 1e-6 corresponds to an angular gap of 1e-6 rad to first order.
    constexpr double near2 = 1e-12;
    std::vector<char> keep(pool_n, 1);
    std::size_t kept_n = pool_n;
    for (std::size_t i = 0; i < pool_n && kept_n > n; ++i) {
        if (!keep[i]) continue;
        for (std::size_t j = i + 1; j < pool_n && kept_n > n; ++j) {
            if (!keep[j]) continue;
            if (squared_distance(pool.row_ptr(i), pool.row_ptr(j), nd) < near2) {
                keep[j] = 0;
                --kept_n;
            }
        }
    }
    DirectionSet dedup(nd);
    dedup.reserve(kept_n);
    for (std::size_t i = 0; i < pool_n; ++i)
        if (keep[i]) dedup.push_back(pool.row(i));

    return thin_by_pressure(dedup, n, dim);
}

} // namespace rarering
