#pragma once

// Probability estimation on top of the classification surrogate.
//
// screen() throws Gaussian clouds around the rare design points and takes
// the smallest origin distance seen among rare dots and rare seeds; that
// radius bounds a ball assumed free of rare content. The global ring
// estimator then samples the annulus between that radius and an outer
// truncation radius with exact radial stratification, classifies the
// nodes, and converts hit counts into probabilities via the annulus
// content. The localized estimator reweights the screening clouds
// themselves by density ratios; each cloud is an unbiased estimator on
// its own, so their pooled mean is too, at the price of a wide variance
// when clouds overlap.

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "rarering/candidate_engine.hpp"
#include "rarering/classifier.hpp"
#include "rarering/gaussian_geometry.hpp"
#include "rarering/direction_sampling.hpp"
#include "rarering/points.hpp"
#include "rarering/rng.hpp"

namespace rarering {

enum class EstimateMethod : std::uint8_t { global_ring = 0, localized = 1 };

struct EstimateRecord {
    int label_code = 0;
    double p_hat = 0.0;
    double variance = 0.0;
    double cov = std::numeric_limits<double>::infinity();
    long n_is = 0;
    long n_hits = 0;
    EstimateMethod method = EstimateMethod::global_ring;
    AnnulusSpec annulus;
};

struct ScreeningResult {
    int dim = 0;
    PointBlock dots;
    std::vector<int> dot_codes;
    std::vector<int> dot_seed;        // index into `seeds` per dot
    PointBlock seeds;                 // the rare design points used as cloud centers
    std::vector<int> seed_ed_index;
    std::vector<int> seed_codes;
    double sigma = 1.0;
    double min_rare_radius = std::numeric_limits<double>::infinity();
    bool any_rare_dot = false;

    explicit ScreeningResult(int d) : dim(d), dots(d), seeds(d) {}
};

// Gaussian screening clouds around every rare design point, classified by
// the surrogate. The minimum rare distance counts the seeds themselves,
// so it is defined even when every dot classifies safe.
inline ScreeningResult screen(RngStream& rng, const ExperimentalDesign& ed,
                              int dots_per_seed = 1000, int safe_code = label_safe) {
    std::vector<int> rare = ed.indices_not_code(safe_code);
    if (rare.empty()) throw std::logic_error("screen: no rare design points");
    SpaceDim dim(ed.dim());
    ScreeningResult out(dim.n_var);
    out.sigma = exploitation_sigma(dim);
    for (int idx : rare) {
        out.seeds.push_back(ed.point(static_cast<std::size_t>(idx)));
        out.seed_ed_index.push_back(idx);
        out.seed_codes.push_back(ed.code(static_cast<std::size_t>(idx)));
        out.min_rare_radius = std::min(out.min_rare_radius, ed.norm(static_cast<std::size_t>(idx)));
    }
    out.dots.reserve(rare.size() * static_cast<std::size_t>(dots_per_seed));
    for (std::size_t s = 0; s < out.seeds.size(); ++s) {
        const double* seed = out.seeds.row_ptr(s);
        for (int d = 0; d < dots_per_seed; ++d) {
            double* row = out.dots.append_row();
            for (int k = 0; k < dim.n_var; ++k)
                row[k] = seed[k] + out.sigma * rng.normal();
            out.dot_seed.push_back(static_cast<int>(s));
        }
    }
    out.dot_codes = ed.classify_batch(out.dots);
    for (std::size_t i = 0; i < out.dots.size(); ++i) {
        if (out.dot_codes[i] != safe_code) {
            out.any_rare_dot = true;
            out.min_rare_radius = std::min(out.min_rare_radius, out.dots.norm(i));
        }
    }
    return out;
}

struct AnnulusBuildInfo {
    AnnulusSpec annulus;
    bool widened = false;   // outer radius pushed past a degenerate inner bound
};

// Estimation annulus: inner radius from screening, outer radius from the
// truncation rule on the previous estimate (or on the inner exterior
// content when no estimate exists yet). If the rule ever produces an
// outer radius at or below the inner one, the outer bound is widened to
// the next exploration-ladder radius beyond it.
inline AnnulusBuildInfo build_annulus(const ScreeningResult& screening,
                                      std::optional<double> prev_estimate,
                                      SpaceDim dim, double fraction = 1e-4) {
    double inner = screening.min_rare_radius;
    if (!std::isfinite(inner)) throw std::logic_error("build_annulus: no rare radius");
    double basis = (prev_estimate && *prev_estimate > 0.0 && *prev_estimate <= 1.0)
        ? *prev_estimate
        : chi_sf(inner, dim);
    AnnulusBuildInfo info;
    double outer = outer_radius_for_estimate(basis, dim, fraction);
    if (outer <= inner) {
        info.widened = true;
        for (int level = 1; level <= 400 && outer <= inner; ++level)
            outer = radius_for_pout(std::pow(10.0, -level), dim);
        if (outer <= inner) throw std::logic_error("build_annulus: cannot widen past inner radius");
    }
    info.annulus = make_annulus(inner, outer, dim);
    return info;
}

struct GlobalEstimate {
    std::vector<EstimateRecord> records;   // one per label code
    PointBlock nodes;
    std::vector<int> node_codes;

    explicit GlobalEstimate(int dim) : nodes(dim) {}

    const EstimateRecord* find(int code) const {
        for (const auto& r : records)
            if (r.label_code == code) return &r;
        return nullptr;
    }
};

// Global ring estimator. Directions are drawn fresh from `rng`; radial
// distances use the exact stratification p_i = (i - 0.5) / n through the
// truncated radial quantile. `classify` maps a point to a label code;
// records are produced for every code seen plus every code in
// `codes_of_interest`, and their p_hat values sum to the annulus content
// by construction.
inline GlobalEstimate global_is_estimate(RngStream& rng,
                                         const std::function<int(const double*)>& classify,
                                         const AnnulusSpec& annulus, SpaceDim dim, long n_is,
                                         const std::vector<int>& codes_of_interest = {}) {
    if (n_is < 1) throw std::invalid_argument("global_is_estimate: need n_is >= 1");
    GlobalEstimate out(dim.n_var);
    out.nodes.reserve(static_cast<std::size_t>(n_is));
    std::vector<double> dir(dim.n_var);
    std::vector<double> u(dim.n_var);
    for (long i = 0; i < n_is; ++i) {
        for (auto& v : u) v = rng.uniform();
        direction_from_uniforms(u, dir.data());
        double p = (static_cast<double>(i) + 0.5) / static_cast<double>(n_is);
        double d = annulus_distance(p, annulus, dim);
        double* row = out.nodes.append_row();
        for (int k = 0; k < dim.n_var; ++k) row[k] = d * dir[k];
    }
    out.node_codes.resize(out.nodes.size());
    for (std::size_t i = 0; i < out.nodes.size(); ++i)
        out.node_codes[i] = classify(out.nodes.row_ptr(i));

    std::vector<int> codes;
    std::vector<long> hits;
    auto bump = [&](int code, long add) {
        for (std::size_t k = 0; k < codes.size(); ++k)
            if (codes[k] == code) { hits[k] += add; return; }
        codes.push_back(code);
        hits.push_back(add);
    };
    for (int c : codes_of_interest) bump(c, 0);
    for (int c : out.node_codes) bump(c, 1);

    for (std::size_t k = 0; k < codes.size(); ++k) {
        EstimateRecord rec;
        rec.label_code = codes[k];
        rec.method = EstimateMethod::global_ring;
        rec.annulus = annulus;
        rec.n_is = n_is;
        rec.n_hits = hits[k];
        double n = static_cast<double>(n_is);
        rec.p_hat = annulus.prob_content * static_cast<double>(hits[k]) / n;
        rec.variance = rec.p_hat * (annulus.prob_content - rec.p_hat) / n;
        rec.cov = hits[k] > 0 ? std::sqrt(rec.variance) / rec.p_hat
                              : std::numeric_limits<double>::infinity();
        out.records.push_back(rec);
    }
    return out;
}

// Convenience overload classifying through the design surrogate.
inline GlobalEstimate global_is_estimate(RngStream& rng, const ExperimentalDesign& ed,
                                         const AnnulusSpec& annulus, long n_is,
                                         const std::vector<int>& codes_of_interest = {}) {
    return global_is_estimate(
        rng, [&ed](const double* x) { return ed.classify(x); },
        annulus, SpaceDim(ed.dim()), n_is, codes_of_interest);
}

// Sample variance of an importance-sampling mean: (1/n) (mean(w^2) - mean(w)^2).
inline double generic_is_variance(std::span<const double> weights) {
    double n = static_cast<double>(weights.size());
    if (n < 1.0) return 0.0;
    double m = 0.0, m2 = 0.0;
    for (double w : weights) { m += w; m2 += w * w; }
    m /= n;
    m2 /= n;
    return (m2 - m * m) / n;
}

// Localized estimator over the screening clouds. Every dot is weighted by
// the standard Gaussian density over its own cloud's density; dots of
// other labels weigh zero.
inline EstimateRecord localized_is_estimate(const ScreeningResult& screening, int rare_code,
                                            SpaceDim dim) {
    if (screening.dots.size() == 0) throw std::logic_error("localized_is_estimate: no dots");
    double sigma = screening.sigma;
    double log_sigma_term = dim.n_var * std::log(sigma);
    std::vector<double> weights(screening.dots.size(), 0.0);
    for (std::size_t i = 0; i < screening.dots.size(); ++i) {
        if (screening.dot_codes[i] != rare_code) continue;
        const double* x = screening.dots.row_ptr(i);
        const double* s = screening.seeds.row_ptr(static_cast<std::size_t>(screening.dot_seed[i]));
        double rho2 = 0.0, d2 = 0.0;
        for (int k = 0; k < dim.n_var; ++k) {
            rho2 += x[k] * x[k];
            double dk = x[k] - s[k];
            d2 += dk * dk;
        }
        weights[i] = std::exp(-0.5 * rho2 + 0.5 * d2 / (sigma * sigma) + log_sigma_term);
    }
    EstimateRecord rec;
    rec.label_code = rare_code;
    rec.method = EstimateMethod::localized;
    rec.n_is = static_cast<long>(weights.size());
    double sum = 0.0;
    long hits = 0;
    for (double w : weights) { sum += w; hits += w > 0.0 ? 1 : 0; }
    rec.n_hits = hits;
    rec.p_hat = sum / static_cast<double>(weights.size());
    rec.variance = generic_is_variance(weights);
    rec.cov = rec.p_hat > 0.0 ? std::sqrt(rec.variance) / rec.p_hat
                              : std::numeric_limits<double>::infinity();
    return rec;
}

// One estimation event in the run record; label-resolved rows.
struct HistoryRow {
    long n_sim = 0;
    double psi = 0.0;
    int label_code = 0;
    double p_hat = 0.0;
    double cov = 0.0;
    double r_inner = 0.0;
    double r_outer = 0.0;
    long n_rare = 0;
};

struct ConvergenceHistory {
    std::vector<HistoryRow> rows;
};

// Appends one row per record. n_sim must not decrease between events and
// must strictly increase per label.
inline void record_history(ConvergenceHistory& history, long n_sim, double psi,
                           const std::vector<EstimateRecord>& records, long n_rare) {
    for (const auto& rec : records) {
        if (!history.rows.empty() && n_sim < history.rows.back().n_sim)
            throw std::logic_error("record_history: n_sim went backwards");
        for (auto it = history.rows.rbegin(); it != history.rows.rend(); ++it) {
            if (it->n_sim < n_sim) break;
            if (it->label_code == rec.label_code)
                throw std::logic_error("record_history: duplicate n_sim for label");
        }
        HistoryRow row;
        row.n_sim = n_sim;
        row.psi = psi;
        row.label_code = rec.label_code;
        row.p_hat = rec.p_hat;
        row.cov = rec.cov;
        row.r_inner = rec.annulus.inner_radius;
        row.r_outer = rec.annulus.outer_radius;
        row.n_rare = n_rare;
        history.rows.push_back(row);
    }
}

} // namespace rarering
