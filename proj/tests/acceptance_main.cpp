// End-to-end acceptance checks. Each numbered check prints exactly one
// PASS/FAIL line with the measured quantities; the exit code is the number
// of failed checks. Stochastic checks use medians over ten fixed seeds.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "rarering/benchmarks.hpp"
#include "rarering/driver.hpp"
#include "rarering/input_transform.hpp"
#include "rarering/reporting.hpp"

using namespace rarering;

namespace {

int failures = 0;

std::string fmt(const char* f, ...) {
    char buf[1024];
    va_list args;
    va_start(args, f);
    std::vsnprintf(buf, sizeof buf, f, args);
    va_end(args);
    return std::string(buf);
}

void report(int id, bool ok, const std::string& detail) {
    std::printf("%s %d: %s\n", ok ? "PASS" : "FAIL", id, detail.c_str());
    std::fflush(stdout);
    if (!ok) ++failures;
}

double median(std::vector<double> v) {
    if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
    std::sort(v.begin(), v.end());
    std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

AnalysisResult run_case(const char* bench, int dim, long budget, std::uint64_t seed,
                        bool binary, long n_is = 10000, long n_is_final = 100000,
                        int dots_per_seed = 1000) {
    RunConfig cfg;
    cfg.benchmark = bench;
    cfg.dim = dim;
    cfg.budget = budget;
    cfg.seed = seed;
    cfg.binary_only = binary;
    cfg.n_is = n_is;
    cfg.n_is_final = n_is_final;
    cfg.dots_per_seed = dots_per_seed;
    return run_analysis(cfg);
}

// Kept from check 4 for reuse by checks 6 and 7.
std::vector<AnalysisResult> wavy_runs;

// ---------------------------------------------------------------- check 1

struct PlanRow {
    int dim;
    int counts[15];
    double radii[15];
};

const PlanRow plan_table[] = {
    {2,
     {5, 10, 15, 19, 24, 29, 33, 38, 42, 47, 52, 56, 61, 65, 70},
     {2.15, 3.03, 3.72, 4.29, 4.80, 5.26, 5.68, 6.07, 6.44, 6.79, 7.12, 7.43, 7.74, 8.03, 8.31}},
    {3,
     {10, 17, 24, 30, 37, 44, 51, 58, 65, 72, 79, 86, 93, 100, 106},
     {2.50, 3.37, 4.03, 4.59, 5.09, 5.54, 5.95, 6.33, 6.70, 7.04, 7.36, 7.68, 7.97, 8.26, 8.54}},
    {4,
     {14, 23, 33, 42, 51, 60, 70, 79, 88, 97, 106, 116, 125, 134, 143},
     {2.79, 3.64, 4.30, 4.85, 5.34, 5.78, 6.18, 6.56, 6.92, 7.26, 7.58, 7.89, 8.18, 8.47, 8.74}},
    {5,
     {19, 31, 42, 54, 65, 77, 88, 100, 111, 123, 134, 146, 157, 169, 180},
     {3.04, 3.88, 4.53, 5.07, 5.55, 5.99, 6.39, 6.77, 7.12, 7.45, 7.77, 8.08, 8.37, 8.65, 8.92}},
    {6,
     {24, 38, 52, 66, 79, 93, 107, 121, 135, 148, 162, 176, 190, 204, 217},
     {3.26, 4.10, 4.74, 5.28, 5.75, 6.19, 6.58, 6.95, 7.30, 7.63, 7.95, 8.25, 8.54, 8.82, 9.09}},
    {10,
     {46, 69, 92, 115, 138, 161, 184, 207, 230, 253, 276, 299, 322, 345, 368},
     {4.00, 4.82, 5.44, 5.96, 6.43, 6.85, 7.23, 7.59, 7.93, 8.26, 8.56, 8.86, 9.14, 9.41, 9.68}},
    {20,
     {105, 152, 198, 244, 290, 336, 382, 428, 474, 520, 566, 612, 658, 704, 750},
     {5.33, 6.13, 6.73, 7.24, 7.68, 8.09, 8.46, 8.81, 9.14, 9.45, 9.74, 10.03, 10.30, 10.56, 10.82}},
};

void check_plan_table() {
    auto t0 = std::chrono::steady_clock::now();
    bool ok = true;
    std::string why;
    double max_radius_err = 0.0;
    int cells = 0;
    for (const PlanRow& row : plan_table) {
        SpaceDim dim(row.dim);
        for (int lvl = 1; lvl <= 15; ++lvl) {
            ++cells;
            int n = layer_count(std::pow(10.0, -lvl), dim);
            double r = radius_for_pout(std::pow(10.0, -lvl), dim);
            double err = std::abs(r - row.radii[lvl - 1]);
            max_radius_err = std::max(max_radius_err, err);
            if (n != row.counts[lvl - 1] && ok) {
                ok = false;
                why = fmt("dim %d level %d count %d, expected %d", row.dim, lvl, n, row.counts[lvl - 1]);
            }
            if (err > 0.01 && ok) {
                ok = false;
                why = fmt("dim %d level %d radius %.4f, expected %.2f", row.dim, lvl, r, row.radii[lvl - 1]);
            }
        }
    }
    // Materialized plans must carry exactly the tabulated layers; points
    // must sit on their layer sphere.
    for (const PlanRow& row : plan_table) {
        if (row.dim > 6) continue;  // large-dim pools are checked through the cell rule above
        ExplorationPlan plan = build_plan(SpaceDim(row.dim), 15, 1);
        for (int lvl = 1; lvl <= 15; ++lvl) {
            const ExplorationLayer& layer = plan.layer_at(lvl);
            if (static_cast<int>(layer.points.size()) != row.counts[lvl - 1] && ok) {
                ok = false;
                why = fmt("built plan dim %d level %d has %zu points, expected %d",
                          row.dim, lvl, layer.points.size(), row.counts[lvl - 1]);
            }
            if (std::abs(layer.radius - row.radii[lvl - 1]) > 0.01 && ok) {
                ok = false;
                why = fmt("built plan dim %d level %d radius %.4f, expected %.2f",
                          row.dim, lvl, layer.radius, row.radii[lvl - 1]);
            }
            for (std::size_t i = 0; i < layer.points.size() && ok; ++i)
                if (std::abs(layer.points.norm(i) - layer.radius) > 1e-9) {
                    ok = false;
                    why = fmt("built plan dim %d level %d point %zu off the sphere", row.dim, lvl, i);
                }
        }
    }
    double sec = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (sec >= 1.0) {
        ok = false;
        why = fmt("took %.2f s, limit 1 s", sec);
    }
    report(1, ok,
           ok ? fmt("exploration plan matches all %d tabulated layer counts and radii "
                    "(max radius deviation %.4f, %.2f s)", cells, max_radius_err, sec)
              : "exploration plan table: " + why);
}

// ---------------------------------------------------------------- check 2

double simpson_radial_mass(double r, SpaceDim dim) {
    double prev = 0.0;
    for (long n = 64; n <= (1L << 22); n *= 2) {
        double h = r / static_cast<double>(n);
        double s = chi_pdf(0.0, dim) + chi_pdf(r, dim);
        for (long i = 1; i < n; ++i)
            s += chi_pdf(static_cast<double>(i) * h, dim) * (i % 2 ? 4.0 : 2.0);
        s *= h / 3.0;
        if (n > 64 && std::abs(s - prev) < 1e-12) return s;
        prev = s;
    }
    return prev;
}

void check_radial_cdf() {
    const double ps[] = {1e-15, 1e-12, 1e-9, 1e-6, 1e-3, 0.01, 0.1, 0.25, 0.5,
                         0.75, 0.9, 0.99, 1.0 - 1e-3, 1.0 - 1e-6, 1.0 - 1e-9,
                         1.0 - 1e-12, 1.0 - 1e-15};
    double max_rt = 0.0;
    for (int d = 1; d <= 20; ++d) {
        SpaceDim dim(d);
        for (double p : ps) {
            double r = chi_ppf(p, dim);
            max_rt = std::max(max_rt, std::abs(chi_cdf(r, dim) - p));
        }
    }
    double max_quad = 0.0;
    for (int d : {1, 2, 3, 5, 10, 20}) {
        SpaceDim dim(d);
        for (double r : {0.5, 1.5, 3.0, 5.0}) {
            double q = simpson_radial_mass(r, dim);
            max_quad = std::max(max_quad, std::abs(q - chi_cdf(r, dim)));
        }
    }
    bool ok = max_rt <= 1e-8 && max_quad <= 1e-8;
    report(2, ok,
           fmt("radial cdf/quantile round trip max error %.2e over dims 1-20, "
               "cdf vs quadrature max error %.2e (tolerance 1e-8)", max_rt, max_quad));
}

// ---------------------------------------------------------------- check 3

void check_ring_estimator_truth() {
    struct RingCase {
        std::string name;
        int dim;
        double inner;
        double outer;
        double truth;
    };
    SpaceDim d2(2);
    double wavy_outer = outer_radius_for_estimate(chi_sf(3.0, d2), d2);
    double alt_inner = 3.267;
    double alt_outer = outer_radius_for_estimate(chi_sf(alt_inner, d2), d2);
    double swan_truth = normal_sf(5.0) * normal_sf(2.0);
    std::vector<RingCase> cases = {
        {"wavy_circle", 2, 3.0, wavy_outer, 2.582e-3},
        {"four_branch", 2, 3.0, wavy_outer, 2.222e-3},
        {"alternating", 2, alt_inner, alt_outer, 5.266e-4},
        {"black_swan", 2, std::sqrt(29.0) - 0.01, radius_for_pout(swan_truth * 1e-4, d2), swan_truth},
    };
    for (int d = 2; d <= 10; ++d)
        cases.push_back({"linear", d, linear_beta, radius_for_pout(1e-10, SpaceDim(d)),
                         normal_cdf(-linear_beta)});

    RngStream root(777);
    bool ok = true;
    std::string why;
    double worst = 0.0;
    std::string worst_name;
    for (std::size_t i = 0; i < cases.size(); ++i) {
        const RingCase& c = cases[i];
        const Benchmark& bench = find_benchmark(c.name);
        SpaceDim dim(c.dim);
        auto classify = [&bench, &c](const double* x) {
            return bench.evaluate(std::span<const double>(x, static_cast<std::size_t>(c.dim))).code;
        };
        // Median over ten seeds per the stochastic-criteria rule; the band
        // stays at three single-run CoVs, which a centered estimator's
        // median essentially cannot leave by luck.
        std::vector<double> p_hats, covs;
        long min_hits = std::numeric_limits<long>::max();
        for (int s = 0; s < 10; ++s) {
            RngStream rng = root.child(0x72696e67, i * 16 + s);
            GlobalEstimate est = global_is_estimate(rng, classify,
                                                    make_annulus(c.inner, c.outer, dim),
                                                    dim, 200000, {label_failure});
            const EstimateRecord* rec = est.find(label_failure);
            p_hats.push_back(rec->p_hat);
            covs.push_back(rec->cov);
            min_hits = std::min(min_hits, rec->n_hits);
        }
        double p_med = median(p_hats);
        double cov_med = median(covs);
        double sig = std::abs(p_med - c.truth) / (cov_med * p_med);
        std::string tag = c.name == "linear" ? fmt("linear dim %d", c.dim) : c.name;
        if (sig > worst) {
            worst = sig;
            worst_name = tag;
        }
        if ((min_hits == 0 || sig > 3.0) && ok) {
            ok = false;
            why = fmt("%s: median p_hat %.4e vs %.4e is %.1f sigma (cov %.4f, min hits %ld)",
                      tag.c_str(), p_med, c.truth, sig, cov_med, min_hits);
        }
    }
    report(3, ok,
           ok ? fmt("ten-seed median ring estimates match references within 3 sigma on %zu cases "
                    "(worst %.2f sigma, %s)", cases.size(), worst, worst_name.c_str())
              : "ring estimator: " + why);
}

// ---------------------------------------------------------------- check 4

void check_end_to_end_medians() {
    struct EndCase {
        const char* bench;
        long budget;
        double truth;
        double rel_tol;   // 0: factor-of-two band instead
    };
    const EndCase cases[] = {
        {"wavy_circle", 200, 2.582e-3, 0.15},
        {"four_branch", 150, 2.222e-3, 0.15},
        {"metaballs", 200, 1.12857e-5, 0.25},
        {"wavy_line", 250, 1.217e-6, 0.20},
        {"nataf", 150, 1.143e-3, 0.20},
        {"linear", 250, normal_cdf(-linear_beta), 0.0},
    };
    bool ok = true;
    std::string why;
    std::string parts;
    for (const EndCase& c : cases) {
        std::vector<double> estimates;
        for (std::uint64_t seed = 1; seed <= 10; ++seed) {
            AnalysisResult res = run_case(c.bench, 2, c.budget, seed, true);
            estimates.push_back(res.rare_total());
            if (std::string(c.bench) == "wavy_circle") wavy_runs.push_back(std::move(res));
        }
        double med = median(estimates);
        bool in_band = c.rel_tol > 0.0
            ? std::abs(med - c.truth) <= c.rel_tol * c.truth
            : (med >= 0.5 * c.truth && med <= 2.0 * c.truth);
        if (!in_band && ok) {
            ok = false;
            why = fmt("%s median %.4e vs %.4e (tolerance %s)", c.bench, med, c.truth,
                      c.rel_tol > 0.0 ? fmt("%.0f%%", 100.0 * c.rel_tol).c_str() : "factor 2");
        }
        if (!parts.empty()) parts += ", ";
        parts += fmt("%s %.2e (%+.0f%%)", c.bench, med, 100.0 * (med / c.truth - 1.0));
    }
    report(4, ok,
           ok ? "ten-seed median estimates within tolerance: " + parts
              : "end-to-end medians: " + why);
}

// ---------------------------------------------------------------- check 5

void check_clustered_underestimation() {
    const double truth = 0.072986;
    std::vector<double> estimates;
    for (std::uint64_t seed = 1; seed <= 10; ++seed)
        estimates.push_back(run_case("rastrigin", 2, 200, seed, true).rare_total());
    double med = median(estimates);
    bool ok = med > 0.0 && med < 0.06;
    report(5, ok,
           fmt("rastrigin median estimate %.4f stays below 0.06 against true %.4f "
               "(scattered failure pockets are undercounted by design)", med, truth));
}

// ---------------------------------------------------------------- check 6

std::vector<std::vector<double>> collect_s_sq(const std::vector<AnalysisResult>& runs,
                                              int label, int* missing) {
    std::vector<std::vector<double>> rows;
    for (const AnalysisResult& r : runs) {
        auto it = r.sensitivities.find(label);
        if (it == r.sensitivities.end() || it->second.s_sq.empty()) {
            ++*missing;
            continue;
        }
        rows.push_back(it->second.s_sq);
    }
    return rows;
}

std::vector<double> median_components(const std::vector<std::vector<double>>& rows) {
    if (rows.empty()) return {};
    std::size_t d = rows.front().size();
    std::vector<double> out(d, std::numeric_limits<double>::quiet_NaN());
    for (std::size_t k = 0; k < d; ++k) {
        std::vector<double> v;
        for (const auto& r : rows)
            if (r.size() == d) v.push_back(r[k]);
        out[k] = median(v);
    }
    return out;
}

void check_sensitivities() {
    bool ok = true;
    std::string why;
    std::string parts;
    auto expect = [&](const char* tag, const std::vector<double>& med,
                      const std::vector<double>& target, double tol, int missing) {
        if (missing > 0 && ok) {
            ok = false;
            why = fmt("%s: %d of the runs produced no shares", tag, missing);
            return;
        }
        if (med.size() != target.size() && ok) {
            ok = false;
            why = fmt("%s: got %zu shares, expected %zu", tag, med.size(), target.size());
            return;
        }
        for (std::size_t k = 0; k < target.size(); ++k)
            if (std::abs(med[k] - target[k]) > tol && ok) {
                ok = false;
                why = fmt("%s: share %zu is %.3f, expected %.3f +/- %.2f",
                          tag, k, med[k], target[k], tol);
            }
        if (!parts.empty()) parts += ", ";
        parts += fmt("%s (%.2f", tag, med.empty() ? -1.0 : med[0]);
        for (std::size_t k = 1; k < med.size(); ++k) parts += fmt("/%.2f", med[k]);
        parts += ")";
    };

    {
        int missing = 0;
        auto rows = collect_s_sq(wavy_runs, label_failure, &missing);
        expect("wavy_circle", median_components(rows), {0.5, 0.5}, 0.05, missing);
    }
    {
        std::vector<AnalysisResult> runs;
        for (std::uint64_t seed = 1; seed <= 10; ++seed)
            runs.push_back(run_case("black_swan", 2, 400, seed, false));
        int missing = 0;
        auto rows = collect_s_sq(runs, label_failure, &missing);
        expect("black_swan", median_components(rows), {0.3189, 0.6811}, 0.05, missing);
    }
    {
        // Known shortfall, kept at its stated bar: in five dimensions the
        // failure cap is only about 1/beta deep while any affordable node
        // cloud has spacing far above that, so safe-centroid directions keep
        // large tangential components. Measured plateaus: ~0.92 with exact
        // labels (K up to 1000, clouds up to 2e6 nodes; the large-K limit is
        // bounded by E[(beta/r)^2] ~ 0.92), lower through the surrogate.
        // The case reports its honest end-to-end median rather than a
        // construction tuned to clear the bar.
        std::vector<AnalysisResult> runs;
        for (std::uint64_t seed = 1; seed <= 10; ++seed)
            runs.push_back(run_case("linear", 5, 350, seed, false));
        int missing = 0;
        auto rows = collect_s_sq(runs, label_failure, &missing);
        auto med = median_components(rows);
        if ((med.empty() || med[0] < 0.95 || missing > 0) && ok) {
            ok = false;
            why = fmt("linear dim 5: leading share %.3f, expected >= 0.95 (%d missing)",
                      med.empty() ? -1.0 : med[0], missing);
        }
        if (!med.empty()) {
            if (!parts.empty()) parts += ", ";
            parts += fmt("linear5 (%.3f)", med[0]);
        }
    }
    {
        std::vector<AnalysisResult> runs;
        for (std::uint64_t seed = 1; seed <= 10; ++seed)
            runs.push_back(run_case("ball_exterior", 4, 100, seed, false, 4000, 20000, 300));
        int missing = 0;
        auto rows = collect_s_sq(runs, label_failure, &missing);
        expect("ball_exterior4", median_components(rows), {0.25, 0.25, 0.25, 0.25}, 0.03, missing);
    }
    {
        // Direction shares on known-indicator ring nodes for the quartic
        // valley fixture.
        Benchmark fixture = quartic_fixture();
        SpaceDim d2(2);
        AnnulusSpec ann = make_annulus(2.99, 5.5, d2);
        std::vector<std::vector<double>> rows;
        RngStream root(900);
        for (std::uint64_t seed = 1; seed <= 10; ++seed) {
            RngStream rng = root.child(0x71727478, seed);
            auto classify = [&fixture](const double* x) {
                return fixture.evaluate(std::span<const double>(x, 2)).code;
            };
            GlobalEstimate est = global_is_estimate(rng, classify, ann, d2, 20000);
            std::vector<char> rare(est.nodes.size(), 0), safe(est.nodes.size(), 0);
            for (std::size_t i = 0; i < est.nodes.size(); ++i) {
                rare[i] = est.node_codes[i] == label_failure;
                safe[i] = est.node_codes[i] == label_safe;
            }
            SensitivityResult s = sensitivity_indices(est.nodes, rare, safe);
            if (!s.s_sq.empty()) rows.push_back(s.s_sq);
        }
        int missing = 10 - static_cast<int>(rows.size());
        expect("quartic", median_components(rows), {0.57, 0.43}, 0.08, missing);
    }

    report(6, ok,
           ok ? "median direction shares match references: " + parts
              : "sensitivities: " + why + "; all medians: " + parts);
}

// ---------------------------------------------------------------- check 7

double score_crossing_step(const AnalysisResult& res) {
    const auto& rows = res.history.rows;
    std::size_t i = 0;
    while (i < rows.size()) {
        long s = rows[i].n_sim;
        double p = 0.0;
        while (i < rows.size() && rows[i].n_sim == s) {
            p += rows[i].p_hat;
            ++i;
        }
        std::vector<double> window;
        for (const StepTrace& st : res.steps)
            if (st.n_sim <= s) window.push_back(st.psi);
        if (window.size() > 5) window.erase(window.begin(), window.end() - 5);
        if (!window.empty() && median(window) < p) return static_cast<double>(s);
    }
    return std::numeric_limits<double>::quiet_NaN();
}

void check_score_crossing() {
    std::vector<double> crossings;
    int missing = 0;
    for (const AnalysisResult& res : wavy_runs) {
        double c = score_crossing_step(res);
        if (std::isnan(c)) ++missing;
        else crossings.push_back(c);
    }
    double med = median(crossings);
    bool ok = missing == 0 && med >= 20.0 && med <= 60.0;
    report(7, ok,
           fmt("windowed-median score first drops below the running estimate at design size %.0f "
               "(median over %zu runs, %d without a crossing; expected in [20, 60])",
               med, crossings.size(), missing));
}

// ---------------------------------------------------------------- check 8

void check_internal_consistency() {
    bool ok = true;
    std::string why;

    // Tree classification against brute force.
    const ExperimentalDesign& ed = wavy_runs.front().ed;
    RngStream qrng(4242);
    int mismatches = 0;
    for (int i = 0; i < 100000; ++i) {
        double q[2] = {qrng.uniform(-7.0, 7.0), qrng.uniform(-7.0, 7.0)};
        int tree_code = ed.classify(q);
        double best = std::numeric_limits<double>::infinity();
        std::size_t bi = 0;
        for (std::size_t j = 0; j < ed.size(); ++j) {
            const double* p = ed.point_ptr(j);
            double d2 = (q[0] - p[0]) * (q[0] - p[0]) + (q[1] - p[1]) * (q[1] - p[1]);
            if (d2 < best) {
                best = d2;
                bi = j;
            }
        }
        if (tree_code != ed.code(bi)) ++mismatches;
    }
    if (mismatches != 0) {
        ok = false;
        why = fmt("%d of 100000 tree lookups disagree with brute force", mismatches);
    }

    // Radial sampler distribution.
    SpaceDim d3(3);
    AnnulusSpec ann = make_annulus(2.0, 5.0, d3);
    const int n = 100000;
    std::vector<double> t(n);
    RngStream rng(31337);
    for (int i = 0; i < n; ++i) {
        double d = annulus_distance(rng.uniform(), ann, d3);
        t[i] = (chi_cdf(d, d3) - ann.prob_inside_inner) / ann.prob_content;
    }
    std::sort(t.begin(), t.end());
    double ks = 0.0;
    for (int i = 0; i < n; ++i) {
        double lo = static_cast<double>(i) / n;
        double hi = static_cast<double>(i + 1) / n;
        ks = std::max(ks, std::max(t[i] - lo, hi - t[i]));
    }
    if (ks >= 0.01 && ok) {
        ok = false;
        why = fmt("radial sampler KS statistic %.4f >= 0.01", ks);
    }

    // Score rotation invariance.
    const double pts[4][2] = {{1.2, 0.3}, {-0.5, 2.0}, {3.3, -1.1}, {0.1, -2.7}};
    const int codes[4] = {label_safe, label_failure, label_safe, label_failure};
    const double cands[3][2] = {{2.0, 0.5}, {-1.0, -1.0}, {4.1, 0.2}};
    double co = std::cos(0.7), si = std::sin(0.7);
    ExperimentalDesign base(2), turned(2);
    for (int i = 0; i < 4; ++i) {
        base.add_point(std::span<const double>(pts[i], 2), codes[i], std::nullopt);
        double r[2] = {co * pts[i][0] - si * pts[i][1], si * pts[i][0] + co * pts[i][1]};
        turned.add_point(std::span<const double>(r, 2), codes[i], std::nullopt);
    }
    CandidatePool pool(2), pool_turned(2);
    for (int i = 0; i < 3; ++i) {
        pool.push(std::span<const double>(cands[i], 2), CandidateOrigin::exploration, -1, -1, -1);
        double r[2] = {co * cands[i][0] - si * cands[i][1], si * cands[i][0] + co * cands[i][1]};
        pool_turned.push(std::span<const double>(r, 2), CandidateOrigin::exploration, -1, -1, -1);
    }
    score_psi(base, pool);
    score_psi(turned, pool_turned);
    double rot_err = 0.0;
    for (int i = 0; i < 3; ++i)
        rot_err = std::max(rot_err, std::abs(pool.psi[i] - pool_turned.psi[i]));
    if (rot_err > 1e-10 && ok) {
        ok = false;
        why = fmt("score changes by %.2e under rotation", rot_err);
    }

    // Same seed, same artifacts, byte for byte.
    AnalysisResult a = run_case("wavy_circle", 2, 60, 7, true);
    AnalysisResult b = run_case("wavy_circle", 2, 60, 7, true);
    bool same = history_csv_text(a.history) == history_csv_text(b.history)
        && ed_csv_text(a.ed) == ed_csv_text(b.ed);
    if (!same && ok) {
        ok = false;
        why = "repeated seed produced different artifact bytes";
    }

    report(8, ok,
           ok ? fmt("tree lookups match brute force (%d mismatches), radial sampler KS %.4f, "
                    "score rotation deviation %.1e, repeated-seed artifacts byte-identical",
                    mismatches, ks, rot_err)
              : "internal consistency: " + why);
}

// ---------------------------------------------------------------- check 9

void check_correlation_matching() {
    double g = underlying_gaussian_correlation(MarginalSpec::gumbel(0.0, 1.0),
                                               MarginalSpec::weibull(1.5, 1.0), -0.708);
    bool ok = std::abs(g - (-0.80)) <= 0.01;
    report(9, ok,
           fmt("gaussian correlation %.4f reproduces -0.80 +/- 0.01 for the "
               "gumbel/weibull pair at target -0.708", g));
}

}  // namespace

int main() {
    struct Check {
        int id;
        void (*fn)();
    };
    const Check checks[] = {
        {1, check_plan_table},
        {2, check_radial_cdf},
        {3, check_ring_estimator_truth},
        {4, check_end_to_end_medians},
        {5, check_clustered_underestimation},
        {6, check_sensitivities},
        {7, check_score_crossing},
        {8, check_internal_consistency},
        {9, check_correlation_matching},
    };
    for (const Check& c : checks) {
        try {
            c.fn();
        } catch (const std::exception& e) {
            report(c.id, false, fmt("unexpected exception: %s", e.what()));
        }
    }
    std::printf("%d of 9 checks passed\n", 9 - failures);
    return failures;
}
