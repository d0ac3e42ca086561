#pragma once

// Built-in analytic limit states with published reference solutions.
// Every evaluation returns the raw performance value together with a
// categorical event code; the adaptive driver consumes only the code.
// Failure is raw <= 0 for all functions except black_swan, whose
// defining condition is strict (raw < 0).

#include <cmath>
#include <functional>
#include <initializer_list>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "rarering/classifier.hpp"
#include "rarering/gaussian_geometry.hpp"
#include "rarering/input_transform.hpp"
#include "rarering/points.hpp"
#include "rarering/special_functions.hpp"

namespace rarering {

struct EvalOutcome {
    double raw = 0.0;
    int code = label_safe;
};

struct BenchmarkReference {
    // Exact or large-sample failure probability. For dimension-flexible
    // functions the value comes from p_f_of_dim instead.
    double p_f = std::numeric_limits<double>::quiet_NaN();
    std::function<double(int)> p_f_of_dim;
    PointBlock design_points;
    std::vector<double> s_squared;
    std::string notes;

    double p_f_for(int dim) const {
        return p_f_of_dim ? p_f_of_dim(dim) : p_f;
    }
};

struct Benchmark {
    std::string name;
    int fixed_dim = 0;  // 0 means any dimension >= 1 is accepted
    std::function<EvalOutcome(std::span<const double>)> evaluate;
    BenchmarkReference reference;

    bool accepts_dim(int dim) const {
        return fixed_dim == 0 ? dim >= 1 : dim == fixed_dim;
    }
};

// Raw performance formulas, exposed separately so tests can probe them
// without going through the registry.

inline double wavy_circle_g(double x1, double x2) {
    // Sine wave of amplitude 1 superposed onto a circle of mean radius 4.
    // The angle is taken as 0 at the origin, where g is positive anyway.
    double r = std::sqrt(x1 * x1 + x2 * x2);
    double phi = (r == 0.0) ? 0.0 : std::atan2(x2, x1);
    return 4.0 + std::sin(7.0 * phi) - r;
}

inline double wavy_line_g(double x1, double x2) {
    return -0.25 * x1 - x2 + std::sin(5.0 * x1) + 5.5;
}

inline double metaballs_g(double x1, double x2) {
    double a = 4.0 * (x1 + 2.0) * (x1 + 2.0) / 9.0 + x2 * x2 / 25.0;
    double b = (x1 - 2.5) * (x1 - 2.5) / 4.0 + (x2 - 0.5) * (x2 - 0.5) / 25.0;
    return 30.0 / (a * a + 1.0) + 20.0 / (b * b + 1.0) - 5.0;
}

inline double four_branch_g(double x1, double x2) {
    const double inv_sqrt2 = 0.70710678118654752440;
    double d = x1 - x2;
    double s = (x1 + x2) * inv_sqrt2;
    double quad = 3.0 + 0.1 * d * d;
    double g = quad - s;
    g = std::min(g, quad + s);
    g = std::min(g, d + 7.0 * inv_sqrt2);
    g = std::min(g, -d + 7.0 * inv_sqrt2);
    return g;
}

inline double black_swan_g(double x1, double x2) {
    // Failure needs both thresholds exceeded: x1 > 2 and x2 > 5.
    return (x1 <= 2.0) ? 5.0 - x1 : 5.0 - x2;
}

inline double rastrigin_g(double x1, double x2) {
    const double two_pi = 2.0 * detail::pi;
    return 10.0 - (x1 * x1 - 5.0 * std::cos(two_pi * x1))
                - (x2 * x2 - 5.0 * std::cos(two_pi * x2));
}

inline double alternating_g(double x1) {
    return std::cos(x1 * std::exp(-x1 - 4.0));
}

inline constexpr double linear_beta = 4.7534243;

inline double linear_g(std::span<const double> x) {
    return linear_beta - x[0];
}

inline double ball_exterior_g(std::span<const double> x, double radius = 2.5) {
    double s = 0.0;
    for (double v : x) s += v * v;
    return radius - std::sqrt(s);
}

inline double quartic_g(double x1, double x2) {
    return 3.0 - x1 * x1 * x1 * x1 / 33.0 - x2;
}

// Boundary abscissas of the alternating-domains function. b_k solves
// (2k+1)*pi = -2*b*exp(-b-4); with t = -b the left side becomes
// t*exp(t-4) = (2k+1)*pi/2, which is strictly increasing for t > 0.
inline double alternating_boundary(int k) {
    if (k < 0) throw std::invalid_argument("alternating_boundary: need k >= 0");
    double target = (2.0 * k + 1.0) * detail::pi / 2.0;
    double lo = 0.0, hi = 60.0;
    for (int it = 0; it < 200; ++it) {
        double mid = 0.5 * (lo + hi);
        double val = mid * std::exp(mid - 4.0);
        if (val < target) lo = mid; else hi = mid;
        if (hi - lo < 1e-14 * (1.0 + hi)) break;
    }
    return -0.5 * (lo + hi);
}

// Exact failure probability of the alternating-domains function as the
// alternating series sum_k (-1)^k Phi(b_k). The truncation error is
// bounded by the first omitted term.
inline double alternating_pf(double term_floor = 1e-18) {
    double sum = 0.0;
    double sign = 1.0;
    for (int k = 0; k < 2000; ++k) {
        double term = normal_cdf(alternating_boundary(k));
        sum += sign * term;
        sign = -sign;
        if (term < term_floor) break;
    }
    return sum;
}

namespace detail {

inline PointBlock points2(std::initializer_list<std::pair<double, double>> pts) {
    PointBlock out(2);
    for (const auto& p : pts) {
        double* row = out.append_row();
        row[0] = p.first;
        row[1] = p.second;
    }
    return out;
}

inline EvalOutcome outcome_leq(double raw) {
    return {raw, raw <= 0.0 ? label_failure : label_safe};
}

inline EvalOutcome outcome_strict(double raw) {
    return {raw, raw < 0.0 ? label_failure : label_safe};
}

inline void require_dim(std::span<const double> x, int dim) {
    if (static_cast<int>(x.size()) != dim)
        throw std::invalid_argument("benchmark: dimension mismatch");
}

inline const NatafModel& nataf_benchmark_model() {
    static const NatafModel model(
        {MarginalSpec::gumbel(0.0, 1.0), MarginalSpec::weibull(1.5, 1.0)},
        {1.0, -0.8, -0.8, 1.0});
    return model;
}

inline std::vector<Benchmark> build_registry() {
    std::vector<Benchmark> reg;

    {
        Benchmark b;
        b.name = "wavy_circle";
        b.fixed_dim = 2;
        b.evaluate = [](std::span<const double> x) {
            require_dim(x, 2);
            return outcome_leq(wavy_circle_g(x[0], x[1]));
        };
        b.reference.p_f = 2.582e-3;
        b.reference.s_squared = {0.5, 0.5};
        PointBlock dp(2);
        for (int k = 0; k < 7; ++k) {
            double theta = (-0.5 * pi + 2.0 * pi * k) / 7.0;
            double* row = dp.append_row();
            row[0] = 3.0 * std::cos(theta);
            row[1] = 3.0 * std::sin(theta);
        }
        b.reference.design_points = std::move(dp);
        b.reference.notes = "seven design points on the circle of radius 3";
        reg.push_back(std::move(b));
    }
    {
        Benchmark b;
        b.name = "wavy_line";
        b.fixed_dim = 2;
        b.evaluate = [](std::span<const double> x) {
            require_dim(x, 2);
            return outcome_leq(wavy_line_g(x[0], x[1]));
        };
        b.reference.p_f = 1.217e-6;
        b.reference.s_squared = {0.829, 0.171};
        b.reference.design_points = points2({{0.943626, 4.26411}});
        b.reference.notes = "sine boundary on a sloped line; disjoint failure pockets";
        reg.push_back(std::move(b));
    }
    {
        Benchmark b;
        b.name = "metaballs";
        b.fixed_dim = 2;
        b.evaluate = [](std::span<const double> x) {
            require_dim(x, 2);
            return outcome_leq(metaballs_g(x[0], x[1]));
        };
        b.reference.p_f = 1.12857e-5;
        b.reference.s_squared = {0.994, 0.006};
        b.reference.design_points = points2({{-4.26376, -0.00067},
                                             {5.1265, -0.2256},
                                             {0.399, -5.241},
                                             {0.201, 5.895}});
        b.reference.notes = "failure outside two overlapping influence bumps";
        reg.push_back(std::move(b));
    }
    {
        Benchmark b;
        b.name = "four_branch";
        b.fixed_dim = 2;
        b.evaluate = [](std::span<const double> x) {
            require_dim(x, 2);
            return outcome_leq(four_branch_g(x[0], x[1]));
        };
        b.reference.p_f = 2.222e-3;
        b.reference.s_squared = {0.5, 0.5};
        const double q = 3.0 * std::sqrt(2.0) / 2.0;
        const double w = 7.0 * std::sqrt(2.0) / 4.0;
        b.reference.design_points = points2({{q, q}, {-q, -q}, {w, -w}, {-w, w}});
        b.reference.notes = "series system with four branches; constant 7 variant";
        reg.push_back(std::move(b));
    }
    {
        Benchmark b;
        b.name = "black_swan";
        b.fixed_dim = 2;
        b.evaluate = [](std::span<const double> x) {
            require_dim(x, 2);
            return outcome_strict(black_swan_g(x[0], x[1]));
        };
        b.reference.p_f = normal_sf(5.0) * normal_sf(2.0);
        b.reference.s_squared = {0.3189, 0.6811};
        b.reference.design_points = points2({{2.0, 5.0}});
        b.reference.notes = "failure iff x1 > 2 and x2 > 5; exact Phi(-5)*Phi(-2)";
        reg.push_back(std::move(b));
    }
    {
        Benchmark b;
        b.name = "rastrigin";
        b.fixed_dim = 2;
        b.evaluate = [](std::span<const double> x) {
            require_dim(x, 2);
            return outcome_leq(rastrigin_g(x[0], x[1]));
        };
        b.reference.p_f = 0.072986;
        b.reference.s_squared = {0.5, 0.5};
        b.reference.notes = "twenty closed failure pockets plus one open region; "
                            "nearest-neighbor runs are expected to underestimate";
        reg.push_back(std::move(b));
    }
    {
        Benchmark b;
        b.name = "alternating";
        b.fixed_dim = 2;
        b.evaluate = [](std::span<const double> x) {
            require_dim(x, 2);
            return outcome_leq(alternating_g(x[0]));
        };
        b.reference.p_f = 5.266e-4;
        b.reference.s_squared = {1.0, 0.0};
        b.reference.design_points = points2({{alternating_boundary(0), 0.0}});
        b.reference.notes = "parallel failure strips along x1 only";
        reg.push_back(std::move(b));
    }
    {
        Benchmark b;
        b.name = "nataf";
        b.fixed_dim = 2;
        b.evaluate = [](std::span<const double> x) {
            require_dim(x, 2);
            std::vector<double> z = nataf_benchmark_model().to_physical(x);
            return outcome_leq(7.0 - z[0] - 2.0 * z[1]);
        };
        b.reference.p_f = 1.143e-3;
        b.reference.notes = "g = 7 - z1 - 2 z2 with Gumbel(0,1) and Weibull(shape 1.5, "
                            "scale 1) marginals, underlying Gaussian correlation -0.8; "
                            "evaluated in standard Gaussian coordinates";
        reg.push_back(std::move(b));
    }
    {
        Benchmark b;
        b.name = "linear";
        b.fixed_dim = 0;
        b.evaluate = [](std::span<const double> x) {
            if (x.empty()) throw std::invalid_argument("benchmark: dimension mismatch");
            return outcome_leq(linear_g(x));
        };
        b.reference.p_f_of_dim = [](int) { return normal_cdf(-linear_beta); };
        b.reference.design_points = points2({{linear_beta, 0.0}});
        b.reference.notes = "g = beta - x1 in any dimension; exact Phi(-beta) = 1e-6";
        reg.push_back(std::move(b));
    }
    {
        Benchmark b;
        b.name = "ball_exterior";
        b.fixed_dim = 0;
        b.evaluate = [](std::span<const double> x) {
            if (x.empty()) throw std::invalid_argument("benchmark: dimension mismatch");
            return outcome_leq(ball_exterior_g(x));
        };
        b.reference.p_f_of_dim = [](int dim) { return chi_sf(2.5, SpaceDim{dim}); };
        b.reference.notes = "failure outside the ball of radius 2.5; rotationally "
                            "symmetric, so every direction share is 1/dim";
        reg.push_back(std::move(b));
    }

    return reg;
}

}  // namespace detail

inline const std::vector<Benchmark>& benchmark_registry() {
    static const std::vector<Benchmark> reg = detail::build_registry();
    return reg;
}

inline std::vector<std::string> benchmark_names() {
    std::vector<std::string> names;
    for (const Benchmark& b : benchmark_registry()) names.push_back(b.name);
    return names;
}

inline const Benchmark& find_benchmark(const std::string& name) {
    for (const Benchmark& b : benchmark_registry())
        if (b.name == name) return b;
    std::string msg = "unknown benchmark '" + name + "'; available:";
    for (const Benchmark& b : benchmark_registry()) msg += " " + b.name;
    throw std::invalid_argument(msg);
}

inline EvalOutcome evaluate_benchmark(const std::string& name, std::span<const double> x) {
    return find_benchmark(name).evaluate(x);
}

inline const BenchmarkReference& reference_solution(const std::string& name) {
    return find_benchmark(name).reference;
}

// Copy whose evaluations carry the label only. Proves the driver needs no
// numeric output from the performance function.
inline Benchmark binary_only(const Benchmark& b) {
    Benchmark out = b;
    auto inner = b.evaluate;
    out.evaluate = [inner](std::span<const double> x) {
        EvalOutcome o = inner(x);
        return EvalOutcome{std::numeric_limits<double>::quiet_NaN(), o.code};
    };
    return out;
}

// Sensitivity illustration fixture: a quartic valley with a unique design
// point at (0, 3) yet broad failure wings. Not part of the registry.
inline Benchmark quartic_fixture() {
    Benchmark b;
    b.name = "quartic";
    b.fixed_dim = 2;
    b.evaluate = [](std::span<const double> x) {
        detail::require_dim(x, 2);
        return detail::outcome_leq(quartic_g(x[0], x[1]));
    };
    b.reference.s_squared = {0.57, 0.43};
    b.reference.design_points = detail::points2({{0.0, 3.0}});
    b.reference.notes = "sensitivity fixture only";
    return b;
}

// Independent recomputation of failure probabilities, used to validate the
// stored references. Two-dimensional functions are integrated by polar ray
// quadrature: each ray is scanned for indicator flips, every flip is
// sharpened by bisection, and the failing radial segments are accumulated
// through the chi survival function. Closed forms and series are used where
// available.

struct OracleSettings {
    int n_theta = 2048;
    double scan_step = 0.005;
    double r_max = 0.0;  // 0: radius holding all but 1e-16 of the mass
    int bisect_iters = 60;
};

namespace detail {

inline double ray_failure_content(const std::function<bool(double)>& fails_at,
                                  double r_max, double scan_step, int bisect_iters) {
    const SpaceDim dim{2};
    double content = 0.0;
    double seg_start = 0.0;   // start radius of an open failing segment
    double prev = 1e-12;
    bool prev_state = fails_at(prev);
    for (double r = scan_step; prev < r_max; r += scan_step) {
        if (r > r_max) r = r_max;
        bool state = fails_at(r);
        if (state != prev_state) {
            double lo = prev, hi = r;
            for (int it = 0; it < bisect_iters; ++it) {
                double mid = 0.5 * (lo + hi);
                if (fails_at(mid) == prev_state) lo = mid; else hi = mid;
            }
            double crossing = 0.5 * (lo + hi);
            if (prev_state)
                content += chi_sf(seg_start, dim) - chi_sf(crossing, dim);
            else
                seg_start = crossing;
            prev_state = state;
        }
        prev = r;
    }
    if (prev_state) content += chi_sf(seg_start, dim);
    return content;
}

}  // namespace detail

inline double oracle_pf(const Benchmark& b, int dim = 0, OracleSettings settings = {}) {
    if (dim == 0) dim = (b.fixed_dim == 0) ? 2 : b.fixed_dim;
    if (!b.accepts_dim(dim))
        throw std::invalid_argument("oracle_pf: dimension not accepted by " + b.name);
    if (b.name == "linear") return normal_cdf(-linear_beta);
    if (b.name == "black_swan") return normal_sf(5.0) * normal_sf(2.0);
    if (b.name == "alternating") return alternating_pf();
    if (b.name == "ball_exterior") return chi_sf(2.5, SpaceDim{dim});
    if (dim != 2)
        throw std::invalid_argument("oracle_pf: no oracle for " + b.name +
                                    " outside two dimensions");
    double r_max = settings.r_max > 0.0
                       ? settings.r_max
                       : radius_for_pout(1e-16, SpaceDim{2});
    double sum = 0.0;
    for (int j = 0; j < settings.n_theta; ++j) {
        double theta = 2.0 * detail::pi * (j + 0.5) / settings.n_theta;
        double ux = std::cos(theta), uy = std::sin(theta);
        auto fails_at = [&](double r) {
            double p[2] = {r * ux, r * uy};
            return b.evaluate(std::span<const double>(p, 2)).code == label_failure;
        };
        sum += detail::ray_failure_content(fails_at, r_max, settings.scan_step,
                                           settings.bisect_iters);
    }
    return sum / settings.n_theta;
}

inline double oracle_pf(const std::string& name, int dim = 0, OracleSettings settings = {}) {
    return oracle_pf(find_benchmark(name), dim, settings);
}

}  // namespace rarering
