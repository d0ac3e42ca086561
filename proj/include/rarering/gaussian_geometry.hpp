#pragma once

// Radial geometry of the standard Gaussian space in n_var dimensions.
//
// The Euclidean norm of a standard normal vector follows a chi distribution
// with n_var degrees of freedom; everything here is phrased through its
// cdf/quantile pair so that ball and annulus probability contents, sampling
// distances and tail radii share one consistent implementation. Tail radii
// are always computed through the upper-tail function, which stays exact
// for contents as small as 1e-300.

#include <cmath>
#include <stdexcept>
#include <string>

#include "rarering/special_functions.hpp"

namespace rarering {

// Dimension of the underlying standard Gaussian space.
struct SpaceDim {
    int n_var = 0;

    explicit SpaceDim(int n) : n_var(n) {
        if (n < 1) throw std::invalid_argument("SpaceDim: need n_var >= 1");
    }
    double half() const { return 0.5 * n_var; }
};

// Density of the radial distance at rho >= 0.
inline double chi_pdf(double rho, SpaceDim dim) {
    if (rho < 0.0) throw std::domain_error("chi_pdf: need rho >= 0");
    int n = dim.n_var;
    if (rho == 0.0) return n == 1 ? std::sqrt(2.0 / detail::pi) : 0.0;
    double log_pdf = (1.0 - 0.5 * n) * std::log(2.0) - std::lgamma(0.5 * n)
                   + (n - 1.0) * std::log(rho) - 0.5 * rho * rho;
    return std::exp(log_pdf);
}

// P(norm <= rho), the probability content of the centered ball of radius rho.
inline double chi_cdf(double rho, SpaceDim dim) {
    if (rho < 0.0) throw std::domain_error("chi_cdf: need rho >= 0");
    return gamma_p(dim.half(), 0.5 * rho * rho);
}

// P(norm > rho). Exact in the far tail where 1 - chi_cdf would round to 0.
inline double chi_sf(double rho, SpaceDim dim) {
    if (rho < 0.0) throw std::domain_error("chi_sf: need rho >= 0");
    return gamma_q(dim.half(), 0.5 * rho * rho);
}

// Quantile of the radial distance; p in [0,1). The upper half is routed
// through the survival inverse, where 1-p is still exact in double.
inline double chi_ppf(double p, SpaceDim dim) {
    if (p < 0.0 || p >= 1.0) throw std::domain_error("chi_ppf: need p in [0,1)");
    if (p == 0.0) return 0.0;
    double y = p <= 0.5 ? gamma_p_inv(dim.half(), p) : gamma_q_inv(dim.half(), 1.0 - p);
    return std::sqrt(2.0 * y);
}

// Radius whose exterior holds probability p_out; p_out in (0,1].
inline double radius_for_pout(double p_out, SpaceDim dim) {
    if (!(p_out > 0.0) || p_out > 1.0) throw std::domain_error("radius_for_pout: need p_out in (0,1]");
    if (p_out == 1.0) return 0.0;
    double y = p_out < 0.5 ? gamma_q_inv(dim.half(), p_out) : gamma_p_inv(dim.half(), 1.0 - p_out);
    return std::sqrt(2.0 * y);
}

// Centered ball with its interior/exterior probability contents.
struct BallSpec {
    double radius = 0.0;
    double prob_inside = 0.0;
    double prob_outside = 1.0;
};

inline BallSpec make_ball(double radius, SpaceDim dim) {
    if (radius < 0.0) throw std::invalid_argument("make_ball: need radius >= 0");
    BallSpec b;
    b.radius = radius;
    b.prob_outside = chi_sf(radius, dim);
    b.prob_inside = chi_cdf(radius, dim);
    return b;
}

// Centered annulus. prob_content is computed as a difference of survival
// values so that thin shells far out keep relative precision.
struct AnnulusSpec {
    double inner_radius = 0.0;
    double outer_radius = 0.0;
    double prob_inside_inner = 0.0;   // content of the inner ball
    double prob_inside_outer = 0.0;   // content of the outer ball
    double prob_content = 0.0;        // content of the annulus itself
};

inline AnnulusSpec make_annulus(double inner_radius, double outer_radius, SpaceDim dim) {
    if (inner_radius < 0.0 || !(outer_radius > inner_radius))
        throw std::invalid_argument("make_annulus: need 0 <= inner < outer");
    AnnulusSpec a;
    a.inner_radius = inner_radius;
    a.outer_radius = outer_radius;
    a.prob_inside_inner = chi_cdf(inner_radius, dim);
    a.prob_inside_outer = chi_cdf(outer_radius, dim);
    a.prob_content = chi_sf(inner_radius, dim) - chi_sf(outer_radius, dim);
    return a;
}

// Volume and surface of the n-ball of radius r.
inline double ball_volume(SpaceDim dim, double r) {
    if (r < 0.0) throw std::domain_error("ball_volume: need r >= 0");
    int n = dim.n_var;
    return std::exp(0.5 * n * std::log(detail::pi) + n * std::log(r) - std::lgamma(0.5 * n + 1.0));
}

inline double ball_surface(SpaceDim dim, double r) {
    if (!(r > 0.0)) throw std::domain_error("ball_surface: need r > 0");
    int n = dim.n_var;
    return 2.0 * std::exp(0.5 * n * std::log(detail::pi) + (n - 1.0) * std::log(r) - std::lgamma(0.5 * n));
}

// log of the standard Gaussian point density at distance rho from the
// origin. Exposed in log space; the value itself underflows near rho = 38
// in high dimensions while the log stays exact.
inline double point_log_density(double rho, SpaceDim dim) {
    if (rho < 0.0) throw std::domain_error("point_log_density: need rho >= 0");
    return -0.5 * dim.n_var * std::log(2.0 * detail::pi) - 0.5 * rho * rho;
}

// Moments of the radial distance. The mode is defined as 0 for n_var = 1;
// the median is the usual cube approximation, good to about 1% for
// n_var >= 3 (use chi_ppf(0.5,.) when the exact value matters).
struct RadialMoments {
    double mean = 0.0;
    double mode = 0.0;
    double median_approx = 0.0;
    double variance = 0.0;
};

inline RadialMoments radial_moments(SpaceDim dim) {
    int n = dim.n_var;
    RadialMoments m;
    m.mean = std::sqrt(2.0) * std::exp(std::lgamma(0.5 * (n + 1)) - std::lgamma(0.5 * n));
    m.mode = n >= 2 ? std::sqrt(n - 1.0) : 0.0;
    m.median_approx = std::sqrt(static_cast<double>(n)) * std::pow(1.0 - 2.0 / (9.0 * n), 1.5);
    m.variance = n - m.mean * m.mean;
    return m;
}

// Width used for Gaussian clouds thrown around design points: the mode of
// the radial law, with 1 in one dimension where the mode degenerates to 0.
inline double exploitation_sigma(SpaceDim dim) {
    return dim.n_var >= 2 ? std::sqrt(dim.n_var - 1.0) : 1.0;
}

// Distance of a point sampled outside the ball of the given radius, at
// sampling probability p in (0,1): the quantile of the radial law
// conditioned on the exterior. Computed through the survival inverse as
// radius_for_pout((1-p) * sf(r)), which avoids forming the near-1 cdf.
inline double exterior_distance(double p, double ball_radius, SpaceDim dim) {
    if (!(p > 0.0) || !(p < 1.0)) throw std::domain_error("exterior_distance: need p in (0,1)");
    if (ball_radius < 0.0) throw std::domain_error("exterior_distance: need radius >= 0");
    double q = (1.0 - p) * chi_sf(ball_radius, dim);
    return radius_for_pout(q, dim);
}

// Same conditioning restricted to an annulus: quantile of the radial law
// between inner and outer radius, for sampling probability p in (0,1).
inline double annulus_distance(double p, const AnnulusSpec& annulus, SpaceDim dim) {
    if (!(p > 0.0) || !(p < 1.0)) throw std::domain_error("annulus_distance: need p in (0,1)");
    double q_inner = chi_sf(annulus.inner_radius, dim);
    double q_outer = chi_sf(annulus.outer_radius, dim);
    double q = (1.0 - p) * q_inner + p * q_outer;
    return radius_for_pout(q, dim);
}

// Outer truncation radius for an estimation annulus: the radius beyond
// which only `fraction` of the current probability estimate remains.
inline double outer_radius_for_estimate(double p_estimate, SpaceDim dim, double fraction = 1e-4) {
    if (!(p_estimate > 0.0) || p_estimate > 1.0)
        throw std::domain_error("outer_radius_for_estimate: need p_estimate in (0,1]");
    if (!(fraction > 0.0) || !(fraction < 1.0))
        throw std::domain_error("outer_radius_for_estimate: need fraction in (0,1)");
    return radius_for_pout(p_estimate * fraction, dim);
}

// Radial law bundled with its dimension, convenient to pass around.
struct RadialDistribution {
    SpaceDim dim;

    explicit RadialDistribution(SpaceDim d) : dim(d) {}
    double pdf(double rho) const { return chi_pdf(rho, dim); }
    double cdf(double rho) const { return chi_cdf(rho, dim); }
    double sf(double rho) const { return chi_sf(rho, dim); }
    double ppf(double p) const { return chi_ppf(p, dim); }
    RadialMoments moments() const { return radial_moments(dim); }
};

} // namespace rarering
