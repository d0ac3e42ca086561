#pragma once

// Scalar special functions used by the radial-geometry and input-transform
// layers: regularized incomplete gamma P/Q with inverses, the standard
// normal cdf/quantile pair, and Gauss-Hermite rules.
//
// P and Q are evaluated separately (series vs. continued fraction) so that
// each keeps full relative precision on its own side of the distribution.
// Upper-tail work must go through Q; 1-P saturates near machine epsilon.

#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <vector>

namespace rarering {

namespace detail {

inline constexpr double pi = 3.141592653589793238462643383279502884;

// Series expansion of P(a,x), effective for x < a+1.
inline double gamma_p_series(double a, double x) {
    double ap = a;
    double sum = 1.0 / a;
    double del = sum;
    for (int n = 0; n < 500; ++n) {
        ap += 1.0;
        del *= x / ap;
        sum += del;
        if (std::fabs(del) < std::fabs(sum) * 1e-17) break;
    }
    return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Modified Lentz continued fraction for Q(a,x), effective for x >= a+1.
inline double gamma_q_cf(double a, double x) {
    constexpr double tiny = 1e-300;
    double b = x + 1.0 - a;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i <= 500; ++i) {
        double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
        b += 2.0;
        d = an * d + b;
        if (std::fabs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < 1e-16) break;
    }
    return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

} // namespace detail

// Regularized lower incomplete gamma P(a,x).
inline double gamma_p(double a, double x) {
    if (!(a > 0.0) || x < 0.0) throw std::domain_error("gamma_p: need a > 0, x >= 0");
    if (x == 0.0) return 0.0;
    if (x < a + 1.0) return detail::gamma_p_series(a, x);
    return 1.0 - detail::gamma_q_cf(a, x);
}

// Regularized upper incomplete gamma Q(a,x) = 1 - P(a,x).
inline double gamma_q(double a, double x) {
    if (!(a > 0.0) || x < 0.0) throw std::domain_error("gamma_q: need a > 0, x >= 0");
    if (x == 0.0) return 1.0;
    if (x < a + 1.0) return 1.0 - detail::gamma_p_series(a, x);
    return detail::gamma_q_cf(a, x);
}

namespace detail {

// Initial guess for the inverse of P, following the classic Halley scheme.
inline double gamma_p_inv_guess(double a, double p, double normal_quantile_of_p) {
    if (a > 1.0) {
        double z = normal_quantile_of_p;
        double t = 1.0 - 1.0 / (9.0 * a) + z / (3.0 * std::sqrt(a));
        double x = a * t * t * t;
        return x > 0.0 ? x : 1e-3;
    }
    double t = 1.0 - a * (0.253 + a * 0.12);
    if (p < t) return std::pow(p / t, 1.0 / a);
    return 1.0 - std::log1p(-(p - t) / (1.0 - t));
}

} // namespace detail

inline double normal_ppf(double p);

// Inverse of P(a,.) for p in [0,1). Newton with a maintained bracket; the
// bracket guarantees convergence where the Halley step misbehaves.
inline double gamma_p_inv(double a, double p) {
    if (!(a > 0.0)) throw std::domain_error("gamma_p_inv: need a > 0");
    if (p < 0.0 || p >= 1.0) {
        if (p == 1.0) return std::numeric_limits<double>::infinity();
        throw std::domain_error("gamma_p_inv: need p in [0,1]");
    }
    if (p == 0.0) return 0.0;
    double x = detail::gamma_p_inv_guess(a, p, normal_ppf(p));
    double lo = 0.0;
    double hi = std::numeric_limits<double>::infinity();
    double gln = std::lgamma(a);
    for (int it = 0; it < 200; ++it) {
        if (!(x > lo) || !(x < hi)) {
            x = std::isinf(hi) ? std::max(2.0 * lo, 1.0) : 0.5 * (lo + hi);
        }
        double err = gamma_p(a, x) - p;
        if (err > 0.0) hi = x; else lo = x;
        double logpdf = (a - 1.0) * std::log(x) - x - gln;
        double step = err * std::exp(-logpdf);
        double xn = x - step;
        if (std::fabs(step) <= 1e-14 * x) { x = xn > 0.0 ? xn : x; break; }
        x = xn;
        if (std::isfinite(hi) && hi - lo <= 1e-15 * hi) break;
    }
    return x;
}

// Inverse of Q(a,.) for q in (0,1]. For q >= 0.5 this is gamma_p_inv on the
// complement (exact in double for that range). For small q it solves
// log Q(a,x) = log q by safeguarded Newton, which keeps full relative
// precision down to q = 1e-300.
inline double gamma_q_inv(double a, double q) {
    if (!(a > 0.0)) throw std::domain_error("gamma_q_inv: need a > 0");
    if (!(q > 0.0) || q > 1.0) {
        if (q == 0.0) return std::numeric_limits<double>::infinity();
        throw std::domain_error("gamma_q_inv: need q in (0,1]");
    }
    if (q == 1.0) return 0.0;
    if (q >= 0.5) return gamma_p_inv(a, 1.0 - q);

    double logq = std::log(q);
    double gln = std::lgamma(a);
    // Wilson-Hilferty guess through the upper-tail normal quantile.
    double z = -normal_ppf(q);
    double t = 1.0 - 1.0 / (9.0 * a) + z / (3.0 * std::sqrt(a));
    double x = a * t * t * t;
    if (!(x > 0.0) || !std::isfinite(x)) x = a + z * std::sqrt(a);
    if (!(x > 0.0)) x = a;

    double lo = 0.0;
    double hi = std::numeric_limits<double>::infinity();
    for (int it = 0; it < 200; ++it) {
        if (!(x > lo) || !(x < hi)) {
            x = std::isinf(hi) ? std::max(2.0 * lo, a + 1.0) : 0.5 * (lo + hi);
        }
        double qq = gamma_q(a, x);
        double f = std::log(qq) - logq;   // decreasing in x
        if (f > 0.0) lo = x; else hi = x;
        // d/dx log Q = -pdf/Q with pdf = exp((a-1) log x - x - lgamma(a))
        double logpdf = (a - 1.0) * std::log(x) - x - gln;
        double deriv = -std::exp(logpdf - std::log(qq));
        double step = f / deriv;
        double xn = x - step;
        if (std::fabs(step) <= 1e-14 * x) { x = (xn > 0.0 && std::isfinite(xn)) ? xn : x; break; }
        x = xn;
        if (std::isfinite(hi) && hi - lo <= 1e-15 * hi) break;
    }
    return x;
}

// Standard normal cdf and survival function through erfc; both keep full
// relative precision in their respective tails.
inline double normal_cdf(double x) {
    return 0.5 * std::erfc(-x * 0.7071067811865475244);
}

inline double normal_sf(double x) {
    return 0.5 * std::erfc(x * 0.7071067811865475244);
}

// Standard normal quantile, Wichura's PPND16 rational approximations.
// Absolute accuracy about 1e-15 over (0,1), tails included.
inline double normal_ppf(double p) {
    if (!(p > 0.0) || !(p < 1.0)) {
        if (p == 0.0) return -std::numeric_limits<double>::infinity();
        if (p == 1.0) return std::numeric_limits<double>::infinity();
        throw std::domain_error("normal_ppf: need p in (0,1)");
    }
    double q = p - 0.5;
    if (std::fabs(q) <= 0.425) {
        double r = 0.180625 - q * q;
        double num = (((((((2.5090809287301226727e3 * r + 3.3430575583588128105e4) * r
                        + 6.7265770927008700853e4) * r + 4.5921953931549871457e4) * r
                        + 1.3731693765509461125e4) * r + 1.9715909503065514427e3) * r
                        + 1.3314166789178437745e2) * r + 3.3871328727963666080e0);
        double den = (((((((5.2264952788528545610e3 * r + 2.8729085735721942674e4) * r
                        + 3.9307895800092710610e4) * r + 2.1213794301586595867e4) * r
                        + 5.3941960214247511077e3) * r + 6.8718700749205790830e2) * r
                        + 4.2313330701600911252e1) * r + 1.0);
        return q * num / den;
    }
    double r = q < 0.0 ? p : 1.0 - p;
    r = std::sqrt(-std::log(r));
    double val;
    if (r <= 5.0) {
        r -= 1.6;
        double num = (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r
                        + 2.41780725177450611770e-1) * r + 1.27045825245236838258e0) * r
                        + 3.64784832476320460504e0) * r + 5.76949722146069140550e0) * r
                        + 4.63033784615654529590e0) * r + 1.42343711074968357734e0);
        double den = (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r
                        + 1.51986665636164571966e-2) * r + 1.48103976427480074590e-1) * r
                        + 6.89767334985100004550e-1) * r + 1.67638483018380384940e0) * r
                        + 2.05319162663775882187e0) * r + 1.0);
        val = num / den;
    } else {
        r -= 5.0;
        double num = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r
                        + 1.24266094738807843860e-3) * r + 2.65321895265761230930e-2) * r
                        + 2.96560571828504891230e-1) * r + 1.78482653991729133580e0) * r
                        + 5.46378491116411436990e0) * r + 6.65790464350110377720e0);
        double den = (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r
                        + 1.84631831751005468180e-5) * r + 7.86869131145613259100e-4) * r
                        + 1.48753612908506148525e-2) * r + 1.36929880922735805310e-1) * r
                        + 5.99832206555887937690e-1) * r + 1.0);
        val = num / den;
    }
    return q < 0.0 ? -val : val;
}

// Nodes and weights of the n-point Gauss-Hermite rule for weight exp(-t^2).
// Newton iteration on the orthonormal recurrence; stable up to n of a few
// hundred. For expectations under N(0,1) evaluate f(sqrt(2) t_i) with
// weights w_i / sqrt(pi).
struct GaussHermiteRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

inline GaussHermiteRule gauss_hermite(int n) {
    if (n < 1) throw std::invalid_argument("gauss_hermite: need n >= 1");
    GaussHermiteRule rule;
    rule.nodes.assign(n, 0.0);
    rule.weights.assign(n, 0.0);
    const double pim4 = 0.75112554446494248286;  // pi^(-1/4)
    int m = (n + 1) / 2;
    double z = 0.0;
    for (int i = 0; i < m; ++i) {
        if (i == 0) {
            z = std::sqrt(2.0 * n + 1.0) - 1.85575 * std::pow(2.0 * n + 1.0, -1.0 / 6.0);
        } else if (i == 1) {
            z -= 1.14 * std::pow(n, 0.426) / z;
        } else if (i == 2) {
            z = 1.86 * z - 0.86 * rule.nodes[0];
        } else if (i == 3) {
            z = 1.91 * z - 0.91 * rule.nodes[1];
        } else {
            z = 2.0 * z - rule.nodes[i - 2];
        }
        double pp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p1 = pim4;
            double p2 = 0.0;
            for (int j = 1; j <= n; ++j) {
                double p3 = p2;
                p2 = p1;
                p1 = z * std::sqrt(2.0 / j) * p2 - std::sqrt((j - 1.0) / j) * p3;
            }
            pp = p2 * std::sqrt(2.0 * n);
            double dz = p1 / pp;
            z -= dz;
            if (std::fabs(dz) < 1e-15) break;
        }
        rule.nodes[i] = z;
        rule.nodes[n - 1 - i] = -z;
        rule.weights[i] = 2.0 / (pp * pp);
        rule.weights[n - 1 - i] = rule.weights[i];
    }
    return rule;
}

} // namespace rarering
