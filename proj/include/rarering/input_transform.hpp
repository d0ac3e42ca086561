#pragma once

// Isoprobabilistic transform from independent standard Gaussian space to
// correlated physical variables (Gaussian-copula construction).
//
// Coloring: x_c = E sqrt(L) x with E, L the eigenvectors/values of the
// underlying Gaussian correlation matrix (eigenvalues descending, each
// vector's first nonzero component positive). Marginals: memoryless map
// z_v = F_v^-1(Phi(x_c,v)) per coordinate, evaluated through tail-stable
// cdf branches. The underlying correlation for a target Pearson
// correlation of the physical pair is solved by bisection on a 2-D
// Gauss-Hermite evaluation of the moment integral.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "rarering/special_functions.hpp"

namespace rarering {

enum class MarginalKind : std::uint8_t { std_normal = 0, gumbel_max = 1, weibull_min = 2 };

struct MarginalSpec {
    MarginalKind kind = MarginalKind::std_normal;
    double location = 0.0;   // gumbel location
    double scale = 1.0;      // gumbel/weibull scale
    double shape = 1.0;      // weibull shape

    static MarginalSpec standard_normal() { return {}; }
    static MarginalSpec gumbel(double location, double scale) {
        if (!(scale > 0.0)) throw std::invalid_argument("gumbel: need scale > 0");
        return {MarginalKind::gumbel_max, location, scale, 1.0};
    }
    static MarginalSpec weibull(double shape, double scale) {
        if (!(scale > 0.0) || !(shape > 0.0))
            throw std::invalid_argument("weibull: need shape, scale > 0");
        return {MarginalKind::weibull_min, 0.0, scale, shape};
    }
};

namespace detail {

// -log F(x) and -log(1 - F(x)) for the standard normal, full precision in
// both tails.
inline double neg_log_normal_cdf(double x) {
    double p = normal_cdf(x);
    if (p < 0.5) return -std::log(p);
    return -std::log1p(-normal_sf(x));
}
inline double neg_log_normal_sf(double x) {
    double q = normal_sf(x);
    if (q < 0.5) return -std::log(q);
    return -std::log1p(-normal_cdf(x));
}

} // namespace detail

// Physical quantile at probability Phi(x); x is a standard Gaussian
// coordinate, clamped to |x| <= 8.5 (the map saturates there; Phi is
// within 1e-17 of the boundary anyway).
inline double marginal_from_gaussian(const MarginalSpec& m, double x) {
    if (x > 8.5) x = 8.5;
    if (x < -8.5) x = -8.5;
    switch (m.kind) {
        case MarginalKind::std_normal:
            return x;
        case MarginalKind::gumbel_max:
            // F(z) = exp(-exp(-(z - loc)/scale)): z = loc - scale log(-log p)
            return m.location - m.scale * std::log(detail::neg_log_normal_cdf(x));
        case MarginalKind::weibull_min:
            // F(z) = 1 - exp(-(z/scale)^shape): z = scale (-log(1-p))^(1/shape)
            return m.scale * std::pow(detail::neg_log_normal_sf(x), 1.0 / m.shape);
    }
    throw std::logic_error("marginal_from_gaussian: bad kind");
}

inline double marginal_cdf(const MarginalSpec& m, double z) {
    switch (m.kind) {
        case MarginalKind::std_normal:
            return normal_cdf(z);
        case MarginalKind::gumbel_max:
            return std::exp(-std::exp(-(z - m.location) / m.scale));
        case MarginalKind::weibull_min:
            if (z <= 0.0) return 0.0;
            return -std::expm1(-std::pow(z / m.scale, m.shape));
    }
    throw std::logic_error("marginal_cdf: bad kind");
}

// Symmetric eigendecomposition by cyclic Jacobi rotations. Eigenvalues
// returned descending; each eigenvector (column k of `vectors`, stored
// row-major vectors[v * n + k]) has its first nonzero component positive.
struct SymmetricEigen {
    std::vector<double> values;
    std::vector<double> vectors;
};

inline SymmetricEigen jacobi_eigen_sym(std::vector<double> a, int n) {
    if (n < 1 || static_cast<int>(a.size()) != n * n)
        throw std::invalid_argument("jacobi_eigen_sym: bad size");
    std::vector<double> v(static_cast<std::size_t>(n) * n, 0.0);
    for (int i = 0; i < n; ++i) v[static_cast<std::size_t>(i) * n + i] = 1.0;

    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (int p = 0; p < n; ++p)
            for (int q = p + 1; q < n; ++q)
                off += a[static_cast<std::size_t>(p) * n + q] * a[static_cast<std::size_t>(p) * n + q];
        if (off < 1e-26) break;
        for (int p = 0; p < n; ++p) {
            for (int q = p + 1; q < n; ++q) {
                double apq = a[static_cast<std::size_t>(p) * n + q];
                if (std::fabs(apq) < 1e-300) continue;
                double app = a[static_cast<std::size_t>(p) * n + p];
                double aqq = a[static_cast<std::size_t>(q) * n + q];
                double theta = 0.5 * (aqq - app) / apq;
                double t = (theta >= 0.0 ? 1.0 : -1.0)
                         / (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
                double c = 1.0 / std::sqrt(t * t + 1.0);
                double s = t * c;
                for (int k = 0; k < n; ++k) {
                    double akp = a[static_cast<std::size_t>(k) * n + p];
                    double akq = a[static_cast<std::size_t>(k) * n + q];
                    a[static_cast<std::size_t>(k) * n + p] = c * akp - s * akq;
                    a[static_cast<std::size_t>(k) * n + q] = s * akp + c * akq;
                }
                for (int k = 0; k < n; ++k) {
                    double apk = a[static_cast<std::size_t>(p) * n + k];
                    double aqk = a[static_cast<std::size_t>(q) * n + k];
                    a[static_cast<std::size_t>(p) * n + k] = c * apk - s * aqk;
                    a[static_cast<std::size_t>(q) * n + k] = s * apk + c * aqk;
                }
                for (int k = 0; k < n; ++k) {
                    double vkp = v[static_cast<std::size_t>(k) * n + p];
                    double vkq = v[static_cast<std::size_t>(k) * n + q];
                    v[static_cast<std::size_t>(k) * n + p] = c * vkp - s * vkq;
                    v[static_cast<std::size_t>(k) * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }

    std::vector<int> order(n);
    for (int i = 0; i < n; ++i) order[i] = i;
    std::vector<double> diag(n);
    for (int i = 0; i < n; ++i) diag[i] = a[static_cast<std::size_t>(i) * n + i];
    std::sort(order.begin(), order.end(), [&](int x, int y) {
        if (diag[x] != diag[y]) return diag[x] > diag[y];
        return x < y;
    });

    SymmetricEigen out;
    out.values.resize(n);
    out.vectors.assign(static_cast<std::size_t>(n) * n, 0.0);
    for (int k = 0; k < n; ++k) {
        int src = order[k];
        out.values[k] = diag[src];
        double sign = 0.0;
        for (int i = 0; i < n; ++i) {
            double val = v[static_cast<std::size_t>(i) * n + src];
            if (sign == 0.0 && std::fabs(val) > 1e-12) sign = val > 0.0 ? 1.0 : -1.0;
        }
        if (sign == 0.0) sign = 1.0;
        for (int i = 0; i < n; ++i)
            out.vectors[static_cast<std::size_t>(i) * n + k] =
                sign * v[static_cast<std::size_t>(i) * n + src];
    }
    return out;
}

class NatafModel {
public:
    NatafModel(std::vector<MarginalSpec> marginals, std::vector<double> gaussian_correlation)
        : marginals_(std::move(marginals)), corr_(std::move(gaussian_correlation)) {
        n_ = static_cast<int>(marginals_.size());
        if (n_ < 1) throw std::invalid_argument("NatafModel: need >= 1 marginal");
        if (static_cast<int>(corr_.size()) != n_ * n_)
            throw std::invalid_argument("NatafModel: correlation size mismatch");
        for (int i = 0; i < n_; ++i) {
            if (std::fabs(corr_[static_cast<std::size_t>(i) * n_ + i] - 1.0) > 1e-12)
                throw std::invalid_argument("NatafModel: unit diagonal required");
            for (int j = 0; j < n_; ++j)
                if (std::fabs(corr_[static_cast<std::size_t>(i) * n_ + j]
                            - corr_[static_cast<std::size_t>(j) * n_ + i]) > 1e-12)
                    throw std::invalid_argument("NatafModel: correlation must be symmetric");
        }
        eigen_ = jacobi_eigen_sym(corr_, n_);
        for (double lam : eigen_.values)
            if (!(lam > 1e-12))
                throw std::invalid_argument("NatafModel: correlation not positive definite");
        color_.assign(static_cast<std::size_t>(n_) * n_, 0.0);
        for (int i = 0; i < n_; ++i)
            for (int k = 0; k < n_; ++k)
                color_[static_cast<std::size_t>(i) * n_ + k] =
                    eigen_.vectors[static_cast<std::size_t>(i) * n_ + k] * std::sqrt(eigen_.values[k]);
    }

    int dim() const { return n_; }
    const std::vector<MarginalSpec>& marginals() const { return marginals_; }
    const std::vector<double>& gaussian_correlation() const { return corr_; }
    const SymmetricEigen& eigen() const { return eigen_; }

    // Correlated Gaussian coordinates from independent standard ones.
    std::vector<double> color(std::span<const double> x) const {
        if (static_cast<int>(x.size()) != n_) throw std::invalid_argument("color: dim mismatch");
        std::vector<double> out(n_, 0.0);
        for (int i = 0; i < n_; ++i) {
            double s = 0.0;
            for (int k = 0; k < n_; ++k)
                s += color_[static_cast<std::size_t>(i) * n_ + k] * x[k];
            out[i] = s;
        }
        return out;
    }

    // Physical coordinates from independent standard Gaussian input.
    std::vector<double> to_physical(std::span<const double> x) const {
        std::vector<double> c = color(x);
        for (int i = 0; i < n_; ++i) c[i] = marginal_from_gaussian(marginals_[i], c[i]);
        return c;
    }

private:
    int n_ = 0;
    std::vector<MarginalSpec> marginals_;
    std::vector<double> corr_;
    SymmetricEigen eigen_;
    std::vector<double> color_;
};

// Per-coordinate marginal map of already-colored Gaussian coordinates.
inline std::vector<double> marginal_map(const std::vector<MarginalSpec>& marginals,
                                        std::span<const double> colored) {
    if (marginals.size() != colored.size()) throw std::invalid_argument("marginal_map: dim mismatch");
    std::vector<double> out(colored.size());
    for (std::size_t i = 0; i < colored.size(); ++i)
        out[i] = marginal_from_gaussian(marginals[i], colored[i]);
    return out;
}

namespace detail {

struct MarginalGaussStats {
    double mean = 0.0;
    double sd = 1.0;
};

// Mean and standard deviation of F^-1(Phi(T)), T standard normal, by
// Gauss-Hermite quadrature.
inline MarginalGaussStats marginal_stats(const MarginalSpec& m, const GaussHermiteRule& rule) {
    const double inv_sqrt_pi = 0.5641895835477562869;
    double mean = 0.0, second = 0.0;
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
        double t = rule.nodes[i] * std::sqrt(2.0);
        double z = marginal_from_gaussian(m, t);
        mean += rule.weights[i] * inv_sqrt_pi * z;
        second += rule.weights[i] * inv_sqrt_pi * z * z;
    }
    MarginalGaussStats s;
    s.mean = mean;
    double var = second - mean * mean;
    s.sd = var > 0.0 ? std::sqrt(var) : 0.0;
    return s;
}

// Pearson correlation of the mapped pair when the underlying Gaussian
// pair has correlation rho.
inline double mapped_pearson(const MarginalSpec& a, const MarginalSpec& b, double rho,
                             const GaussHermiteRule& rule,
                             const MarginalGaussStats& sa, const MarginalGaussStats& sb) {
    const double inv_pi = 1.0 / pi;
    double cross = 0.0;
    double root = std::sqrt(std::max(0.0, 1.0 - rho * rho));
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
        double t1 = rule.nodes[i] * std::sqrt(2.0);
        double za = marginal_from_gaussian(a, t1);
        double wi = rule.weights[i];
        for (std::size_t j = 0; j < rule.nodes.size(); ++j) {
            double t2 = rho * t1 + root * rule.nodes[j] * std::sqrt(2.0);
            double zb = marginal_from_gaussian(b, t2);
            cross += wi * rule.weights[j] * inv_pi * za * zb;
        }
    }
    if (!(sa.sd > 0.0) || !(sb.sd > 0.0))
        throw std::domain_error("mapped_pearson: degenerate marginal");
    return (cross - sa.mean * sb.mean) / (sa.sd * sb.sd);
}

} // namespace detail

// Underlying Gaussian correlation producing the requested Pearson
// correlation of the mapped pair. Bisection to `tol`; throws when the
// target lies outside the attainable range.
inline double underlying_gaussian_correlation(const MarginalSpec& a, const MarginalSpec& b,
                                              double target_pearson, int gh_order = 64,
                                              double tol = 1e-4) {
    if (!(std::fabs(target_pearson) < 1.0) && target_pearson != 0.0)
        throw std::domain_error("underlying_gaussian_correlation: need |target| < 1");
    GaussHermiteRule rule = gauss_hermite(gh_order);
    auto sa = detail::marginal_stats(a, rule);
    auto sb = detail::marginal_stats(b, rule);
    double lo = -1.0 + 1e-9, hi = 1.0 - 1e-9;
    double flo = detail::mapped_pearson(a, b, lo, rule, sa, sb) - target_pearson;
    double fhi = detail::mapped_pearson(a, b, hi, rule, sa, sb) - target_pearson;
    if (flo > 0.0 || fhi < 0.0)
        throw std::domain_error("underlying_gaussian_correlation: target not attainable");
    // The moment integral is increasing in rho.
    while (hi - lo > tol) {
        double mid = 0.5 * (lo + hi);
        double fm = detail::mapped_pearson(a, b, mid, rule, sa, sb) - target_pearson;
        if (fm < 0.0) lo = mid; else hi = mid;
    }
    return 0.5 * (lo + hi);
}

} // namespace rarering
