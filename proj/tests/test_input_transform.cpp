#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "rarering/input_transform.hpp"
#include "rarering/rng.hpp"

using namespace rarering;

TEST_CASE("marginal maps send the Gaussian median to the physical median") {
    MarginalSpec g = MarginalSpec::gumbel(0.0, 1.0);
    MarginalSpec w = MarginalSpec::weibull(1.5, 1.0);
    MarginalSpec n = MarginalSpec::standard_normal();

    REQUIRE(marginal_from_gaussian(g, 0.0)
            == Catch::Approx(-std::log(std::log(2.0))).epsilon(1e-12));
    REQUIRE(marginal_from_gaussian(g, 0.0) == Catch::Approx(0.36651).margin(1e-5));
    REQUIRE(marginal_from_gaussian(w, 0.0)
            == Catch::Approx(std::pow(std::log(2.0), 2.0 / 3.0)).epsilon(1e-12));
    REQUIRE(marginal_from_gaussian(w, 0.0) == Catch::Approx(0.78322).margin(1e-5));
    REQUIRE(marginal_from_gaussian(n, 1.7) == 1.7);
    REQUIRE(marginal_from_gaussian(n, -0.3) == -0.3);
}

TEST_CASE("marginal cdf inverts the Gaussian-to-physical map in both tails") {
    std::vector<MarginalSpec> specs{
        MarginalSpec::standard_normal(),
        MarginalSpec::gumbel(0.0, 1.0),
        MarginalSpec::gumbel(-2.0, 0.5),
        MarginalSpec::weibull(1.5, 1.0),
        MarginalSpec::weibull(0.8, 3.0),
    };
    for (const auto& m : specs) {
        double prev = -std::numeric_limits<double>::infinity();
        for (double x = -6.0; x <= 6.0; x += 0.25) {
            double z = marginal_from_gaussian(m, x);
            REQUIRE(z > prev);
            prev = z;
            REQUIRE(marginal_cdf(m, z) == Catch::Approx(normal_cdf(x)).epsilon(1e-12));
        }
    }
    // The map saturates at |x| = 8.5.
    MarginalSpec g = MarginalSpec::gumbel(0.0, 1.0);
    REQUIRE(marginal_from_gaussian(g, 9.0) == marginal_from_gaussian(g, 8.5));
    REQUIRE(marginal_from_gaussian(g, -12.0) == marginal_from_gaussian(g, -8.5));

    REQUIRE_THROWS_AS(MarginalSpec::gumbel(0.0, 0.0), std::invalid_argument);
    REQUIRE_THROWS_AS(MarginalSpec::weibull(-1.0, 1.0), std::invalid_argument);
}

TEST_CASE("jacobi eigendecomposition matches the closed two-by-two form") {
    SymmetricEigen e = jacobi_eigen_sym({1.0, -0.8, -0.8, 1.0}, 2);
    REQUIRE(e.values[0] == Catch::Approx(1.8).epsilon(1e-12));
    REQUIRE(e.values[1] == Catch::Approx(0.2).epsilon(1e-12));
    double c = 1.0 / std::sqrt(2.0);
    REQUIRE(e.vectors[0] == Catch::Approx(c).epsilon(1e-12));    // column 0, component 0
    REQUIRE(e.vectors[2] == Catch::Approx(-c).epsilon(1e-12));   // column 0, component 1
    REQUIRE(e.vectors[1] == Catch::Approx(c).epsilon(1e-12));    // column 1, component 0
    REQUIRE(e.vectors[3] == Catch::Approx(c).epsilon(1e-12));    // column 1, component 1

    REQUIRE_THROWS_AS(jacobi_eigen_sym({1.0, 0.0, 0.0}, 2), std::invalid_argument);
}

TEST_CASE("jacobi eigendecomposition reconstructs random symmetric matrices") {
    RngStream rng(71);
    const int n = 5;
    std::vector<double> m(n * n);
    for (int i = 0; i < n; ++i) {
        m[i * n + i] = rng.uniform(1.0, 3.0);
        for (int j = i + 1; j < n; ++j)
            m[i * n + j] = m[j * n + i] = rng.uniform(-1.0, 1.0);
    }
    SymmetricEigen e = jacobi_eigen_sym(m, n);
    for (int k = 1; k < n; ++k) REQUIRE(e.values[k - 1] >= e.values[k]);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            double recon = 0.0, ortho = 0.0;
            for (int k = 0; k < n; ++k) {
                recon += e.vectors[i * n + k] * e.values[k] * e.vectors[j * n + k];
                ortho += e.vectors[k * n + i] * e.vectors[k * n + j];
            }
            REQUIRE(recon == Catch::Approx(m[i * n + j]).margin(1e-10));
            REQUIRE(ortho == Catch::Approx(i == j ? 1.0 : 0.0).margin(1e-10));
        }
    }
}

TEST_CASE("coloring reproduces the requested Gaussian correlation") {
    std::vector<MarginalSpec> marg{MarginalSpec::gumbel(0.0, 1.0),
                                   MarginalSpec::weibull(1.5, 1.0)};
    NatafModel model(marg, {1.0, -0.8, -0.8, 1.0});
    REQUIRE(model.dim() == 2);

    RngStream rng(72);
    const int n = 100000;
    double s1 = 0.0, s2 = 0.0, s11 = 0.0, s22 = 0.0, s12 = 0.0;
    std::vector<double> x(2);
    for (int i = 0; i < n; ++i) {
        x[0] = rng.normal();
        x[1] = rng.normal();
        std::vector<double> c = model.color(x);
        s1 += c[0];
        s2 += c[1];
        s11 += c[0] * c[0];
        s22 += c[1] * c[1];
        s12 += c[0] * c[1];
    }
    double m1 = s1 / n, m2 = s2 / n;
    double v1 = s11 / n - m1 * m1, v2 = s22 / n - m2 * m2;
    double corr = (s12 / n - m1 * m2) / std::sqrt(v1 * v2);
    REQUIRE(v1 == Catch::Approx(1.0).margin(0.02));
    REQUIRE(v2 == Catch::Approx(1.0).margin(0.02));
    REQUIRE(corr == Catch::Approx(-0.8).margin(0.01));

    // Identity correlation passes coordinates through untouched.
    NatafModel ident(marg, {1.0, 0.0, 0.0, 1.0});
    std::vector<double> probe{0.37, -1.2};
    std::vector<double> colored = ident.color(probe);
    REQUIRE(colored[0] == Catch::Approx(0.37).margin(1e-12));
    REQUIRE(colored[1] == Catch::Approx(-1.2).margin(1e-12));

    // The origin maps to the vector of physical medians.
    std::vector<double> zero{0.0, 0.0};
    std::vector<double> phys = model.to_physical(zero);
    REQUIRE(phys[0] == Catch::Approx(-std::log(std::log(2.0))).epsilon(1e-12));
    REQUIRE(phys[1] == Catch::Approx(std::pow(std::log(2.0), 2.0 / 3.0)).epsilon(1e-12));
}

TEST_CASE("degenerate correlation inputs are rejected") {
    std::vector<MarginalSpec> marg{MarginalSpec::standard_normal(),
                                   MarginalSpec::standard_normal()};
    REQUIRE_THROWS_AS(NatafModel(marg, {1.0, 0.0, 0.0}), std::invalid_argument);
    REQUIRE_THROWS_AS(NatafModel(marg, {1.0, 0.3, 0.2, 1.0}), std::invalid_argument);
    REQUIRE_THROWS_AS(NatafModel(marg, {2.0, 0.0, 0.0, 1.0}), std::invalid_argument);
    REQUIRE_THROWS_AS(NatafModel(marg, {1.0, 1.0, 1.0, 1.0}), std::invalid_argument);
    REQUIRE_THROWS_AS(NatafModel({}, {}), std::invalid_argument);

    std::vector<double> probe{0.0};
    NatafModel ok(marg, {1.0, 0.0, 0.0, 1.0});
    REQUIRE_THROWS_AS(ok.color(probe), std::invalid_argument);
    REQUIRE_THROWS_AS(marginal_map(marg, probe), std::invalid_argument);
}

TEST_CASE("underlying correlation search inverts the moment integral") {
    MarginalSpec n = MarginalSpec::standard_normal();
    // Normal pairs map through unchanged, so the solution is the target.
    REQUIRE(underlying_gaussian_correlation(n, n, 0.37) == Catch::Approx(0.37).margin(2e-4));
    REQUIRE(underlying_gaussian_correlation(n, n, 0.0) == Catch::Approx(0.0).margin(2e-4));

    MarginalSpec g = MarginalSpec::gumbel(0.0, 1.0);
    MarginalSpec w = MarginalSpec::weibull(1.5, 1.0);
    double rho = underlying_gaussian_correlation(g, w, -0.708);
    REQUIRE(rho == Catch::Approx(-0.80).margin(0.01));

    REQUIRE_THROWS_AS(underlying_gaussian_correlation(n, n, 1.0), std::domain_error);
    REQUIRE_THROWS_AS(underlying_gaussian_correlation(n, n, -1.5), std::domain_error);
}
