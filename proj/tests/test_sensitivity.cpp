#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <vector>

#include "rarering/estimator.hpp"
#include "rarering/rng.hpp"
#include "rarering/sensitivity.hpp"

using namespace rarering;

namespace {

void push(PointBlock& block, std::initializer_list<double> coords) {
    std::vector<double> x(coords);
    block.push_back(x);
}

// Literal restatement of the share rule without the tree: for every rare
// node take the k nearest safe nodes by sorted squared distance, form the
// centroid offset, square-normalize.
DirectionShares brute_shares(const PointBlock& nodes, const std::vector<char>& rare_mask,
                             const std::vector<char>& safe_mask, int k) {
    const int dim = nodes.dim();
    std::vector<std::size_t> safe;
    for (std::size_t i = 0; i < nodes.size(); ++i)
        if (safe_mask[i]) safe.push_back(i);
    double sigma = exploitation_sigma(SpaceDim(dim));
    double guard2 = 9.0 * sigma * sigma;
    DirectionShares out;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        if (!rare_mask[i]) continue;
        std::vector<std::pair<double, std::size_t>> by_dist;
        for (std::size_t s : safe)
            by_dist.emplace_back(squared_distance(nodes.row_ptr(i), nodes.row_ptr(s), dim), s);
        std::sort(by_dist.begin(), by_dist.end());
        if (by_dist.empty() || by_dist.front().first > guard2) { ++out.n_skipped; continue; }
        std::size_t take = std::min<std::size_t>(k, by_dist.size());
        std::vector<double> g(dim, 0.0);
        for (std::size_t j = 0; j < take; ++j) {
            const double* p = nodes.row_ptr(by_dist[j].second);
            for (int d = 0; d < dim; ++d) g[d] += p[d];
        }
        double norm2 = 0.0;
        for (int d = 0; d < dim; ++d) {
            g[d] = g[d] / static_cast<double>(take) - nodes.row_ptr(i)[d];
            norm2 += g[d] * g[d];
        }
        if (norm2 <= 0.0) { ++out.n_skipped; continue; }
        for (int d = 0; d < dim; ++d) out.alpha_sq.push_back(g[d] * g[d] / norm2);
        out.node_index.push_back(static_cast<int>(i));
    }
    return out;
}

}  // namespace

TEST_CASE("direction shares resolve axis-aligned geometry") {
    PointBlock nodes(2);
    push(nodes, {0.0, 0.0});   // rare
    push(nodes, {1.0, 0.0});   // safe, straight along x1
    std::vector<char> rare{1, 0}, safe{0, 1};
    SensitivityConfig cfg;
    cfg.k_neighbors = 1;
    DirectionShares s = direction_shares(nodes, rare, safe, cfg);
    REQUIRE(s.node_index == std::vector<int>{0});
    REQUIRE(s.alpha_sq[0] == Catch::Approx(1.0).epsilon(1e-15));
    REQUIRE(s.alpha_sq[1] == 0.0);

    // A diagonal offset splits evenly.
    PointBlock diag(2);
    push(diag, {0.0, 0.0});
    push(diag, {1.0, 1.0});
    s = direction_shares(diag, rare, safe, cfg);
    REQUIRE(s.alpha_sq[0] == Catch::Approx(0.5).epsilon(1e-15));
    REQUIRE(s.alpha_sq[1] == Catch::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("direction shares equal a brute-force recompute") {
    RngStream rng(61);
    PointBlock nodes(4);
    std::vector<char> rare, safe;
    std::vector<double> x(4);
    for (int i = 0; i < 400; ++i) {
        for (auto& v : x) v = rng.normal();
        nodes.push_back(x);
        bool is_rare = rng.uniform() < 0.3;
        rare.push_back(is_rare);
        safe.push_back(!is_rare);
    }
    SensitivityConfig cfg;
    cfg.k_neighbors = 5;
    DirectionShares fast = direction_shares(nodes, rare, safe, cfg);
    DirectionShares slow = brute_shares(nodes, rare, safe, 5);
    REQUIRE(fast.node_index == slow.node_index);
    REQUIRE(fast.n_skipped == slow.n_skipped);
    REQUIRE(fast.alpha_sq.size() == slow.alpha_sq.size());
    for (std::size_t i = 0; i < fast.alpha_sq.size(); ++i)
        REQUIRE(fast.alpha_sq[i] == Catch::Approx(slow.alpha_sq[i]).margin(1e-12));

    SensitivityResult res = sensitivity_indices(nodes, rare, safe, cfg);
    double total = 0.0;
    for (double v : res.s_sq) total += v;
    REQUIRE(total == Catch::Approx(1.0).epsilon(1e-12));
    REQUIRE(res.n_used == static_cast<int>(slow.node_index.size()));

    // Constant weights cannot change a normalized average.
    std::vector<double> w(nodes.size(), 0.7);
    SensitivityResult weighted = sensitivity_indices(nodes, rare, safe, cfg, w);
    for (std::size_t k = 0; k < res.s_sq.size(); ++k)
        REQUIRE(weighted.s_sq[k] == Catch::Approx(res.s_sq[k]).epsilon(1e-12));
}

TEST_CASE("sensitivity shares follow coordinate permutations") {
    RngStream rng(62);
    PointBlock nodes(3), swapped(3);
    std::vector<char> rare, safe;
    std::vector<double> x(3);
    for (int i = 0; i < 200; ++i) {
        x[0] = rng.normal();
        x[1] = 0.2 * rng.normal();
        x[2] = 2.0 * rng.normal();
        nodes.push_back(x);
        std::swap(x[0], x[2]);
        swapped.push_back(x);
        bool is_rare = i % 4 == 0;
        rare.push_back(is_rare);
        safe.push_back(!is_rare);
    }
    SensitivityResult a = sensitivity_indices(nodes, rare, safe);
    SensitivityResult b = sensitivity_indices(swapped, rare, safe);
    REQUIRE(a.s_sq[0] == Catch::Approx(b.s_sq[2]).epsilon(1e-12));
    REQUIRE(a.s_sq[1] == Catch::Approx(b.s_sq[1]).epsilon(1e-12));
    REQUIRE(a.s_sq[2] == Catch::Approx(b.s_sq[0]).epsilon(1e-12));
}

TEST_CASE("degenerate node sets are rejected or skipped") {
    PointBlock nodes(2);
    push(nodes, {0.0, 0.0});
    push(nodes, {1.0, 0.0});
    std::vector<char> rare{1, 1}, none{0, 0};
    REQUIRE_THROWS_AS(direction_shares(nodes, rare, none), std::logic_error);

    std::vector<char> bad{1};
    std::vector<char> safe{0, 1};
    REQUIRE_THROWS_AS(direction_shares(nodes, bad, safe), std::invalid_argument);
    SensitivityConfig zero_k;
    zero_k.k_neighbors = 0;
    REQUIRE_THROWS_AS(direction_shares(nodes, std::vector<char>{1, 0}, safe, zero_k),
                      std::invalid_argument);

    // No rare rows: an empty result, not a fabricated one.
    SensitivityResult empty = sensitivity_indices(nodes, none, safe);
    REQUIRE(empty.n_used == 0);
    REQUIRE(empty.s_sq.empty());

    // A rare node beyond the guard radius is dropped from the average.
    PointBlock far(2);
    push(far, {0.0, 0.0});
    push(far, {100.0, 0.0});
    push(far, {0.0, 0.1});
    std::vector<char> far_rare{1, 1, 0}, far_safe{0, 0, 1};
    DirectionShares s = direction_shares(far, far_rare, far_safe);
    REQUIRE(s.n_skipped == 1);
    REQUIRE(s.node_index == std::vector<int>{0});

    // Safe centroid coinciding with the node gives no direction.
    PointBlock mid(2);
    push(mid, {0.0, 0.0});
    push(mid, {1.0, 0.0});
    push(mid, {-1.0, 0.0});
    SensitivityConfig two;
    two.k_neighbors = 2;
    DirectionShares z = direction_shares(mid, {1, 0, 0}, {0, 1, 1}, two);
    REQUIRE(z.n_skipped == 1);
    REQUIRE(z.node_index.empty());
}

TEST_CASE("design-point shares square-normalize the coordinates") {
    std::vector<double> straight{0.0, 3.0};
    std::vector<double> a = form_alpha_from_design_point(straight);
    REQUIRE(a[0] == 0.0);
    REQUIRE(a[1] == 1.0);

    std::vector<double> slanted{2.0, 5.0};
    a = form_alpha_from_design_point(slanted);
    REQUIRE(a[0] == Catch::Approx(4.0 / 29.0).epsilon(1e-15));
    REQUIRE(a[1] == Catch::Approx(25.0 / 29.0).epsilon(1e-15));

    std::vector<double> zero{0.0, 0.0};
    REQUIRE_THROWS_AS(form_alpha_from_design_point(zero), std::domain_error);
}

TEST_CASE("spherical failure surfaces share sensitivity equally") {
    RngStream rng(63);
    AnnulusSpec ann = make_annulus(2.3, 4.0, SpaceDim(3));
    auto classify = [](const double* x) {
        double r2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
        return r2 > 2.5 * 2.5 ? label_failure : label_safe;
    };
    GlobalEstimate est = global_is_estimate(rng, classify, ann, SpaceDim(3), 20000);
    std::vector<char> rare(est.node_codes.size()), safe(est.node_codes.size());
    for (std::size_t i = 0; i < est.node_codes.size(); ++i) {
        rare[i] = est.node_codes[i] == label_failure;
        safe[i] = est.node_codes[i] == label_safe;
    }
    SensitivityResult res = sensitivity_indices(est.nodes, rare, safe);
    REQUIRE(res.s_sq.size() == 3);
    for (double v : res.s_sq) REQUIRE(v == Catch::Approx(1.0 / 3.0).margin(0.05));
}
