#include "hyperbuild/errors.hpp"
#include "hyperbuild/modulus.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace hyperbuild;

namespace {

ModulusProblem random_problem(std::mt19937_64& rng, double Q) {
    std::uniform_int_distribution<int> size(4, 10);
    std::uniform_real_distribution<double> weight(0.5, 2.0);
    std::bernoulli_distribution edge(0.35);
    const int n = size(rng);
    ModulusProblem prob{Graph(n), Q, {0}, {n - 1}};
    for (int v = 0; v < n; ++v) {
        prob.graph.length[static_cast<std::size_t>(v)] = weight(rng);
        prob.graph.measure[static_cast<std::size_t>(v)] = weight(rng);
    }
    for (int u = 0; u < n; ++u)
        for (int v = u + 1; v < n; ++v)
            if (edge(rng)) prob.graph.add_edge(u, v);
    return prob;
}

}  // namespace

TEST_SUITE("modulus") {
    TEST_CASE("paths and unions") {
        for (double Q : {1.5263, 2.0, 3.0})
            for (int k : {2, 5, 10}) {
                const auto s = discrete_modulus({Graph::path(k), Q, {0}, {k - 1}});
                CHECK(std::abs(s.value - std::pow(k, 1.0 - Q)) <= 1e-4);
                CHECK(s.lower <= s.value * (1 + 1e-12));
            }
        ModulusProblem two{Graph(10), 2.5, {0, 5}, {4, 9}};
        for (int v = 0; v < 4; ++v) {
            two.graph.add_edge(v, v + 1);
            two.graph.add_edge(v + 5, v + 6);
        }
        CHECK(std::abs(discrete_modulus(two).value - 2 * std::pow(5.0, -1.5)) <= 1e-3);
    }

    TEST_CASE("single edge and empty family") {
        const auto s = discrete_modulus({Graph::path(2, 0.7, 1.3), 1.8, {0}, {1}});
        CHECK(s.value == doctest::Approx(2 * 1.3 * std::pow(1.4, -1.8)).epsilon(1e-6));
        CHECK(discrete_modulus({Graph(5), 2.0, {0}, {4}}).value == 0.0);
        CHECK_THROWS_AS(discrete_modulus({Graph::path(3), 1.0, {0}, {2}}), DomainError);
    }

    TEST_CASE("agreement with brute force and edge removal") {
        std::mt19937_64 rng(14);
        for (int i = 0; i < 40; ++i) {
            auto prob = random_problem(rng, 1.5263);
            const double bf = brute_force_modulus(prob);
            const auto s = discrete_modulus(prob);
            if (bf == 0.0) {
                CHECK(s.value == 0.0);
                continue;
            }
            CHECK(std::abs(s.value - bf) <= 1e-6 * bf);
            CHECK(s.lower <= bf * (1 + 1e-9));
            CHECK(bf <= s.value * (1 + 1e-9));
            for (const auto& p : s.paths) {
                double cost = 0.0;
                for (int v : p) cost += s.rho[static_cast<std::size_t>(v)] * prob.graph.length[static_cast<std::size_t>(v)];
                CHECK(cost >= 1.0 - 1e-9);
            }
            for (int u = 0; u < prob.graph.size(); ++u)
                if (!prob.graph.adj[static_cast<std::size_t>(u)].empty()) {
                    prob.graph.remove_edge(u, prob.graph.adj[static_cast<std::size_t>(u)].back());
                    CHECK(brute_force_modulus(prob) <= bf * (1 + 1e-12));
                    break;
                }
        }
        CHECK_THROWS_AS(brute_force_modulus({Graph::path(20), 2.0, {0}, {19}}), CapacityError);
    }

    TEST_CASE("separation ratio") {
        const std::vector<double> x = {0.0, 1.0, 2.0, 5.0, 6.0, 9.0};
        const PointMetric d = [&](int i, int j) { return std::abs(x[static_cast<std::size_t>(i)] - x[static_cast<std::size_t>(j)]); };
        CHECK(separation_ratio({0, 1, 2}, {3, 4}, d) == doctest::Approx(3.0));
        CHECK(separation_ratio({0, 1, 2}, {2, 3}, d) == 0.0);
        const PointMetric d3 = [&](int i, int j) { return 3.0 * d(i, j); };
        CHECK(separation_ratio({0, 1}, {4, 5}, d3) == doctest::Approx(separation_ratio({0, 1}, {4, 5}, d)));
    }

    TEST_CASE("Loewner profile on a small atlas") {
        const Apartment ap(6);
        const auto c = compute_constants(6, 3);
        const BoundaryMeasure nu(ap);
        const auto atlas = sample_boundary(nu, c, 1500, 5, 30.0);
        const auto g = build_atlas_graph(ap, atlas, 2);
        CHECK(g.size() == 1500);
        for (int u = 0; u < 50; ++u)
            for (int v : g.graph.adj[static_cast<std::size_t>(u)]) CHECK(g.dist(u, v) <= g.epsilon() * (1 + 1e-9));
        const auto specs = continuum_specs(atlas.points, c, 1500, 6, {1}, 5);
        std::vector<ContinuumPair> pairs;
        for (const auto& s : specs) pairs.push_back(realize(g, s));
        const auto rows = loewner_profile(g, pairs, {0.5, 1.0, 2.0, 8.0}, 1e-2);
        for (std::size_t i = 1; i < rows.size(); ++i)
            if (!rows[i - 1].flagged) CHECK(rows[i].lambda <= rows[i - 1].lambda);
    }
}
