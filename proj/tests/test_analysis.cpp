#include "hyperbuild/analysis.hpp"
#include "hyperbuild/errors.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace hyperbuild;

namespace {

struct Cone {
    Apartment ap{6};
    ModelConstants c = compute_constants(6, 3);
    BoundaryMeasure nu{ap};
    ConeGraph cone = build_cone(nu, c, parametrize_segment(nu, 0.5, 1.4, 32), 3.0, 30.0);
    BoundaryAtlas pts = cone_points(cone, c);
};

const Cone& cx() {
    static const Cone c;
    return c;
}

}  // namespace

TEST_SUITE("analysis") {
    TEST_CASE("dyadic inequality closed form for f = 1") {
        const auto f = StepFunction::from({0.0, 1.0}, {1.0});
        const auto r = lemma5_check(f, 1.0, 1.5);
        CHECK(r.lhs == doctest::Approx(1.0));
        CHECK(r.s_left == doctest::Approx(2.0 / 3).epsilon(1e-12));
        CHECK(r.s_right == doctest::Approx(2.0 / 3).epsilon(1e-12));
        CHECK(r.ratio == doctest::Approx(0.75).epsilon(1e-12));
    }

    TEST_CASE("dyadic bound and scaling on random step functions") {
        std::mt19937_64 rng(10);
        const double Q = compute_constants(6, 3).Q;
        for (int i = 0; i < 2000; ++i) {
            const auto f = StepFunction::random(rng, 1.0, 64);
            const auto r = lemma5_check(f, 1.0, Q);
            REQUIRE(r.ratio <= std::pow(2.0, Q - 1));
            const double s = 0.1 + 5.0 * (i % 7);
            CHECK(std::abs(lemma5_check(f.scaled(s), s, Q).ratio - r.ratio) <= 1e-12 * r.ratio);
            CHECK(lemma5_check(f.reflected(), 1.0, Q).ratio == doctest::Approx(r.ratio).epsilon(1e-12));
        }
        CHECK_THROWS(StepFunction::from({0.0, 1.0}, {-1.0}));
    }

    TEST_CASE("maximal function") {
        std::mt19937_64 rng(11);
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        std::vector<double> d(100), w(100), g(100);
        for (int i = 0; i < 100; ++i) {
            d[static_cast<std::size_t>(i)] = i == 0 ? 0.0 : unit(rng);
            w[static_cast<std::size_t>(i)] = unit(rng) + 0.1;
            g[static_cast<std::size_t>(i)] = unit(rng);
        }
        for (double R : {0.05, 0.3, 0.8, 2.0}) {
            double brute = 0.0;
            for (std::size_t i = 0; i < d.size(); ++i) {
                if (!(d[i] < R)) continue;
                double m = 0.0, s = 0.0;
                for (std::size_t j = 0; j < d.size(); ++j)
                    if (d[j] <= d[i]) {
                        m += w[j];
                        s += w[j] * g[j];
                    }
                brute = std::max(brute, s / m);
            }
            CHECK(std::abs(maximal_function(d, w, g, R) - brute) <= 1e-12);
        }
        CHECK(maximal_function(d, w, std::vector<double>(100, 0.7), 0.5) == doctest::Approx(0.7));
        CHECK(maximal_function(d, w, g, 0.2) <= maximal_function(d, w, g, 0.6));
    }

    TEST_CASE("upper gradients on the cone") {
        const auto& k = cx();
        const auto n = k.cone.nodes.size();
        CHECK(upper_gradient(k.cone.edges, std::vector<double>(n, 3.0)).rho == std::vector<double>(k.cone.edges.size(), 0.0));
        std::vector<double> t(n);
        for (std::size_t i = 0; i < n; ++i) t[i] = k.cone.nodes[i].t;
        for (double r : upper_gradient(k.cone.edges, t).rho) CHECK(r == doctest::Approx(1.0).epsilon(1e-9));

        std::mt19937_64 rng(12);
        std::uniform_real_distribution<double> unit(-1.0, 1.0);
        std::vector<double> u(n);
        for (auto& x : u) x = unit(rng);
        const auto g = upper_gradient(k.cone.edges, u);
        for (std::uint64_t h = 0; h < k.cone.curve_count; ++h) {
            const auto path = k.cone.curve(h);
            double integral = 0.0;
            for (std::size_t i = 1; i < path.size(); ++i)
                for (int e : k.cone.adjacency[static_cast<std::size_t>(path[i - 1])]) {
                    const auto& edge = k.cone.edges[static_cast<std::size_t>(e)];
                    if ((edge.from == path[i - 1] && edge.to == path[i]) || (edge.to == path[i - 1] && edge.from == path[i]))
                        integral += g.rho[static_cast<std::size_t>(e)] * edge.length;
                }
            CHECK(std::abs(u[static_cast<std::size_t>(path.front())] - u[static_cast<std::size_t>(path.back())]) <=
                  integral + 1e-12);
        }
    }

    TEST_CASE("fiber average bound") {
        const auto& k = cx();
        const auto n = k.cone.nodes.size();
        std::vector<double> t(n);
        for (std::size_t i = 0; i < n; ++i) t[i] = k.cone.nodes[i].t;
        GradientField ones{std::vector<double>(k.cone.edges.size(), 1.0)};
        const auto fb = fiber_average_bound(k.cone, t, ones);
        CHECK(fb.rhs == doctest::Approx(k.cone.segment.l).epsilon(1e-12));
        CHECK(fb.fubini_gap <= 1e-12);
        for (const auto& f : test_suite(k.cone, k.c, 3)) {
            const auto g = upper_gradient(k.cone.edges, f.values);
            const auto r = fiber_average_bound(k.cone, f.values, g);
            CHECK(r.lhs <= r.rhs);
            CHECK(r.fubini_gap <= 1e-12);
        }
        GradientField zero{std::vector<double>(k.cone.edges.size(), 0.0)};
        CHECK_THROWS_AS(fiber_average_bound(k.cone, t, zero), PreconditionError);
    }

    TEST_CASE("pointwise and ball inequalities") {
        const auto& k = cx();
        const auto n = k.cone.nodes.size();
        const int X = k.cone.level_nodes.front().front(), Y = k.cone.level_nodes.back().front();
        const std::vector<double> flat(n, 2.0), zero(n, 0.0);
        CHECK(pointwise_poincare(k.pts, flat, zero, X, Y, 10.0).constant == 0.0);
        std::vector<double> t(n);
        for (std::size_t i = 0; i < n; ++i) t[i] = k.cone.nodes[i].t;
        const auto pw = pointwise_poincare(k.pts, t, std::vector<double>(n, 1.0), X, Y, 10.0);
        CHECK(pw.constant == doctest::Approx(k.cone.segment.l / (2 * pw.distance)).epsilon(1e-9));
        const auto viol = pointwise_poincare(k.pts, t, zero, X, Y, 10.0);
        CHECK(viol.violated);

        CHECK(ball_poincare(k.pts, flat, zero, X, 1.0, 10.0).lhs == 0.0);
        std::mt19937_64 rng(13);
        std::uniform_real_distribution<double> unit(0.0, 2.0);
        std::vector<double> rho(n);
        for (auto& x : rho) x = unit(rng);
        const auto a1 = ball_poincare(k.pts, t, rho, X, 1.0, 10.0, 1.0);
        const auto a2 = ball_poincare(k.pts, t, rho, X, 1.0, 10.0, 2.0);
        CHECK(a1.rhs <= a2.rhs);
        CHECK_THROWS_AS(ball_poincare(k.pts, t, rho, X, 1e-9, 10.0), UndersampledError);
        CHECK_THROWS_AS(ball_poincare(k.pts, t, rho, X, 1.0, 10.0, 0.5), DomainError);
    }

    TEST_CASE("test suite composition") {
        const auto& k = cx();
        const auto suite = test_suite(k.cone, k.c, 42);
        CHECK(suite.size() == 20);
        CHECK(test_suite(k.cone, k.c, 42)[10].values == suite[10].values);
    }
}
