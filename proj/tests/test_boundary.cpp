#include "hyperbuild/boundary.hpp"
#include "hyperbuild/errors.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace hyperbuild;

namespace {

struct Fixture {
    Apartment ap{6};
    ModelConstants c = compute_constants(6, 3);
    BoundaryMeasure nu{ap};
};

const Fixture& fx() {
    static const Fixture f;
    return f;
}

}  // namespace

TEST_SUITE("boundary") {
    TEST_CASE("measure is a probability and additive on arcs") {
        const auto& nu = fx().nu;
        CHECK(nu.mass(Arc{0.0, 2 * std::numbers::pi}) == doctest::Approx(1.0).epsilon(1e-6));
        const double whole = nu.mass(Arc{0.3, 1.0});
        const double parts = nu.mass(Arc{0.3, 0.4}) + nu.mass(Arc{0.7, 0.6});
        CHECK(whole == doctest::Approx(parts).epsilon(1e-6));
    }

    TEST_CASE("coded Gromov products") {
        const auto& [ap, c, nu] = fx();
        const auto z = make_coded_point(ap, 0.9, {1, 0, 1, 1, 0, 1}, 30.0);
        CHECK(coded_gromov_product(z, z) == kInfiniteProduct);
        CHECK(quasi_metric(z, z, c) == 0.0);
        auto w = z.word;
        w[3] ^= 1;
        CHECK(coded_gromov_product(z, relabel(z, w)) == 3);

        std::mt19937_64 rng(8);
        for (int i = 0; i < 30; ++i) {
            const double a = nu.sample(rng), b = nu.sample(rng);
            const auto za = make_coded_point(ap, a, {}, 30.0), zb = make_coded_point(ap, b, {}, 30.0);
            CHECK(coded_gromov_product(za, zb) == gromov_product(*za.ray, *zb.ray, 30.0));
            CHECK(quasi_metric(za, zb, c) == quasi_metric(zb, za, c));
        }
    }

    TEST_CASE("ultrametric on a single ray") {
        const auto& [ap, c, nu] = fx();
        const auto base = make_coded_point(ap, 2.2, {}, 30.0);
        std::mt19937_64 rng(9);
        std::uniform_int_distribution<int> label(0, 1);
        std::vector<CodedPoint> pts;
        for (int i = 0; i < 60; ++i) {
            std::vector<std::uint8_t> w(base.word.size());
            for (auto& x : w) x = static_cast<std::uint8_t>(label(rng));
            pts.push_back(relabel(base, std::move(w)));
        }
        for (const auto& x : pts)
            for (const auto& y : pts)
                for (const auto& z : pts)
                    REQUIRE(quasi_metric(x, z, c) <= std::max(quasi_metric(x, y, c), quasi_metric(y, z, c)));
    }

    TEST_CASE("sampled atlas") {
        const auto& [ap, c, nu] = fx();
        const auto a = sample_boundary(nu, c, 2000, 11, 30.0);
        const auto b = sample_boundary(nu, c, 2000, 11, 30.0);
        double total = 0.0;
        for (double w : a.weights) total += w;
        CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(export_atlas(a) == export_atlas(b));
        // label frequencies at the first level
        std::size_t ones = 0, n = 0;
        for (const auto& z : a.points)
            if (!z.word.empty()) {
                ones += z.word[0];
                ++n;
            }
        const double sigma = std::sqrt(n * 0.25);
        CHECK(std::abs(static_cast<double>(ones) - 0.5 * static_cast<double>(n)) <= 3 * sigma);
        const auto back = import_atlas(ap, c, export_atlas(a), 30.0);
        CHECK(export_atlas(back) == export_atlas(a));
    }

    TEST_CASE("Ahlfors profile") {
        const auto& [ap, c, nu] = fx();
        const auto atlas = sample_boundary(nu, c, 500, 12, 30.0);
        const std::vector<CodedPoint> centers(atlas.points.begin(), atlas.points.begin() + 3);
        const auto full = ahlfors_profile(atlas, centers, {1.5});
        for (const auto& row : full.rows) {
            CHECK(row.mass == doctest::Approx(1.0));
            CHECK(row.ratio == doctest::Approx(std::pow(1.5, -c.Q)));
        }
        const auto exact = exact_ahlfors_profile(nu, c, centers, {4, 5, 6, 7, 8});
        CHECK(std::abs(exact.slope - c.Q) < 0.1 * c.Q);
        CHECK(fit_slope({0, 1, 2}, {1, 3, 5}) == doctest::Approx(2.0));
    }

    TEST_CASE("segment parametrization") {
        const auto& nu = fx().nu;
        const auto s = parametrize_segment(nu, 0.5, 1.4, 32);
        const auto d = parametrize_segment(nu, 0.5, 1.4, 64);
        CHECK(s.t.front() == 0.0);
        CHECK(s.t.back() == doctest::Approx(s.l));
        for (std::size_t i = 1; i < s.theta.size(); ++i) {
            CHECK(s.theta[i] > s.theta[i - 1]);
            CHECK(s.t[i] > s.t[i - 1]);
        }
        CHECK(std::abs(d.l - s.l) < 1e-3 * s.l);
        CHECK_THROWS_AS(parametrize_segment(nu, 0.5, 0.5, 8), InvalidInputError);
        CHECK_THROWS_AS(parametrize_segment(nu, 0.5, 1.0, 1), InvalidInputError);
    }

    TEST_CASE("cone") {
        const auto& [ap, c, nu] = fx();
        const auto seg = parametrize_segment(nu, 0.5, 1.4, 32);
        const auto cone = build_cone(nu, c, seg, 3.0, 30.0);
        CHECK(cone.curve_count == (std::uint64_t{1} << cone.good_walls.size()));
        for (std::uint64_t h = 0; h < cone.curve_count; ++h) {
            const auto path = cone.curve(h);
            REQUIRE(path.size() == seg.t.size());
            double len = 0.0;
            for (std::size_t i = 1; i < path.size(); ++i)
                for (int e : cone.adjacency[static_cast<std::size_t>(path[i - 1])]) {
                    const auto& edge = cone.edges[static_cast<std::size_t>(e)];
                    if ((edge.from == path[i - 1] && edge.to == path[i]) || (edge.to == path[i - 1] && edge.from == path[i]))
                        len += edge.length;
                }
            CHECK(std::abs(len - seg.l) <= 1e-12);
        }
        const auto flat = build_cone(nu, c, seg, 0.0, 30.0);
        CHECK(flat.curve_count == 1);
    }
}
