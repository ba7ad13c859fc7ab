#include "hyperbuild/errors.hpp"
#include "hyperbuild/hypgeom.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace hyperbuild;

namespace {

HPoint random_point(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> r(0.0, 3.0), a(0.0, 2 * std::numbers::pi);
    return HPoint::polar(r(rng), a(rng));
}

}  // namespace

TEST_SUITE("hypgeom") {
    TEST_CASE("distance examples") {
        const auto o = HPoint::origin();
        CHECK(dist(o, o) == doctest::Approx(0.0));
        CHECK(dist(o, HPoint::from(Vec3(std::cosh(1.0), std::sinh(1.0), 0.0))) == doctest::Approx(1.0).epsilon(1e-12));
    }

    TEST_CASE("off-sheet vectors are rejected") {
        CHECK_THROWS_AS(HPoint::from(Vec3(1.0, 1.0, 0.0)), InvalidInputError);
        CHECK_THROWS_AS(HPoint::from(Vec3(-1.0, 0.0, 0.0)), InvalidInputError);
    }

    TEST_CASE("triangle inequality on random triples") {
        std::mt19937_64 rng(1);
        for (int i = 0; i < 10000; ++i) {
            const auto x = random_point(rng), y = random_point(rng), z = random_point(rng);
            REQUIRE(dist(x, z) <= dist(x, y) + dist(y, z) + 1e-10);
        }
    }

    TEST_CASE("reflections are isometric involutions fixing their wall") {
        std::mt19937_64 rng(2);
        for (int i = 0; i < 200; ++i) {
            const auto a = random_point(rng), b = random_point(rng);
            const auto w = HGeodesic::through(a, b);
            CHECK(dist(reflect(w, a), a) == doctest::Approx(0.0).epsilon(1e-9));
            const auto x = random_point(rng), y = random_point(rng);
            CHECK(dist(reflect(w, reflect(w, x)), x) < 1e-8);
            CHECK(std::abs(dist(reflect(w, x), reflect(w, y)) - dist(x, y)) < 1e-8);
            CHECK(preserves_form(HIsometry::reflection(w).matrix(), 1e-9));
        }
    }

    TEST_CASE("boosts carry the origin to the target") {
        std::mt19937_64 rng(3);
        for (int i = 0; i < 50; ++i) {
            const auto x = random_point(rng);
            const auto g = HIsometry::boost_to(x);
            CHECK(dist(g.apply(HPoint::origin()), x) < 1e-9);
            const auto id = g * g.inverse();
            CHECK((id.matrix() - Mat3::Identity()).norm() < 1e-9);
        }
    }

    TEST_CASE("right-angled polygons") {
        for (int p = 5; p <= 12; ++p) {
            const auto poly = build_right_angled_polygon(p);
            for (int k = 0; k < p; ++k) CHECK(std::abs(poly.interior_angle(k) - std::numbers::pi / 2) <= 1e-9);
            const double c = std::cos(std::numbers::pi / p);
            CHECK(std::abs(std::cosh(poly.side_length()) - (4 * c * c - 1)) <= 1e-6);
        }
        CHECK(std::cosh(build_right_angled_polygon(5).side_length()) == doctest::Approx(1.618034).epsilon(1e-6));
        CHECK(std::cosh(build_right_angled_polygon(6).side_length()) == doctest::Approx(2.0).epsilon(1e-6));
        CHECK_THROWS_AS(build_right_angled_polygon(4), DomainError);
    }

    TEST_CASE("crossing parameter") {
        const auto o = HPoint::origin();
        SUBCASE("base point on the wall") {
            const auto w = HGeodesic::from_normal(Vec3(0.0, 1.0, 0.0));
            const auto r = Ray::at_angle(o, 0.0);
            const auto s = crossing_parameter(r, w);
            REQUIRE(s.has_value());
            CHECK(*s == doctest::Approx(0.0));
        }
        SUBCASE("wall entirely ahead on one side") {
            const auto w = HGeodesic::from_normal(Vec3(std::sinh(1.0), std::cosh(1.0), 0.0));
            CHECK_FALSE(crossing_parameter(Ray::at_angle(o, std::numbers::pi), w).has_value());
        }
        SUBCASE("generic crossing agrees with bisection on the sign") {
            std::mt19937_64 rng(4);
            int found = 0;
            for (int i = 0; i < 200; ++i) {
                const auto a = random_point(rng), b = random_point(rng);
                const auto w = HGeodesic::through(a, b);
                const auto r = Ray::at_angle(o, std::uniform_real_distribution<double>(0, 6.28)(rng));
                std::optional<double> s;
                try {
                    s = crossing_parameter(r, w);
                } catch (const DegenerateCrossingError&) {
                    continue;
                }
                if (!s || *s > 20) continue;
                ++found;
                double lo = 0.0, hi = 40.0;
                const double s0 = w.side(r.at(lo));
                for (int it = 0; it < 200; ++it) {
                    const double mid = 0.5 * (lo + hi);
                    (w.side(r.at(mid)) * s0 > 0 ? lo : hi) = mid;
                }
                CHECK(std::abs(*s - 0.5 * (lo + hi)) < 1e-10);
            }
            CHECK(found > 20);
        }
    }
}
