#include "hyperbuild/apartment.hpp"
#include "hyperbuild/errors.hpp"

#include <doctest.h>

#include <cmath>
#include <map>
#include <numbers>
#include <random>
#include <set>

using namespace hyperbuild;

TEST_SUITE("apartment") {
    TEST_CASE("constants match the closed form") {
        const auto a = compute_constants(5, 3);
        CHECK(std::abs(a.Q - 1.7202100452) <= 1e-9);
        CHECK(a.a == doctest::Approx(2.6180340).epsilon(1e-6));
        const auto b = compute_constants(6, 3);
        // 1 + log 2 / arccosh 2 to 10 digits; the often-quoted 1.526316 is off by 8.6e-6
        CHECK(std::abs(b.Q - 1.5263244802) <= 1e-9);
        CHECK(b.a == doctest::Approx(3.7320508).epsilon(1e-6));
        CHECK(std::abs(compute_constants(6, 4).Q - 1.8342045643) <= 1e-9);
        CHECK(b.tau == doctest::Approx(std::log(b.a)));
        CHECK_THROWS_AS(compute_constants(4, 3), DomainError);
        CHECK_THROWS_AS(compute_constants(6, 2), DomainError);
    }

    TEST_CASE("word reduction and normal forms") {
        const RightAngledGroup g(5);
        CHECK(g.commute(0, 1));
        CHECK(g.commute(4, 0));
        CHECK_FALSE(g.commute(0, 2));
        CHECK(g.reduce(Word{2, 2}).empty());
        CHECK(g.reduce(Word{0, 1, 0}) == Word{1});  // s0 commutes with s1
        CHECK(g.reduce(Word{0, 2, 0}).size() == 3);
        CHECK(g.normal_form(Word{1, 0}) == Word{0, 1});
        CHECK(g.normal_form(Word{2, 0}) == Word{2, 0});
    }

    TEST_CASE("automaton accepts exactly one normal form per element") {
        const RightAngledGroup g(5);
        const NormalFormAutomaton aut(g);
        // distinct elements by length, from all words of length <= 5
        std::map<std::size_t, std::set<Word>> elements;
        std::vector<Word> frontier = {Word{}};
        for (int len = 0; len <= 5; ++len) {
            std::vector<Word> next;
            for (const auto& w : frontier) {
                const auto nf = g.normal_form(w);
                elements[nf.size()].insert(nf);
                if (len < 5)
                    for (int s = 0; s < 5; ++s) {
                        auto v = w;
                        v.push_back(static_cast<std::uint8_t>(s));
                        next.push_back(std::move(v));
                    }
            }
            frontier = std::move(next);
        }
        // count accepted words per length
        std::vector<std::pair<int, std::size_t>> states = {{aut.start(), 0}};
        std::map<std::size_t, std::size_t> accepted;
        while (!states.empty()) {
            const auto [st, len] = states.back();
            states.pop_back();
            ++accepted[len];
            if (len == 5) continue;
            for (int s = 0; s < 5; ++s)
                if (const int nx = aut.next(st, s); nx >= 0) states.push_back({nx, len + 1});
        }
        for (std::size_t len = 0; len <= 5; ++len) CHECK(accepted[len] == elements[len].size());
        CHECK(aut.growth_rate() > 1.0);
    }

    TEST_CASE("tessellation ring counts") {
        const Apartment ap(5);
        CHECK(ap.generate_tessellation(0).chambers.size() == 1);
        CHECK(ap.generate_tessellation(1).chambers.size() == 11);
        const auto t1 = ap.generate_tessellation(2), t2 = ap.generate_tessellation(2);
        std::set<Word> k1, k2;
        for (const auto& c : t1.chambers) k1.insert(c.word);
        for (const auto& c : t2.chambers) k2.insert(c.word);
        CHECK(k1 == k2);
    }

    TEST_CASE("walls") {
        const Apartment centred(6, HPoint::origin());
        CHECK(centred.enumerate_walls(centred.generate_tessellation(2), centred.polygon().inradius() * (1 + 1e-9)).size() == 6);
        const Apartment ap(6);
        const auto tess = ap.generate_tessellation(3);
        std::size_t prev = 0;
        for (int i = 1; i <= 4; ++i) {
            const auto n = ap.enumerate_walls(tess, tess.coverage_radius * i / 4).size();
            CHECK(n > prev);
            prev = n;
        }
        const auto walls = ap.enumerate_walls(tess, tess.coverage_radius);
        for (std::size_t i = 0; i < walls.size(); ++i)
            for (std::size_t j = i + 1; j < walls.size(); ++j) {
                const double ip = std::abs(minkowski(walls[i].geod.normal, walls[j].geod.normal));
                if (ip < 1.0) CHECK(ip < 1e-8);
            }
        CHECK_THROWS_AS(ap.enumerate_walls(tess, tess.coverage_radius * 2), CoverageError);
    }

    TEST_CASE("crossing sequences") {
        const Apartment ap(6);
        CHECK(ap.walls_crossed(0.3, 0.0).crossings.empty());
        std::mt19937_64 rng(5);
        std::uniform_real_distribution<double> angle(0.0, 2 * std::numbers::pi);
        for (int i = 0; i < 50; ++i) {
            const auto seq = ap.walls_crossed(angle(rng), 20.0);
            std::set<std::string> keys;
            for (std::size_t k = 0; k < seq.crossings.size(); ++k) {
                if (k) CHECK(seq.crossings[k].s > seq.crossings[k - 1].s);
                keys.insert(seq.crossings[k].wall);
            }
            CHECK(keys.size() == seq.crossings.size());  // a geodesic crosses a wall at most once
            CHECK(ap.group().reduce(seq.gallery).size() == seq.gallery.size());
        }
    }

    TEST_CASE("Gromov products") {
        const Apartment ap(6);
        const auto r = ap.walls_crossed(1.0, 25.0);
        CHECK(gromov_product(r, r, 25.0) == static_cast<int>(r.crossings.size()));
        CHECK(gromov_product(ap, 0.4, 0.4 + std::numbers::pi, 30.0) == 0);
        std::mt19937_64 rng(6);
        std::uniform_real_distribution<double> angle(0.0, 2 * std::numbers::pi);
        const auto c = compute_constants(6, 3);
        for (int i = 0; i < 50; ++i) {
            const double a = angle(rng), b = angle(rng);
            // exhaustive intersection of wall sets
            const auto sa = ap.walls_crossed(a, 30.0), sb = ap.walls_crossed(b, 30.0);
            std::set<std::string> wa;
            for (const auto& x : sa.crossings) wa.insert(x.wall);
            int shared = 0;
            for (const auto& x : sb.crossings) shared += static_cast<int>(wa.count(x.wall));
            CHECK(gromov_product(sa, sb, 30.0) == shared);
            CHECK(apartment_quasi_metric(ap, c, a, b) == apartment_quasi_metric(ap, c, b, a));
        }
        CHECK(apartment_quasi_metric(ap, c, 0.7, 0.7) == 0.0);
    }

    TEST_CASE("wrap_angle") {
        CHECK(wrap_angle(-0.5) == doctest::Approx(2 * std::numbers::pi - 0.5));
        CHECK(wrap_angle(2 * std::numbers::pi + 0.25) == doctest::Approx(0.25));
    }
}
