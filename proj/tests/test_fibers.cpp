#include "hyperbuild/errors.hpp"
#include "hyperbuild/fibers.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace hyperbuild;

namespace {

CrossingFlags flags_of(std::vector<bool> bad) {
    CrossingFlags f;
    f.bad = std::move(bad);
    for (std::size_t i = 0; i < f.bad.size(); ++i) {
        f.walls.push_back("w" + std::to_string(i));
        f.N += f.bad[i] ? 1 : 0;
    }
    return f;
}

}  // namespace

TEST_SUITE("fibers") {
    TEST_CASE("t on the xi ray makes every crossing bad") {
        const Apartment ap(6);
        const auto f = classify_crossings(ap, 1.1, 1.1, 2.0, 25.0);
        CHECK(f.N == static_cast<int>(f.bad.size()));
        const auto id = n_identity(ap, 1.1, 1.1, 2.0, 25.0);
        CHECK(id.holds);
        CHECK(id.N == id.g_xi_t);
        CHECK(id.g_t_eta == id.g_xi_eta);
    }

    TEST_CASE("identity on random triples") {
        const Apartment ap(6);
        std::mt19937_64 rng(7);
        std::uniform_real_distribution<double> angle(0.0, 2 * std::numbers::pi), unit(0.0, 1.0);
        for (int i = 0; i < 100; ++i) {
            const double xi = angle(rng);
            const double span = unit(rng) * std::numbers::pi;
            const double eta = wrap_angle(xi + span);
            CHECK(n_identity(ap, wrap_angle(xi + unit(rng) * span), xi, eta, 25.0).holds);
            CHECK(n_identity(ap, wrap_angle(xi + 0.5 * span), xi, eta, 25.0).holds);
        }
    }

    TEST_CASE("gamma mass") {
        CHECK(gamma_mass(flags_of({false, false}), 3) == 1.0);
        CHECK(gamma_mass(flags_of({true, false, true}), 3) == doctest::Approx(0.25));
        CHECK(gamma_mass(flags_of({true, false, false, true}), 3) == gamma_mass(flags_of({true, false, true}), 3));
        CHECK(gamma_mass(flags_of({true}), 4) == doctest::Approx(1.0 / 3));
    }

    TEST_CASE("fiber tree") {
        const FiberTree all_good(flags_of({false, false, false}), 3);
        CHECK(all_good.leaf_count() == 8);
        CHECK(all_good.leaf_weight() == doctest::Approx(1.0 / 8));
        const FiberTree all_bad(flags_of({true, true}), 3);
        CHECK(all_bad.leaf_count() == 1);
        CHECK(all_bad.leaf_weight() == 1.0);
        const auto mixed_flags = flags_of({true, false, true, false, false});
        const FiberTree mixed(mixed_flags, 4);
        CHECK(mixed.leaf_count() == 27);
        CHECK(mixed.u_mass_in_t() == doctest::Approx(gamma_mass(mixed_flags, 4)).epsilon(1e-12));
        for (std::uint64_t h = 0; h < mixed.leaf_count(); ++h) {
            const auto w = mixed.leaf(h);
            CHECK(w[0] == 0);
            CHECK(w[2] == 0);
        }
        CHECK_THROWS_AS(FiberTree(flags_of(std::vector<bool>(30, false)), 3, 1 << 20), CapacityError);
    }

    TEST_CASE("fiber mass ratio") {
        const auto c = compute_constants(6, 3);
        const auto f = flags_of({true, false, true});
        const auto mid = lemma4_ratio(0.5, 1.0, f, c);
        CHECK(mid.ratio > 0);
        CHECK(std::isfinite(mid.ratio));
        CHECK(mid.ratio == doctest::Approx(0.25 / std::pow(0.5, c.Q - 1)));
        CHECK_THROWS_AS(lemma4_ratio(0.0, 1.0, f, c), DomainError);
        CHECK_THROWS_AS(lemma4_ratio(1.0, 1.0, f, c), DomainError);
    }
}
