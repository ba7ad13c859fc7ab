#include "hyperbuild/apartment.hpp"

#include "hyperbuild/errors.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <deque>
#include <numbers>
#include <random>
#include <unordered_map>
#include <unordered_set>

namespace hyperbuild {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr int kMaxPerturbations = 10;

std::string word_key(const Word& w) {
    std::string key(w.size(), '\0');
    std::transform(w.begin(), w.end(), key.begin(), [](std::uint8_t c) { return static_cast<char>('a' + c); });
    return key;
}

Vec3 tangent_perpendicular(const HPoint& base, const Vec3& dir) {
    const Mat3 j = Vec3(-1.0, 1.0, 1.0).asDiagonal();
    Vec3 w = j * base.coords.cross(dir);
    return w / std::sqrt(minkowski(w, w));
}

double perturbation_angle(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> mag(1e-7, 1e-6);
    const double e = mag(rng);
    return (rng() & 1U) ? e : -e;
}

std::uint64_t mix(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

}  // namespace

double wrap_angle(double theta) {
    double t = std::fmod(theta, kTwoPi);
    if (t < 0.0) t += kTwoPi;
    return t;
}

ModelConstants compute_constants(int p, int q) {
    if (p < 5 || q < 3) {
        throw DomainError(fmt::format("building parameters need p >= 5 and q >= 3 (got p={}, q={})", p, q));
    }
    ModelConstants c;
    c.p = p;
    c.q = q;
    c.tau = std::acosh((p - 2) / 2.0);
    c.a = std::exp(c.tau);
    c.Q = 1.0 + std::log(q - 1.0) / c.tau;
    return c;
}

std::size_t CrossingSequence::count_within(double L) const {
    const auto it = std::upper_bound(crossings.begin(), crossings.end(), L,
                                     [](double v, const Crossing& c) { return v < c.s; });
    return static_cast<std::size_t>(it - crossings.begin());
}

Apartment::Apartment(int p, std::optional<HPoint> base)
    : polygon_(build_right_angled_polygon(p)), group_(p), automaton_(group_) {
    base_ = base ? *base : HPoint::polar(0.37 * polygon_.inradius(), 0.7137);
    for (const auto& side : polygon_.sides) {
        if (!(side.side(base_) < 0.0)) throw InvalidInputError("base point must lie inside the base chamber");
    }
    frame_ = HIsometry::boost_to(base_);
    for (const auto& side : polygon_.sides) reflections_.push_back(HIsometry::reflection(side));
}

HIsometry Apartment::chamber_isometry(const Word& word) const {
    HIsometry g;
    for (const std::uint8_t s : word) g = g * reflections_[s];
    return g;
}

Tessellation Apartment::generate_tessellation(int n_rings) const {
    if (n_rings < 0) throw InvalidInputError("n_rings must be nonnegative");
    const int p = polygon_.p;
    std::vector<Word> steps;
    for (int i = 0; i < p; ++i) {
        steps.push_back({static_cast<std::uint8_t>(i)});
        steps.push_back({static_cast<std::uint8_t>(i), static_cast<std::uint8_t>((i + 1) % p)});
    }

    Tessellation tess;
    tess.rings = n_rings;
    std::unordered_set<std::string> seen;
    std::vector<Chamber> frontier{Chamber{{}, HIsometry(), 0}};
    seen.insert("");
    tess.chambers.push_back(frontier.front());
    double coverage = kHorizonCap * 1e6;
    for (int ring = 1; ring <= n_rings + 1; ++ring) {
        std::vector<Chamber> next;
        for (const Chamber& c : frontier) {
            for (const Word& step : steps) {
                Word w = c.word;
                w.insert(w.end(), step.begin(), step.end());
                w = group_.normal_form(w);
                if (!seen.insert(word_key(w)).second) continue;
                HIsometry iso = c.iso;
                for (const std::uint8_t s : step) iso = iso * reflections_[s];
                next.push_back(Chamber{std::move(w), iso, ring});
            }
        }
        if (ring == n_rings + 1) {
            // Every path leaving rings <= n_rings runs through this ring.
            for (const Chamber& c : next) {
                const double d = dist(base_, c.iso.apply(HPoint::origin())) - polygon_.circumradius;
                coverage = std::min(coverage, d);
            }
        } else {
            tess.chambers.insert(tess.chambers.end(), next.begin(), next.end());
        }
        frontier = std::move(next);
    }
    tess.coverage_radius = std::max(0.0, coverage);
    return tess;
}

std::vector<Wall> Apartment::enumerate_walls(const Tessellation& tess, double R) const {
    if (R > tess.coverage_radius) {
        throw CoverageError(fmt::format("tessellation with {} rings covers radius {:.6g} < requested {:.6g}",
                                        tess.rings, tess.coverage_radius, R),
                            R);
    }
    std::vector<Wall> out;
    std::unordered_set<std::string> seen;
    for (const Chamber& c : tess.chambers) {
        for (int s = 0; s < polygon_.p; ++s) {
            std::string key = group_.reflection_key(c.word, s);
            if (seen.count(key)) continue;
            const HGeodesic g = c.iso.apply(polygon_.sides[s]);
            const HGeodesic unit = HGeodesic::from_normal(g.normal);
            if (std::asinh(std::abs(unit.side(base_))) > R) continue;
            seen.insert(key);
            out.push_back(Wall{static_cast<int>(out.size()), unit.canonical(), std::move(key)});
        }
    }
    return out;
}

CrossingSequence Apartment::trace(double theta, double L) const {
    CrossingSequence seq = trace(ray(theta), L);
    seq.theta = wrap_angle(theta);
    return seq;
}

CrossingSequence Apartment::trace(const Ray& r, double L) const {
    for (const auto& side : polygon_.sides) {
        if (!(side.side(r.base) < 0.0)) throw InvalidInputError("ray must start inside the base chamber");
    }
    CrossingSequence seq;
    seq.horizon = L;
    Vec3 x = r.base.coords;
    Vec3 d = r.direction;
    double travelled = 0.0;
    int last = -1;
    while (true) {
        double best = std::numeric_limits<double>::infinity();
        double second = best;
        int exit_side = -1;
        const Ray local{HPoint{x}, d};
        for (int j = 0; j < polygon_.p; ++j) {
            if (j == last) continue;
            const auto s = crossing_parameter(local, polygon_.sides[j]);
            if (!s) continue;
            if (*s < best) {
                second = best;
                best = *s;
                exit_side = j;
            } else if (*s < second) {
                second = *s;
            }
        }
        if (exit_side < 0) throw DegenerateCrossingError("ray does not leave its chamber");
        if (best <= kCrossingTol || second - best <= kCrossingTol) {
            throw DegenerateCrossingError(fmt::format("ray passes through a vertex at s = {:.9g}", travelled + best));
        }
        if (travelled + best > L) break;

        const HGeodesic& wall = polygon_.sides[exit_side];
        Vec3 y = std::cosh(best) * x + std::sinh(best) * d;
        Vec3 t = std::sinh(best) * x + std::cosh(best) * d;
        y -= 2.0 * minkowski(y, wall.normal) * wall.normal;
        t -= 2.0 * minkowski(t, wall.normal) * wall.normal;
        y /= std::sqrt(-minkowski(y, y));
        t += minkowski(t, y) * y;
        t /= std::sqrt(minkowski(t, t));

        travelled += best;
        seq.crossings.push_back(Crossing{group_.reflection_key(seq.gallery, exit_side), travelled, exit_side});
        seq.gallery.push_back(static_cast<std::uint8_t>(exit_side));
        x = y;
        d = t;
        last = exit_side;
    }
    return seq;
}

CrossingSequence Apartment::walls_crossed(double theta, double L, std::optional<std::uint64_t> perturb_seed) const {
    double th = theta;
    std::uint64_t seed = perturb_seed ? mix(*perturb_seed) : mix(std::bit_cast<std::uint64_t>(theta));
    if (perturb_seed) th += perturbation_angle(seed);
    for (int attempt = 0;; ++attempt) {
        try {
            return trace(th, L);
        } catch (const DegenerateCrossingError& e) {
            if (attempt + 1 >= kMaxPerturbations) {
                throw DegenerateCrossingError(fmt::format("direction {:.17g} stayed degenerate after {} perturbations: {}",
                                                          theta, kMaxPerturbations, e.what()));
            }
            seed = mix(seed + 1);
            th = theta + perturbation_angle(seed);
        }
    }
}

CrossingSequence Apartment::walls_crossed(const Ray& r, double L) const {
    std::uint64_t seed = mix(std::bit_cast<std::uint64_t>(r.direction[1]) ^ std::bit_cast<std::uint64_t>(r.direction[2]));
    Ray cur = r;
    const Vec3 perp = tangent_perpendicular(r.base, r.direction);
    for (int attempt = 0;; ++attempt) {
        try {
            return trace(cur, L);
        } catch (const DegenerateCrossingError& e) {
            if (attempt + 1 >= kMaxPerturbations) throw;
            seed = mix(seed + 1);
            const double eps = perturbation_angle(seed);
            cur.direction = std::cos(eps) * r.direction + std::sin(eps) * perp;
        }
    }
}

int gromov_product(const CrossingSequence& a, const CrossingSequence& b, double L) {
    const std::size_t na = a.count_within(L);
    const std::size_t nb = b.count_within(L);
    std::unordered_set<std::string_view> walls;
    walls.reserve(na);
    for (std::size_t i = 0; i < na; ++i) walls.insert(a.crossings[i].wall);
    int common = 0;
    for (std::size_t i = 0; i < nb; ++i) common += walls.count(b.crossings[i].wall) ? 1 : 0;
    return common;
}

int gromov_product(const Apartment& ap, double theta1, double theta2, double L) {
    return gromov_product(ap.walls_crossed(theta1, L), ap.walls_crossed(theta2, L), L);
}

StableProduct stable_gromov_product(const Apartment& ap, double theta1, double theta2, double L, double cap) {
    if (!(L > 0.0)) throw InvalidInputError("horizon must be positive");
    double h = std::min(L, cap);
    double traced = std::min(2.0 * h, cap);
    CrossingSequence a = ap.walls_crossed(theta1, traced);
    CrossingSequence b = ap.walls_crossed(theta2, traced);
    while (true) {
        const double h2 = std::min(2.0 * h, cap);
        if (h2 > traced) {
            traced = cap;
            a = ap.walls_crossed(theta1, traced);
            b = ap.walls_crossed(theta2, traced);
        }
        const int g1 = gromov_product(a, b, h);
        const int g2 = gromov_product(a, b, h2);
        if (g1 == g2) return StableProduct{g1, h};
        if (h2 >= cap) {
            throw ResolutionLimitError(
                fmt::format("Gromov product of directions {:.17g} and {:.17g} not stable at horizon cap {}", theta1,
                            theta2, cap),
                g2);
        }
        h = h2;
    }
}

double apartment_quasi_metric(const Apartment& ap, const ModelConstants& c, double theta1, double theta2, double L,
                              double cap) {
    if (wrap_angle(theta1) == wrap_angle(theta2)) return 0.0;
    return std::pow(c.a, -stable_gromov_product(ap, theta1, theta2, L, cap).value);
}

}  // namespace hyperbuild
