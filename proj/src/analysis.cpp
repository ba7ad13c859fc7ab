#include "hyperbuild/analysis.hpp"

#include "hyperbuild/errors.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <unordered_map>

namespace hyperbuild {

StepFunction StepFunction::from(std::vector<double> breakpoints, std::vector<double> values) {
    if (breakpoints.size() != values.size() + 1 || values.empty()) {
        throw InvalidInputError("step function needs n + 1 breakpoints for n values");
    }
    if (breakpoints.front() != 0.0) throw InvalidInputError("step function must start at 0");
    for (std::size_t i = 0; i + 1 < breakpoints.size(); ++i) {
        if (!(breakpoints[i + 1] > breakpoints[i])) throw InvalidInputError("breakpoints must increase");
    }
    for (const double v : values) {
        if (!(v >= 0.0) || !std::isfinite(v)) throw DomainError(fmt::format("step function value {} is not a nonnegative number", v));
    }
    return StepFunction{std::move(breakpoints), std::move(values)};
}

StepFunction StepFunction::random(std::mt19937_64& rng, double l, int max_pieces) {
    std::uniform_int_distribution<int> pieces(1, max_pieces);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const int n = pieces(rng);
    std::vector<double> cuts;
    while (static_cast<int>(cuts.size()) < n - 1) {
        const double c = l * unit(rng);
        if (c > 0.0 && c < l && std::find(cuts.begin(), cuts.end(), c) == cuts.end()) cuts.push_back(c);
    }
    std::sort(cuts.begin(), cuts.end());
    std::vector<double> bp{0.0};
    bp.insert(bp.end(), cuts.begin(), cuts.end());
    bp.push_back(l);
    std::vector<double> values(static_cast<std::size_t>(n));
    for (auto& v : values) {
        const double u = unit(rng);
        if (u < 0.25) {
            v = 0.0;
        } else if (u < 0.5) {
            v = unit(rng);
        } else {
            v = std::exp(6.0 * (unit(rng) - 0.5));
        }
    }
    if (std::all_of(values.begin(), values.end(), [](double v) { return v == 0.0; })) values[0] = 1.0;
    return from(std::move(bp), std::move(values));
}

double StepFunction::integral() const {
    double total = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) total += values[i] * (breakpoints[i + 1] - breakpoints[i]);
    return total;
}

StepFunction StepFunction::reflected() const {
    const double l = length();
    std::vector<double> bp;
    for (auto it = breakpoints.rbegin(); it != breakpoints.rend(); ++it) bp.push_back(l - *it);
    bp.front() = 0.0;
    bp.back() = l;
    return StepFunction{std::move(bp), std::vector<double>(values.rbegin(), values.rend())};
}

StepFunction StepFunction::scaled(double s) const {
    std::vector<double> bp = breakpoints;
    for (auto& b : bp) b *= s;
    return StepFunction{std::move(bp), values};
}

namespace {

// sup over 0 < r <= l of r^{-Q} int_0^r phi^{Q-1} f.
double left_supremum(const StepFunction& f, double l, double Q) {
    const double half = 0.5 * l;
    // Pieces split at l/2 so that phi has one closed form on each.
    std::vector<double> cuts = f.breakpoints;
    cuts.back() = l;
    if (std::find(cuts.begin(), cuts.end(), half) == cuts.end()) cuts.insert(std::upper_bound(cuts.begin(), cuts.end(), half), half);

    auto value_at = [&](double mid) {
        const auto it = std::upper_bound(f.breakpoints.begin(), f.breakpoints.end(), mid);
        const auto idx = static_cast<std::size_t>(std::max<std::ptrdiff_t>(0, it - f.breakpoints.begin() - 1));
        return f.values[std::min(idx, f.values.size() - 1)];
    };
    auto antideriv = [&](double r) {
        return r <= half ? std::pow(r, Q) / Q : 2.0 * std::pow(half, Q) / Q - std::pow(l - r, Q) / Q;
    };

    double best = value_at(0.5 * cuts[1]) / Q;  // limit r -> 0
    double F = 0.0;
    for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
        const double a = cuts[k];
        const double b = cuts[k + 1];
        const double v = value_at(0.5 * (a + b));
        const double Fa = F;
        auto Fr = [&](double r) { return Fa + v * (antideriv(r) - antideriv(a)); };
        F = Fr(b);
        best = std::max(best, F / std::pow(b, Q));
        if (a >= half && v > 0.0) {
            // r^{-Q} F(r) is stationary where v phi(r)^{Q-1} r = Q F(r); the
            // difference is decreasing on this piece.
            auto h = [&](double r) { return v * std::pow(l - r, Q - 1.0) * r - Q * Fr(r); };
            double lo = a;
            double hi = b;
            if (h(lo) > 0.0 && h(hi) < 0.0) {
                for (int it = 0; it < 200 && hi - lo > 1e-16 * l; ++it) {
                    const double mid = 0.5 * (lo + hi);
                    (h(mid) > 0.0 ? lo : hi) = mid;
                }
                const double r = 0.5 * (lo + hi);
                best = std::max(best, Fr(r) / std::pow(r, Q));
            }
        }
    }
    return best;
}

}  // namespace

Lemma5Result lemma5_check(const StepFunction& f, double l, double Q) {
    if (!(l > 0.0)) throw DomainError("interval length must be positive");
    if (!(Q >= 1.0)) throw DomainError("exponent Q must be at least 1");
    if (std::abs(f.length() - l) > 1e-12 * l) throw InvalidInputError("step function does not span [0, l]");
    for (const double v : f.values) {
        if (v < 0.0) throw DomainError("step function has a negative value");
    }
    Lemma5Result out;
    out.lhs = f.integral() / l;
    out.s_left = left_supremum(f, l, Q);
    out.s_right = left_supremum(f.reflected(), l, Q);
    const double denom = out.s_left + out.s_right;
    out.ratio = denom > 0.0 ? out.lhs / denom : 0.0;
    return out;
}

double maximal_function(const std::vector<double>& dist, const std::vector<double>& weights,
                        const std::vector<double>& g, double R) {
    if (dist.size() != weights.size() || dist.size() != g.size()) throw InvalidInputError("size mismatch");
    std::vector<std::size_t> order(dist.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return dist[a] < dist[b]; });
    double mass = 0.0;
    double integral = 0.0;
    double best = -std::numeric_limits<double>::infinity();
    bool any = false;
    for (std::size_t i = 0; i < order.size(); ++i) {
        const std::size_t j = order[i];
        if (!(dist[j] < R)) break;
        mass += weights[j];
        integral += weights[j] * g[j];
        const bool last_of_radius = i + 1 == order.size() || dist[order[i + 1]] != dist[j];
        if (last_of_radius && mass > 0.0) {
            best = std::max(best, integral / mass);
            any = true;
        }
    }
    if (!any) throw UndefinedValueError(fmt::format("every ball of radius < {:.9g} is empty", R));
    return best;
}

double maximal_function(const BoundaryAtlas& atlas, const std::vector<double>& g, const CodedPoint& xi, double R) {
    std::vector<double> d(atlas.points.size());
    for (std::size_t j = 0; j < d.size(); ++j) d[j] = quasi_metric(xi, atlas.points[j], atlas.constants);
    return maximal_function(d, atlas.weights, g, R);
}

GradientField upper_gradient(const std::vector<ConeEdge>& edges, const std::vector<double>& u) {
    GradientField g;
    g.rho.reserve(edges.size());
    for (std::size_t e = 0; e < edges.size(); ++e) {
        const auto& edge = edges[e];
        if (!(edge.length > 0.0)) throw InvalidInputError(fmt::format("edge {} has nonpositive length", e));
        g.rho.push_back(std::abs(u.at(static_cast<std::size_t>(edge.from)) - u.at(static_cast<std::size_t>(edge.to))) /
                        edge.length);
    }
    return g;
}

std::vector<double> node_density(const ConeGraph& cone, const GradientField& g) {
    std::vector<double> rho(cone.nodes.size(), 0.0);
    for (std::size_t v = 0; v < cone.nodes.size(); ++v) {
        for (const int e : cone.adjacency[v]) rho[v] = std::max(rho[v], g.rho[static_cast<std::size_t>(e)]);
    }
    return rho;
}

FiberAverage fiber_average_bound(const ConeGraph& cone, const std::vector<double>& u, const GradientField& rho) {
    if (rho.rho.size() != cone.edges.size() || u.size() != cone.nodes.size()) throw InvalidInputError("size mismatch");
    for (std::size_t e = 0; e < cone.edges.size(); ++e) {
        const auto& edge = cone.edges[e];
        const double jump = std::abs(u[static_cast<std::size_t>(edge.from)] - u[static_cast<std::size_t>(edge.to)]);
        if (jump > rho.rho[e] * edge.length * (1.0 + 1e-12) + 1e-300) {
            throw PreconditionError(fmt::format("density is not an upper gradient on edge {} ({} -> {})", e, edge.from, edge.to));
        }
    }
    const std::size_t levels = cone.level_nodes.size();
    FiberAverage out;
    const int xi = cone.level_nodes.front().front();
    const int eta = cone.level_nodes.back().front();
    out.lhs = std::abs(u[static_cast<std::size_t>(xi)] - u[static_cast<std::size_t>(eta)]);

    std::vector<double> step_sum(levels, 0.0);
    std::vector<std::size_t> step_count(levels, 0);
    std::unordered_map<std::uint64_t, int> edge_of;
    for (std::size_t e = 0; e < cone.edges.size(); ++e) {
        const auto& edge = cone.edges[e];
        const auto lv = static_cast<std::size_t>(cone.nodes[static_cast<std::size_t>(edge.from)].level);
        step_sum[lv] += rho.rho[e];
        ++step_count[lv];
        edge_of.emplace((static_cast<std::uint64_t>(edge.from) << 32) | static_cast<std::uint32_t>(edge.to), static_cast<int>(e));
    }
    for (std::size_t lv = 0; lv + 1 < levels; ++lv) {
        const double dt = cone.segment.t[lv + 1] - cone.segment.t[lv];
        out.rhs += dt * step_sum[lv] / static_cast<double>(step_count[lv]);
    }

    double curve_total = 0.0;
    for (std::uint64_t h = 0; h < cone.curve_count; ++h) {
        const auto path = cone.curve(h);
        double integral = 0.0;
        for (std::size_t lv = 0; lv + 1 < path.size(); ++lv) {
            const auto key = (static_cast<std::uint64_t>(path[lv]) << 32) | static_cast<std::uint32_t>(path[lv + 1]);
            const auto e = static_cast<std::size_t>(edge_of.at(key));
            integral += rho.rho[e] * cone.edges[e].length;
        }
        curve_total += integral;
    }
    out.curve_mean = curve_total / static_cast<double>(cone.curve_count);
    out.fubini_gap = std::abs(out.rhs - out.curve_mean);
    return out;
}

BoundaryAtlas cone_points(const ConeGraph& cone, const ModelConstants& c) {
    BoundaryAtlas pts;
    pts.constants = c;
    for (const auto& n : cone.nodes) {
        pts.points.push_back(n.point);
        pts.weights.push_back(n.measure);
    }
    return pts;
}

PointwisePoincare pointwise_poincare(const BoundaryAtlas& points, const std::vector<double>& u,
                                     const std::vector<double>& rho, int xi, int eta, double R) {
    const auto& zx = points.points.at(static_cast<std::size_t>(xi));
    const auto& ze = points.points.at(static_cast<std::size_t>(eta));
    PointwisePoincare out;
    out.lhs = std::abs(u[static_cast<std::size_t>(xi)] - u[static_cast<std::size_t>(eta)]);
    out.distance = quasi_metric(zx, ze, points.constants);
    if (R < out.distance) throw InvalidInputError("maximal-function radius must be at least d(xi, eta)");
    out.max_xi = maximal_function(points, rho, zx, R);
    out.max_eta = maximal_function(points, rho, ze, R);
    const double denom = out.distance * (out.max_xi + out.max_eta);
    if (denom > 0.0) {
        out.constant = out.lhs / denom;
    } else if (out.lhs > 0.0) {
        out.constant = std::numeric_limits<double>::infinity();
        out.violated = true;
    }
    return out;
}

BallPoincare ball_poincare(const BoundaryAtlas& points, const std::vector<double>& u, const std::vector<double>& rho,
                           int center, double radius, double C0, double alpha) {
    if (!(alpha >= 1.0)) throw DomainError("alpha must be at least 1");
    const auto& zc = points.points.at(static_cast<std::size_t>(center));
    std::vector<std::size_t> ball;
    double big_mass = 0.0;
    double big_power = 0.0;
    for (std::size_t j = 0; j < points.points.size(); ++j) {
        const double d = quasi_metric(zc, points.points[j], points.constants);
        if (d <= radius) ball.push_back(j);
        if (d <= C0 * radius) {
            big_mass += points.weights[j];
            big_power += points.weights[j] * std::pow(rho[j], alpha);
        }
    }
    if (ball.size() < kMinBallPoints) {
        throw UndersampledError(fmt::format("ball of radius {:.9g} holds {} points (< {})", radius, ball.size(), kMinBallPoints));
    }
    BallPoincare out;
    out.count = ball.size();
    // Offsets from one sample keep a constant u at lhs = 0 exactly.
    const double u0 = u[ball.front()];
    double mass = 0.0;
    double shift = 0.0;
    for (const auto j : ball) {
        mass += points.weights[j];
        shift += points.weights[j] * (u[j] - u0);
    }
    shift /= mass;
    for (const auto j : ball) out.lhs += points.weights[j] * std::abs((u[j] - u0) - shift);
    out.lhs /= mass;
    for (std::size_t i = 0; i < ball.size(); ++i) {
        for (std::size_t k = i + 1; k < ball.size(); ++k) {
            out.diameter = std::max(out.diameter, quasi_metric(points.points[ball[i]], points.points[ball[k]], points.constants));
        }
    }
    out.rhs = out.diameter * std::pow(big_power / big_mass, 1.0 / alpha);
    return out;
}

std::vector<TestFunction> test_suite(const ConeGraph& cone, const ModelConstants& c, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    const std::size_t n = cone.nodes.size();
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    // Anchors are drawn as (curve, mass fraction) so that a refined cone gets the same functions.
    std::uniform_int_distribution<std::uint64_t> curve(0, cone.curve_count - 1);
    const auto last = static_cast<double>(cone.level_nodes.size() - 1);
    auto pick = [&](std::mt19937_64& g) {
        const auto h = curve(g);
        const double frac = unit(g);
        return static_cast<std::size_t>(cone.curve(h)[static_cast<std::size_t>(std::lround(frac * last))]);
    };
    const double l = cone.segment.l;
    auto dist_to = [&](std::size_t anchor) {
        std::vector<double> d(n);
        for (std::size_t v = 0; v < n; ++v) d[v] = quasi_metric(cone.nodes[v].point, cone.nodes[anchor].point, c);
        return d;
    };
    const double scale = quasi_metric(cone.nodes[static_cast<std::size_t>(cone.level_nodes.front().front())].point,
                                      cone.nodes[static_cast<std::size_t>(cone.level_nodes.back().front())].point, c);

    std::vector<TestFunction> suite;
    for (int k = 0; k < 5; ++k) suite.push_back({"distance", dist_to(pick(rng))});

    std::vector<double> t(n);
    for (std::size_t v = 0; v < n; ++v) t[v] = cone.nodes[v].t;
    suite.push_back({"coordinate", t});
    std::vector<double> sq(n);
    std::vector<double> wave(n);
    for (std::size_t v = 0; v < n; ++v) {
        sq[v] = (t[v] / l) * (t[v] / l);
        wave[v] = std::sin(std::numbers::pi * t[v] / l);
    }
    suite.push_back({"coordinate", sq});
    suite.push_back({"coordinate", wave});

    for (int k = 0; k < 6; ++k) {
        std::vector<double> u(n, std::numeric_limits<double>::infinity());
        for (int a = 0; a < 3; ++a) {
            const auto d = dist_to(pick(rng));
            const double offset = unit(rng) * scale;
            const double slope = 0.5 + 2.0 * unit(rng);
            for (std::size_t v = 0; v < n; ++v) u[v] = std::min(u[v], offset + slope * d[v]);
        }
        suite.push_back({"lipschitz", u});
    }
    for (int k = 0; k < 6; ++k) {
        const auto d = dist_to(pick(rng));
        const double width = scale * (0.05 + unit(rng));
        std::vector<double> u(n);
        for (std::size_t v = 0; v < n; ++v) u[v] = std::exp(-(d[v] / width) * (d[v] / width));
        suite.push_back({"bump", u});
    }
    return suite;
}

}  // namespace hyperbuild
