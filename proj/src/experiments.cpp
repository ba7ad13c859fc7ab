#include "hyperbuild/experiments.hpp"

#include "hyperbuild/analysis.hpp"
#include "hyperbuild/errors.hpp"
#include "hyperbuild/modulus.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <numbers>
#include <random>

namespace hyperbuild {

namespace {

using json = nlohmann::ordered_json;
constexpr double kInf = std::numeric_limits<double>::infinity();

// Rounds to the printed precision so summary.json agrees with the CSV.
json jnum(double x) {
    if (!std::isfinite(x)) return format_number(x);
    return std::stod(format_number(x));
}

std::string cell(double x) { return format_number(x); }
std::string cell(int x) { return std::to_string(x); }
std::string cell(std::size_t x) { return std::to_string(x); }
std::string cell(bool x) { return x ? "1" : "0"; }

template <typename... Ts>
std::vector<std::string> row(const Ts&... xs) {
    return {cell(xs)...};
}

struct Gate {
    CheckReport& r;
    void hard(bool ok, const std::string& what) {
        if (ok) return;
        r.status = Status::Fail;
        r.notes.push_back("hard: " + what);
    }
    void soft(bool ok, const std::string& what) {
        if (ok) return;
        if (r.status == Status::Pass) r.status = Status::Warn;
        r.notes.push_back(what);
    }
};

CheckReport start(std::string name, std::vector<std::string> columns) {
    CheckReport r;
    r.check = std::move(name);
    r.table.columns = std::move(columns);
    return r;
}

double rel_diff(double x, double ref) { return std::abs(x - ref) / std::max(std::abs(ref), 1e-300); }

double segment_eta(const RunConfig& c) { return c.segment_xi + c.segment_span; }

// ---------------------------------------------------------------- config

using Setter = std::function<void(RunConfig&, const nlohmann::json&)>;

template <typename T>
Setter field(T RunConfig::*member) {
    return [member](RunConfig& c, const nlohmann::json& v) {
        if constexpr (std::is_same_v<T, std::string>) {
            if (!v.is_string()) throw InvalidInputError("expected a string");
        } else if constexpr (std::is_same_v<T, double>) {
            if (!v.is_number()) throw InvalidInputError("expected a number");
        } else if constexpr (std::is_same_v<T, std::vector<double>>) {
            if (!v.is_array()) throw InvalidInputError("expected an array of numbers");
            for (const auto& x : v)
                if (!x.is_number()) throw InvalidInputError("expected an array of numbers");
        } else {
            if (!v.is_number_integer()) throw InvalidInputError("expected an integer");
            if constexpr (std::is_unsigned_v<T>)
                if (v.is_number_integer() && !v.is_number_unsigned()) throw InvalidInputError("expected a nonnegative integer");
        }
        c.*member = v.get<T>();
    };
}

const std::map<std::string, Setter, std::less<>>& setters() {
    static const std::map<std::string, Setter, std::less<>> table = {
        {"p", field(&RunConfig::p)},
        {"q", field(&RunConfig::q)},
        {"seed", field(&RunConfig::seed)},
        {"tessellation_rings", field(&RunConfig::tessellation_rings)},
        {"horizon_L", field(&RunConfig::horizon_L)},
        {"atlas_size", field(&RunConfig::atlas_size)},
        {"segment_samples", field(&RunConfig::segment_samples)},
        {"cone_depth_cap", field(&RunConfig::cone_depth_cap)},
        {"modulus_tol", field(&RunConfig::modulus_tol)},
        {"C0", field(&RunConfig::C0)},
        {"output_dir", field(&RunConfig::output_dir)},
        {"rays", field(&RunConfig::rays)},
        {"ray_horizon", field(&RunConfig::ray_horizon)},
        {"identity_triples", field(&RunConfig::identity_triples)},
        {"identity_horizon", field(&RunConfig::identity_horizon)},
        {"lemma4_grid", field(&RunConfig::lemma4_grid)},
        {"segment_xi", field(&RunConfig::segment_xi)},
        {"segment_span", field(&RunConfig::segment_span)},
        {"lemma4_band", field(&RunConfig::lemma4_band)},
        {"lemma5_functions", field(&RunConfig::lemma5_functions)},
        {"lemma5_pieces", field(&RunConfig::lemma5_pieces)},
        {"ahlfors_centers", field(&RunConfig::ahlfors_centers)},
        {"ahlfors_k_min", field(&RunConfig::ahlfors_k_min)},
        {"ahlfors_k_max", field(&RunConfig::ahlfors_k_max)},
        {"slope_tolerance", field(&RunConfig::slope_tolerance)},
        {"modulus_graphs", field(&RunConfig::modulus_graphs)},
        {"modulus_max_nodes", field(&RunConfig::modulus_max_nodes)},
        {"loewner_atlas_size", field(&RunConfig::loewner_atlas_size)},
        {"loewner_level", field(&RunConfig::loewner_level)},
        {"loewner_pairs", field(&RunConfig::loewner_pairs)},
        {"loewner_tol", field(&RunConfig::loewner_tol)},
        {"loewner_t", field(&RunConfig::loewner_t)},
        {"loewner_factor", field(&RunConfig::loewner_factor)},
        {"poincare_balls", field(&RunConfig::poincare_balls)},
        {"stability_factor", field(&RunConfig::stability_factor)},
    };
    return table;
}

void require(bool ok, const std::string& what) {
    if (!ok) throw InvalidInputError("config: " + what);
}

}  // namespace

void RunConfig::validate() const {
    require(p >= 5, "p must be at least 5");
    require(q >= 3, "q must be at least 3");
    require(tessellation_rings >= 1, "tessellation_rings must be positive");
    require(horizon_L > 0 && ray_horizon > 0 && identity_horizon > 0, "horizons must be positive");
    require(atlas_size >= 1 && loewner_atlas_size >= 2, "atlas sizes must be positive");
    require(segment_samples >= 2 && lemma4_grid >= 2, "segment grids need at least 2 steps");
    require(cone_depth_cap >= 0, "cone_depth_cap must be nonnegative");
    require(modulus_tol > 0 && loewner_tol > 0, "tolerances must be positive");
    require(C0 >= 1, "C0 must be at least 1");
    require(rays >= 1 && identity_triples >= 1, "sample counts must be positive");
    require(segment_span > 0 && segment_span < std::numbers::pi, "segment_span must lie in (0, pi)");
    require(lemma4_band > 1 && loewner_factor >= 1 && stability_factor >= 1, "band factors must exceed 1");
    require(lemma5_functions >= 1 && lemma5_pieces >= 1, "lemma5 sizes must be positive");
    require(ahlfors_centers >= 1 && ahlfors_k_min >= 0 && ahlfors_k_max > ahlfors_k_min, "bad Ahlfors range");
    require(slope_tolerance > 0, "slope_tolerance must be positive");
    require(modulus_graphs >= 0 && modulus_max_nodes >= 4 && modulus_max_nodes <= 16, "modulus_max_nodes must lie in [4, 16]");
    require(loewner_level >= 2, "loewner_level must be at least 2");
    require(loewner_pairs >= 1 && !loewner_t.empty(), "loewner needs pairs and t values");
    for (double t : loewner_t) require(t > 0, "loewner_t values must be positive");
    require(poincare_balls >= 1, "poincare_balls must be positive");
}

RunConfig parse_config(std::string_view json_text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::parse_error& e) {
        throw InvalidInputError(std::string("config is not valid JSON: ") + e.what());
    }
    if (!doc.is_object()) throw InvalidInputError("config must be a JSON object");
    RunConfig c;
    for (const auto& [key, value] : doc.items()) {
        const auto it = setters().find(key);
        if (it == setters().end()) throw InvalidInputError("unknown config key '" + key + "'");
        try {
            it->second(c, value);
        } catch (const InvalidInputError& e) {
            throw InvalidInputError("config key '" + key + "': " + e.what());
        }
    }
    c.validate();
    return c;
}

nlohmann::ordered_json to_json(const RunConfig& c) {
    return json{
        {"p", c.p},
        {"q", c.q},
        {"seed", c.seed},
        {"tessellation_rings", c.tessellation_rings},
        {"horizon_L", c.horizon_L},
        {"atlas_size", c.atlas_size},
        {"segment_samples", c.segment_samples},
        {"cone_depth_cap", c.cone_depth_cap},
        {"modulus_tol", c.modulus_tol},
        {"C0", c.C0},
        {"output_dir", c.output_dir},
        {"rays", c.rays},
        {"ray_horizon", c.ray_horizon},
        {"identity_triples", c.identity_triples},
        {"identity_horizon", c.identity_horizon},
        {"lemma4_grid", c.lemma4_grid},
        {"segment_xi", c.segment_xi},
        {"segment_span", c.segment_span},
        {"lemma4_band", c.lemma4_band},
        {"lemma5_functions", c.lemma5_functions},
        {"lemma5_pieces", c.lemma5_pieces},
        {"ahlfors_centers", c.ahlfors_centers},
        {"ahlfors_k_min", c.ahlfors_k_min},
        {"ahlfors_k_max", c.ahlfors_k_max},
        {"slope_tolerance", c.slope_tolerance},
        {"modulus_graphs", c.modulus_graphs},
        {"modulus_max_nodes", c.modulus_max_nodes},
        {"loewner_atlas_size", c.loewner_atlas_size},
        {"loewner_level", c.loewner_level},
        {"loewner_pairs", c.loewner_pairs},
        {"loewner_tol", c.loewner_tol},
        {"loewner_t", c.loewner_t},
        {"loewner_factor", c.loewner_factor},
        {"poincare_balls", c.poincare_balls},
        {"stability_factor", c.stability_factor},
    };
}

std::string_view to_string(Status s) noexcept {
    switch (s) {
        case Status::Pass: return "pass";
        case Status::Warn: return "warn";
        case Status::Fail: return "fail";
    }
    return "fail";
}

std::string format_number(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    if (x == 0.0) return "0";
    return fmt::format("{:.9g}", x);
}

// ---------------------------------------------------------------- dim

CheckReport run_dim(const RunConfig& c) {
    auto r = start("dim", {"p", "q", "Q", "a"});
    Gate gate{r};
    double worst = 0.0;
    bool monotone = true;
    for (int p = 5; p <= 12; ++p) {
        double prev_Q = 0.0;
        for (int q = 3; q <= 6; ++q) {
            const auto k = compute_constants(p, q);
            r.table.rows.push_back(row(p, q, k.Q, k.a));
            // (Q - 1) log a = log(q - 1) ties the two constants together.
            worst = std::max(worst, std::abs((k.Q - 1.0) * std::log(k.a) - std::log(q - 1.0)));
            gate.hard(k.Q > 1.0, fmt::format("Q({},{}) <= 1", p, q));
            if (k.Q <= prev_Q) monotone = false;
            prev_Q = k.Q;
        }
    }
    gate.hard(worst < 1e-12, "(Q-1) log a differs from log(q-1)");
    gate.hard(monotone, "Q not increasing in q");
    const auto k = compute_constants(c.p, c.q);
    r.values["p"] = c.p;
    r.values["q"] = c.q;
    r.values["Q"] = jnum(k.Q);
    r.values["a"] = jnum(k.a);
    r.values["identity_residual"] = jnum(worst);
    return r;
}

// ---------------------------------------------------------------- polygon

CheckReport run_polygon(const RunConfig&) {
    auto r = start("polygon", {"p", "circumradius", "side_length", "cosh_side", "expected_cosh_side", "max_angle_error"});
    Gate gate{r};
    double worst_angle = 0.0, worst_side = 0.0;
    for (int p = 5; p <= 12; ++p) {
        const auto poly = build_right_angled_polygon(p);
        double angle_err = 0.0;
        for (int k = 0; k < p; ++k)
            angle_err = std::max(angle_err, std::abs(poly.interior_angle(k) - std::numbers::pi / 2));
        const double side = poly.side_length();
        const double cp = std::cos(std::numbers::pi / p);
        const double expected = 4.0 * cp * cp - 1.0;
        r.table.rows.push_back(row(p, poly.circumradius, side, std::cosh(side), expected, angle_err));
        worst_angle = std::max(worst_angle, angle_err);
        worst_side = std::max(worst_side, std::abs(std::cosh(side) - expected));
    }
    gate.hard(worst_angle <= 1e-9, "interior angle differs from pi/2 by more than 1e-9");
    gate.hard(worst_side <= 1e-6, "cosh(side) differs from 4cos^2(pi/p)-1 by more than 1e-6");
    r.values["max_angle_error"] = jnum(worst_angle);
    r.values["max_cosh_side_error"] = jnum(worst_side);
    return r;
}

// ---------------------------------------------------------------- apartment

CheckReport run_apartment(const RunConfig& c) {
    auto r = start("apartment", {"ray", "theta", "crossings", "mean_gap"});
    Gate gate{r};
    const Apartment ap(c.p);
    const auto tess = ap.generate_tessellation(c.tessellation_rings);
    const double R = tess.coverage_radius;

    json counts = json::array();
    std::size_t prev = 0;
    bool increasing = true;
    std::vector<Wall> walls;
    for (int i = 1; i <= 4; ++i) {
        walls = ap.enumerate_walls(tess, R * i / 4.0);
        counts.push_back(walls.size());
        if (i > 1 && walls.size() < prev) increasing = false;
        prev = walls.size();
    }
    gate.hard(increasing, "wall count decreases with the radius");

    // Walls of a compact right-angled tiling either meet orthogonally or are ultraparallel.
    double worst_cos = 0.0;
    std::size_t meeting = 0;
    for (std::size_t i = 0; i < walls.size(); ++i)
        for (std::size_t j = i + 1; j < walls.size(); ++j) {
            const double ip = std::abs(minkowski(walls[i].geod.normal, walls[j].geod.normal));
            if (ip < 1.0) {
                ++meeting;
                worst_cos = std::max(worst_cos, ip);
            }
        }
    gate.hard(worst_cos <= 1e-8, "intersecting walls are not orthogonal");

    const BoundaryMeasure nu(ap);
    std::mt19937_64 rng(c.seed);
    double gap_sum = 0.0;
    std::size_t gap_count = 0;
    for (int i = 0; i < c.rays; ++i) {
        const double theta = nu.sample(rng);
        const auto seq = ap.walls_crossed(theta, c.ray_horizon);
        const auto& xs = seq.crossings;
        double mean = 0.0;
        if (xs.size() >= 2) {
            const double span = xs.back().s - xs.front().s;
            gap_sum += span;
            gap_count += xs.size() - 1;
            mean = span / static_cast<double>(xs.size() - 1);
        }
        r.table.rows.push_back(row(i, seq.theta, xs.size(), mean));
    }
    const double expected = std::acosh((c.p - 2) / 2.0);
    const double mean_gap = gap_count ? gap_sum / static_cast<double>(gap_count) : kInf;
    const double dev = rel_diff(mean_gap, expected);
    gate.soft(dev <= 0.05, fmt::format("mean crossing gap {} is more than 5% from {}", format_number(mean_gap),
                                       format_number(expected)));

    r.values["coverage_radius"] = jnum(R);
    r.values["chambers"] = tess.chambers.size();
    r.values["wall_counts"] = counts;
    r.values["meeting_wall_pairs"] = meeting;
    r.values["max_meeting_cosine"] = jnum(worst_cos);
    r.values["mean_gap"] = jnum(mean_gap);
    r.values["expected_gap"] = jnum(expected);
    r.values["relative_deviation"] = jnum(dev);
    return r;
}

// ---------------------------------------------------------------- identity

CheckReport run_identity(const RunConfig& c) {
    auto r = start("identity", {"triple", "xi", "t", "eta", "N", "g_xi_t", "g_t_eta", "g_xi_eta", "holds"});
    Gate gate{r};
    const Apartment ap(c.p);
    const BoundaryMeasure nu(ap);
    std::mt19937_64 rng(c.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    int violations = 0;
    for (int i = 0; i < c.identity_triples; ++i) {
        const double xi = nu.sample(rng);
        const double eta = nu.sample(rng);
        // t uniform on the shorter arc between xi and eta
        const Arc ccw = Arc::between(xi, eta);
        const double u = unit(rng);
        const double t = ccw.length <= std::numbers::pi ? wrap_angle(xi + u * ccw.length)
                                                        : wrap_angle(xi - u * (2 * std::numbers::pi - ccw.length));
        const auto id = n_identity(ap, t, xi, eta, c.identity_horizon);
        if (!id.holds) ++violations;
        r.table.rows.push_back(row(i, xi, t, eta, id.N, id.g_xi_t, id.g_t_eta, id.g_xi_eta, id.holds));
    }
    gate.hard(violations == 0, fmt::format("{} triples violate the identity", violations));
    r.values["triples"] = c.identity_triples;
    r.values["violations"] = violations;
    return r;
}

// ---------------------------------------------------------------- lemma4

namespace {

struct Band {
    double lo = kInf;
    double hi = 0.0;
    double refined_lo = kInf;
    double refined_hi = 0.0;
};

Band lemma4_band(const Apartment& ap, const BoundaryMeasure& nu, const ModelConstants& k, const RunConfig& c, int m,
                 CheckReport* r) {
    const auto seg = parametrize_segment(nu, c.segment_xi, segment_eta(c), m);
    Band b;
    // interior points only: the endpoints are clamped away by one step
    for (int j = 1; j < m; ++j) {
        const auto flags = classify_crossings(ap, seg.theta[j], seg.xi, seg.eta, c.horizon_L);
        const auto q = lemma4_ratio(seg.t[j], seg.l, flags, k);
        b.lo = std::min(b.lo, q.ratio);
        b.hi = std::max(b.hi, q.ratio);
        b.refined_lo = std::min(b.refined_lo, q.refined_ratio);
        b.refined_hi = std::max(b.refined_hi, q.refined_ratio);
        if (r) r->table.rows.push_back(row(m, j, seg.t[j], seg.theta[j], flags.N, q.gamma, q.ratio, q.refined_ratio));
    }
    return b;
}

}  // namespace

CheckReport run_lemma4(const RunConfig& c) {
    auto r = start("lemma4", {"m", "j", "t", "theta", "N", "gamma", "ratio", "refined_ratio"});
    Gate gate{r};
    const Apartment ap(c.p);
    const BoundaryMeasure nu(ap);
    const auto k = compute_constants(c.p, c.q);
    // a 50-point interior grid needs 51 steps
    const int m = c.lemma4_grid + 1;
    const Band base = lemma4_band(ap, nu, k, c, m, &r);
    const Band doubled = lemma4_band(ap, nu, k, c, 2 * m, &r);
    const double ratio = base.hi / base.lo;
    const double move_lo = rel_diff(doubled.lo, base.lo);
    const double move_hi = rel_diff(doubled.hi, base.hi);
    gate.soft(ratio <= c.lemma4_band, fmt::format("band ratio {} exceeds {}", format_number(ratio), format_number(c.lemma4_band)));
    gate.soft(std::max(move_lo, move_hi) < 0.1, "band endpoints move by 10% or more under grid doubling");
    r.values["xi"] = jnum(c.segment_xi);
    r.values["eta"] = jnum(segment_eta(c));
    r.values["band_min"] = jnum(base.lo);
    r.values["band_max"] = jnum(base.hi);
    r.values["band_ratio"] = jnum(ratio);
    r.values["refined_band_ratio"] = jnum(base.refined_hi / base.refined_lo);
    r.values["doubled_band_min"] = jnum(doubled.lo);
    r.values["doubled_band_max"] = jnum(doubled.hi);
    r.values["endpoint_move_min"] = jnum(move_lo);
    r.values["endpoint_move_max"] = jnum(move_hi);
    return r;
}

// ---------------------------------------------------------------- lemma5

CheckReport run_lemma5(const RunConfig& c) {
    auto r = start("lemma5", {"function", "pieces", "lhs", "s_left", "s_right", "ratio", "scale", "scaled_ratio"});
    Gate gate{r};
    const auto k = compute_constants(c.p, c.q);
    const double bound = std::pow(2.0, k.Q - 1.0);
    std::mt19937_64 rng(c.seed);
    std::uniform_real_distribution<double> log_scale(std::log(0.1), std::log(10.0));
    double worst = 0.0, worst_scaling = 0.0;
    int violations = 0;
    for (int i = 0; i < c.lemma5_functions; ++i) {
        const auto f = StepFunction::random(rng, 1.0, c.lemma5_pieces);
        const auto res = lemma5_check(f, 1.0, k.Q);
        const double s = std::exp(log_scale(rng));
        const auto scaled = lemma5_check(f.scaled(s), s, k.Q);
        const double drift = rel_diff(scaled.ratio, res.ratio);
        if (res.ratio > bound) ++violations;
        worst = std::max(worst, res.ratio);
        worst_scaling = std::max(worst_scaling, drift);
        r.table.rows.push_back(row(i, f.values.size(), res.lhs, res.s_left, res.s_right, res.ratio, s, scaled.ratio));
    }
    gate.hard(violations == 0, fmt::format("{} functions exceed 2^(Q-1)", violations));
    gate.hard(worst_scaling <= 1e-12, "ratio changes under rescaling by more than 1e-12");
    r.values["functions"] = c.lemma5_functions;
    r.values["bound"] = jnum(bound);
    r.values["max_ratio"] = jnum(worst);
    r.values["violations"] = violations;
    r.values["max_scaling_drift"] = jnum(worst_scaling);
    return r;
}

// ---------------------------------------------------------------- regularity

CheckReport run_regularity(const RunConfig& c) {
    auto r = start("regularity", {"center", "k", "radius", "mass", "ratio"});
    Gate gate{r};
    const Apartment ap(c.p);
    const auto k = compute_constants(c.p, c.q);
    const BoundaryMeasure nu(ap);
    const auto atlas = sample_boundary(nu, k, c.atlas_size, c.seed, c.horizon_L);
    const auto n_centers = std::min<std::size_t>(static_cast<std::size_t>(c.ahlfors_centers), atlas.points.size());
    const std::vector<CodedPoint> centers(atlas.points.begin(), atlas.points.begin() + static_cast<long>(n_centers));

    std::vector<int> ks;
    for (int j = c.ahlfors_k_min; j <= c.ahlfors_k_max; ++j) ks.push_back(j);
    const auto exact = exact_ahlfors_profile(nu, k, centers, ks);
    for (std::size_t i = 0; i < exact.rows.size(); ++i) {
        const auto& row_ = exact.rows[i];
        r.table.rows.push_back(row(row_.center, ks[i % ks.size()], row_.radius, row_.mass, row_.ratio));
    }
    const double slope_dev = rel_diff(exact.slope, k.Q);
    gate.soft(slope_dev <= c.slope_tolerance,
              fmt::format("fitted slope {} is more than {} from Q", format_number(exact.slope), format_number(c.slope_tolerance)));

    // Sampled masses at the two coarsest radii against the exact ones.
    double worst_sampled = 0.0;
    {
        const std::vector<double> radii = {std::pow(k.a, -1.0), std::pow(k.a, -2.0)};
        const auto empirical = ahlfors_profile(atlas, centers, radii);
        const auto reference = exact_ahlfors_profile(nu, k, centers, {1, 2});
        for (std::size_t i = 0; i < empirical.rows.size() && i < reference.rows.size(); ++i)
            worst_sampled = std::max(worst_sampled, rel_diff(empirical.rows[i].mass, reference.rows[i].mass));
    }

    // Tree sub-model: all branch words of a fixed ray, uniform over the leaves.
    double worst_tree = 0.0;
    int tree_depth = 0;
    {
        const auto& ray_point = atlas.points.front();
        const int labels = c.q - 1;
        int depth = std::min<int>(c.ahlfors_k_max, static_cast<int>(ray_point.word.size()));
        while (depth > 0 && std::pow(labels, depth) > 65536.0) --depth;
        tree_depth = depth;
        const auto leaves = static_cast<std::uint64_t>(std::llround(std::pow(labels, depth)));
        const auto center = relabel(ray_point, std::vector<std::uint8_t>(ray_point.word.size(), 0));
        std::vector<int> products;
        products.reserve(leaves);
        for (std::uint64_t h = 0; h < leaves; ++h) {
            std::vector<std::uint8_t> w(ray_point.word.size(), 0);
            auto x = h;
            for (int lvl = 0; lvl < depth; ++lvl) {
                w[static_cast<std::size_t>(lvl)] = static_cast<std::uint8_t>(x % static_cast<std::uint64_t>(labels));
                x /= static_cast<std::uint64_t>(labels);
            }
            products.push_back(coded_gromov_product(center, relabel(ray_point, std::move(w))));
        }
        for (int j = 0; j <= depth; ++j) {
            const auto inside = std::count_if(products.begin(), products.end(), [j](int g) { return g >= j; });
            const double mass = static_cast<double>(inside) / static_cast<double>(leaves);
            const double expected = std::pow(std::pow(k.a, -j), k.Q - 1.0);
            worst_tree = std::max(worst_tree, rel_diff(mass, expected));
        }
    }
    gate.hard(worst_tree <= 1e-12, "tree sub-model ball masses differ from r^(Q-1)");

    r.values["atlas_size"] = c.atlas_size;
    r.values["centers"] = n_centers;
    r.values["k_min"] = c.ahlfors_k_min;
    r.values["k_max"] = c.ahlfors_k_max;
    r.values["slope"] = jnum(exact.slope);
    r.values["Q"] = jnum(k.Q);
    r.values["slope_relative_deviation"] = jnum(slope_dev);
    r.values["sampled_vs_exact_coarse"] = jnum(worst_sampled);
    r.values["tree_depth"] = tree_depth;
    r.values["tree_max_error"] = jnum(worst_tree);
    return r;
}

// ---------------------------------------------------------------- poincare

namespace {

struct PoincareRun {
    int m = 0;
    std::size_t nodes = 0;
    std::uint64_t curves = 0;
    double max_pointwise = 0.0;
    double max_ball = 0.0;
    double max_gap = 0.0;
    int fiber_violations = 0;
    int pointwise_violations = 0;
};

PoincareRun poincare_at(const BoundaryMeasure& nu, const ModelConstants& k, const RunConfig& c, int m, CheckReport& r) {
    PoincareRun out;
    out.m = m;
    const auto seg = parametrize_segment(nu, c.segment_xi, segment_eta(c), m);
    const auto cone = build_cone(nu, k, seg, c.cone_depth_cap, c.horizon_L);
    const auto pts = cone_points(cone, k);
    out.nodes = cone.nodes.size();
    out.curves = cone.curve_count;
    const int X = cone.level_nodes.front().front();
    const int Y = cone.level_nodes.back().front();
    const double d = quasi_metric(cone.nodes[static_cast<std::size_t>(X)].point,
                                  cone.nodes[static_cast<std::size_t>(Y)].point, k);

    // Ball centres drawn as (curve, mass fraction), so both resolutions see the same places.
    std::mt19937_64 rng(c.seed ^ 0x9e3779b97f4a7c15ULL);
    std::uniform_int_distribution<std::uint64_t> curve(0, cone.curve_count - 1);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const auto last = static_cast<double>(cone.level_nodes.size() - 1);
    std::vector<int> centers;
    for (int b = 0; b < c.poincare_balls; ++b) {
        const auto h = curve(rng);
        const double frac = unit(rng);
        centers.push_back(cone.curve(h)[static_cast<std::size_t>(std::lround(frac * last))]);
    }

    const auto suite = test_suite(cone, k, c.seed);
    for (std::size_t i = 0; i < suite.size(); ++i) {
        const auto& f = suite[i];
        const auto g = upper_gradient(cone.edges, f.values);
        const auto fb = fiber_average_bound(cone, f.values, g);
        if (fb.lhs > fb.rhs) ++out.fiber_violations;
        out.max_gap = std::max(out.max_gap, fb.fubini_gap);
        const auto rho = node_density(cone, g);
        const auto pw = pointwise_poincare(pts, f.values, rho, X, Y, c.C0 * d);
        if (pw.violated) ++out.pointwise_violations;
        out.max_pointwise = std::max(out.max_pointwise, pw.constant);
        double ball = 0.0;
        for (int center : centers) {
            for (int j = 0;; ++j) {
                BallPoincare bp;
                try {
                    bp = ball_poincare(pts, f.values, rho, center, std::pow(k.a, -j), c.C0);
                } catch (const UndersampledError&) {
                    break;
                }
                if (bp.rhs > 0)
                    ball = std::max(ball, bp.lhs / bp.rhs);
                else if (bp.lhs > 0)
                    ball = kInf;
            }
        }
        out.max_ball = std::max(out.max_ball, ball);
        r.table.rows.push_back({cell(m), cell(i), f.kind, cell(fb.lhs), cell(fb.rhs), cell(fb.fubini_gap),
                                cell(pw.constant), cell(ball)});
    }
    return out;
}

}  // namespace

CheckReport run_poincare(const RunConfig& c) {
    auto r = start("poincare", {"m", "function", "kind", "lhs", "rhs", "fubini_gap", "pointwise_C", "ball_C"});
    Gate gate{r};
    const Apartment ap(c.p);
    const auto k = compute_constants(c.p, c.q);
    const BoundaryMeasure nu(ap);
    const auto coarse = poincare_at(nu, k, c, c.segment_samples, r);
    const auto fine = poincare_at(nu, k, c, 2 * c.segment_samples, r);

    const int fiber_violations = coarse.fiber_violations + fine.fiber_violations;
    const double gap = std::max(coarse.max_gap, fine.max_gap);
    gate.hard(fiber_violations == 0, fmt::format("{} functions violate the fiber-average bound", fiber_violations));
    gate.hard(gap <= 1e-12, "Fubini gap above 1e-12");

    auto stable = [&](double a, double b) {
        return std::isfinite(a) && std::isfinite(b) && a > 0 && b > 0 && std::max(a / b, b / a) <= c.stability_factor;
    };
    gate.soft(coarse.pointwise_violations + fine.pointwise_violations == 0, "pointwise constant infinite for some function");
    gate.soft(stable(coarse.max_pointwise, fine.max_pointwise), "pointwise constant not stable under refinement");
    gate.soft(stable(coarse.max_ball, fine.max_ball), "ball constant not stable under refinement");

    r.values["xi"] = jnum(c.segment_xi);
    r.values["eta"] = jnum(segment_eta(c));
    r.values["C0"] = jnum(c.C0);
    for (const auto* run : {&coarse, &fine}) {
        const std::string tag = run == &coarse ? "coarse" : "fine";
        r.values[tag + "_m"] = run->m;
        r.values[tag + "_nodes"] = run->nodes;
        r.values[tag + "_curves"] = run->curves;
        r.values[tag + "_max_pointwise_C"] = jnum(run->max_pointwise);
        r.values[tag + "_max_ball_C"] = jnum(run->max_ball);
    }
    r.values["fiber_violations"] = fiber_violations;
    r.values["max_fubini_gap"] = jnum(gap);
    return r;
}

// ---------------------------------------------------------------- modulus

namespace {

ModulusProblem random_problem(std::mt19937_64& rng, int max_nodes, double Q) {
    std::uniform_int_distribution<int> size(4, max_nodes);
    std::uniform_real_distribution<double> weight(0.5, 2.0);
    std::bernoulli_distribution edge(1.0 / 3.0);
    const int n = size(rng);
    ModulusProblem prob;
    prob.graph = Graph(n);
    prob.Q = Q;
    for (int v = 0; v < n; ++v) {
        prob.graph.length[static_cast<std::size_t>(v)] = weight(rng);
        prob.graph.measure[static_cast<std::size_t>(v)] = weight(rng);
    }
    for (int u = 0; u < n; ++u)
        for (int v = u + 1; v < n; ++v)
            if (edge(rng)) prob.graph.add_edge(u, v);
    prob.E = n > 5 ? std::vector<int>{0, 1} : std::vector<int>{0};
    prob.F = {n - 1};
    return prob;
}

}  // namespace

CheckReport run_modulus(const RunConfig& c) {
    auto r = start("modulus", {"graph", "nodes", "edges", "brute_force", "value", "lower", "relative_difference"});
    Gate gate{r};
    const double Q = compute_constants(c.p, c.q).Q;
    const double tol = c.modulus_tol;

    double path_err = 0.0;
    for (int kk : {2, 5, 10}) {
        const auto s = discrete_modulus({Graph::path(kk), Q, {0}, {kk - 1}}, tol);
        path_err = std::max(path_err, std::abs(s.value - std::pow(kk, 1.0 - Q)));
    }
    gate.hard(path_err <= 1e-4, "k-path modulus differs from k^(1-Q)");

    double union_err = 0.0;
    {
        ModulusProblem two{Graph(10), Q, {0, 5}, {4, 9}};
        for (int v = 0; v < 4; ++v) {
            two.graph.add_edge(v, v + 1);
            two.graph.add_edge(v + 5, v + 6);
        }
        const auto s = discrete_modulus(two, tol);
        union_err = std::abs(s.value - 2.0 * std::pow(5.0, 1.0 - Q));
    }
    gate.hard(union_err <= 1e-3, "disjoint union is not additive");

    double single_err = 0.0;
    {
        const double len = 0.7, mu = 1.3;
        const auto s = discrete_modulus({Graph::path(2, len, mu), Q, {0}, {1}}, tol);
        single_err = rel_diff(s.value, 2.0 * mu * std::pow(2.0 * len, -Q));
    }
    gate.hard(single_err <= 1e-6, "single-edge modulus differs from its closed form");

    const double empty = discrete_modulus({Graph(4), Q, {0}, {3}}, tol).value;
    gate.hard(empty == 0.0, "modulus of an empty family is not zero");

    std::mt19937_64 rng(c.seed);
    double worst = 0.0;
    int bracket_violations = 0, monotone_violations = 0;
    for (int i = 0; i < c.modulus_graphs; ++i) {
        auto prob = random_problem(rng, c.modulus_max_nodes, Q);
        const double bf = brute_force_modulus(prob, static_cast<std::size_t>(c.modulus_max_nodes));
        const auto s = discrete_modulus(prob, tol);
        const double diff = bf > 0 ? rel_diff(s.value, bf) : std::abs(s.value);
        worst = std::max(worst, diff);
        if (s.lower > bf * (1 + 1e-9) + 1e-15 || bf > s.value * (1 + 1e-9) + 1e-15) ++bracket_violations;
        std::size_t edges = 0;
        for (const auto& nb : prob.graph.adj) edges += nb.size();
        edges /= 2;
        r.table.rows.push_back(row(i, prob.graph.size(), edges, bf, s.value, s.lower, diff));

        // Removing an edge shrinks the path family.
        for (int u = 0; u < prob.graph.size(); ++u) {
            if (prob.graph.adj[static_cast<std::size_t>(u)].empty()) continue;
            prob.graph.remove_edge(u, prob.graph.adj[static_cast<std::size_t>(u)].front());
            if (brute_force_modulus(prob, static_cast<std::size_t>(c.modulus_max_nodes)) > bf * (1 + 1e-12))
                ++monotone_violations;
            break;
        }
    }
    gate.hard(worst <= 1e-6, "solver and brute force differ by more than 1e-6");
    gate.hard(bracket_violations == 0, "brute-force value outside the solver bracket");
    gate.hard(monotone_violations == 0, "modulus grew when an edge was removed");

    r.values["Q"] = jnum(Q);
    r.values["path_error"] = jnum(path_err);
    r.values["union_error"] = jnum(union_err);
    r.values["single_edge_error"] = jnum(single_err);
    r.values["graphs"] = c.modulus_graphs;
    r.values["max_relative_difference"] = jnum(worst);
    r.values["bracket_violations"] = bracket_violations;
    r.values["monotonicity_violations"] = monotone_violations;
    return r;
}

// ---------------------------------------------------------------- loewner

CheckReport run_loewner(const RunConfig& c) {
    auto r = start("loewner", {"resolution", "nodes", "t", "lambda", "lower", "delta", "pair", "pairs", "flagged"});
    Gate gate{r};
    const Apartment ap(c.p);
    const auto k = compute_constants(c.p, c.q);
    const BoundaryMeasure nu(ap);

    // The coarse atlas is a prefix of the fine one, sized so that one extra graph
    // level keeps the expected number of points per ball.
    const auto fine_atlas = sample_boundary(nu, k, c.loewner_atlas_size, c.seed, c.horizon_L);
    const int n_coarse = std::max(2, static_cast<int>(std::lround(c.loewner_atlas_size / std::pow(k.a, k.Q))));
    BoundaryAtlas coarse_atlas = fine_atlas;
    coarse_atlas.points.resize(static_cast<std::size_t>(n_coarse));
    coarse_atlas.weights.assign(static_cast<std::size_t>(n_coarse), 1.0 / n_coarse);

    const auto specs =
        continuum_specs(fine_atlas.points, k, n_coarse, c.loewner_pairs, {c.loewner_level - 1}, c.seed);

    std::vector<std::vector<LoewnerRow>> profiles;
    std::vector<int> sizes;
    for (int res = 0; res < 2; ++res) {
        const auto g = build_atlas_graph(ap, res == 0 ? coarse_atlas : fine_atlas, c.loewner_level + res);
        std::vector<ContinuumPair> pairs;
        pairs.reserve(specs.size());
        for (const auto& s : specs) pairs.push_back(realize(g, s));
        profiles.push_back(loewner_profile(g, pairs, c.loewner_t, c.loewner_tol));
        sizes.push_back(g.size());
        for (const auto& lr : profiles.back())
            r.table.rows.push_back(row(res, g.size(), lr.t, lr.lambda, lr.lower, lr.delta, lr.pair, lr.pairs, lr.flagged));
    }

    json lambdas = json::array();
    for (std::size_t i = 0; i < c.loewner_t.size(); ++i) {
        const auto& a = profiles[0][i];
        const auto& b = profiles[1][i];
        const bool positive = !a.flagged && !b.flagged && a.lambda > 0 && b.lambda > 0;
        const double factor = positive ? std::max(a.lambda / b.lambda, b.lambda / a.lambda) : kInf;
        gate.soft(positive, fmt::format("lambda at t={} not positive at both resolutions", format_number(a.t)));
        gate.soft(factor <= c.loewner_factor,
                  fmt::format("lambda at t={} changes by factor {}", format_number(a.t), format_number(factor)));
        lambdas.push_back(json{{"t", jnum(a.t)}, {"coarse", jnum(a.lambda)}, {"fine", jnum(b.lambda)}, {"factor", jnum(factor)}});
    }
    r.values["coarse_nodes"] = sizes[0];
    r.values["fine_nodes"] = sizes[1];
    r.values["coarse_level"] = c.loewner_level;
    r.values["fine_level"] = c.loewner_level + 1;
    r.values["lambda"] = lambdas;
    return r;
}

// ---------------------------------------------------------------- dispatch

const std::vector<std::string>& check_names() {
    static const std::vector<std::string> names = {"dim",   "polygon",    "apartment", "identity", "lemma4",
                                                   "lemma5", "regularity", "poincare",  "modulus",  "loewner"};
    return names;
}

CheckReport run_check(std::string_view name, const RunConfig& c) {
    using Driver = CheckReport (*)(const RunConfig&);
    static const std::map<std::string, Driver, std::less<>> drivers = {
        {"dim", run_dim},           {"polygon", run_polygon},   {"apartment", run_apartment},
        {"identity", run_identity}, {"lemma4", run_lemma4},     {"lemma5", run_lemma5},
        {"regularity", run_regularity}, {"poincare", run_poincare}, {"modulus", run_modulus},
        {"loewner", run_loewner},
    };
    const auto it = drivers.find(name);
    if (it == drivers.end()) throw InvalidInputError("unknown check '" + std::string(name) + "'");
    c.validate();
    return it->second(c);
}

std::string to_csv(const CheckReport& r, const RunConfig& c) {
    std::string out;
    auto line = [&out](const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) out += ',';
            out += cells[i];
        }
        out += '\n';
    };
    line(r.table.columns);
    for (const auto& rw : r.table.rows) line(rw);
    const auto k = compute_constants(c.p, c.q);
    out += fmt::format("# p={},q={},Q={},a={},seed={},version={}\n", c.p, c.q, format_number(k.Q), format_number(k.a),
                       c.seed, kVersion);
    return out;
}

nlohmann::ordered_json summary_entry(const CheckReport& r) {
    return json{{"check", r.check}, {"status", to_string(r.status)}, {"key_values", r.values}, {"notes", r.notes}};
}

}  // namespace hyperbuild
