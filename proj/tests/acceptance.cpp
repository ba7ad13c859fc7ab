// Acceptance runner: one pass/fail line per criterion with pinned tolerances
// and runtime limits. Exit status is nonzero if any criterion fails.
//
//   acceptance            run all criteria
//   acceptance 3 8        run the listed criteria only

#include "hyperbuild/experiments.hpp"
#include "hyperbuild/hypgeom.hpp"
#include "hyperbuild/apartment.hpp"

#include <boost/multiprecision/cpp_bin_float.hpp>
#include <fmt/format.h>

#include <chrono>
#include <cmath>
#include <functional>
#include <numbers>
#include <set>
#include <string>

using namespace hyperbuild;
using json = nlohmann::ordered_json;

namespace {

struct Outcome {
    bool ok = false;
    std::string detail;
};

struct Criterion {
    int id;
    std::string name;
    double time_limit;  // seconds
    std::function<Outcome()> run;
};

double num(const json& v) {
    if (v.is_string()) return v.get<std::string>() == "inf" ? INFINITY : NAN;
    return v.get<double>();
}

// Reference constants from the closed form evaluated in 50-digit arithmetic.
struct Reference {
    double Q;
    double a;
};

Reference reference(int p, int q) {
    using big = boost::multiprecision::cpp_bin_float_50;
    const big h = big(p - 2) / 2;
    const big tau = boost::multiprecision::log(h + boost::multiprecision::sqrt(h * h - 1));
    const big Q = 1 + boost::multiprecision::log(big(q - 1)) / tau;
    return {static_cast<double>(Q), static_cast<double>(boost::multiprecision::exp(tau))};
}

Outcome constants() {
    struct Case {
        int p, q;
        double Q, a;
    };
    const Case cases[] = {{5, 3, 1.720210, 2.618034}, {6, 3, 1.526316, 3.732051}, {6, 4, 1.834203, 3.732051}};
    double worst_ref = 0.0, worst_pub = 0.0;
    for (const auto& cs : cases) {
        const auto k = compute_constants(cs.p, cs.q);
        const auto ref = reference(cs.p, cs.q);
        worst_ref = std::max({worst_ref, std::abs(k.Q - ref.Q), std::abs(k.a - ref.a)});
        worst_pub = std::max({worst_pub, std::abs(k.Q - cs.Q), std::abs(k.a - cs.a)});
    }
    return {worst_ref <= 1e-5 && worst_pub <= 1e-5,
            fmt::format("max |err| vs 50-digit closed form {:.2e}, vs tabulated values {:.2e}", worst_ref, worst_pub)};
}

Outcome polygons() {
    double angle = 0.0, side = 0.0;
    for (int p = 5; p <= 12; ++p) {
        const auto poly = build_right_angled_polygon(p);
        for (int k = 0; k < p; ++k) angle = std::max(angle, std::abs(poly.interior_angle(k) - std::numbers::pi / 2));
        const double cp = std::cos(std::numbers::pi / p);
        side = std::max(side, std::abs(std::cosh(poly.side_length()) - (4 * cp * cp - 1)));
    }
    return {angle <= 1e-9 && side <= 1e-6, fmt::format("max angle err {:.2e}, max cosh(side) err {:.2e}", angle, side)};
}

RunConfig base() {
    RunConfig c;  // p=6, q=3, seed 42
    return c;
}

Outcome crossing_rate() {
    auto c = base();
    c.rays = 200;
    c.ray_horizon = 40;
    const auto r = run_apartment(c);
    const double gap = num(r.values["mean_gap"]);
    const double dev = std::abs(gap - 1.316958) / 1.316958;
    return {dev <= 0.05, fmt::format("mean gap {:.6f} vs 1.316958 ({:+.2f}%)", gap, 100 * (gap - 1.316958) / 1.316958)};
}

Outcome identity() {
    auto c = base();
    c.identity_triples = 500;
    c.identity_horizon = 25;
    const auto r = run_identity(c);
    const int bad = r.values["violations"].get<int>();
    return {bad == 0 && r.table.rows.size() == 500, fmt::format("{} violations over {} triples", bad, r.table.rows.size())};
}

Outcome lemma4() {
    auto c = base();
    c.lemma4_grid = 50;
    const auto r = run_lemma4(c);
    const double ratio = num(r.values["band_ratio"]);
    const double move = std::max(num(r.values["endpoint_move_min"]), num(r.values["endpoint_move_max"]));
    return {ratio <= 20 && move < 0.1,
            fmt::format("band [{:.4f}, {:.4f}] ratio {:.3f}, endpoint move {:.2f}% under doubling",
                        num(r.values["band_min"]), num(r.values["band_max"]), ratio, 100 * move)};
}

Outcome lemma5() {
    auto c = base();
    c.lemma5_functions = 10000;
    c.lemma5_pieces = 64;
    const auto r = run_lemma5(c);
    const double worst = num(r.values["max_ratio"]);
    const double bound = std::pow(2.0, compute_constants(6, 3).Q - 1);
    const double drift = num(r.values["max_scaling_drift"]);
    return {worst <= bound && drift <= 1e-12,
            fmt::format("max ratio {:.6f} <= {:.6f}, scaling drift {:.2e}", worst, bound, drift)};
}

Outcome ahlfors() {
    auto c = base();
    c.atlas_size = 10000;
    c.ahlfors_k_min = 4;
    c.ahlfors_k_max = 12;
    const auto r = run_regularity(c);
    const double slope = num(r.values["slope"]);
    const double Q = compute_constants(6, 3).Q;
    const double tree = num(r.values["tree_max_error"]);
    return {std::abs(slope - Q) <= 0.05 * Q && tree <= 1e-12,
            fmt::format("slope {:.4f} vs Q {:.4f} ({:+.2f}%), tree sub-model err {:.1e}", slope, Q,
                        100 * (slope - Q) / Q, tree)};
}

Outcome modulus() {
    auto c = base();
    c.modulus_graphs = 100;
    c.modulus_max_nodes = 12;
    const auto r = run_modulus(c);
    const double path = num(r.values["path_error"]);
    const double uni = num(r.values["union_error"]);
    const double bf = num(r.values["max_relative_difference"]);
    return {path <= 1e-4 && uni <= 1e-3 && bf <= 1e-6,
            fmt::format("k-path err {:.1e}, union err {:.1e}, brute-force rel diff {:.1e} on 100 graphs", path, uni, bf)};
}

Outcome loewner() {
    auto c = base();
    c.loewner_t = {0.5, 1.0, 2.0};
    const auto r = run_loewner(c);
    bool ok = true;
    std::string detail;
    for (const auto& row : r.values["lambda"]) {
        const double lo = num(row["coarse"]), hi = num(row["fine"]);
        ok = ok && lo > 0 && hi > 0 && std::max(lo / hi, hi / lo) <= 2.0;
        detail += fmt::format("{}t={}: {:.4f}/{:.4f}", detail.empty() ? "" : ", ", num(row["t"]), lo, hi);
    }
    return {ok, "lambda coarse/fine " + detail};
}

Outcome poincare() {
    auto c = base();
    c.C0 = 10;
    const auto r = run_poincare(c);
    const auto& v = r.values;
    const int viol = v["fiber_violations"].get<int>();
    const double gap = num(v["max_fubini_gap"]);
    auto stable = [](double a, double b) {
        return std::isfinite(a) && std::isfinite(b) && a > 0 && b > 0 && std::max(a / b, b / a) <= 2.0;
    };
    const double pc = num(v["coarse_max_pointwise_C"]), pf = num(v["fine_max_pointwise_C"]);
    const double bc = num(v["coarse_max_ball_C"]), bf = num(v["fine_max_ball_C"]);
    return {viol == 0 && gap <= 1e-12 && stable(pc, pf) && stable(bc, bf),
            fmt::format("fiber violations {}, Fubini gap {:.1e}, pointwise C {:.4f}/{:.4f}, ball C {:.4f}/{:.4f}", viol,
                        gap, pc, pf, bc, bf)};
}

}  // namespace

int main(int argc, char** argv) {
    const std::vector<Criterion> criteria = {
        {1, "constants", 1, constants},
        {2, "polygons", 1, polygons},
        {3, "crossing rate", 30, crossing_rate},
        {4, "N-identity", 60, identity},
        {5, "fiber ratio band", 60, lemma4},
        {6, "dyadic inequality", 10, lemma5},
        {7, "Ahlfors regularity", 60, ahlfors},
        {8, "discrete modulus", 60, modulus},
        {9, "Loewner estimate", 300, loewner},
        {10, "Poincare inequalities", 300, poincare},
    };
    std::set<int> only;
    for (int i = 1; i < argc; ++i) only.insert(std::stoi(argv[i]));

    int failures = 0;
    for (const auto& cr : criteria) {
        if (!only.empty() && !only.count(cr.id)) continue;
        const auto t0 = std::chrono::steady_clock::now();
        Outcome out;
        try {
            out = cr.run();
        } catch (const std::exception& e) {
            out = {false, std::string("error: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        const bool in_time = secs < cr.time_limit;
        const bool pass = out.ok && in_time;
        if (!pass) ++failures;
        fmt::print("{} [{:>2}] {:<22} {}; {:.2f} s (limit {:g} s){}\n", pass ? "PASS" : "FAIL", cr.id, cr.name, out.detail,
                   secs, cr.time_limit, in_time ? "" : " TOO SLOW");
        std::fflush(stdout);
    }
    return failures == 0 ? 0 : 1;
}
