#include "hyperbuild/boundary.hpp"

#include "hyperbuild/errors.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numbers>
#include <sstream>
#include <unordered_set>

namespace hyperbuild {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

enum class Relation { Inside, Disjoint, Partial };

// Position of `a` relative to `target`, plus the length of their overlap.
Relation relate(const Arc& a, const Arc& target, double* overlap) {
    if (target.length >= kTwoPi) {
        if (overlap) *overlap = a.length;
        return Relation::Inside;
    }
    const double s = wrap_angle(a.start - target.start);
    const double e = s + a.length;
    const double ov = std::max(0.0, std::min(e, target.length) - s) +
                      std::max(0.0, std::min(e, kTwoPi + target.length) - std::max(s, kTwoPi));
    if (overlap) *overlap = std::min(ov, a.length);
    if (e <= target.length) return Relation::Inside;
    if (s >= target.length && e <= kTwoPi) return Relation::Disjoint;
    return Relation::Partial;
}

Arc intersect(const Arc& a, const Arc& b) {
    if (a.length >= kTwoPi) return b;
    if (b.length >= kTwoPi) return a;
    const double s = wrap_angle(b.start - a.start);
    Arc best{a.start, 0.0};
    for (const double shift : {0.0, -kTwoPi}) {
        const double lo = std::max(0.0, s + shift);
        const double hi = std::min(a.length, s + shift + b.length);
        if (hi - lo > best.length) best = Arc{wrap_angle(a.start + lo), hi - lo};
    }
    return best;
}

char label_char(std::uint8_t v) { return v < 10 ? static_cast<char>('0' + v) : static_cast<char>('a' + v - 10); }

std::uint8_t label_value(char ch) {
    if (ch >= '0' && ch <= '9') return static_cast<std::uint8_t>(ch - '0');
    if (ch >= 'a' && ch <= 'z') return static_cast<std::uint8_t>(ch - 'a' + 10);
    throw InvalidInputError(fmt::format("bad branch label '{}'", ch));
}

std::string labels_key(const std::vector<std::uint8_t>& labels) {
    std::string key(labels.size(), '\0');
    std::transform(labels.begin(), labels.end(), key.begin(), label_char);
    return key;
}

std::uint64_t checked_power(int base, std::size_t exp, std::uint64_t cap, const char* what) {
    std::uint64_t out = 1;
    for (std::size_t i = 0; i < exp; ++i) {
        if (out > cap / static_cast<std::uint64_t>(base)) {
            throw CapacityError(fmt::format("{} exceeds the cap {} ({} good walls); lower the cone depth", what, cap, exp));
        }
        out *= static_cast<std::uint64_t>(base);
    }
    return out;
}

}  // namespace

bool Arc::contains(double theta) const {
    return length >= kTwoPi || wrap_angle(theta - start) <= length;
}

Arc Arc::between(double from, double to) { return Arc{wrap_angle(from), wrap_angle(to - from)}; }

Arc far_arc(const Apartment& ap, const Vec3& wall_normal) {
    const Vec3& x = ap.base_point().coords;
    Vec3 n = wall_normal;
    double c = minkowski(x, n);
    if (c > 0.0) {
        n = -n;
        c = -c;
    }
    const Mat3& f = ap.frame().matrix();
    const double A = minkowski(f.col(1), n);
    const double B = minkowski(f.col(2), n);
    const double centre = std::atan2(B, A);
    const double half = std::atan(1.0 / std::abs(c));
    return Arc{wrap_angle(centre - half), 2.0 * half};
}

BoundaryMeasure::BoundaryMeasure(const Apartment& ap, int depth) : ap_(&ap), depth_(depth) {
    if (depth < 1) throw InvalidInputError("measure depth must be positive");
    for (const auto& side : ap.polygon().sides) reflections_.push_back(HIsometry::reflection(side));
}

Arc BoundaryMeasure::shadow_of(int state, const HIsometry& iso) const {
    Arc out{0.0, kTwoPi};
    for (const int d : ap_->automaton().descents(state)) {
        out = intersect(out, far_arc(*ap_, iso.matrix() * ap_->polygon().sides[d].normal));
    }
    return out;
}

Arc BoundaryMeasure::shadow(const Word& w) const {
    const auto& aut = ap_->automaton();
    int state = aut.start();
    HIsometry iso;
    for (const std::uint8_t s : w) {
        state = aut.next(state, s);
        if (state < 0) throw InvalidInputError("word is not in normal form");
        iso = iso * reflections_[s];
    }
    return shadow_of(state, iso);
}

double BoundaryMeasure::descend(int state, int length, const HIsometry& iso, const Arc& target, int depth) const {
    const auto& aut = ap_->automaton();
    double total = 0.0;
    for (int s = 0; s < ap_->p(); ++s) {
        const int child = aut.next(state, s);
        if (child < 0) continue;
        const HIsometry g = iso * reflections_[s];
        const Arc sh = shadow_of(child, g);
        double overlap = 0.0;
        const Relation rel = relate(sh, target, &overlap);
        if (rel == Relation::Disjoint) continue;
        const double m = aut.cylinder_mass(child, length + 1);
        if (rel == Relation::Inside) {
            total += m;
        } else if (length + 1 >= depth) {
            total += sh.length > 0.0 ? m * overlap / sh.length : 0.0;
        } else {
            total += descend(child, length + 1, g, target, depth);
        }
    }
    return total;
}

double BoundaryMeasure::mass(const Arc& arc, int depth) const {
    if (arc.length <= 0.0) return 0.0;
    if (arc.length >= kTwoPi) return 1.0;
    return descend(ap_->automaton().start(), 0, HIsometry(), arc, depth);
}

double BoundaryMeasure::quantile(double from, double span, double target, int depth) const {
    double lo = 0.0;
    double hi = span;
    for (int it = 0; it < 60 && hi - lo > 1e-15 * std::max(1.0, span); ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mass(Arc{wrap_angle(from), mid}, depth) < target) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return wrap_angle(from + 0.5 * (lo + hi));
}

double BoundaryMeasure::sample(std::mt19937_64& rng) const {
    const auto& aut = ap_->automaton();
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    int state = aut.start();
    HIsometry iso;
    for (int level = 0; level < depth_; ++level) {
        const double u = unit(rng);
        double acc = 0.0;
        int pick = -1;
        for (int s = 0; s < ap_->p(); ++s) {
            const double pr = aut.transition_probability(state, s);
            if (pr <= 0.0) continue;
            pick = s;
            acc += pr;
            if (u < acc) break;
        }
        iso = iso * reflections_[pick];
        state = aut.next(state, pick);
    }
    const Arc sh = shadow_of(state, iso);
    return wrap_angle(sh.start + 0.5 * sh.length);
}

CodedPoint make_coded_point(std::shared_ptr<const CrossingSequence> ray, std::vector<std::uint8_t> word) {
    auto index = std::make_shared<std::unordered_map<std::string_view, int>>();
    index->reserve(ray->crossings.size());
    for (std::size_t i = 0; i < ray->crossings.size(); ++i) index->emplace(ray->crossings[i].wall, static_cast<int>(i));
    word.resize(ray->crossings.size(), 0);
    CodedPoint z;
    z.theta = ray->theta;
    z.word = std::move(word);
    z.ray = std::move(ray);
    z.index = std::move(index);
    return z;
}

CodedPoint make_coded_point(const Apartment& ap, double theta, std::vector<std::uint8_t> word, double L) {
    auto ray = std::make_shared<const CrossingSequence>(ap.walls_crossed(theta, L));
    CodedPoint z = make_coded_point(std::move(ray), std::move(word));
    z.theta = wrap_angle(theta);
    return z;
}

CodedPoint relabel(const CodedPoint& z, std::vector<std::uint8_t> word) {
    CodedPoint out = z;
    word.resize(z.word.size(), 0);
    out.word = std::move(word);
    return out;
}

int coded_gromov_product(const CodedPoint& z1, const CodedPoint& z2) {
    if (z1.ray == z2.ray || z1.theta == z2.theta) {
        const std::size_t n = std::min(z1.word.size(), z2.word.size());
        for (std::size_t i = 0; i < n; ++i) {
            if (z1.word[i] != z2.word[i]) return static_cast<int>(i);
        }
        return kInfiniteProduct;
    }
    const CodedPoint& ref = z1.theta < z2.theta ? z1 : z2;
    const CodedPoint& other = z1.theta < z2.theta ? z2 : z1;
    int count = 0;
    for (std::size_t i = 0; i < ref.ray->crossings.size(); ++i) {
        const auto it = other.index->find(ref.ray->crossings[i].wall);
        if (it == other.index->end()) continue;
        if (ref.word[i] != other.word[static_cast<std::size_t>(it->second)]) break;
        ++count;
    }
    return count;
}

double quasi_metric(const CodedPoint& z1, const CodedPoint& z2, const ModelConstants& c) {
    const int g = coded_gromov_product(z1, z2);
    return g == kInfiniteProduct ? 0.0 : std::pow(c.a, -g);
}

BoundaryAtlas sample_boundary(const BoundaryMeasure& nu, const ModelConstants& c, int n, std::uint64_t seed,
                              double L) {
    if (n < 1) throw InvalidInputError("atlas size must be positive");
    BoundaryAtlas atlas;
    atlas.seed = seed;
    atlas.constants = c;
    atlas.horizon = L;
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> label(0, c.q - 2);
    for (int i = 0; i < n; ++i) {
        const double theta = nu.sample(rng);
        auto ray = std::make_shared<const CrossingSequence>(nu.apartment().walls_crossed(theta, L));
        std::vector<std::uint8_t> word(ray->crossings.size());
        for (auto& w : word) w = static_cast<std::uint8_t>(label(rng));
        CodedPoint z = make_coded_point(std::move(ray), std::move(word));
        z.theta = theta;
        atlas.points.push_back(std::move(z));
    }
    atlas.weights.assign(static_cast<std::size_t>(n), 1.0 / n);
    return atlas;
}

std::string export_atlas(const BoundaryAtlas& atlas) {
    std::string out;
    for (std::size_t i = 0; i < atlas.points.size(); ++i) {
        out += fmt::format("{:.17g},{:.17g},{}\n", atlas.weights[i], atlas.points[i].theta,
                           labels_key(atlas.points[i].word));
    }
    return out;
}

BoundaryAtlas import_atlas(const Apartment& ap, const ModelConstants& c, std::string_view text, double L) {
    BoundaryAtlas atlas;
    atlas.constants = c;
    atlas.horizon = L;
    std::istringstream in{std::string(text)};
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        const auto c1 = line.find(',');
        const auto c2 = c1 == std::string::npos ? c1 : line.find(',', c1 + 1);
        if (c2 == std::string::npos) throw InvalidInputError(fmt::format("atlas line {}: expected weight,theta,labels", lineno));
        double weight = 0.0;
        double theta = 0.0;
        try {
            weight = std::stod(line.substr(0, c1));
            theta = std::stod(line.substr(c1 + 1, c2 - c1 - 1));
        } catch (const std::exception&) {
            throw InvalidInputError(fmt::format("atlas line {}: unparsable number", lineno));
        }
        std::vector<std::uint8_t> word;
        for (const char ch : line.substr(c2 + 1)) word.push_back(label_value(ch));
        atlas.points.push_back(make_coded_point(ap, theta, std::move(word), L));
        atlas.points.back().theta = theta;
        atlas.weights.push_back(weight);
    }
    return atlas;
}

double fit_slope(const std::vector<double>& x, const std::vector<double>& y) {
    const std::size_t n = x.size();
    if (n < 2) return std::numeric_limits<double>::quiet_NaN();
    double mx = 0.0;
    double my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0.0;
    double sxx = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
    }
    return sxx > 0.0 ? sxy / sxx : std::numeric_limits<double>::quiet_NaN();
}

namespace {

AhlforsProfile finish_profile(std::vector<AhlforsRow> rows) {
    AhlforsProfile prof;
    std::vector<double> lx;
    std::vector<double> ly;
    for (const auto& r : rows) {
        if (r.undersampled || !(r.mass > 0.0)) continue;
        lx.push_back(std::log(r.radius));
        ly.push_back(std::log(r.mass));
    }
    prof.rows = std::move(rows);
    prof.fitted = static_cast<int>(lx.size());
    prof.slope = fit_slope(lx, ly);
    return prof;
}

}  // namespace

AhlforsProfile ahlfors_profile(const BoundaryAtlas& atlas, const std::vector<CodedPoint>& centers,
                               const std::vector<double>& radii, std::size_t min_count) {
    std::vector<AhlforsRow> rows;
    std::vector<double> d(atlas.points.size());
    for (std::size_t ci = 0; ci < centers.size(); ++ci) {
        for (std::size_t j = 0; j < atlas.points.size(); ++j) d[j] = quasi_metric(centers[ci], atlas.points[j], atlas.constants);
        for (const double r : radii) {
            AhlforsRow row;
            row.center = static_cast<int>(ci);
            row.radius = r;
            for (std::size_t j = 0; j < d.size(); ++j) {
                if (d[j] <= r) {
                    ++row.count;
                    row.mass += atlas.weights[j];
                }
            }
            row.ratio = row.mass / std::pow(r, atlas.constants.Q);
            row.undersampled = row.count < min_count;
            rows.push_back(row);
        }
    }
    return finish_profile(std::move(rows));
}

Arc product_arc(const Apartment& ap, double theta, int k, double precision) {
    if (k <= 0) return Arc{0.0, kTwoPi};
    const double L = 2.5 * k + 10.0;
    const CrossingSequence ref = ap.walls_crossed(theta, L);
    if (static_cast<int>(ref.count_within(L)) < k) {
        throw ResolutionLimitError(fmt::format("ray {:.17g} crosses fewer than {} walls within {}", theta, k, L),
                                   static_cast<double>(ref.count_within(L)));
    }
    auto reach = [&](double sign) {
        double lo = 0.0;
        double hi = std::numbers::pi;
        for (int it = 0; it < 55 && hi - lo > precision; ++it) {
            const double mid = 0.5 * (lo + hi);
            if (gromov_product(ref, ap.walls_crossed(theta + sign * mid, L), L) >= k) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        return lo;
    };
    const double up = reach(1.0);
    const double down = reach(-1.0);
    return Arc{wrap_angle(theta - down), up + down};
}

double exact_ball_mass(const BoundaryMeasure& nu, const ModelConstants& c, const CodedPoint& center, int k) {
    if (k <= 0) return 1.0;
    return std::pow(c.q - 1.0, -k) * nu.mass(product_arc(nu.apartment(), center.theta, k));
}

AhlforsProfile exact_ahlfors_profile(const BoundaryMeasure& nu, const ModelConstants& c,
                                     const std::vector<CodedPoint>& centers, const std::vector<int>& ks) {
    std::vector<AhlforsRow> rows;
    for (std::size_t ci = 0; ci < centers.size(); ++ci) {
        for (const int k : ks) {
            AhlforsRow row;
            row.center = static_cast<int>(ci);
            row.radius = std::pow(c.a, -k);
            row.mass = exact_ball_mass(nu, c, centers[ci], k);
            row.ratio = row.mass / std::pow(row.radius, c.Q);
            rows.push_back(row);
        }
    }
    return finish_profile(std::move(rows));
}

double SegmentParametrization::t_of(const BoundaryMeasure& nu, double direction) const {
    const double t = orientation > 0 ? nu.mass(Arc::between(xi, direction), depth)
                                     : nu.mass(Arc::between(direction, xi), depth);
    return std::clamp(t, 0.0, l);
}

SegmentParametrization parametrize_segment(const BoundaryMeasure& nu, double xi, double eta, int m, int max_depth) {
    if (m < 2) throw InvalidInputError("segment needs at least 2 steps");
    const double ccw = wrap_angle(eta - xi);
    if (ccw == 0.0) throw InvalidInputError("segment endpoints coincide");
    SegmentParametrization seg;
    seg.xi = wrap_angle(xi);
    seg.eta = wrap_angle(eta);
    seg.orientation = ccw <= std::numbers::pi ? 1 : -1;
    const Arc arc = seg.orientation > 0 ? Arc{seg.xi, ccw} : Arc{seg.eta, kTwoPi - ccw};

    int depth = nu.depth();
    double l = nu.mass(arc, depth);
    while (true) {
        if (depth + 4 > max_depth) {
            throw ResolutionLimitError(fmt::format("arc mass not converged at depth {}", depth), l);
        }
        const double finer = nu.mass(arc, depth + 4);
        depth += 4;
        const bool done = std::abs(finer - l) < 1e-3 * std::abs(finer);
        l = finer;
        if (done) break;
    }
    seg.l = l;
    seg.depth = depth;
    for (int i = 0; i <= m; ++i) {
        const double t = l * i / m;
        double th = 0.0;
        if (i == 0) {
            th = seg.xi;
        } else if (i == m) {
            th = seg.eta;
        } else if (seg.orientation > 0) {
            th = nu.quantile(seg.xi, arc.length, t, depth);
        } else {
            th = nu.quantile(seg.eta, arc.length, l - t, depth);
        }
        seg.t.push_back(t);
        seg.theta.push_back(th);
    }
    return seg;
}

int ConeGraph::node_at(int level, const std::vector<std::uint8_t>& labels) const {
    const auto& map = lookup_.at(static_cast<std::size_t>(level));
    const auto it = map.find(labels_key(labels));
    return it == map.end() ? -1 : it->second;
}

std::vector<int> ConeGraph::curve(std::uint64_t h) const {
    if (h >= curve_count) throw InvalidInputError("curve index out of range");
    std::vector<std::uint8_t> all(good_walls.size());
    for (auto& v : all) {
        v = static_cast<std::uint8_t>(h % static_cast<std::uint64_t>(q - 1));
        h /= static_cast<std::uint64_t>(q - 1);
    }
    std::vector<int> out;
    out.reserve(level_walls.size());
    for (std::size_t lv = 0; lv < level_walls.size(); ++lv) {
        std::vector<std::uint8_t> labels;
        for (const int w : level_walls[lv]) labels.push_back(all[static_cast<std::size_t>(w)]);
        out.push_back(node_at(static_cast<int>(lv), labels));
    }
    return out;
}

double ConeGraph::total_measure() const {
    double total = 0.0;
    for (const auto& n : nodes) total += n.measure;
    return total;
}

ConeGraph build_cone(const BoundaryMeasure& nu, const ModelConstants& c, const SegmentParametrization& seg,
                     double cone_depth, double L, std::uint64_t cap) {
    const Apartment& ap = nu.apartment();
    const std::size_t levels = seg.theta.size();
    ConeGraph cone;
    cone.segment = seg;
    cone.q = c.q;
    const int branches = c.q - 1;

    std::vector<std::shared_ptr<const CrossingSequence>> rays;
    for (const double th : seg.theta) rays.push_back(std::make_shared<const CrossingSequence>(ap.walls_crossed(th, L)));
    std::unordered_set<std::string_view> companion;
    for (const auto* r : {rays.front().get(), rays.back().get()}) {
        for (const auto& x : r->crossings) companion.insert(x.wall);
    }

    std::unordered_map<std::string, int> wall_index;
    std::vector<std::vector<int>> level_crossing;  // crossing index on the level ray, per level wall
    for (std::size_t lv = 0; lv < levels; ++lv) {
        std::vector<int> walls;
        std::vector<int> where;
        const auto& cr = rays[lv]->crossings;
        for (std::size_t j = 0; j < cr.size() && cr[j].s <= cone_depth; ++j) {
            if (companion.count(cr[j].wall)) continue;
            auto [it, fresh] = wall_index.emplace(cr[j].wall, static_cast<int>(cone.good_walls.size()));
            if (fresh) cone.good_walls.push_back(cr[j].wall);
            walls.push_back(it->second);
            where.push_back(static_cast<int>(j));
        }
        cone.level_walls.push_back(std::move(walls));
        level_crossing.push_back(std::move(where));
    }
    cone.curve_count = checked_power(branches, cone.good_walls.size(), cap, "cone curve count");

    std::vector<double> weight(levels);
    for (std::size_t lv = 0; lv < levels; ++lv) {
        const double left = lv > 0 ? seg.t[lv] - seg.t[lv - 1] : 0.0;
        const double right = lv + 1 < levels ? seg.t[lv + 1] - seg.t[lv] : 0.0;
        weight[lv] = 0.5 * (left + right);
    }

    std::uint64_t total_nodes = 0;
    cone.lookup_.resize(levels);
    cone.level_nodes.resize(levels);
    for (std::size_t lv = 0; lv < levels; ++lv) {
        const std::size_t g = cone.level_walls[lv].size();
        const std::uint64_t count = checked_power(branches, g, cap, "cone level size");
        total_nodes += count;
        if (total_nodes > cap) throw CapacityError(fmt::format("cone node count exceeds the cap {}", cap));
        const double share = weight[lv] / static_cast<double>(count);
        for (std::uint64_t code = 0; code < count; ++code) {
            ConeNode node;
            node.level = static_cast<int>(lv);
            node.t = seg.t[lv];
            node.measure = share;
            std::uint64_t rest = code;
            std::vector<std::uint8_t> word(rays[lv]->crossings.size(), 0);
            for (std::size_t k = 0; k < g; ++k) {
                const auto v = static_cast<std::uint8_t>(rest % static_cast<std::uint64_t>(branches));
                rest /= static_cast<std::uint64_t>(branches);
                node.labels.push_back(v);
                word[static_cast<std::size_t>(level_crossing[lv][k])] = v;
            }
            node.point = make_coded_point(rays[lv], std::move(word));
            node.point.theta = seg.theta[lv];
            const int id = static_cast<int>(cone.nodes.size());
            cone.lookup_[lv].emplace(labels_key(node.labels), id);
            cone.level_nodes[lv].push_back(id);
            cone.nodes.push_back(std::move(node));
        }
    }

    cone.adjacency.resize(cone.nodes.size());
    for (std::size_t lv = 0; lv + 1 < levels; ++lv) {
        const auto& here = cone.level_walls[lv];
        const auto& there = cone.level_walls[lv + 1];
        std::vector<int> fresh_pos;  // positions in `there` not fixed by `here`
        std::vector<int> fixed_from(there.size(), -1);
        for (std::size_t k = 0; k < there.size(); ++k) {
            const auto it = std::find(here.begin(), here.end(), there[k]);
            if (it == here.end()) {
                fresh_pos.push_back(static_cast<int>(k));
            } else {
                fixed_from[k] = static_cast<int>(it - here.begin());
            }
        }
        const std::uint64_t extensions = checked_power(branches, fresh_pos.size(), cap, "cone edge fan-out");
        const double len = seg.t[lv + 1] - seg.t[lv];
        for (const int from : cone.level_nodes[lv]) {
            std::vector<std::uint8_t> labels(there.size(), 0);
            for (std::size_t k = 0; k < there.size(); ++k) {
                if (fixed_from[k] >= 0) labels[k] = cone.nodes[static_cast<std::size_t>(from)].labels[static_cast<std::size_t>(fixed_from[k])];
            }
            for (std::uint64_t e = 0; e < extensions; ++e) {
                std::uint64_t rest = e;
                for (const int pos : fresh_pos) {
                    labels[static_cast<std::size_t>(pos)] = static_cast<std::uint8_t>(rest % static_cast<std::uint64_t>(branches));
                    rest /= static_cast<std::uint64_t>(branches);
                }
                const int to = cone.node_at(static_cast<int>(lv + 1), labels);
                const int id = static_cast<int>(cone.edges.size());
                cone.edges.push_back(ConeEdge{from, to, len});
                cone.adjacency[static_cast<std::size_t>(from)].push_back(id);
                cone.adjacency[static_cast<std::size_t>(to)].push_back(id);
            }
        }
    }
    return cone;
}

}  // namespace hyperbuild
