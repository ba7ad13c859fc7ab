#pragma once

// Boundary of the building seen from the base point: directions of the
// apartment boundary carrying branch words, the visual quasi-metric, the
// boundary measure, arcs [xi eta] and the cone of branched copies of an arc.

#include "hyperbuild/apartment.hpp"
#include "hyperbuild/fibers.hpp"

#include <cstdint>
#include <limits>
#include <memory>
#include <random>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace hyperbuild {

/// Counter-clockwise arc of directions [start, start + length].
struct Arc {
    double start = 0.0;
    double length = 0.0;

    bool contains(double theta) const;
    static Arc between(double from, double to);  // counter-clockwise from `from` to `to`
};

/// Directions whose rays end on the far side of a wall, seen from the base point.
Arc far_arc(const Apartment& ap, const Vec3& wall_normal);

/// The maximal-entropy measure on apartment boundary directions: the push-forward
/// of the Markov measure on infinite normal-form words. Arc masses are computed
/// by descending the normal-form cylinder tree, using that every cylinder lies in
/// the shadow cut out by the walls of its descents.
class BoundaryMeasure {
public:
    explicit BoundaryMeasure(const Apartment& ap, int depth = 22);

    const Apartment& apartment() const noexcept { return *ap_; }
    int depth() const noexcept { return depth_; }

    double mass(const Arc& arc) const { return mass(arc, depth_); }
    double mass(const Arc& arc, int depth) const;
    /// Direction theta with mass(Arc::between(from, theta)) = target, searched in [from, from + span].
    double quantile(double from, double span, double target, int depth) const;
    /// Draws a direction; the cylinder walk stops at the measure's depth.
    double sample(std::mt19937_64& rng) const;
    /// Shadow of the chamber with normal-form word `w`.
    Arc shadow(const Word& w) const;

private:
    double descend(int state, int length, const HIsometry& iso, const Arc& target, int depth) const;
    Arc shadow_of(int state, const HIsometry& iso) const;

    const Apartment* ap_;
    int depth_;
    std::vector<HIsometry> reflections_;
};

inline constexpr int kInfiniteProduct = std::numeric_limits<int>::max();

/// A boundary point of the building: a direction of the apartment boundary and
/// one branch label in {0, ..., q-2} per wall crossed by its ray (0 = stay in the apartment).
struct CodedPoint {
    double theta = 0.0;
    std::vector<std::uint8_t> word;
    std::shared_ptr<const CrossingSequence> ray;
    std::shared_ptr<const std::unordered_map<std::string_view, int>> index;  // wall key -> crossing index
};

/// Traces `theta` to horizon L; the word is padded with zeros or truncated to the crossing count.
CodedPoint make_coded_point(const Apartment& ap, double theta, std::vector<std::uint8_t> word, double L);
CodedPoint make_coded_point(std::shared_ptr<const CrossingSequence> ray, std::vector<std::uint8_t> word);
/// Same ray, new labels.
CodedPoint relabel(const CodedPoint& z, std::vector<std::uint8_t> word);

/// Walls crossed by both rays, counted in the order of the ray with the smaller
/// direction while the branch labels agree; kInfiniteProduct for identical codes.
int coded_gromov_product(const CodedPoint& z1, const CodedPoint& z2);
double quasi_metric(const CodedPoint& z1, const CodedPoint& z2, const ModelConstants& c);

struct BoundaryAtlas {
    std::vector<CodedPoint> points;
    std::vector<double> weights;
    std::uint64_t seed = 0;
    ModelConstants constants;
    double horizon = 0.0;
};

BoundaryAtlas sample_boundary(const BoundaryMeasure& nu, const ModelConstants& c, int n, std::uint64_t seed,
                              double L = kDefaultHorizon);

/// Lines `weight,theta,labels` with full precision.
std::string export_atlas(const BoundaryAtlas& atlas);
BoundaryAtlas import_atlas(const Apartment& ap, const ModelConstants& c, std::string_view text, double L);

struct AhlforsRow {
    int center = 0;
    double radius = 0.0;
    double mass = 0.0;
    std::size_t count = 0;  // atlas points in the ball; 0 for exact masses
    double ratio = 0.0;     // mass / radius^Q
    bool undersampled = false;
};

struct AhlforsProfile {
    std::vector<AhlforsRow> rows;
    double slope = 0.0;  // least-squares slope of log mass against log radius over fitted rows
    int fitted = 0;
};

/// Empirical closed-ball masses; balls with fewer than `min_count` points are flagged and not fitted.
AhlforsProfile ahlfors_profile(const BoundaryAtlas& atlas, const std::vector<CodedPoint>& centers,
                               const std::vector<double>& radii, std::size_t min_count = 30);

/// Directions theta' with apartment Gromov product >= k against the centre direction.
/// Each end is bisected until its bracket is below `precision` (at most 55 halvings);
/// the returned ends are the inner bracket ends.
Arc product_arc(const Apartment& ap, double theta, int k, double precision = 0.0);
/// Exact mass of the closed ball of radius a^{-k}: labels of the first k shared
/// walls must match, each with probability 1/(q-1), times the mass of product_arc.
double exact_ball_mass(const BoundaryMeasure& nu, const ModelConstants& c, const CodedPoint& center, int k);
AhlforsProfile exact_ahlfors_profile(const BoundaryMeasure& nu, const ModelConstants& c,
                                     const std::vector<CodedPoint>& centers, const std::vector<int>& ks);

/// Least-squares slope of y against x.
double fit_slope(const std::vector<double>& x, const std::vector<double>& y);

struct SegmentParametrization {
    double xi = 0.0;
    double eta = 0.0;
    int orientation = 1;  // +1: counter-clockwise from xi to eta
    double l = 0.0;
    std::vector<double> t;
    std::vector<double> theta;
    int depth = 0;  // measure depth at which l converged

    /// Mass coordinate of a direction on the arc.
    double t_of(const BoundaryMeasure& nu, double direction) const;
};

/// Splits the shorter arc from xi to eta into m steps of equal boundary mass;
/// l is the mass of the arc, refined in depth until it changes by < 1e-3 relatively.
SegmentParametrization parametrize_segment(const BoundaryMeasure& nu, double xi, double eta, int m,
                                           int max_depth = 40);

struct ConeNode {
    int level = 0;
    double t = 0.0;
    std::vector<std::uint8_t> labels;  // one per good wall of this level, in ray order
    double measure = 0.0;
    CodedPoint point;
};

struct ConeEdge {
    int from = 0;
    int to = 0;
    double length = 0.0;
};

/// Branched copies h[xi eta] of the arc, one per labelling of the good walls
/// met within the cone depth. Nodes sit at the segment samples.
struct ConeGraph {
    SegmentParametrization segment;
    int q = 0;
    std::vector<std::string> good_walls;          // union over levels
    std::vector<std::vector<int>> level_walls;    // per level: indices into good_walls
    std::vector<ConeNode> nodes;
    std::vector<std::vector<int>> level_nodes;
    std::vector<ConeEdge> edges;
    std::vector<std::vector<int>> adjacency;      // node -> edge indices
    std::uint64_t curve_count = 0;

    int node_at(int level, const std::vector<std::uint8_t>& labels) const;
    /// Node per level of curve h, h read as a base-(q-1) labelling of good_walls.
    std::vector<int> curve(std::uint64_t h) const;
    double total_measure() const;

private:
    std::vector<std::unordered_map<std::string, int>> lookup_;
    friend ConeGraph build_cone(const BoundaryMeasure&, const ModelConstants&, const SegmentParametrization&, double,
                                double, std::uint64_t);
};

/// Good walls are taken within `cone_depth` along each sample ray; companions and
/// coded points use horizon L.
ConeGraph build_cone(const BoundaryMeasure& nu, const ModelConstants& c, const SegmentParametrization& seg,
                     double cone_depth, double L = kDefaultHorizon, std::uint64_t cap = kDefaultLeafCap);

}  // namespace hyperbuild
