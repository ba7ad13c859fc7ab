#pragma once

// Inequalities on the boundary: the dyadic one-dimensional estimate, maximal
// functions, discrete upper gradients on cones and the Poincare checks.

#include "hyperbuild/boundary.hpp"

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace hyperbuild {

/// Piecewise-constant nonnegative function on [breakpoints.front(), breakpoints.back()].
struct StepFunction {
    std::vector<double> breakpoints;  // n + 1 increasing values starting at 0
    std::vector<double> values;       // n values

    static StepFunction from(std::vector<double> breakpoints, std::vector<double> values);
    static StepFunction random(std::mt19937_64& rng, double l, int max_pieces);
    double length() const { return breakpoints.back(); }
    double integral() const;
    /// f(l - t)
    StepFunction reflected() const;
    /// f(t / s) on [0, s l]
    StepFunction scaled(double s) const;
};

struct Lemma5Result {
    double lhs = 0.0;      // (1/l) int f
    double s_left = 0.0;   // sup_r r^{-Q} int_0^r phi^{Q-1} f
    double s_right = 0.0;  // same from the right end
    double ratio = 0.0;    // lhs / (s_left + s_right)
};

/// phi(t) = min(t, l - t). Suprema are exact: taken over breakpoints, the limit
/// r -> 0 and the stationary points of each closed-form piece.
Lemma5Result lemma5_check(const StepFunction& f, double l, double Q);

/// sup over closed balls {d <= r}, r < R, of the weighted average of g.
double maximal_function(const std::vector<double>& dist, const std::vector<double>& weights,
                        const std::vector<double>& g, double R);
double maximal_function(const BoundaryAtlas& atlas, const std::vector<double>& g, const CodedPoint& xi, double R);

struct GradientField {
    std::vector<double> rho;  // per edge
};

/// Smallest discrete upper gradient: |u(v) - u(w)| / length per edge.
GradientField upper_gradient(const std::vector<ConeEdge>& edges, const std::vector<double>& u);
/// Pointwise density: the largest gradient over edges at each node.
std::vector<double> node_density(const ConeGraph& cone, const GradientField& g);

struct FiberAverage {
    double lhs = 0.0;         // |u(xi) - u(eta)|
    double rhs = 0.0;         // sum over steps of dt times the fiber average of rho
    double curve_mean = 0.0;  // average over curves of the curve integral of rho
    double fubini_gap = 0.0;  // |rhs - curve_mean|
};

FiberAverage fiber_average_bound(const ConeGraph& cone, const std::vector<double>& u, const GradientField& rho);

/// The cone's nodes as a weighted point set.
BoundaryAtlas cone_points(const ConeGraph& cone, const ModelConstants& c);

struct PointwisePoincare {
    double lhs = 0.0;
    double distance = 0.0;
    double max_xi = 0.0;
    double max_eta = 0.0;
    double constant = 0.0;  // lhs / (distance (max_xi + max_eta)); infinite when violated
    bool violated = false;
};

PointwisePoincare pointwise_poincare(const BoundaryAtlas& points, const std::vector<double>& u,
                                     const std::vector<double>& rho, int xi, int eta, double R);

struct BallPoincare {
    double lhs = 0.0;       // mean of |u - u_B| over B
    double rhs = 0.0;       // diam(B) times the alpha-mean of rho over C0 B
    double diameter = 0.0;
    std::size_t count = 0;
};

inline constexpr std::size_t kMinBallPoints = 30;

BallPoincare ball_poincare(const BoundaryAtlas& points, const std::vector<double>& u, const std::vector<double>& rho,
                           int center, double radius, double C0, double alpha = 1.0);

struct TestFunction {
    std::string kind;  // distance, coordinate, lipschitz, bump
    std::vector<double> values;
};

/// Twenty functions on the cone's nodes: distances to nodes, the t coordinate
/// and transforms of it, random Lipschitz functions and smooth bumps.
std::vector<TestFunction> test_suite(const ConeGraph& cone, const ModelConstants& c, std::uint64_t seed);

}  // namespace hyperbuild
