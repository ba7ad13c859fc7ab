#pragma once

// Discrete Q-modulus of the family of paths joining two node sets, with node
// densities: a path gamma is admissible for rho when sum_{v in gamma} rho(v) len(v) >= 1,
// and the energy is sum_v rho(v)^Q mu(v).

#include "hyperbuild/boundary.hpp"

#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

namespace hyperbuild {

struct Graph {
    std::vector<std::vector<int>> adj;
    std::vector<double> length;   // per node
    std::vector<double> measure;  // per node

    explicit Graph(int n = 0, double len = 1.0, double mu = 1.0);
    int size() const noexcept { return static_cast<int>(adj.size()); }
    void add_edge(int a, int b);
    void remove_edge(int a, int b);
    /// Path 0 - 1 - ... - (k-1).
    static Graph path(int k, double len = 1.0, double mu = 1.0);
};

struct ModulusProblem {
    Graph graph;
    double Q = 2.0;
    std::vector<int> E;
    std::vector<int> F;
};

struct ModulusSolution {
    std::vector<double> rho;  // admissible: rescaled by the worst path cost
    double value = 0.0;       // energy of rho, an upper bound on the modulus
    double lower = 0.0;       // energy before rescaling, a lower bound on the modulus
    double max_violation = 0.0;
    int iterations = 0;
    std::vector<std::vector<int>> paths;  // paths carrying mass
};

/// Column generation on path distributions eta: the usage T = N^T eta minimizes
/// sum_v w_v T_v^{Q/(Q-1)}, and node-weighted shortest paths under the gradient
/// prices supply new paths. Stops once the cheapest path is within `tol` of the
/// mean and the bracket is within `gap` relatively (default max(1e-10, 1e-3 tol)).
ModulusSolution discrete_modulus(const ModulusProblem& prob, double tol = 1e-6, int max_iterations = 100000,
                                 double gap = 0.0);

/// Enumerates every minimal E-F path and solves the Lagrangian dual over all of
/// them: multipliers per path, rho_v = (len_v c_v / (Q mu_v))^{1/(Q-1)} for the
/// load c_v through v.
double brute_force_modulus(const ModulusProblem& prob, std::size_t max_nodes = 12, std::size_t max_paths = 200000);

using PointMetric = std::function<double(int, int)>;

/// dist(E, F) / min(diam E, diam F)
double separation_ratio(const std::vector<int>& E, const std::vector<int>& F, const PointMetric& d);

/// Graph on atlas points: edges join points at quasi-distance <= eps = a^{-level},
/// node measures are the atlas weights and every node has length eps.
struct AtlasGraph {
    Graph graph;
    std::vector<CodedPoint> points;
    ModelConstants constants;
    int level = 0;

    int size() const noexcept { return graph.size(); }
    double epsilon() const { return std::pow(constants.a, -level); }
    double dist(int i, int j) const;
};

AtlasGraph build_atlas_graph(const Apartment& ap, const BoundaryAtlas& atlas, int level);

struct LoewnerRow {
    double t = 0.0;
    double lambda = 0.0;  // smallest modulus over pairs with separation <= t
    double lower = 0.0;   // lower bracket end of that modulus
    double delta = 0.0;   // separation of the minimizing pair
    int pair = -1;        // index of the minimizing pair
    int pairs = 0;        // pairs with separation <= t
    bool flagged = false; // no pair qualifies
};

struct ContinuumPair {
    std::vector<int> E;
    std::vector<int> F;
    double delta = 0.0;
    double modulus = 0.0;  // 0 until solved
    double lower = 0.0;
};

/// Two closed balls around atlas points; realized on a graph as the graph
/// components of the centres inside the balls, F avoiding E.
struct ContinuumSpec {
    int center_e = 0;
    int center_f = 0;
    double radius_e = 0.0;
    double radius_f = 0.0;
};

/// Seeded specs with centres among the first `pool` points and radii a^{-level}
/// for levels drawn from `levels`; the F centre lies just outside the E ball.
std::vector<ContinuumSpec> continuum_specs(const std::vector<CodedPoint>& points, const ModelConstants& c, int pool,
                                           int count, const std::vector<int>& levels, std::uint64_t seed);
/// Empty E and F when the two lie in different graph components, or when a
/// continuum has fewer than two nodes or zero diameter.
ContinuumPair realize(const AtlasGraph& g, const ContinuumSpec& spec);

/// Solves the modulus of every nonempty pair with separation <= max(t_values), to
/// violation and bracket `tol`, then takes minima per t.
std::vector<LoewnerRow> loewner_profile(const AtlasGraph& g, std::vector<ContinuumPair>& pairs,
                                        const std::vector<double>& t_values, double tol);

}  // namespace hyperbuild
