#pragma once

// One apartment of the building: the hyperbolic plane tiled by right-angled
// regular p-gons, its walls, and wall counting along rays from a base point.

#include "hyperbuild/coxeter.hpp"
#include "hyperbuild/hypgeom.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace hyperbuild {

struct ModelConstants {
    int p = 0;
    int q = 0;
    double Q = 0.0;    // conformal dimension of the building boundary
    double a = 0.0;    // base of the visual quasi-metric
    double tau = 0.0;  // log a
};

/// Q = 1 + log(q-1)/arccosh((p-2)/2), log a = arccosh((p-2)/2).
ModelConstants compute_constants(int p, int q);

struct Chamber {
    Word word;  // shortlex normal form of the group element carrying the base chamber here
    HIsometry iso;
    int ring = 0;  // BFS distance from the base chamber over edge and vertex neighbours
};

struct Tessellation {
    int rings = 0;
    std::vector<Chamber> chambers;
    /// Radius of the disk about the base point that is fully tiled by `chambers`.
    double coverage_radius = 0.0;
};

struct Wall {
    int id = 0;
    HGeodesic geod;   // canonicalized normal
    std::string key;  // normal form of the wall's reflection
};

struct Crossing {
    std::string wall;  // wall key
    double s = 0.0;    // ray parameter of the crossing
    int side = 0;      // side of the chamber being left
};

struct CrossingSequence {
    double theta = 0.0;  // direction actually traced, after any perturbation
    double horizon = 0.0;
    std::vector<Crossing> crossings;
    Word gallery;  // side letters of the chambers visited; a reduced word

    /// Number of crossings with parameter <= L.
    std::size_t count_within(double L) const;
};

class Apartment {
public:
    /// Default base point is a generic interior point of the base chamber.
    explicit Apartment(int p, std::optional<HPoint> base = std::nullopt);

    int p() const noexcept { return polygon_.p; }
    const Polygon& polygon() const noexcept { return polygon_; }
    const RightAngledGroup& group() const noexcept { return group_; }
    const NormalFormAutomaton& automaton() const noexcept { return automaton_; }
    const HPoint& base_point() const noexcept { return base_; }
    /// Boost from the origin to the base point; angles are measured in this frame.
    const HIsometry& frame() const noexcept { return frame_; }

    HIsometry chamber_isometry(const Word& word) const;
    Ray ray(double theta) const { return Ray{base_, frame_.apply_vector(Vec3(0.0, std::cos(theta), std::sin(theta)))}; }

    Tessellation generate_tessellation(int n_rings) const;
    /// Walls meeting the closed disk of radius R about the base point.
    std::vector<Wall> enumerate_walls(const Tessellation& tess, double R) const;

    /// Traces the ray at angle theta up to parameter L. Throws DegenerateCrossingError
    /// when the ray runs through a vertex or along a wall.
    CrossingSequence trace(double theta, double L) const;
    /// Ray from any point of the base chamber.
    CrossingSequence trace(const Ray& r, double L) const;
    /// As trace, but re-perturbs the direction by a seeded angle in [1e-7, 1e-6]
    /// on degeneracy, at most 10 times. With `perturb_seed` the direction is
    /// perturbed once up front as well.
    CrossingSequence walls_crossed(double theta, double L, std::optional<std::uint64_t> perturb_seed = std::nullopt) const;
    CrossingSequence walls_crossed(const Ray& r, double L) const;

private:
    Polygon polygon_;
    RightAngledGroup group_;
    NormalFormAutomaton automaton_;
    HPoint base_;
    HIsometry frame_;
    std::vector<HIsometry> reflections_;
};

/// Number of walls crossed by both sequences within parameter L.
int gromov_product(const CrossingSequence& a, const CrossingSequence& b, double L);
int gromov_product(const Apartment& ap, double theta1, double theta2, double L);

struct StableProduct {
    int value = 0;
    double horizon = 0.0;  // smallest horizon at which the count matched its doubling
};

inline constexpr double kDefaultHorizon = 30.0;
inline constexpr double kHorizonCap = 80.0;

/// Gromov product stabilized by doubling the horizon from L until the count at
/// L and 2L agree. Throws ResolutionLimitError at the cap.
StableProduct stable_gromov_product(const Apartment& ap, double theta1, double theta2,
                                    double L = kDefaultHorizon, double cap = kHorizonCap);

/// a^{-g} for the stabilized product g; 0 for coincident directions.
double apartment_quasi_metric(const Apartment& ap, const ModelConstants& c, double theta1, double theta2,
                              double L = kDefaultHorizon, double cap = kHorizonCap);

/// Angle normalized to [0, 2 pi).
double wrap_angle(double theta);

}  // namespace hyperbuild
