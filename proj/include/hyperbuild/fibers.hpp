#pragma once

// Fibers over a segment point t: good/bad walls along [x t), the tree of
// branchings at those walls and the fiber measure bounds.

#include "hyperbuild/apartment.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace hyperbuild {

struct CrossingFlags {
    std::vector<bool> bad;           // one entry per crossing of the t ray
    std::vector<std::string> walls;  // wall keys, same order
    int N = 0;                       // number of bad entries

    int good_count() const noexcept { return static_cast<int>(bad.size()) - N; }
};

/// A crossing of the t ray is bad iff its wall also crosses the xi or eta ray,
/// all three rays examined up to the same horizon L.
CrossingFlags classify_crossings(const CrossingSequence& t, const CrossingSequence& xi, const CrossingSequence& eta,
                                 double L);
CrossingFlags classify_crossings(const Apartment& ap, double t_theta, double xi_theta, double eta_theta, double L);

struct NIdentity {
    int N = 0;
    int g_xi_t = 0;
    int g_t_eta = 0;
    int g_xi_eta = 0;
    bool holds = false;
};

NIdentity n_identity(const Apartment& ap, double t_theta, double xi_theta, double eta_theta, double L);

/// (q-1)^{-N}
double gamma_mass(const CrossingFlags& flags, int q);

inline constexpr std::uint64_t kDefaultLeafCap = std::uint64_t{1} << 20;

/// Levels of the tree T over [x t). Good levels branch into q-1 children and bad
/// levels carry a single child; leaves of the subtree U are the branch words
/// that stay in the apartment at every bad level.
class FiberTree {
public:
    FiberTree(const CrossingFlags& flags, int q, std::uint64_t cap = kDefaultLeafCap);

    int q() const noexcept { return q_; }
    const CrossingFlags& levels() const noexcept { return flags_; }
    std::uint64_t leaf_count() const noexcept { return leaves_; }
    /// Weight of every leaf under the normalized restriction to U.
    double leaf_weight() const noexcept;
    /// Branch word of leaf `index`: labels per level, 0 at bad levels.
    std::vector<std::uint8_t> leaf(std::uint64_t index) const;
    /// Mass of the U leaves inside the full tree T with its standard probability,
    /// summed leaf by leaf.
    double u_mass_in_t() const;

private:
    CrossingFlags flags_;
    int q_;
    std::uint64_t leaves_;
};

struct Lemma4Ratio {
    double gamma = 0.0;
    double ratio = 0.0;          // gamma / min(t, l - t)^{Q-1}
    double refined_ratio = 0.0;  // gamma / (t (l - t) / l)^{Q-1}
};

Lemma4Ratio lemma4_ratio(double t, double l, const CrossingFlags& flags, const ModelConstants& c);

}  // namespace hyperbuild
