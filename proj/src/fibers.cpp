#include "hyperbuild/fibers.hpp"

#include "hyperbuild/errors.hpp"

#include <fmt/format.h>

#include <cmath>
#include <string_view>
#include <unordered_set>

namespace hyperbuild {

CrossingFlags classify_crossings(const CrossingSequence& t, const CrossingSequence& xi, const CrossingSequence& eta,
                                 double L) {
    std::unordered_set<std::string_view> companion;
    for (std::size_t i = 0, n = xi.count_within(L); i < n; ++i) companion.insert(xi.crossings[i].wall);
    for (std::size_t i = 0, n = eta.count_within(L); i < n; ++i) companion.insert(eta.crossings[i].wall);
    CrossingFlags flags;
    for (std::size_t i = 0, n = t.count_within(L); i < n; ++i) {
        const bool bad = companion.count(t.crossings[i].wall) > 0;
        flags.bad.push_back(bad);
        flags.walls.push_back(t.crossings[i].wall);
        flags.N += bad ? 1 : 0;
    }
    return flags;
}

CrossingFlags classify_crossings(const Apartment& ap, double t_theta, double xi_theta, double eta_theta, double L) {
    return classify_crossings(ap.walls_crossed(t_theta, L), ap.walls_crossed(xi_theta, L),
                              ap.walls_crossed(eta_theta, L), L);
}

NIdentity n_identity(const Apartment& ap, double t_theta, double xi_theta, double eta_theta, double L) {
    const CrossingSequence t = ap.walls_crossed(t_theta, L);
    const CrossingSequence xi = ap.walls_crossed(xi_theta, L);
    const CrossingSequence eta = ap.walls_crossed(eta_theta, L);
    NIdentity out;
    out.N = classify_crossings(t, xi, eta, L).N;
    out.g_xi_t = gromov_product(xi, t, L);
    out.g_t_eta = gromov_product(t, eta, L);
    out.g_xi_eta = gromov_product(xi, eta, L);
    out.holds = out.N == out.g_xi_t + out.g_t_eta - out.g_xi_eta;
    return out;
}

double gamma_mass(const CrossingFlags& flags, int q) {
    if (q < 3) throw DomainError("q must be at least 3");
    return std::pow(q - 1.0, -flags.N);
}

FiberTree::FiberTree(const CrossingFlags& flags, int q, std::uint64_t cap) : flags_(flags), q_(q), leaves_(1) {
    if (q < 3) throw DomainError("q must be at least 3");
    for (int i = 0; i < flags_.good_count(); ++i) {
        if (leaves_ > cap / static_cast<std::uint64_t>(q - 1)) {
            throw CapacityError(fmt::format("fiber tree with {} good levels exceeds the leaf cap {}; use a shorter horizon",
                                            flags_.good_count(), cap));
        }
        leaves_ *= static_cast<std::uint64_t>(q - 1);
    }
}

double FiberTree::leaf_weight() const noexcept { return std::pow(q_ - 1.0, -flags_.good_count()); }

std::vector<std::uint8_t> FiberTree::leaf(std::uint64_t index) const {
    if (index >= leaves_) throw InvalidInputError("leaf index out of range");
    std::vector<std::uint8_t> word(flags_.bad.size(), 0);
    const auto base = static_cast<std::uint64_t>(q_ - 1);
    for (std::size_t level = 0; level < word.size(); ++level) {
        if (flags_.bad[level]) continue;
        word[level] = static_cast<std::uint8_t>(index % base);
        index /= base;
    }
    return word;
}

double FiberTree::u_mass_in_t() const {
    const double level_prob = 1.0 / (q_ - 1.0);
    double total = 0.0;
    for (std::uint64_t i = 0; i < leaves_; ++i) {
        const auto word = leaf(i);
        double w = 1.0;
        for (std::size_t level = 0; level < word.size(); ++level) w *= level_prob;
        total += w;
    }
    return total;
}

Lemma4Ratio lemma4_ratio(double t, double l, const CrossingFlags& flags, const ModelConstants& c) {
    if (!(l > 0.0)) throw DomainError("segment length must be positive");
    if (!(t > 0.0 && t < l)) {
        throw DomainError(fmt::format("fiber mass ratio needs t strictly inside (0, l); got t = {:.9g}, l = {:.9g}", t, l));
    }
    Lemma4Ratio out;
    out.gamma = gamma_mass(flags, c.q);
    out.ratio = out.gamma / std::pow(std::min(t, l - t), c.Q - 1.0);
    out.refined_ratio = out.gamma / std::pow(t * (l - t) / l, c.Q - 1.0);
    return out;
}

}  // namespace hyperbuild
