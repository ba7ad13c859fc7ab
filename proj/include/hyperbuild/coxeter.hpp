#pragma once

// Word combinatorics of the reflection group of a right-angled p-gon.
// Generators are the side reflections s_0 .. s_{p-1}; s_i and s_j commute
// exactly when the sides are adjacent (|i - j| = 1 mod p).

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

namespace hyperbuild {

using Word = std::vector<std::uint8_t>;

class RightAngledGroup {
public:
    explicit RightAngledGroup(int p);

    int rank() const noexcept { return p_; }
    bool commute(int s, int t) const noexcept;

    /// Deletes cancelling pairs s..s whose separating letters all commute with s.
    Word reduce(const Word& word) const;
    /// Shortlex-least reduced word representing the same element.
    Word normal_form(const Word& word) const;
    /// Normal form of w s w^{-1}: the canonical identity of the wall crossed
    /// when the gallery w steps across side s.
    std::string reflection_key(const Word& w, int s) const;
    /// Generators that shorten the element when appended (right descent set).
    std::vector<int> right_descents(const Word& reduced) const;

private:
    int p_;
};

/// Finite automaton accepting exactly the shortlex normal forms. A state is
/// the last letter plus the position of the previous letter relative to it.
class NormalFormAutomaton {
public:
    explicit NormalFormAutomaton(const RightAngledGroup& group);

    int state_count() const noexcept { return static_cast<int>(successors_.size()); }
    /// State of the empty word.
    int start() const noexcept { return start_; }
    /// Successor state after appending `letter`, or -1 if the result is not a normal form.
    int next(int state, int letter) const;
    int last_letter(int state) const;
    /// Letters whose wall separates the element from the identity and bounds its chamber.
    std::vector<int> descents(int state) const;

    /// Perron root of the transition matrix; equals the growth rate of the group.
    double growth_rate() const noexcept { return growth_; }
    /// Positive right Perron vector, so that the number of normal-form
    /// continuations of length n from `state` grows like weight(state) * growth^n.
    double weight(int state) const;
    /// Probability of the normal-form cylinder ending in `state` after `length` letters
    /// under the maximal-entropy Markov measure.
    double cylinder_mass(int state, int length) const;
    /// Transition probabilities of the maximal-entropy chain.
    double transition_probability(int state, int letter) const;

    Eigen::MatrixXd transition_matrix() const;

private:
    int p_;
    int start_;
    std::vector<std::vector<int>> successors_;  // [state][letter] -> state or -1
    Eigen::VectorXd weights_;
    double growth_ = 0.0;
    double start_norm_ = 0.0;
};

}  // namespace hyperbuild
