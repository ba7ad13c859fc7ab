#include "hyperbuild/coxeter.hpp"

#include "hyperbuild/errors.hpp"

#include <algorithm>
#include <cmath>

namespace hyperbuild {

RightAngledGroup::RightAngledGroup(int p) : p_(p) {
    if (p < 5) throw DomainError("right-angled polygon groups need p >= 5");
}

bool RightAngledGroup::commute(int s, int t) const noexcept {
    const int d = ((s - t) % p_ + p_) % p_;
    return d == 1 || d == p_ - 1;
}

Word RightAngledGroup::reduce(const Word& word) const {
    Word out;
    out.reserve(word.size());
    for (const std::uint8_t s : word) {
        bool cancelled = false;
        for (std::size_t j = out.size(); j-- > 0;) {
            if (out[j] == s) {
                out.erase(out.begin() + static_cast<std::ptrdiff_t>(j));
                cancelled = true;
                break;
            }
            if (!commute(out[j], s)) break;
        }
        if (!cancelled) out.push_back(s);
    }
    return out;
}

Word RightAngledGroup::normal_form(const Word& word) const {
    Word rest = reduce(word);
    Word out;
    out.reserve(rest.size());
    while (!rest.empty()) {
        // A letter can move to the front iff it commutes with everything before it,
        // so the prefix may contain at most its two neighbours.
        std::size_t best = 0;
        int seen[2] = {rest[0], -1};
        for (std::size_t j = 1; j < rest.size(); ++j) {
            const int c = rest[j];
            const bool movable = commute(seen[0], c) && (seen[1] < 0 || commute(seen[1], c));
            if (movable && c < rest[best]) best = j;
            if (c != seen[0] && c != seen[1]) {
                if (seen[1] >= 0) break;
                seen[1] = c;
            }
        }
        out.push_back(rest[best]);
        rest.erase(rest.begin() + static_cast<std::ptrdiff_t>(best));
    }
    return out;
}

std::string RightAngledGroup::reflection_key(const Word& w, int s) const {
    Word conj;
    conj.reserve(2 * w.size() + 1);
    conj.insert(conj.end(), w.begin(), w.end());
    conj.push_back(static_cast<std::uint8_t>(s));
    conj.insert(conj.end(), w.rbegin(), w.rend());
    const Word nf = normal_form(conj);
    std::string key(nf.size(), '\0');
    std::transform(nf.begin(), nf.end(), key.begin(), [](std::uint8_t c) { return static_cast<char>('a' + c); });
    return key;
}

std::vector<int> RightAngledGroup::right_descents(const Word& reduced) const {
    std::vector<int> out;
    for (int s = 0; s < p_; ++s) {
        for (std::size_t j = reduced.size(); j-- > 0;) {
            if (reduced[j] == s) {
                out.push_back(s);
                break;
            }
            if (!commute(reduced[j], s)) break;
        }
    }
    return out;
}

namespace {

// Relative position classes of the previous letter with respect to the last one.
enum PrevClass { kNone = 0, kMinus1, kPlus1, kMinus2, kPlus2, kClassCount };

int prev_class(int prev, int last, int p) {
    const int d = ((prev - last) % p + p) % p;
    if (d == p - 1) return kMinus1;
    if (d == 1) return kPlus1;
    if (d == p - 2) return kMinus2;
    if (d == 2) return kPlus2;
    return kNone;
}

}  // namespace

NormalFormAutomaton::NormalFormAutomaton(const RightAngledGroup& group) : p_(group.rank()) {
    const int p = p_;
    const int n_states = kClassCount * p + 1;
    start_ = kClassCount * p;
    successors_.assign(n_states, std::vector<int>(p, -1));
    auto wrap = [p](int v) { return ((v % p) + p) % p; };

    for (int s = 0; s < p; ++s) successors_[start_][s] = kClassCount * s + kNone;
    for (int last = 0; last < p; ++last) {
        for (int cls = 0; cls < kClassCount; ++cls) {
            const int state = kClassCount * last + cls;
            for (int s = 0; s < p; ++s) {
                if (s == last) continue;
                // s must not be a right descent.
                if (cls == kMinus1 && s == wrap(last - 1)) continue;
                if (cls == kPlus1 && s == wrap(last + 1)) continue;
                if (group.commute(s, last)) {
                    // s could slide left over its commuting tail; shortlex needs it larger
                    // than every letter of that tail.
                    if (s < last) continue;
                    if (s == wrap(last - 1) && cls == kMinus2 && s < wrap(last - 2)) continue;
                    if (s == wrap(last + 1) && cls == kPlus2 && s < wrap(last + 2)) continue;
                }
                successors_[state][s] = kClassCount * s + prev_class(last, s, p);
            }
        }
    }

    // Perron data by power iteration on A + I (the shift removes any periodicity).
    Eigen::MatrixXd a = transition_matrix();
    Eigen::VectorXd v = Eigen::VectorXd::Ones(n_states);
    v[start_] = 0.0;
    double lambda = 0.0;
    for (int it = 0; it < 100000; ++it) {
        Eigen::VectorXd next = a * v + v;
        const double norm = next.maxCoeff();
        next /= norm;
        const double change = (next - v).cwiseAbs().maxCoeff();
        v = next;
        lambda = norm - 1.0;
        if (change < 1e-15) break;
    }
    weights_ = v;
    growth_ = lambda;
    start_norm_ = 0.0;
    for (int s = 0; s < p; ++s) start_norm_ += weights_[successors_[start_][s]];
    start_norm_ /= growth_;
}

int NormalFormAutomaton::next(int state, int letter) const { return successors_.at(state).at(letter); }

int NormalFormAutomaton::last_letter(int state) const {
    return state == start_ ? -1 : state / kClassCount;
}

std::vector<int> NormalFormAutomaton::descents(int state) const {
    if (state == start_) return {};
    const int last = state / kClassCount;
    const int cls = state % kClassCount;
    std::vector<int> out{last};
    if (cls == kMinus1) out.push_back((last + p_ - 1) % p_);
    if (cls == kPlus1) out.push_back((last + 1) % p_);
    return out;
}

double NormalFormAutomaton::weight(int state) const { return state == start_ ? start_norm_ : weights_[state]; }

double NormalFormAutomaton::cylinder_mass(int state, int length) const {
    if (state == start_) return 1.0;
    return weights_[state] * std::pow(growth_, -length) / start_norm_;
}

double NormalFormAutomaton::transition_probability(int state, int letter) const {
    const int nxt = next(state, letter);
    if (nxt < 0) return 0.0;
    return weights_[nxt] / (growth_ * weight(state));
}

Eigen::MatrixXd NormalFormAutomaton::transition_matrix() const {
    const int n = state_count();
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i) {
        if (i == start_) continue;
        for (int s = 0; s < p_; ++s) {
            const int j = successors_[i][s];
            if (j >= 0) a(i, j) += 1.0;
        }
    }
    return a;
}

}  // namespace hyperbuild
