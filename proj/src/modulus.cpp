#include "hyperbuild/modulus.hpp"

#include "hyperbuild/errors.hpp"

#include <Eigen/Dense>
#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <queue>
#include <random>
#include <set>

namespace hyperbuild {

Graph::Graph(int n, double len, double mu)
    : adj(static_cast<std::size_t>(n)), length(static_cast<std::size_t>(n), len), measure(static_cast<std::size_t>(n), mu) {}

void Graph::add_edge(int a, int b) {
    if (a == b) return;
    auto& na = adj.at(static_cast<std::size_t>(a));
    if (std::find(na.begin(), na.end(), b) != na.end()) return;
    na.push_back(b);
    adj.at(static_cast<std::size_t>(b)).push_back(a);
}

void Graph::remove_edge(int a, int b) {
    auto& na = adj.at(static_cast<std::size_t>(a));
    auto& nb = adj.at(static_cast<std::size_t>(b));
    na.erase(std::remove(na.begin(), na.end(), b), na.end());
    nb.erase(std::remove(nb.begin(), nb.end(), a), nb.end());
}

Graph Graph::path(int k, double len, double mu) {
    Graph g(k, len, mu);
    for (int i = 0; i + 1 < k; ++i) g.add_edge(i, i + 1);
    return g;
}

namespace {

void validate(const ModulusProblem& prob) {
    const int n = prob.graph.size();
    if (!(prob.Q > 1.0)) throw DomainError("modulus exponent must exceed 1");
    if (prob.E.empty() || prob.F.empty()) throw InvalidInputError("E and F must be nonempty");
    std::vector<char> inE(static_cast<std::size_t>(n), 0);
    for (const int v : prob.E) {
        if (v < 0 || v >= n) throw InvalidInputError("E has an out-of-range node");
        inE[static_cast<std::size_t>(v)] = 1;
    }
    for (const int v : prob.F) {
        if (v < 0 || v >= n) throw InvalidInputError("F has an out-of-range node");
        if (inE[static_cast<std::size_t>(v)]) throw InvalidInputError("E and F must be disjoint");
    }
    for (int v = 0; v < n; ++v) {
        if (!(prob.graph.length[static_cast<std::size_t>(v)] > 0.0) || !(prob.graph.measure[static_cast<std::size_t>(v)] > 0.0)) {
            throw InvalidInputError(fmt::format("node {} needs positive length and measure", v));
        }
    }
}

constexpr std::size_t kPathBatch = 64;
constexpr int kInnerPassesAfterColumns = 10;

struct PathResult {
    double cost = std::numeric_limits<double>::infinity();
    std::vector<int> path;
};

// Node-weighted shortest paths from `sources`, never expanding past a target.
// Returns one path per reachable target, cheapest first; each path runs source to target.
std::vector<PathResult> shortest_paths(const Graph& graph, const std::vector<double>& w, const std::vector<int>& sources,
                                       const std::vector<int>& targets) {
    const auto n = static_cast<std::size_t>(graph.size());
    std::vector<double> dist(n, std::numeric_limits<double>::infinity());
    std::vector<int> parent(n, -1);
    std::vector<char> target(n, 0);
    for (const int v : targets) target[static_cast<std::size_t>(v)] = 1;
    using Item = std::pair<double, int>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
    for (const int v : sources) {
        const auto i = static_cast<std::size_t>(v);
        if (w[i] < dist[i]) {
            dist[i] = w[i];
            heap.emplace(w[i], v);
        }
    }
    while (!heap.empty()) {
        const auto [d, v] = heap.top();
        heap.pop();
        if (d > dist[static_cast<std::size_t>(v)] || target[static_cast<std::size_t>(v)]) continue;
        for (const int u : graph.adj[static_cast<std::size_t>(v)]) {
            const double nd = d + w[static_cast<std::size_t>(u)];
            if (nd < dist[static_cast<std::size_t>(u)]) {
                dist[static_cast<std::size_t>(u)] = nd;
                parent[static_cast<std::size_t>(u)] = v;
                heap.emplace(nd, u);
            }
        }
    }
    std::vector<PathResult> out;
    for (const int t : targets) {
        if (!std::isfinite(dist[static_cast<std::size_t>(t)])) continue;
        PathResult r;
        r.cost = dist[static_cast<std::size_t>(t)];
        for (int v = t; v >= 0; v = parent[static_cast<std::size_t>(v)]) r.path.push_back(v);
        std::reverse(r.path.begin(), r.path.end());
        out.push_back(std::move(r));
    }
    std::stable_sort(out.begin(), out.end(), [](const PathResult& x, const PathResult& y) { return x.cost < y.cost; });
    return out;
}

// Weights of the path-usage objective: Phi(T) = sum_v w_v T_v^q with
// w_v = (mu_v len_v^{-Q})^{-1/(Q-1)} and q = Q/(Q-1). The modulus is (min Phi)^{1-Q}.
std::vector<double> usage_weights(const ModulusProblem& prob) {
    const auto n = static_cast<std::size_t>(prob.graph.size());
    std::vector<double> w(n);
    for (std::size_t v = 0; v < n; ++v) {
        const double sigma = prob.graph.measure[v] * std::pow(prob.graph.length[v], -prob.Q);
        w[v] = std::pow(sigma, -1.0 / (prob.Q - 1.0));
    }
    return w;
}

// Path distribution over a growing path set; mass moves between paths along
// Newton steps of the usage objective. Node prices y_v = w_v T_v^{q-1} are
// proportional to the gradient and cached.
class PathFlow {
public:
    PathFlow(std::vector<double> w, double q)
        : w_(std::move(w)), q_(q), usage_(w_.size(), 0.0), price_(w_.size(), 0.0), mark_(w_.size(), 0) {}

    std::size_t size() const { return paths_.size(); }
    const std::vector<std::vector<int>>& paths() const { return paths_; }
    const std::vector<double>& mass() const { return eta_; }
    const std::vector<double>& prices() const { return price_; }

    void add(std::vector<int> path) {
        eta_.push_back(paths_.empty() ? 1.0 : 0.0);
        if (paths_.empty()) {
            for (const int v : path) bump(static_cast<std::size_t>(v), 1.0);
        }
        paths_.push_back(std::move(path));
    }

    double objective() const {
        double f = 0.0;
        for (std::size_t v = 0; v < w_.size(); ++v) f += price_[v] * usage_[v];
        return f;
    }

    double price(std::size_t k) const {
        double c = 0.0;
        for (const int v : paths_[k]) c += price_[static_cast<std::size_t>(v)];
        return c;
    }

    /// One Gauss-Seidel pass toward the cheapest path; returns the largest price
    /// excess over it among loaded paths.
    double pass() {
        std::size_t best = 0;
        double best_price = std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < paths_.size(); ++k) {
            const double c = price(k);
            if (c < best_price) {
                best_price = c;
                best = k;
            }
        }
        double spread = 0.0;
        for (std::size_t k = 0; k < paths_.size(); ++k) {
            if (k == best || eta_[k] <= 0.0) continue;
            const double diff = price(k) - best_price;
            spread = std::max(spread, diff);
            if (diff > 0.0) best_price += shift(k, best, diff);
        }
        return spread;
    }

private:
    void bump(std::size_t v, double delta) {
        usage_[v] = std::max(0.0, usage_[v] + delta);
        price_[v] = w_[v] * std::pow(usage_[v], q_ - 1.0);
    }

    // Moves mass from path `from` to path `to`; `diff` is their price difference.
    // Returns the change in the price of `to`.
    double shift(std::size_t from, std::size_t to, double diff) {
        lose_.clear();
        gain_.clear();
        for (const int v : paths_[to]) mark_[static_cast<std::size_t>(v)] = 1;
        for (const int v : paths_[from]) {
            if (!mark_[static_cast<std::size_t>(v)]) lose_.push_back(v);
            mark_[static_cast<std::size_t>(v)] |= 2;
        }
        for (const int v : paths_[to]) {
            if (mark_[static_cast<std::size_t>(v)] == 1) gain_.push_back(v);
        }
        for (const int v : paths_[to]) mark_[static_cast<std::size_t>(v)] = 0;
        for (const int v : paths_[from]) mark_[static_cast<std::size_t>(v)] = 0;

        // Along the move the objective is convex with slope q (price(to) - price(from)).
        double curvature = 0.0;
        for (const auto* set : {&lose_, &gain_}) {
            for (const int v : *set) {
                const auto i = static_cast<std::size_t>(v);
                curvature += usage_[i] > 0.0 ? (q_ - 1.0) * price_[i] / usage_[i] : std::numeric_limits<double>::infinity();
            }
        }
        const double cap = eta_[from];
        double step = curvature > 0.0 && std::isfinite(curvature) ? std::min(cap, diff / curvature) : cap;
        auto slope = [&](double st) {
            double d = 0.0;
            for (const int v : gain_) d += w_[static_cast<std::size_t>(v)] * std::pow(usage_[static_cast<std::size_t>(v)] + st, q_ - 1.0);
            for (const int v : lose_) d -= w_[static_cast<std::size_t>(v)] * std::pow(std::max(usage_[static_cast<std::size_t>(v)] - st, 0.0), q_ - 1.0);
            return d;
        };
        // Any step whose end slope is nonpositive decreases the objective; otherwise
        // a few regula falsi steps on [lo, hi].
        double lo = 0.0;
        double lo_slope = -diff;
        double hi = step;
        double hi_slope = slope(hi);
        for (int it = 0; it < 4 && hi_slope > 0.0; ++it) {
            const double x = lo + (hi - lo) * (-lo_slope) / (hi_slope - lo_slope);
            if (!(x > lo && x < hi)) break;
            const double d = slope(x);
            if (d <= 0.0) {
                lo = x;
                lo_slope = d;
            } else {
                hi = x;
                hi_slope = d;
            }
        }
        for (int it = 0; it < 60 && hi_slope > 0.0 && lo == 0.0; ++it) {
            hi *= 0.5;
            hi_slope = slope(hi);
        }
        step = hi_slope > 0.0 ? lo : hi;
        if (!(step > 0.0)) return 0.0;
        eta_[from] = step == cap ? 0.0 : eta_[from] - step;
        eta_[to] += step;
        for (const int v : lose_) bump(static_cast<std::size_t>(v), -step);
        double change = 0.0;
        for (const int v : gain_) {
            const auto i = static_cast<std::size_t>(v);
            change -= price_[i];
            bump(i, step);
            change += price_[i];
        }
        return change;
    }

    std::vector<double> w_;
    double q_;
    std::vector<double> usage_;
    std::vector<double> price_;
    std::vector<char> mark_;
    std::vector<int> lose_;
    std::vector<int> gain_;
    std::vector<std::vector<int>> paths_;
    std::vector<double> eta_;
};

}  // namespace

ModulusSolution discrete_modulus(const ModulusProblem& prob, double tol, int max_iterations, double gap) {
    validate(prob);
    if (!(tol > 0.0)) throw InvalidInputError("tolerance must be positive");
    const auto n = static_cast<std::size_t>(prob.graph.size());
    const double Q = prob.Q;
    const double q = Q / (Q - 1.0);
    const auto& len = prob.graph.length;
    const std::vector<double> w = usage_weights(prob);

    ModulusSolution sol;
    auto first = shortest_paths(prob.graph, w, prob.E, prob.F);
    if (first.empty()) {
        sol.rho.assign(n, 0.0);
        return sol;
    }
    PathFlow flow(w, q);
    std::set<std::vector<int>> known{first.front().path};
    flow.add(std::move(first.front().path));

    if (gap < 0.0) throw InvalidInputError("gap tolerance must be nonnegative");
    const double gap_tol = gap > 0.0 ? gap : std::max(1e-10, 1e-3 * tol);
    double inner_tol = 1e-3;
    int passes = 0;
    std::vector<double> y;
    double phi = 0.0;
    double cheapest = 0.0;
    while (true) {
        y = flow.prices();
        phi = flow.objective();  // equals the mass-weighted mean path price
        auto candidates = shortest_paths(prob.graph, y, prob.E, prob.F);
        cheapest = candidates.front().cost;
        const double lower = std::pow(phi, 1.0 - Q);
        const double upper = cheapest > 0.0 ? phi / std::pow(cheapest, Q) : std::numeric_limits<double>::infinity();
        const double violation = 1.0 - cheapest / phi;
        if (violation <= tol && upper - lower <= gap_tol * upper) {
            sol.value = upper;
            sol.lower = lower;
            sol.max_violation = std::max(0.0, violation);
            break;
        }
        if (passes >= max_iterations) {
            throw NonConvergenceError(fmt::format("modulus not converged after {} passes (bracket [{:.9g}, {:.9g}])",
                                                  passes, lower, upper),
                                      lower, upper);
        }
        // Columns cheaper than every loaded path improve the restricted problem.
        double floor_price = std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < flow.size(); ++k) {
            if (flow.mass()[k] > 0.0) floor_price = std::min(floor_price, flow.price(k));
        }
        for (auto& r : shortest_paths(prob.graph, y, prob.F, prob.E)) {
            std::reverse(r.path.begin(), r.path.end());
            candidates.push_back(std::move(r));
        }
        std::stable_sort(candidates.begin(), candidates.end(),
                         [](const PathResult& x, const PathResult& z) { return x.cost < z.cost; });
        std::size_t added = 0;
        for (auto& r : candidates) {
            if (added >= kPathBatch || !(r.cost < floor_price * (1.0 - 1e-14))) break;
            if (known.insert(r.path).second) {
                flow.add(std::move(r.path));
                ++added;
            }
        }
        // New columns change the restricted problem, so a few passes suffice;
        // without them it is solved more tightly.
        if (added == 0) inner_tol = std::max(1e-16, inner_tol * 0.1);
        const int inner_cap = added > 0 ? kInnerPassesAfterColumns : 1000;
        for (int inner = 0; inner < inner_cap && passes < max_iterations; ++inner, ++passes) {
            if (flow.pass() <= inner_tol * phi) break;
        }
    }
    sol.rho.resize(n);
    for (std::size_t v = 0; v < n; ++v) sol.rho[v] = y[v] / (len[v] * cheapest);
    sol.iterations = passes;
    for (std::size_t k = 0; k < flow.size(); ++k) {
        if (flow.mass()[k] > 0.0) sol.paths.push_back(flow.paths()[k]);
    }
    return sol;
}

namespace {

// Lagrangian dual over a fixed path list: maximize sum lambda - (Q-1) sum mu rho(N lambda)^Q
// with rho_v = (len_v c_v / (Q mu_v))^{1/(Q-1)}, by coordinate ascent and projected Newton.
class PathDual {
public:
    PathDual(const ModulusProblem& prob, std::vector<std::vector<int>> paths)
        : prob_(prob), paths_(std::move(paths)), n_(static_cast<std::size_t>(prob.graph.size())),
          expo_(1.0 / (prob.Q - 1.0)), coef_(n_), load_(n_, 0.0), lambda_(paths_.size(), 0.0) {
        for (std::size_t v = 0; v < n_; ++v) coef_[v] = std::pow(prob.graph.length[v] / (prob.Q * prob.graph.measure[v]), expo_);
    }

    double rho(std::size_t v) const { return load_[v] > 0.0 ? coef_[v] * std::pow(load_[v], expo_) : 0.0; }

    double cost(const std::vector<int>& p) const {
        double c = 0.0;
        for (const int v : p) c += prob_.graph.length[static_cast<std::size_t>(v)] * rho(static_cast<std::size_t>(v));
        return c;
    }

    double value() const {
        double energy = 0.0;
        for (std::size_t v = 0; v < n_; ++v) energy += prob_.graph.measure[v] * std::pow(rho(v), prob_.Q);
        return std::accumulate(lambda_.begin(), lambda_.end(), 0.0) - (prob_.Q - 1.0) * energy;
    }

    /// Energy of rho rescaled so the cheapest path costs 1.
    double admissible_energy() const {
        double cheapest = std::numeric_limits<double>::infinity();
        for (const auto& p : paths_) cheapest = std::min(cheapest, cost(p));
        double energy = 0.0;
        for (std::size_t v = 0; v < n_; ++v) energy += prob_.graph.measure[v] * std::pow(rho(v) / cheapest, prob_.Q);
        return energy;
    }

    void sweep() {
        for (std::size_t k = 0; k < paths_.size(); ++k) coordinate(k);
    }

    /// Projected Newton steps; stops when the free-path residual is negligible.
    void newton(int budget) {
        double current = value();
        for (int step = 0; step < budget; ++step) {
            std::vector<std::size_t> free;
            std::vector<double> grad;
            double residual = 0.0;
            for (std::size_t k = 0; k < paths_.size(); ++k) {
                const double g = 1.0 - cost(paths_[k]);
                if (lambda_[k] > 0.0 || g > 0.0) {
                    free.push_back(k);
                    grad.push_back(g);
                    residual = std::max(residual, std::abs(g));
                }
            }
            if (free.empty() || residual <= 1e-15) return;
            const double floor = 1e-12 * *std::max_element(load_.begin(), load_.end());
            std::vector<double> curv(n_);
            for (std::size_t v = 0; v < n_; ++v) {
                curv[v] = prob_.graph.length[v] * coef_[v] * expo_ * std::pow(std::max(load_[v], floor), expo_ - 1.0);
            }
            const auto nf = static_cast<Eigen::Index>(free.size());
            Eigen::MatrixXd H = Eigen::MatrixXd::Zero(nf, nf);
            Eigen::VectorXd g(nf);
            std::vector<char> on(n_, 0);
            for (Eigen::Index i = 0; i < nf; ++i) {
                g(i) = grad[static_cast<std::size_t>(i)];
                for (const int v : paths_[free[static_cast<std::size_t>(i)]]) on[static_cast<std::size_t>(v)] = 1;
                for (Eigen::Index j = i; j < nf; ++j) {
                    double h = 0.0;
                    for (const int v : paths_[free[static_cast<std::size_t>(j)]]) {
                        if (on[static_cast<std::size_t>(v)]) h += prob_.graph.length[static_cast<std::size_t>(v)] * curv[static_cast<std::size_t>(v)];
                    }
                    H(i, j) = h;
                    H(j, i) = h;
                }
                for (const int v : paths_[free[static_cast<std::size_t>(i)]]) on[static_cast<std::size_t>(v)] = 0;
            }
            H.diagonal().array() += 1e-12 * H.diagonal().maxCoeff();
            const Eigen::VectorXd d = H.ldlt().solve(g);
            const std::vector<double> saved = lambda_;
            bool improved = false;
            for (double s = 1.0; s > 1e-12; s *= 0.5) {
                for (Eigen::Index i = 0; i < nf; ++i) {
                    const auto k = free[static_cast<std::size_t>(i)];
                    lambda_[k] = std::max(0.0, saved[k] + s * d(i));
                }
                rebuild();
                const double v = value();
                if (v > current) {
                    current = v;
                    improved = true;
                    break;
                }
            }
            if (!improved) {
                lambda_ = saved;
                rebuild();
                return;
            }
        }
    }

private:
    void rebuild() {
        std::fill(load_.begin(), load_.end(), 0.0);
        for (std::size_t k = 0; k < paths_.size(); ++k) {
            for (const int v : paths_[k]) load_[static_cast<std::size_t>(v)] += lambda_[k];
        }
    }

    // Sets lambda_k so path k costs exactly 1, or to 0 if it is already satisfied.
    void coordinate(std::size_t k) {
        const auto& p = paths_[k];
        for (const int v : p) load_[static_cast<std::size_t>(v)] -= lambda_[k];
        auto cost_at = [&](double extra) {
            double c = 0.0;
            for (const int v : p) {
                const auto i = static_cast<std::size_t>(v);
                const double l = load_[i] + extra;
                if (l > 0.0) c += prob_.graph.length[i] * coef_[i] * std::pow(l, expo_);
            }
            return c;
        };
        double lam = 0.0;
        if (cost_at(0.0) < 1.0) {
            double lo = 0.0;
            double hi = std::max(lambda_[k], 1e-300);
            while (cost_at(hi) < 1.0) hi *= 2.0;
            for (int it = 0; it < 200 && hi - lo > 1e-16 * hi; ++it) {
                const double mid = 0.5 * (lo + hi);
                (cost_at(mid) < 1.0 ? lo : hi) = mid;
            }
            lam = 0.5 * (lo + hi);
        }
        lambda_[k] = lam;
        for (const int v : p) load_[static_cast<std::size_t>(v)] += lam;
    }

    const ModulusProblem& prob_;
    std::vector<std::vector<int>> paths_;
    std::size_t n_;
    double expo_;
    std::vector<double> coef_;
    std::vector<double> load_;
    std::vector<double> lambda_;
};

}  // namespace

double brute_force_modulus(const ModulusProblem& prob, std::size_t max_nodes, std::size_t max_paths) {
    validate(prob);
    const auto n = static_cast<std::size_t>(prob.graph.size());
    if (n > std::min<std::size_t>(max_nodes, 32)) throw CapacityError(fmt::format("brute-force modulus handles at most {} nodes (got {})", max_nodes, n));

    std::vector<char> inE(n, 0);
    std::vector<char> inF(n, 0);
    for (const int v : prob.E) inE[static_cast<std::size_t>(v)] = 1;
    for (const int v : prob.F) inF[static_cast<std::size_t>(v)] = 1;
    std::vector<std::vector<int>> paths;
    std::vector<int> stack;
    std::vector<char> on(n, 0);
    // Paths stop at their first F node and never re-enter E: longer ones are dominated.
    std::function<void(int)> dfs = [&](int v) {
        stack.push_back(v);
        on[static_cast<std::size_t>(v)] = 1;
        if (inF[static_cast<std::size_t>(v)]) {
            paths.push_back(stack);
            if (paths.size() > max_paths) throw CapacityError("path family too large for brute force");
        } else {
            for (const int u : prob.graph.adj[static_cast<std::size_t>(v)]) {
                if (!on[static_cast<std::size_t>(u)] && !inE[static_cast<std::size_t>(u)]) dfs(u);
            }
        }
        on[static_cast<std::size_t>(v)] = 0;
        stack.pop_back();
    };
    for (const int e : prob.E) dfs(e);
    if (paths.empty()) return 0.0;
    // A path whose node set contains another path's is never binding.
    {
        std::vector<std::uint32_t> mask;
        for (const auto& p : paths) {
            std::uint32_t bits = 0;
            for (const int v : p) bits |= 1u << v;
            mask.push_back(bits);
        }
        std::vector<std::size_t> order(paths.size());
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return paths[x].size() < paths[y].size(); });
        std::vector<std::uint32_t> minimal;
        std::vector<std::vector<int>> kept;
        for (const auto k : order) {
            if (std::any_of(minimal.begin(), minimal.end(), [&](std::uint32_t b) { return (b & mask[k]) == b; })) continue;
            minimal.push_back(mask[k]);
            kept.push_back(std::move(paths[k]));
        }
        paths = std::move(kept);
    }

    PathDual dual(prob, std::move(paths));
    double lower = 0.0;
    double upper = std::numeric_limits<double>::infinity();
    for (int round = 0; round < 500; ++round) {
        for (int s = 0; s < 20; ++s) dual.sweep();
        dual.newton(100);
        lower = dual.value();
        upper = dual.admissible_energy();
        if (upper - lower <= 1e-12 * upper) return upper;
    }
    throw NonConvergenceError(fmt::format("brute-force modulus bracket [{:.12g}, {:.12g}] did not close", lower, upper),
                              lower, upper);
}

double separation_ratio(const std::vector<int>& E, const std::vector<int>& F, const PointMetric& d) {
    if (E.empty() || F.empty()) throw InvalidInputError("continua must be nonempty");
    auto diameter = [&](const std::vector<int>& S) {
        double out = 0.0;
        for (std::size_t i = 0; i < S.size(); ++i) {
            for (std::size_t j = i + 1; j < S.size(); ++j) out = std::max(out, d(S[i], S[j]));
        }
        return out;
    };
    const double de = diameter(E);
    const double df = diameter(F);
    if (!(de > 0.0) || !(df > 0.0)) throw DomainError("a continuum of zero diameter is degenerate");
    double sep = std::numeric_limits<double>::infinity();
    for (const int e : E) {
        for (const int f : F) sep = std::min(sep, d(e, f));
    }
    return sep / std::min(de, df);
}

double AtlasGraph::dist(int i, int j) const {
    return quasi_metric(points.at(static_cast<std::size_t>(i)), points.at(static_cast<std::size_t>(j)), constants);
}

namespace {
constexpr double kArcPrecision = 1e-9;
}  // namespace

AtlasGraph build_atlas_graph(const Apartment& ap, const BoundaryAtlas& atlas, int level) {
    if (level < 0) throw InvalidInputError("graph level must be nonnegative");
    const int n = static_cast<int>(atlas.points.size());
    AtlasGraph out;
    out.graph = Graph(n);
    out.points = atlas.points;
    out.constants = atlas.constants;
    out.level = level;
    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::vector<double> theta(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const auto iu = static_cast<std::size_t>(i);
        theta[iu] = wrap_angle(atlas.points[iu].theta);
        out.graph.measure[iu] = atlas.weights[iu];
        out.graph.length[iu] = std::pow(atlas.constants.a, -level);
    }
    std::sort(order.begin(), order.end(), [&](int x, int y) { return theta[static_cast<std::size_t>(x)] < theta[static_cast<std::size_t>(y)]; });
    // Coded products never exceed the apartment product, so candidates lie in the
    // counter-clockwise part of each point's product arc.
    for (std::size_t pos = 0; pos < order.size(); ++pos) {
        const int i = order[pos];
        const double t0 = theta[static_cast<std::size_t>(i)];
        const Arc arc = product_arc(ap, t0, level, kArcPrecision);
        const double reach = arc.length >= 2.0 * std::numbers::pi ? arc.length
                                                                   : wrap_angle(arc.start + arc.length - t0) + kArcPrecision;
        for (std::size_t step = 1; step < order.size(); ++step) {
            const int j = order[(pos + step) % order.size()];
            const double ahead = wrap_angle(theta[static_cast<std::size_t>(j)] - t0);
            if (ahead > reach) break;
            if (coded_gromov_product(atlas.points[static_cast<std::size_t>(i)], atlas.points[static_cast<std::size_t>(j)]) >= level) {
                out.graph.add_edge(i, j);
            }
        }
    }
    return out;
}

namespace {

// Graph component of `center` inside the closed ball of radius r, avoiding `blocked`.
std::vector<int> grown_ball(const AtlasGraph& g, int center, double r, const std::vector<char>& blocked) {
    std::vector<int> out;
    if (blocked[static_cast<std::size_t>(center)]) return out;
    std::vector<char> seen(static_cast<std::size_t>(g.size()), 0);
    std::vector<int> queue{center};
    seen[static_cast<std::size_t>(center)] = 1;
    while (!queue.empty()) {
        const int v = queue.back();
        queue.pop_back();
        out.push_back(v);
        for (const int u : g.graph.adj[static_cast<std::size_t>(v)]) {
            const auto ui = static_cast<std::size_t>(u);
            if (seen[ui] || blocked[ui] || g.dist(center, u) > r) continue;
            seen[ui] = 1;
            queue.push_back(u);
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace

std::vector<ContinuumSpec> continuum_specs(const std::vector<CodedPoint>& points, const ModelConstants& c, int pool,
                                           int count, const std::vector<int>& levels, std::uint64_t seed) {
    if (pool < 2 || pool > static_cast<int>(points.size())) throw InvalidInputError("centre pool must hold at least two atlas points");
    if (levels.empty()) throw InvalidInputError("continuum levels must be nonempty");
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> pick(0, pool - 1);
    std::uniform_int_distribution<std::size_t> level(0, levels.size() - 1);
    std::vector<ContinuumSpec> out;
    for (int attempt = 0; attempt < 100 * count && static_cast<int>(out.size()) < count; ++attempt) {
        ContinuumSpec spec;
        spec.center_e = pick(rng);
        spec.radius_e = std::pow(c.a, -levels[level(rng)]);
        spec.radius_f = std::pow(c.a, -levels[level(rng)]);
        std::vector<int> ring;
        for (int v = 0; v < pool; ++v) {
            const double d = quasi_metric(points[static_cast<std::size_t>(spec.center_e)], points[static_cast<std::size_t>(v)], c);
            if (d > spec.radius_e && d <= c.a * spec.radius_e) ring.push_back(v);
        }
        if (ring.empty()) continue;
        spec.center_f = ring[std::uniform_int_distribution<std::size_t>(0, ring.size() - 1)(rng)];
        out.push_back(spec);
    }
    return out;
}

ContinuumPair realize(const AtlasGraph& g, const ContinuumSpec& spec) {
    ContinuumPair pair;
    std::vector<char> blocked(static_cast<std::size_t>(g.size()), 0);
    pair.E = grown_ball(g, spec.center_e, spec.radius_e, blocked);
    for (const int v : pair.E) blocked[static_cast<std::size_t>(v)] = 1;
    pair.F = grown_ball(g, spec.center_f, spec.radius_f, blocked);
    if (pair.E.size() < 2 || pair.F.size() < 2) return {};
    // E and F must share a graph component, or the pair sees a split the space does not have.
    std::vector<char> seen(static_cast<std::size_t>(g.size()), 0);
    std::vector<int> queue(pair.E.begin(), pair.E.end());
    for (const int v : queue) seen[static_cast<std::size_t>(v)] = 1;
    while (!queue.empty()) {
        const int v = queue.back();
        queue.pop_back();
        for (const int u : g.graph.adj[static_cast<std::size_t>(v)]) {
            if (!seen[static_cast<std::size_t>(u)]) {
                seen[static_cast<std::size_t>(u)] = 1;
                queue.push_back(u);
            }
        }
    }
    if (!seen[static_cast<std::size_t>(pair.F.front())]) return {};
    try {
        pair.delta = separation_ratio(pair.E, pair.F, [&](int i, int j) { return g.dist(i, j); });
    } catch (const DomainError&) {
        return {};
    }
    return pair;
}

std::vector<LoewnerRow> loewner_profile(const AtlasGraph& g, std::vector<ContinuumPair>& pairs,
                                        const std::vector<double>& t_values, double tol) {
    if (t_values.empty()) return {};
    const double t_max = *std::max_element(t_values.begin(), t_values.end());
    for (auto& pair : pairs) {
        if (pair.E.empty() || pair.F.empty() || pair.delta > t_max || pair.modulus > 0.0) continue;
        const ModulusProblem prob{g.graph, g.constants.Q, pair.E, pair.F};
        const auto sol = discrete_modulus(prob, tol, 100000, tol);
        pair.modulus = sol.value;
        pair.lower = sol.lower;
    }
    std::vector<LoewnerRow> rows;
    for (const double t : t_values) {
        LoewnerRow row;
        row.t = t;
        for (std::size_t i = 0; i < pairs.size(); ++i) {
            const auto& pair = pairs[i];
            if (pair.E.empty() || pair.F.empty() || pair.delta > t) continue;
            ++row.pairs;
            if (row.pair < 0 || pair.modulus < row.lambda) {
                row.lambda = pair.modulus;
                row.lower = pair.lower;
                row.delta = pair.delta;
                row.pair = static_cast<int>(i);
            }
        }
        row.flagged = row.pairs == 0;
        rows.push_back(row);
    }
    return rows;
}

}  // namespace hyperbuild
