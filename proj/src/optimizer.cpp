#include "tse/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "tse/error.hpp"

namespace tse {

namespace {

void check_sizes(const UnaryMaps& maps, const PairwiseWeights& w, std::size_t n) {
    if (maps.foreground.size() != n || maps.center.size() != n || maps.background.size() != n ||
        static_cast<std::size_t>(w.size()) != n) {
        throw ContractError("energy: maps, weights and S cover different region counts");
    }
}

double floored_log(double v, double eps) { return std::log(std::max(v, eps)); }

double max_abs_diff(std::span<const double> a, std::span<const double> b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

// Energy and gradient through the Laplacian form; one matrix-vector product.
struct Evaluation {
    double energy = 0.0;
    std::vector<double> gradient;
};

class Objective {
public:
    Objective(const UnaryMaps& maps, const PairwiseWeights& w, const EnergyParams& params)
        : w_(w), linear_(linear_coefficients(maps, params)), degree_(static_cast<std::size_t>(w.size()), 0.0) {
        for (double t : maps.background) constant_ += -params.gamma * floored_log(t, params.eps_log);
        for (int i = 0; i < w.size(); ++i) {
            double d = 0.0;
            for (double v : w.row(i)) d += v;
            degree_[static_cast<std::size_t>(i)] = d;
        }
    }

    Evaluation operator()(std::span<const double> s) const {
        const auto n = s.size();
        Evaluation out;
        out.gradient.resize(n);
        double linear = 0.0;
        double quad = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const auto row = w_.row(static_cast<int>(i));
            double ws = 0.0;
            for (std::size_t j = 0; j < n; ++j) ws += row[j] * s[j];
            const double ls = degree_[i] * s[i] - ws;  // (L s)_i
            linear += linear_[i] * s[i];
            quad += s[i] * ls;
            out.gradient[i] = linear_[i] + 4.0 * ls;
        }
        out.energy = constant_ + linear + 2.0 * quad;
        return out;
    }

private:
    const PairwiseWeights& w_;
    std::vector<double> linear_;
    std::vector<double> degree_;
    double constant_ = 0.0;
};

void project(std::vector<double>& s, const BackgroundConstraint& b) {
    for (std::size_t i = 0; i < s.size(); ++i) {
        s[i] = b.pinned[i] != 0 ? 0.0 : std::clamp(s[i], 0.0, 1.0);
    }
}

}  // namespace

PairwiseWeights::PairwiseWeights(int n) : n_(n), w_(static_cast<std::size_t>(n) * static_cast<std::size_t>(n), 0.0) {
    if (n <= 0) throw ContractError("PairwiseWeights: size must be positive");
}

PairwiseWeights::PairwiseWeights(int n, std::vector<double> values) : n_(n), w_(std::move(values)) {
    if (n <= 0 || w_.size() != static_cast<std::size_t>(n) * static_cast<std::size_t>(n)) {
        throw ContractError("PairwiseWeights: value count does not match size");
    }
    for (int i = 0; i < n; ++i) {
        if ((*this)(i, i) != 0.0) throw ContractError("PairwiseWeights: nonzero diagonal at " + std::to_string(i));
        for (int j = 0; j < n; ++j) {
            const double v = (*this)(i, j);
            if (!(v >= 0.0 && v <= 1.0)) throw ContractError("PairwiseWeights: entry outside [0, 1]");
            if (v != (*this)(j, i)) throw ContractError("PairwiseWeights: matrix is not symmetric");
        }
    }
}

void PairwiseWeights::set(int i, int j, double value) {
    if (i == j) throw ContractError("PairwiseWeights: diagonal must stay zero");
    w_[static_cast<std::size_t>(i) * static_cast<std::size_t>(n_) + static_cast<std::size_t>(j)] = value;
    w_[static_cast<std::size_t>(j) * static_cast<std::size_t>(n_) + static_cast<std::size_t>(i)] = value;
}

PairwiseWeights pairwise_weights(const RegionGraph& graph, const EnergyParams& params) {
    PairwiseWeights w(graph.count);
    for (int i = 0; i < graph.count; ++i) {
        const auto ii = static_cast<std::size_t>(i);
        auto value = [&](int j) {
            const auto jj = static_cast<std::size_t>(j);
            const double r = std::exp(-std::abs(graph.intensity[ii] - graph.intensity[jj]) / params.sigma1_sq);
            const double d = std::exp(-std::hypot(graph.center[ii][0] - graph.center[jj][0],
                                                  graph.center[ii][1] - graph.center[jj][1]) /
                                      params.sigma2_sq);
            return r * d;
        };
        if (params.pairwise == PairwiseMode::Dense) {
            for (int j = i + 1; j < graph.count; ++j) w.set(i, j, value(j));
        } else {
            for (int j : graph.adjacency[ii]) {
                if (j > i) w.set(i, j, value(j));
            }
        }
    }
    return w;
}

int BackgroundConstraint::free_count() const {
    return static_cast<int>(std::count(pinned.begin(), pinned.end(), 0));
}

BackgroundConstraint build_constraint(const AnatomyLabeling& nsa) {
    BackgroundConstraint b;
    b.pinned.assign(nsa.layer_of.size(), 0);
    for (std::size_t i = 0; i < nsa.layer_of.size(); ++i) {
        if (nsa.layer_of[i] == static_cast<int>(Layer::Skin)) b.pinned[i] = 1;
    }
    if (b.free_count() == 0) std::fill(b.pinned.begin(), b.pinned.end(), 0);
    return b;
}

std::vector<double> linear_coefficients(const UnaryMaps& maps, const EnergyParams& params) {
    const std::size_t n = maps.foreground.size();
    std::vector<double> u(n);
    for (std::size_t i = 0; i < n; ++i) {
        u[i] = -(params.alpha * floored_log(maps.center[i], params.eps_log) +
                 params.beta * floored_log(maps.foreground[i], params.eps_log)) +
               params.gamma * floored_log(maps.background[i], params.eps_log);
    }
    return u;
}

double energy(std::span<const double> s, const UnaryMaps& maps, const PairwiseWeights& w, const BackgroundConstraint& b,
              const EnergyParams& params) {
    const std::size_t n = s.size();
    check_sizes(maps, w, n);
    if (b.pinned.size() != n) throw ContractError("energy: constraint covers a different region count");
    for (std::size_t i = 0; i < n; ++i) {
        if (!(s[i] >= 0.0 && s[i] <= 1.0)) {
            throw ContractError("energy: s[" + std::to_string(i) + "] = " + std::to_string(s[i]) + " outside [0, 1]");
        }
        if (b.pinned[i] != 0 && s[i] != 0.0) {
            throw ContractError("energy: pinned region " + std::to_string(i) + " has nonzero saliency");
        }
    }
    double unary = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double lc = floored_log(maps.center[i], params.eps_log);
        const double lf = floored_log(maps.foreground[i], params.eps_log);
        const double lt = floored_log(maps.background[i], params.eps_log);
        unary += s[i] * (-(params.alpha * lc + params.beta * lf)) + params.gamma * (1.0 - s[i]) * (-lt);
    }
    double pairwise = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            const double d = s[i] - s[j];
            pairwise += d * d * w(static_cast<int>(i), static_cast<int>(j));
        }
    }
    return unary + pairwise;
}

std::vector<double> energy_gradient(std::span<const double> s, const UnaryMaps& maps, const PairwiseWeights& w,
                                    const EnergyParams& params) {
    check_sizes(maps, w, s.size());
    return Objective(maps, w, params)(s).gradient;
}

SaliencyResult solve(const UnaryMaps& maps, const PairwiseWeights& w, const BackgroundConstraint& b,
                     const EnergyParams& params) {
    const std::size_t n = maps.foreground.size();
    check_sizes(maps, w, n);
    if (b.pinned.size() != n) throw ContractError("solve: constraint covers a different region count");
    if (b.free_count() == 0) throw ContractError("solve: every region is pinned");

    const Objective objective(maps, w, params);
    SaliencyResult result;
    result.s = maps.foreground;
    project(result.s, b);
    Evaluation current = objective(result.s);
    if (!std::isfinite(current.energy)) throw ContractError("solve: energy at the initial point is not finite");
    result.energy_trace.push_back(current.energy);

    constexpr double kMinStep = 1e-20;
    constexpr double kMaxStep = 1e10;
    double step = params.step;
    std::vector<double> trial(n);
    std::vector<double> unit(n);
    for (int iter = 0; iter < params.max_iters; ++iter) {
        for (std::size_t i = 0; i < n; ++i) unit[i] = result.s[i] - current.gradient[i];
        project(unit, b);
        if (max_abs_diff(unit, result.s) < params.tol) {
            result.converged = true;
            break;
        }

        Evaluation next;
        bool accepted = false;
        while (step >= kMinStep) {
            for (std::size_t i = 0; i < n; ++i) trial[i] = result.s[i] - step * current.gradient[i];
            project(trial, b);
            next = objective(trial);
            if (next.energy <= current.energy) {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) {
            // No representable step decreases the energy any further.
            result.converged = true;
            break;
        }

        double sts = 0.0;
        double sty = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double ds = trial[i] - result.s[i];
            sts += ds * ds;
            sty += ds * (next.gradient[i] - current.gradient[i]);
        }
        step = sty > 0.0 ? std::clamp(sts / sty, kMinStep, kMaxStep) : kMaxStep;

        result.s.swap(trial);
        current = std::move(next);
        result.energy_trace.push_back(current.energy);
        result.iterations = iter + 1;
        if (sts == 0.0) {
            result.converged = true;
            break;
        }
    }
    return result;
}

SaliencyResult brute_force_solve(const UnaryMaps& maps, const PairwiseWeights& w, const BackgroundConstraint& b,
                                 const EnergyParams& params, double grid_step) {
    const std::size_t n = maps.foreground.size();
    check_sizes(maps, w, n);
    if (n > 5) throw ContractError("brute_force_solve: N = " + std::to_string(n) + " exceeds the limit of 5");
    if (b.pinned.size() != n) throw ContractError("brute_force_solve: constraint covers a different region count");
    if (!(grid_step > 0.0 && grid_step <= 1.0)) throw ContractError("brute_force_solve: grid step must be in (0, 1]");
    const int levels = static_cast<int>(std::lround(1.0 / grid_step)) + 1;

    // Independent of the solver: expand E on the grid coordinate by coordinate.
    // Pair (i, j) contributes 2 w_ij (s_i - s_j)^2 once both are assigned.
    std::vector<double> unary(n);
    double constant = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double lc = std::log(std::max(maps.center[i], params.eps_log));
        const double lf = std::log(std::max(maps.foreground[i], params.eps_log));
        const double lt = std::log(std::max(maps.background[i], params.eps_log));
        unary[i] = -(params.alpha * lc + params.beta * lf) + params.gamma * lt;
        constant += -params.gamma * lt;
    }
    std::vector<int> free_idx;
    for (std::size_t i = 0; i < n; ++i) {
        if (b.pinned[i] == 0) free_idx.push_back(static_cast<int>(i));
    }
    if (free_idx.empty()) throw ContractError("brute_force_solve: every region is pinned");
    // Pairs with a pinned member reduce to 2 w s_i^2 on the free coordinate.
    std::vector<double> pinned_quad(n, 0.0);
    for (int i : free_idx) {
        for (std::size_t p = 0; p < n; ++p) {
            if (b.pinned[p] != 0) pinned_quad[static_cast<std::size_t>(i)] += 2.0 * w(i, static_cast<int>(p));
        }
    }

    std::vector<double> grid(static_cast<std::size_t>(levels));
    for (int g = 0; g < levels; ++g) grid[static_cast<std::size_t>(g)] = std::min(1.0, g * grid_step);

    const std::size_t m = free_idx.size();
    std::vector<double> value(m, 0.0);
    std::vector<double> best_value(m, 0.0);
    double best = std::numeric_limits<double>::infinity();

    auto recurse = [&](auto&& self, std::size_t level, double partial) -> void {
        const int k = free_idx[level];
        const auto kk = static_cast<std::size_t>(k);
        // Quadratic in the new coordinate v: qa v^2 + qb v + qc.
        double qa = pinned_quad[kk];
        double qb = unary[kk];
        double qc = 0.0;
        for (std::size_t l = 0; l < level; ++l) {
            const double wk = 2.0 * w(k, free_idx[l]);
            qa += wk;
            qb -= 2.0 * wk * value[l];
            qc += wk * value[l] * value[l];
        }
        if (level + 1 < m) {
            for (double v : grid) {
                value[level] = v;
                self(self, level + 1, partial + qc + v * (qb + qa * v));
            }
            return;
        }
        // Innermost coordinate: qa >= 0, so the grid minimum of the quadratic is
        // the grid point nearest its clamped vertex. Neighbours and both ends are
        // checked too, which keeps the search exact under rounding.
        const int last = levels - 1;
        const double vertex = qa > 0.0 ? std::clamp(-qb / (2.0 * qa), 0.0, 1.0) : 0.0;
        const int near = std::clamp(static_cast<int>(std::lround(vertex / grid_step)), 0, last);
        for (int g : {0, near - 1, near, near + 1, last}) {
            if (g < 0 || g > last) continue;
            const double v = grid[static_cast<std::size_t>(g)];
            const double e = partial + qc + v * (qb + qa * v);
            if (e < best) {
                best = e;
                value[level] = v;
                best_value = value;
            }
        }
    };
    recurse(recurse, 0, constant);

    SaliencyResult result;
    result.s.assign(n, 0.0);
    for (std::size_t l = 0; l < m; ++l) result.s[static_cast<std::size_t>(free_idx[l])] = best_value[l];
    result.energy_trace.push_back(best);
    result.converged = true;
    return result;
}

}  // namespace tse
