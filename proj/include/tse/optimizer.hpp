#pragma once

#include <span>
#include <vector>

#include "tse/anatomy.hpp"
#include "tse/maps.hpp"
#include "tse/superpixel.hpp"

namespace tse {

enum class PairwiseMode {
    Dense,     // every region pair
    Adjacent,  // only pairs sharing a pixel edge
};

struct EnergyParams {
    double alpha = 10.0;   // center term
    double beta = 51.0;    // foreground term
    double gamma = 6.0;    // background term
    double sigma1_sq = 0.5;
    double sigma2_sq = 0.5;
    double eps_log = 1e-6;
    double step = 1e-3;    // first trial step of the line search
    int max_iters = 500;
    double tol = 1e-4;
    PairwiseMode pairwise = PairwiseMode::Dense;
};

// Symmetric N x N weight matrix with zero diagonal, stored densely.
class PairwiseWeights {
public:
    PairwiseWeights() = default;
    explicit PairwiseWeights(int n);
    // Validates symmetry, zero diagonal and entries in [0, 1].
    PairwiseWeights(int n, std::vector<double> values);

    int size() const { return n_; }
    double operator()(int i, int j) const { return w_[static_cast<std::size_t>(i) * static_cast<std::size_t>(n_) + static_cast<std::size_t>(j)]; }
    void set(int i, int j, double value);  // sets both (i, j) and (j, i)
    std::span<const double> row(int i) const {
        return std::span<const double>(w_).subspan(static_cast<std::size_t>(i) * static_cast<std::size_t>(n_), static_cast<std::size_t>(n_));
    }

private:
    int n_ = 0;
    std::vector<double> w_;
};

// w_ij = exp(-|I'_i - I'_j| / sigma1_sq) * exp(-||rc_i - rc_j||_2 / sigma2_sq).
PairwiseWeights pairwise_weights(const RegionGraph& graph, const EnergyParams& params = {});

// b_i = 1 pins s_i to zero.
struct BackgroundConstraint {
    std::vector<int> pinned;

    int free_count() const;
};

// Pins the skin layer of the refined labeling; no pins if every region is skin.
BackgroundConstraint build_constraint(const AnatomyLabeling& nsa);

// Per-region linear coefficient of S in the energy:
//   -(alpha ln c_i + beta ln f_i) + gamma ln t_i, maps floored at eps_log.
std::vector<double> linear_coefficients(const UnaryMaps& maps, const EnergyParams& params);

// E(S) = sum_i s_i (-alpha ln c_i - beta ln f_i) + gamma sum_i (1 - s_i)(-ln t_i)
//        + sum_i sum_j (s_i - s_j)^2 w_ij.
// Throws ContractError for S outside the box or with a nonzero pinned entry.
double energy(std::span<const double> s, const UnaryMaps& maps, const PairwiseWeights& w,
              const BackgroundConstraint& b, const EnergyParams& params = {});

// dE/ds_i = -(alpha ln c_i + beta ln f_i) + gamma ln t_i + 4 sum_j (s_i - s_j) w_ij.
std::vector<double> energy_gradient(std::span<const double> s, const UnaryMaps& maps, const PairwiseWeights& w,
                                    const EnergyParams& params = {});

struct SaliencyResult {
    std::vector<double> s;
    std::vector<double> energy_trace;  // initial energy followed by every accepted iterate
    int iterations = 0;
    bool converged = false;
};

// Projected gradient descent from S0 = F (pinned entries zeroed). Trial steps
// are spectral (Barzilai-Borwein) and halved until the energy does not
// increase; iteration stops when a unit projected-gradient step moves no
// coordinate by more than tol, or after max_iters.
SaliencyResult solve(const UnaryMaps& maps, const PairwiseWeights& w, const BackgroundConstraint& b,
                     const EnergyParams& params = {});

// Exhaustive search over the feasible grid {0, step, ..., 1}^free. Test oracle; N <= 5.
SaliencyResult brute_force_solve(const UnaryMaps& maps, const PairwiseWeights& w, const BackgroundConstraint& b,
                                 const EnergyParams& params, double grid_step);

}  // namespace tse
