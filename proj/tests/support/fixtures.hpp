#pragma once

// Shared builders for unit and acceptance tests.

#include <algorithm>
#include <array>
#include <cstdint>
#include <random>
#include <vector>

#include "tse/anatomy.hpp"
#include "tse/maps.hpp"
#include "tse/superpixel.hpp"

namespace tse::testing {

using Rng = std::mt19937_64;

inline double uniform(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }
inline int uniform_int(Rng& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

// Graph over n regions whose only populated fields are the ones refine_layers
// and layer_valid read: width, count and cols_present.
inline RegionGraph column_graph(int width, const std::vector<std::vector<int>>& cols) {
    RegionGraph g;
    g.width = width;
    g.height = 24;
    g.count = static_cast<int>(cols.size());
    g.cols_present = cols;
    g.area.assign(cols.size(), 1);
    g.intensity.assign(cols.size(), 0.5);
    g.center.assign(cols.size(), {0.5, 0.5});
    g.adjacency.assign(cols.size(), {});
    g.touches_border.assign(cols.size(), false);
    g.rows_present.assign(cols.size(), {0});
    return g;
}

inline AnatomyLabeling labeling_from(const std::vector<int>& layer_of) {
    AnatomyLabeling a;
    a.layer_of = layer_of;
    for (auto& p : a.prob) p.assign(layer_of.size(), 0.0);
    for (std::size_t i = 0; i < layer_of.size(); ++i) a.prob[static_cast<std::size_t>(layer_of[i] - 1)][i] = 1.0;
    return a;
}

// Twelve regions on a 4 x 3 grid of 4-column blocks (width 12); region
// r = row * 3 + block. Non-semantic layers are the four rows. A layer is valid
// only when it covers all three blocks.
struct RefineCase {
    const char* name;
    std::vector<int> semantic;
    std::vector<int> expected;
};

inline RegionGraph refine_grid_graph() {
    std::vector<std::vector<int>> cols(12);
    for (int r = 0; r < 12; ++r) {
        const int block = r % 3;
        for (int c = 4 * block; c < 4 * block + 4; ++c) cols[static_cast<std::size_t>(r)].push_back(c);
    }
    return column_graph(12, cols);
}

inline LayerDecomposition refine_grid_ncl() {
    return LayerDecomposition{{{0, 1, 2}, {3, 4, 5}, {6, 7, 8}, {9, 10, 11}}};
}

// Hand-traced expectations.
//  A: fat valid (blocks 0..2 via regions 2, 3, 4), muscle invalid (8 columns),
//     stray mammary region 11 in the bottom row, skin region 10 in the bottom row.
//     skin {0,1,10}; fat: best layer 1, candidates {0..4} minus non-fat -> {2,3,4};
//     muscle fallback: bottom row minus skin -> {9,11}; mammary takes {5,6,7,8}.
//  B: fat invalid (8 columns), muscle valid, stray mammary region 4 in row 1,
//     skin region 5 outside the first and last rows.
//     skin {0,1}; fat fallback: top row fat -> {2}; muscle: best layer 3,
//     nothing below, keeps {7,9,10,11}; mammary takes {3,4,5,6,8}.
//  C: both valid; fat at row 1 pulls nothing extra because rows above are skin,
//     muscle at row 3 keeps its own regions; stray fat region 8 sits in row 2.
//     skin {0,1,2}; fat {3,4,5,8}; muscle {9,10,11}; mammary {6,7}.
//  D: both invalid (8 columns each), stray mammary regions 5 and 11.
//     skin {0,1,2}; fat fallback: top row minus other layers -> {}; muscle
//     fallback: bottom row minus skin -> {9,10,11}; mammary takes {3..8}.
inline std::vector<RefineCase> refine_cases() {
    return {
        {"fat valid, muscle invalid", {1, 1, 2, 2, 2, 3, 3, 3, 4, 4, 1, 3}, {1, 1, 2, 2, 2, 3, 3, 3, 3, 4, 1, 4}},
        {"fat invalid, muscle valid", {1, 1, 2, 2, 3, 1, 3, 4, 3, 4, 4, 4}, {1, 1, 2, 3, 3, 3, 3, 4, 3, 4, 4, 4}},
        {"both valid", {1, 1, 1, 2, 2, 2, 3, 3, 2, 4, 4, 4}, {1, 1, 1, 2, 2, 2, 3, 3, 2, 4, 4, 4}},
        {"both invalid", {1, 1, 1, 2, 2, 3, 3, 3, 3, 4, 4, 3}, {1, 1, 1, 3, 3, 3, 3, 3, 3, 4, 4, 4}},
    };
}

// Random region universe with a random 3..5 layer decomposition and random
// semantic labels; used to fuzz the partition property.
struct RefineFuzzCase {
    RegionGraph graph;
    LayerDecomposition ncl;
    AnatomyLabeling semantic;
};

inline RefineFuzzCase random_refine_case(Rng& rng) {
    const int n = uniform_int(rng, 3, 40);
    const int width = uniform_int(rng, 4, 64);
    std::vector<std::vector<int>> cols(static_cast<std::size_t>(n));
    for (auto& c : cols) {
        const int a = uniform_int(rng, 0, width - 1);
        const int b = uniform_int(rng, a, width - 1);
        for (int x = a; x <= b; ++x) c.push_back(x);
    }
    RefineFuzzCase fc{column_graph(width, cols), {}, {}};
    const int layers = uniform_int(rng, 3, std::min(5, n));
    fc.ncl.layers.assign(static_cast<std::size_t>(layers), {});
    // Seed each layer with one region so none is empty, then scatter the rest.
    std::vector<int> order(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
    std::shuffle(order.begin(), order.end(), rng);
    for (int i = 0; i < n; ++i) {
        const int l = i < layers ? i : uniform_int(rng, 0, layers - 1);
        fc.ncl.layers[static_cast<std::size_t>(l)].push_back(order[static_cast<std::size_t>(i)]);
    }
    for (auto& l : fc.ncl.layers) std::sort(l.begin(), l.end());
    std::vector<int> sa(static_cast<std::size_t>(n));
    for (int& v : sa) v = uniform_int(rng, 1, 4);
    fc.semantic = labeling_from(sa);
    return fc;
}

inline bool is_partition(const AnatomyLabeling& a, int n) {
    if (a.count() != n) return false;
    std::size_t total = 0;
    for (int k = 1; k <= kNumClasses; ++k) total += a.members(static_cast<Layer>(k)).size();
    if (total != static_cast<std::size_t>(n)) return false;
    for (int v : a.layer_of) {
        if (v < 1 || v > kNumClasses) return false;
    }
    return true;
}

// Unary maps with only F, C, T populated.
inline UnaryMaps unary(std::vector<double> f, std::vector<double> c, std::vector<double> t) {
    UnaryMaps m;
    m.foreground = std::move(f);
    m.center = std::move(c);
    m.background = std::move(t);
    return m;
}

}  // namespace tse::testing
