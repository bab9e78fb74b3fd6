#pragma once

#include <array>
#include <span>
#include <vector>

#include "tse/anatomy.hpp"
#include "tse/superpixel.hpp"

namespace tse {

// Standard Z-shaped membership: 1 below a, 0 above b, quadratic blends between
// with value 0.5 at (a + b) / 2. Requires a < b.
double z_membership(double x, double a, double b);

struct ForegroundParams {
    double spread = 1.0;        // (a, b) = (mu - spread * sigma, mu + spread * sigma)
    double dark_value = 0.01;   // value assigned to every region of a dark layer
};

// Per-layer Z-function of region intensity, with the layer's area-weighted
// mean and standard deviation; dark layers are flattened to dark_value and the
// result is scaled to a maximum of 1.
std::vector<double> foreground_map(const RegionGraph& graph, const AnatomyLabeling& nsa,
                                   const std::array<LayerFlag, kNumClasses>& flags,
                                   const ForegroundParams& params = {});

using Point2 = std::array<double, 2>;

// Foreground-weighted centroid of region centers.
Point2 adaptive_center(std::span<const double> foreground, const RegionGraph& graph);

// c_i = exp(-||rc_i - AC||_2 / sigma3_sq).
std::vector<double> center_map(const Point2& ac, const RegionGraph& graph, double sigma3_sq = 0.1);

// Widest-path connectivity to the image border: the best bottleneck affinity
// exp(-|I'_u - I'_v| / bandwidth) over paths to any border-touching region.
std::vector<double> nc_boundary_map(const RegionGraph& graph, double bandwidth = 0.5);

struct LayerWeights {
    std::array<double, kNumClasses> layer_w{};  // mean SP'_3 over each NSA layer
    std::vector<double> region_w;               // rW per region
    bool mammary_valid = false;
};

LayerWeights layer_weights(const AnatomyLabeling& nsa, const RegionGraph& graph, double validity_fraction = 0.75);

enum class BackgroundMode {
    Full,       // t_i = 1 - (1 - nc_i^2) rW_i c'_i
    NcSquared,  // t_i = nc_i^2
};

// The c' substitution: 1 for regions of a dark mammary layer with c > 0.5 and
// for regions of a normal non-mammary layer with c >= 0.75, otherwise c.
double adjusted_center(double c, int layer, const std::array<LayerFlag, kNumClasses>& flags);

// Background map, max-normalised.
std::vector<double> background_map(std::span<const double> nc, const LayerWeights& weights, std::span<const double> center,
                                   const std::array<LayerFlag, kNumClasses>& flags, const AnatomyLabeling& nsa,
                                   BackgroundMode mode = BackgroundMode::Full);

struct UnaryMaps {
    std::vector<double> foreground;  // F
    std::vector<double> center;      // C
    std::vector<double> background;  // T
    std::vector<double> nc;
    Point2 adaptive_center{0.5, 0.5};
    LayerWeights weights;
};

struct MapParams {
    ForegroundParams foreground;
    double sigma3_sq = 0.1;
    double nc_bandwidth = 0.5;
    double validity_fraction = 0.75;
    BackgroundMode background = BackgroundMode::Full;
};

UnaryMaps build_unary_maps(const RegionGraph& graph, const AnatomyLabeling& nsa,
                           const std::array<LayerFlag, kNumClasses>& flags, const MapParams& params = {});

}  // namespace tse
