#pragma once

#include <array>
#include <vector>

#include "tse/image.hpp"

namespace tse {

struct SuperpixelParams {
    int kernel_size = 3;          // radius of the box density kernel
    double max_dist = 10.0;       // largest feature-space link distance
    double intensity_weight = 4.0;
};

// Partition of the pixel grid into N connected regions.
struct SuperpixelMap {
    PixelLabelMap region_of;  // values in [0, count)
    int count = 0;

    int width() const { return region_of.width(); }
    int height() const { return region_of.height(); }
};

// Quick-shift mode seeking over (x, y, intensity_weight * I / 10):
//  * density(p) = number of pixels q with |qx-px|,|qy-py| <= kernel_size and
//    feature distance ||f(q) - f(p)|| <= kernel_size;
//  * every pixel links to its nearest strictly higher pixel within max_dist,
//    where "higher" compares (density, lattice priority, earlier scan index);
//  * link trees become regions, which are then split into 4-connected
//    components, fragments smaller than max_dist^2 / 4 are merged into the
//    neighbour of closest mean intensity, and partitions with fewer than four
//    regions are cut along image quadrants.
// Region indices are canonical: numbered by first occurrence in row-major order.
SuperpixelMap segment(const Image& image, const SuperpixelParams& params = {});

// Validates an externally supplied index map: dimensions, index range,
// every index used, every region 4-connected, at least four regions.
SuperpixelMap make_superpixel_map(PixelLabelMap region_of);

// Splits every region into 4-connected components and relabels canonically.
SuperpixelMap split_disconnected(const PixelLabelMap& labels);

// True iff each region's pixel set is 4-connected (flood fill check).
bool regions_connected(const SuperpixelMap& spmap);

struct RegionGraph {
    int width = 0;
    int height = 0;
    int count = 0;
    std::vector<double> intensity;                 // mean intensity / 255
    std::vector<std::array<double, 2>> center;     // (x / width, y / height) of the area centroid
    std::vector<int> area;
    std::vector<std::vector<int>> adjacency;       // sorted neighbour lists
    std::vector<bool> touches_border;
    std::vector<std::vector<int>> rows_present;    // sorted row indices
    std::vector<std::vector<int>> cols_present;    // sorted column indices
};

RegionGraph build_region_graph(const Image& image, const SuperpixelMap& spmap);

// Per-region anatomy labels and probabilities derived from pixel maps.
struct RegionLabels {
    std::vector<int> label;                       // SA', values 1..4
    std::array<std::vector<double>, kNumClasses> prob;  // SP', prob[k][i] for class k+1
};

// SP' is the per-region mean of each class plane; SA' is the majority of the
// per-pixel argmax votes, ties toward the lower class.
RegionLabels regionize_labels(const PixelProbMap& prob, const SuperpixelMap& spmap);

// Same for a hard class map (1..4); SP' becomes the vote fractions.
RegionLabels regionize_labels(const PixelLabelMap& classes, const SuperpixelMap& spmap);

// Paints a per-region value over the member pixels.
template <typename T>
std::vector<T> paint_regions(const SuperpixelMap& spmap, const std::vector<T>& per_region) {
    std::vector<T> out(spmap.region_of.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = per_region[static_cast<std::size_t>(spmap.region_of.labels()[i])];
    return out;
}

}  // namespace tse
