#pragma once

#include <array>
#include <span>
#include <vector>

#include "tse/superpixel.hpp"

namespace tse {

enum class Layer : int { Skin = 1, Fat = 2, Mammary = 3, Muscle = 4 };

enum class LayerFlag : int { Smooth = -1, Normal = 0, Dark = 1 };

const char* to_string(LayerFlag flag);

// Non-semantic horizontal layers, top to bottom. Each layer is a sorted list of region indices.
struct LayerDecomposition {
    std::vector<std::vector<int>> layers;

    int count() const { return static_cast<int>(layers.size()); }
};

struct AnatomyLabeling {
    enum class Source { Semantic, Refined };

    std::vector<int> layer_of;                          // 1..4 per region
    std::array<std::vector<double>, kNumClasses> prob;  // SP'
    Source source = Source::Semantic;

    int count() const { return static_cast<int>(layer_of.size()); }
    std::vector<int> members(Layer layer) const;
};

AnatomyLabeling semantic_labeling(const RegionLabels& labels);

struct NclParams {
    // A band spans the image when it covers more than this fraction of columns.
    double span_fraction = 0.75;
    // Move from k to k+1 bands only when within-band variance drops below ratio * V_k.
    double split_ratio = 0.5;
};

// Agglomerative banding: adjacency edges are merged in order of decreasing
// affinity exp(-|dI'| / 0.5); among the merge states with 3, 4 or 5 components
// spanning the image width, the band count is chosen by within-band variance.
// Components that do not span are absorbed into the adjacent band of closest
// mean intensity. Images without such states fall back to an even split by
// centroid row into three layers. Throws ContractError when height < 24.
LayerDecomposition decompose_nc_layers(const RegionGraph& graph, const NclParams& params = {});

// Area-weighted mean row of the regions in `layer`.
double layer_mean_row(std::span<const int> layer, const RegionGraph& graph);

// True iff the union of member columns covers strictly more than fraction * width.
bool layer_valid(std::span<const int> layer, const RegionGraph& graph, double fraction = 0.75);

// Refines semantic layers SA' with the non-semantic layers NCL:
//   skin    = SA'1 ∩ (NCL_first ∪ NCL_last)
//   fat     = valid(SA'2) ? (∪_{k<i} NCL_k ∪ SA'2) \ other SA'  :  NCL_1 \ other SA'
//   muscle  = valid(SA'4) ? (∪_{k>i} NCL_k ∪ SA'4) \ other SA'  :  NCL_last \ SA'1
//   mammary = everything else
// where i is the NCL layer overlapping the semantic layer most (lower index on
// ties). Claims are resolved in the order skin, fat, muscle, mammary.
AnatomyLabeling refine_layers(const AnatomyLabeling& semantic, const LayerDecomposition& ncl,
                              const RegionGraph& graph, double validity_fraction = 0.75);

struct FlagThresholds {
    double dark_intensity = 0.25;
    double dark_fraction = 0.6;
    double smooth_intensity = 0.6;
    double smooth_fraction = 0.8;
};

// Dark when the area fraction with I' < dark_intensity exceeds dark_fraction,
// smooth when the fraction with I' > smooth_intensity exceeds smooth_fraction.
LayerFlag classify_layer_flag(std::span<const int> layer, const RegionGraph& graph,
                              const FlagThresholds& thresholds = {});

// Flags for the four labeled layers; empty layers are reported as normal.
std::array<LayerFlag, kNumClasses> classify_layers(const AnatomyLabeling& labeling, const RegionGraph& graph,
                                                   const FlagThresholds& thresholds = {});

}  // namespace tse
