#include "tse/anatomy.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>

#include "tse/error.hpp"

namespace tse {

namespace {

struct Edge {
    double dissimilarity;
    int a;
    int b;
};

class ColumnSet {
public:
    explicit ColumnSet(int width) : words_(static_cast<std::size_t>((width + 63) / 64), 0) {}

    void add(int col) {
        auto& word = words_[static_cast<std::size_t>(col / 64)];
        const std::uint64_t bit = std::uint64_t{1} << (col % 64);
        if ((word & bit) == 0) {
            word |= bit;
            ++count_;
        }
    }

    void merge(const ColumnSet& other) {
        count_ = 0;
        for (std::size_t i = 0; i < words_.size(); ++i) {
            words_[i] |= other.words_[i];
            count_ += std::popcount(words_[i]);
        }
    }

    int count() const { return count_; }

private:
    std::vector<std::uint64_t> words_;
    int count_ = 0;
};

struct MergeState {
    std::vector<int> parent;

    explicit MergeState(int n) : parent(static_cast<std::size_t>(n)) { std::iota(parent.begin(), parent.end(), 0); }

    int find(int a) {
        while (parent[static_cast<std::size_t>(a)] != a) {
            parent[static_cast<std::size_t>(a)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(a)])];
            a = parent[static_cast<std::size_t>(a)];
        }
        return a;
    }
};

std::vector<Edge> sorted_edges(const RegionGraph& graph) {
    std::vector<Edge> edges;
    for (int i = 0; i < graph.count; ++i) {
        for (int j : graph.adjacency[static_cast<std::size_t>(i)]) {
            if (j > i) {
                edges.push_back({std::abs(graph.intensity[static_cast<std::size_t>(i)] -
                                          graph.intensity[static_cast<std::size_t>(j)]),
                                 i, j});
            }
        }
    }
    std::sort(edges.begin(), edges.end(), [](const Edge& x, const Edge& y) {
        if (x.dissimilarity != y.dissimilarity) return x.dissimilarity < y.dissimilarity;
        if (x.a != y.a) return x.a < y.a;
        return x.b < y.b;
    });
    return edges;
}

bool spans(int covered, int width, double fraction) { return static_cast<double>(covered) > fraction * width; }

// Component id per region after applying the first `steps` effective merges.
std::vector<int> replay(const RegionGraph& graph, const std::vector<Edge>& edges, std::size_t steps) {
    MergeState uf(graph.count);
    std::size_t done = 0;
    for (const Edge& e : edges) {
        if (done == steps) break;
        const int ra = uf.find(e.a);
        const int rb = uf.find(e.b);
        if (ra == rb) continue;
        uf.parent[static_cast<std::size_t>(std::max(ra, rb))] = std::min(ra, rb);
        ++done;
    }
    std::vector<int> comp(static_cast<std::size_t>(graph.count));
    for (int i = 0; i < graph.count; ++i) comp[static_cast<std::size_t>(i)] = uf.find(i);
    return comp;
}

struct BandState {
    std::vector<int> comp;          // component root per region
    std::vector<int> spanning;      // roots of spanning components
    double within_variance = 0.0;
};

BandState band_state(const RegionGraph& graph, const std::vector<Edge>& edges, std::size_t steps, double fraction) {
    BandState state;
    state.comp = replay(graph, edges, steps);
    const auto n = static_cast<std::size_t>(graph.count);
    std::vector<ColumnSet> cols(n, ColumnSet(graph.width));
    std::vector<double> area(n, 0.0);
    std::vector<double> isum(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const auto r = static_cast<std::size_t>(state.comp[i]);
        for (int c : graph.cols_present[i]) cols[r].add(c);
        area[r] += graph.area[i];
        isum[r] += graph.area[i] * graph.intensity[i];
    }
    double total_area = 0.0;
    double sse = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
        if (state.comp[r] != static_cast<int>(r) || !spans(cols[r].count(), graph.width, fraction)) continue;
        state.spanning.push_back(static_cast<int>(r));
        total_area += area[r];
    }
    for (std::size_t i = 0; i < n; ++i) {
        const auto r = static_cast<std::size_t>(state.comp[i]);
        if (std::find(state.spanning.begin(), state.spanning.end(), static_cast<int>(r)) == state.spanning.end()) continue;
        const double d = graph.intensity[i] - isum[r] / area[r];
        sse += graph.area[i] * d * d;
    }
    state.within_variance = total_area > 0.0 ? sse / total_area : 0.0;
    return state;
}

// Assigns non-spanning components to adjacent bands (closest mean intensity),
// repeating until every region belongs to a band.
std::vector<std::vector<int>> absorb_islands(const RegionGraph& graph, const BandState& state) {
    const auto n = static_cast<std::size_t>(graph.count);
    std::vector<int> band(n, -1);
    std::vector<double> band_area(state.spanning.size(), 0.0);
    std::vector<double> band_sum(state.spanning.size(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const auto it = std::find(state.spanning.begin(), state.spanning.end(), state.comp[i]);
        if (it == state.spanning.end()) continue;
        const auto b = static_cast<std::size_t>(it - state.spanning.begin());
        band[i] = static_cast<int>(b);
        band_area[b] += graph.area[i];
        band_sum[b] += graph.area[i] * graph.intensity[i];
    }

    // Islands grouped by component, in order of their root index.
    std::vector<int> island_roots;
    for (std::size_t i = 0; i < n; ++i) {
        if (band[i] < 0 && state.comp[i] == static_cast<int>(i)) island_roots.push_back(static_cast<int>(i));
    }
    while (!island_roots.empty()) {
        std::vector<int> pending;
        for (int root : island_roots) {
            double isum = 0.0;
            double iarea = 0.0;
            std::vector<int> candidates;
            for (std::size_t i = 0; i < n; ++i) {
                if (state.comp[i] != root) continue;
                isum += graph.area[i] * graph.intensity[i];
                iarea += graph.area[i];
                for (int j : graph.adjacency[i]) {
                    if (band[static_cast<std::size_t>(j)] >= 0) candidates.push_back(band[static_cast<std::size_t>(j)]);
                }
            }
            if (candidates.empty()) {
                pending.push_back(root);
                continue;
            }
            const double mean = isum / iarea;
            int best = -1;
            double best_d = 0.0;
            for (int b : candidates) {
                const double d = std::abs(band_sum[static_cast<std::size_t>(b)] / band_area[static_cast<std::size_t>(b)] - mean);
                if (best < 0 || d < best_d || (d == best_d && b < best)) {
                    best = b;
                    best_d = d;
                }
            }
            for (std::size_t i = 0; i < n; ++i) {
                if (state.comp[i] == root) band[i] = best;
            }
        }
        if (pending.size() == island_roots.size()) throw ContractError("decompose_nc_layers: region graph is disconnected");
        island_roots = std::move(pending);
    }

    std::vector<std::vector<int>> layers(state.spanning.size());
    for (std::size_t i = 0; i < n; ++i) layers[static_cast<std::size_t>(band[i])].push_back(static_cast<int>(i));
    return layers;
}

std::vector<std::vector<int>> even_split(const RegionGraph& graph) {
    std::vector<std::vector<int>> layers(3);
    for (int i = 0; i < graph.count; ++i) {
        const int b = std::min(2, static_cast<int>(std::floor(3.0 * graph.center[static_cast<std::size_t>(i)][1])));
        layers[static_cast<std::size_t>(b)].push_back(i);
    }
    if (std::all_of(layers.begin(), layers.end(), [](const auto& l) { return !l.empty(); })) return layers;

    // Too few regions for row thirds: split the centroid-row ranking into equal parts.
    std::vector<int> order(static_cast<std::size_t>(graph.count));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return graph.center[static_cast<std::size_t>(a)][1] < graph.center[static_cast<std::size_t>(b)][1];
    });
    for (auto& l : layers) l.clear();
    for (std::size_t r = 0; r < order.size(); ++r) layers[r * 3 / order.size()].push_back(order[r]);
    for (auto& l : layers) std::sort(l.begin(), l.end());
    return layers;
}

}  // namespace

const char* to_string(LayerFlag flag) {
    switch (flag) {
        case LayerFlag::Smooth: return "smooth";
        case LayerFlag::Dark: return "dark";
        case LayerFlag::Normal: break;
    }
    return "normal";
}

std::vector<int> AnatomyLabeling::members(Layer layer) const {
    std::vector<int> out;
    for (int i = 0; i < count(); ++i) {
        if (layer_of[static_cast<std::size_t>(i)] == static_cast<int>(layer)) out.push_back(i);
    }
    return out;
}

AnatomyLabeling semantic_labeling(const RegionLabels& labels) {
    AnatomyLabeling out;
    out.layer_of = labels.label;
    out.prob = labels.prob;
    out.source = AnatomyLabeling::Source::Semantic;
    return out;
}

double layer_mean_row(std::span<const int> layer, const RegionGraph& graph) {
    double sum = 0.0;
    double area = 0.0;
    for (int r : layer) {
        const auto i = static_cast<std::size_t>(r);
        sum += graph.area[i] * graph.center[i][1];
        area += graph.area[i];
    }
    return area > 0.0 ? sum / area * graph.height : 0.0;
}

LayerDecomposition decompose_nc_layers(const RegionGraph& graph, const NclParams& params) {
    if (graph.height < 24) {
        throw ContractError("decompose_nc_layers: image height " + std::to_string(graph.height) +
                            " is too short for three bands (need >= 24)");
    }
    const std::vector<Edge> edges = sorted_edges(graph);

    // Track the number of spanning components after every effective merge.
    const auto n = static_cast<std::size_t>(graph.count);
    MergeState uf(graph.count);
    std::vector<ColumnSet> cols(n, ColumnSet(graph.width));
    int spanning = 0;
    for (std::size_t i = 0; i < n; ++i) {
        for (int c : graph.cols_present[i]) cols[i].add(c);
        if (spans(cols[i].count(), graph.width, params.span_fraction)) ++spanning;
    }
    std::array<long, 6> last_stage{-1, -1, -1, -1, -1, -1};
    if (spanning >= 3 && spanning <= 5) last_stage[static_cast<std::size_t>(spanning)] = 0;
    long step = 0;
    for (const Edge& e : edges) {
        const int ra = uf.find(e.a);
        const int rb = uf.find(e.b);
        if (ra == rb) continue;
        const int keep = std::min(ra, rb);
        const int drop = std::max(ra, rb);
        const bool was_a = spans(cols[static_cast<std::size_t>(keep)].count(), graph.width, params.span_fraction);
        const bool was_b = spans(cols[static_cast<std::size_t>(drop)].count(), graph.width, params.span_fraction);
        cols[static_cast<std::size_t>(keep)].merge(cols[static_cast<std::size_t>(drop)]);
        uf.parent[static_cast<std::size_t>(drop)] = keep;
        const bool now = spans(cols[static_cast<std::size_t>(keep)].count(), graph.width, params.span_fraction);
        spanning += (now ? 1 : 0) - (was_a ? 1 : 0) - (was_b ? 1 : 0);
        ++step;
        if (spanning >= 3 && spanning <= 5) last_stage[static_cast<std::size_t>(spanning)] = step;
    }

    LayerDecomposition out;
    if (last_stage[3] < 0) {
        out.layers = even_split(graph);
    } else {
        int k = 3;
        BandState best = band_state(graph, edges, static_cast<std::size_t>(last_stage[3]), params.span_fraction);
        while (k < 5 && last_stage[static_cast<std::size_t>(k + 1)] >= 0) {
            BandState next =
                band_state(graph, edges, static_cast<std::size_t>(last_stage[static_cast<std::size_t>(k + 1)]),
                           params.span_fraction);
            if (!(next.within_variance < params.split_ratio * best.within_variance)) break;
            best = std::move(next);
            ++k;
        }
        out.layers = absorb_islands(graph, best);
    }

    std::vector<double> mean_row(out.layers.size());
    for (std::size_t l = 0; l < out.layers.size(); ++l) mean_row[l] = layer_mean_row(out.layers[l], graph);
    std::vector<std::size_t> order(out.layers.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return mean_row[a] < mean_row[b]; });
    std::vector<std::vector<int>> sorted;
    for (std::size_t l : order) sorted.push_back(std::move(out.layers[l]));
    out.layers = std::move(sorted);
    return out;
}

bool layer_valid(std::span<const int> layer, const RegionGraph& graph, double fraction) {
    if (layer.empty()) return false;
    ColumnSet cols(graph.width);
    for (int r : layer) {
        for (int c : graph.cols_present[static_cast<std::size_t>(r)]) cols.add(c);
    }
    return spans(cols.count(), graph.width, fraction);
}

namespace {

// NCL layer with the largest region overlap with `members` (lower index on ties).
std::size_t best_overlap(const LayerDecomposition& ncl, const std::vector<int>& members) {
    std::size_t best = 0;
    std::size_t best_count = 0;
    for (std::size_t l = 0; l < ncl.layers.size(); ++l) {
        std::size_t c = 0;
        for (int r : members) {
            if (std::binary_search(ncl.layers[l].begin(), ncl.layers[l].end(), r)) ++c;
        }
        if (c > best_count) {
            best_count = c;
            best = l;
        }
    }
    return best;
}

}  // namespace

AnatomyLabeling refine_layers(const AnatomyLabeling& semantic, const LayerDecomposition& ncl, const RegionGraph& graph,
                              double validity_fraction) {
    const int n = semantic.count();
    if (n != graph.count) throw ContractError("refine_layers: labeling and region graph disagree on region count");
    if (ncl.layers.empty()) throw ContractError("refine_layers: empty layer decomposition");

    std::vector<int> ncl_of(static_cast<std::size_t>(n), -1);
    for (std::size_t l = 0; l < ncl.layers.size(); ++l) {
        for (int r : ncl.layers[l]) {
            if (r < 0 || r >= n) throw ContractError("refine_layers: NCL region index out of range");
            ncl_of[static_cast<std::size_t>(r)] = static_cast<int>(l);
        }
    }
    if (std::find(ncl_of.begin(), ncl_of.end(), -1) != ncl_of.end()) {
        throw ContractError("refine_layers: NCL does not cover every region");
    }
    const int first = 0;
    const int last = ncl.count() - 1;
    auto sa = [&](int r) { return semantic.layer_of[static_cast<std::size_t>(r)]; };

    std::vector<int> out(static_cast<std::size_t>(n), 0);
    auto claim = [&](int r, Layer layer) {
        if (out[static_cast<std::size_t>(r)] == 0) out[static_cast<std::size_t>(r)] = static_cast<int>(layer);
    };

    for (int r = 0; r < n; ++r) {
        const int l = ncl_of[static_cast<std::size_t>(r)];
        if (sa(r) == static_cast<int>(Layer::Skin) && (l == first || l == last)) claim(r, Layer::Skin);
    }

    // Candidate sets follow the rule text literally; "other SA' layers" are
    // every semantic layer except the one being refined.
    auto other_than = [&](int r, Layer layer) { return sa(r) != static_cast<int>(layer); };

    const std::vector<int> sa_fat = semantic.members(Layer::Fat);
    if (layer_valid(sa_fat, graph, validity_fraction)) {
        const auto i = static_cast<int>(best_overlap(ncl, sa_fat));
        for (int r = 0; r < n; ++r) {
            const bool candidate = ncl_of[static_cast<std::size_t>(r)] < i || sa(r) == static_cast<int>(Layer::Fat);
            if (candidate && !other_than(r, Layer::Fat)) claim(r, Layer::Fat);
        }
    } else {
        for (int r = 0; r < n; ++r) {
            if (ncl_of[static_cast<std::size_t>(r)] == first && !other_than(r, Layer::Fat)) claim(r, Layer::Fat);
        }
    }

    const std::vector<int> sa_muscle = semantic.members(Layer::Muscle);
    if (layer_valid(sa_muscle, graph, validity_fraction)) {
        const auto i = static_cast<int>(best_overlap(ncl, sa_muscle));
        for (int r = 0; r < n; ++r) {
            const bool candidate = ncl_of[static_cast<std::size_t>(r)] > i || sa(r) == static_cast<int>(Layer::Muscle);
            if (candidate && !other_than(r, Layer::Muscle)) claim(r, Layer::Muscle);
        }
    } else {
        for (int r = 0; r < n; ++r) {
            if (ncl_of[static_cast<std::size_t>(r)] == last && sa(r) != static_cast<int>(Layer::Skin)) {
                claim(r, Layer::Muscle);
            }
        }
    }

    for (int r = 0; r < n; ++r) claim(r, Layer::Mammary);

    AnatomyLabeling refined;
    refined.layer_of = std::move(out);
    refined.prob = semantic.prob;
    refined.source = AnatomyLabeling::Source::Refined;
    return refined;
}

LayerFlag classify_layer_flag(std::span<const int> layer, const RegionGraph& graph, const FlagThresholds& thresholds) {
    if (layer.empty()) throw ContractError("classify_layer_flag: empty layer");
    double total = 0.0;
    double dark = 0.0;
    double bright = 0.0;
    for (int r : layer) {
        const auto i = static_cast<std::size_t>(r);
        total += graph.area[i];
        if (graph.intensity[i] < thresholds.dark_intensity) dark += graph.area[i];
        if (graph.intensity[i] > thresholds.smooth_intensity) bright += graph.area[i];
    }
    if (dark / total > thresholds.dark_fraction) return LayerFlag::Dark;
    if (bright / total > thresholds.smooth_fraction) return LayerFlag::Smooth;
    return LayerFlag::Normal;
}

std::array<LayerFlag, kNumClasses> classify_layers(const AnatomyLabeling& labeling, const RegionGraph& graph,
                                                   const FlagThresholds& thresholds) {
    std::array<LayerFlag, kNumClasses> flags{};
    for (int k = 1; k <= kNumClasses; ++k) {
        const std::vector<int> members = labeling.members(static_cast<Layer>(k));
        flags[static_cast<std::size_t>(k - 1)] =
            members.empty() ? LayerFlag::Normal : classify_layer_flag(members, graph, thresholds);
    }
    return flags;
}

}  // namespace tse
