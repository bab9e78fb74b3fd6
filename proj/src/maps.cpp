#include "tse/maps.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <string>

#include "tse/error.hpp"

namespace tse {

double z_membership(double x, double a, double b) {
    if (!(a < b)) throw ContractError("z_membership: need a < b");
    if (x <= a) return 1.0;
    if (x >= b) return 0.0;
    const double mid = 0.5 * (a + b);
    const double span = b - a;
    if (x <= mid) {
        const double t = (x - a) / span;
        return 1.0 - 2.0 * t * t;
    }
    const double t = (x - b) / span;
    return 2.0 * t * t;
}

std::vector<double> foreground_map(const RegionGraph& graph, const AnatomyLabeling& nsa,
                                   const std::array<LayerFlag, kNumClasses>& flags, const ForegroundParams& params) {
    if (nsa.count() != graph.count) throw ContractError("foreground_map: labeling and region graph disagree on region count");
    const auto n = static_cast<std::size_t>(graph.count);
    std::vector<double> f(n, 0.0);

    for (int k = 1; k <= kNumClasses; ++k) {
        const std::vector<int> members = nsa.members(static_cast<Layer>(k));
        if (members.empty()) continue;
        if (flags[static_cast<std::size_t>(k - 1)] == LayerFlag::Dark) {
            for (int r : members) f[static_cast<std::size_t>(r)] = params.dark_value;
            continue;
        }
        double area = 0.0;
        double sum = 0.0;
        for (int r : members) {
            area += graph.area[static_cast<std::size_t>(r)];
            sum += graph.area[static_cast<std::size_t>(r)] * graph.intensity[static_cast<std::size_t>(r)];
        }
        const double mu = sum / area;
        double var = 0.0;
        for (int r : members) {
            const double d = graph.intensity[static_cast<std::size_t>(r)] - mu;
            var += graph.area[static_cast<std::size_t>(r)] * d * d;
        }
        const double sigma = std::sqrt(var / area);
        const double a = mu - params.spread * sigma;
        const double b = mu + params.spread * sigma;
        for (int r : members) {
            const double x = graph.intensity[static_cast<std::size_t>(r)];
            // A collapsed interval degenerates into a step at the mean.
            f[static_cast<std::size_t>(r)] = a < b ? z_membership(x, a, b) : (x < mu ? 1.0 : params.dark_value);
        }
    }

    const double peak = *std::max_element(f.begin(), f.end());
    if (peak > 0.0) {
        for (double& v : f) v /= peak;
    }
    return f;
}

Point2 adaptive_center(std::span<const double> foreground, const RegionGraph& graph) {
    if (foreground.size() != static_cast<std::size_t>(graph.count)) {
        throw ContractError("adaptive_center: foreground length does not match region count");
    }
    double total = 0.0;
    Point2 ac{0.0, 0.0};
    for (std::size_t i = 0; i < foreground.size(); ++i) {
        total += foreground[i];
        ac[0] += foreground[i] * graph.center[i][0];
        ac[1] += foreground[i] * graph.center[i][1];
    }
    if (!(total > 0.0)) throw ContractError("adaptive_center: foreground map sums to zero");
    return {ac[0] / total, ac[1] / total};
}

std::vector<double> center_map(const Point2& ac, const RegionGraph& graph, double sigma3_sq) {
    std::vector<double> c(static_cast<std::size_t>(graph.count));
    for (std::size_t i = 0; i < c.size(); ++i) {
        const double dist = std::hypot(graph.center[i][0] - ac[0], graph.center[i][1] - ac[1]);
        c[i] = std::exp(-dist / sigma3_sq);
    }
    return c;
}

std::vector<double> nc_boundary_map(const RegionGraph& graph, double bandwidth) {
    const auto n = static_cast<std::size_t>(graph.count);
    std::vector<double> nc(n, 0.0);
    std::vector<bool> done(n, false);
    // Max-heap on (connectivity, -index) so equal values pop in index order.
    using Entry = std::pair<double, int>;
    auto cmp = [](const Entry& x, const Entry& y) {
        if (x.first != y.first) return x.first < y.first;
        return x.second > y.second;
    };
    std::priority_queue<Entry, std::vector<Entry>, decltype(cmp)> heap(cmp);
    for (std::size_t i = 0; i < n; ++i) {
        if (graph.touches_border[i]) {
            nc[i] = 1.0;
            heap.push({1.0, static_cast<int>(i)});
        }
    }
    while (!heap.empty()) {
        const auto [value, r] = heap.top();
        heap.pop();
        const auto ri = static_cast<std::size_t>(r);
        if (done[ri] || value < nc[ri]) continue;
        done[ri] = true;
        for (int s : graph.adjacency[ri]) {
            const auto si = static_cast<std::size_t>(s);
            if (done[si]) continue;
            const double affinity = std::exp(-std::abs(graph.intensity[ri] - graph.intensity[si]) / bandwidth);
            const double candidate = std::min(value, affinity);
            if (candidate > nc[si]) {
                nc[si] = candidate;
                heap.push({candidate, s});
            }
        }
    }
    return nc;
}

LayerWeights layer_weights(const AnatomyLabeling& nsa, const RegionGraph& graph, double validity_fraction) {
    if (nsa.count() != graph.count) throw ContractError("layer_weights: labeling and region graph disagree on region count");
    LayerWeights w;
    const auto& mammary_prob = nsa.prob[static_cast<std::size_t>(Layer::Mammary) - 1];
    for (int k = 1; k <= kNumClasses; ++k) {
        const std::vector<int> members = nsa.members(static_cast<Layer>(k));
        double sum = 0.0;
        for (int r : members) sum += mammary_prob[static_cast<std::size_t>(r)];
        w.layer_w[static_cast<std::size_t>(k - 1)] = members.empty() ? 0.0 : sum / static_cast<double>(members.size());
    }
    w.mammary_valid = layer_valid(nsa.members(Layer::Mammary), graph, validity_fraction);
    w.region_w.assign(static_cast<std::size_t>(graph.count), 1.0);
    if (w.mammary_valid) {
        for (std::size_t i = 0; i < w.region_w.size(); ++i) {
            const int layer = nsa.layer_of[i];
            w.region_w[i] = std::max(mammary_prob[i], w.layer_w[static_cast<std::size_t>(layer - 1)]);
        }
    }
    return w;
}

double adjusted_center(double c, int layer, const std::array<LayerFlag, kNumClasses>& flags) {
    const LayerFlag flag = flags[static_cast<std::size_t>(layer - 1)];
    if (layer == static_cast<int>(Layer::Mammary)) {
        if (flag == LayerFlag::Dark && c > 0.5) return 1.0;
    } else if (flag == LayerFlag::Normal && c >= 0.75) {
        return 1.0;
    }
    return c;
}

std::vector<double> background_map(std::span<const double> nc, const LayerWeights& weights, std::span<const double> center,
                                   const std::array<LayerFlag, kNumClasses>& flags, const AnatomyLabeling& nsa,
                                   BackgroundMode mode) {
    const std::size_t n = nc.size();
    if (center.size() != n || weights.region_w.size() != n || static_cast<std::size_t>(nsa.count()) != n) {
        throw ContractError("background_map: inputs cover different region counts");
    }
    std::vector<double> t(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double nc_sq = nc[i] * nc[i];
        if (mode == BackgroundMode::NcSquared) {
            t[i] = nc_sq;
        } else {
            const double c_adj = adjusted_center(center[i], nsa.layer_of[i], flags);
            t[i] = 1.0 - (1.0 - nc_sq) * weights.region_w[i] * c_adj;
        }
    }
    const double peak = *std::max_element(t.begin(), t.end());
    if (peak > 0.0) {
        for (double& v : t) v /= peak;
    }
    return t;
}

UnaryMaps build_unary_maps(const RegionGraph& graph, const AnatomyLabeling& nsa,
                           const std::array<LayerFlag, kNumClasses>& flags, const MapParams& params) {
    UnaryMaps maps;
    maps.foreground = foreground_map(graph, nsa, flags, params.foreground);
    maps.adaptive_center = adaptive_center(maps.foreground, graph);
    maps.center = center_map(maps.adaptive_center, graph, params.sigma3_sq);
    maps.nc = nc_boundary_map(graph, params.nc_bandwidth);
    maps.weights = layer_weights(nsa, graph, params.validity_fraction);
    maps.background = background_map(maps.nc, maps.weights, maps.center, flags, nsa, params.background);
    return maps;
}

}  // namespace tse
