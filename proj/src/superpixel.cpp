#include "tse/superpixel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <string>
#include <utility>

#include "tse/error.hpp"

namespace tse {

namespace {

constexpr int kDx[4] = {1, -1, 0, 0};
constexpr int kDy[4] = {0, 0, 1, -1};

struct UnionFind {
    explicit UnionFind(int n) : parent(static_cast<std::size_t>(n)) { std::iota(parent.begin(), parent.end(), 0); }
    int find(int a) {
        while (parent[static_cast<std::size_t>(a)] != a) {
            parent[static_cast<std::size_t>(a)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(a)])];
            a = parent[static_cast<std::size_t>(a)];
        }
        return a;
    }
    std::vector<int> parent;
};

// Quick-shift link forest; returns the root index of every pixel.
std::vector<int> quickshift_roots(const Image& image, const SuperpixelParams& params) {
    const int w = image.width();
    const int h = image.height();
    const std::size_t n = image.size();
    const int k = params.kernel_size;
    const double k_sq = static_cast<double>(k) * static_cast<double>(k);

    std::vector<double> feat(n);
    for (std::size_t i = 0; i < n; ++i) feat[i] = params.intensity_weight * static_cast<double>(image.pixels()[i]) / 10.0;

    std::vector<int> density(n, 0);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const std::size_t p = image.index(x, y);
            int count = 0;
            for (int dy = -k; dy <= k; ++dy) {
                const int yy = y + dy;
                if (yy < 0 || yy >= h) continue;
                for (int dx = -k; dx <= k; ++dx) {
                    const int xx = x + dx;
                    if (xx < 0 || xx >= w) continue;
                    const double di = feat[image.index(xx, yy)] - feat[p];
                    if (static_cast<double>(dx * dx + dy * dy) + di * di <= k_sq) ++count;
                }
            }
            density[p] = count;
        }
    }

    // Lattice priority breaks density ties so that flat areas fall apart into
    // tiles centred on a grid with spacing just above max_dist.
    const int spacing = static_cast<int>(std::floor(params.max_dist)) + 1;
    const int offset = spacing / 2;
    auto lattice_gap = [&](int v) {
        const int r = ((v - offset) % spacing + spacing) % spacing;
        return std::min(r, spacing - r);
    };
    std::vector<int> priority(n);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const int gx = lattice_gap(x);
            const int gy = lattice_gap(y);
            priority[image.index(x, y)] = -(gx * gx + gy * gy);
        }
    }
    auto higher = [&](std::size_t q, std::size_t p) {
        if (density[q] != density[p]) return density[q] > density[p];
        if (priority[q] != priority[p]) return priority[q] > priority[p];
        return q < p;
    };

    const int reach = static_cast<int>(std::floor(params.max_dist));
    const double max_sq = params.max_dist * params.max_dist;
    std::vector<int> parent(n);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const std::size_t p = image.index(x, y);
            double best = max_sq + 1.0;
            std::size_t best_q = p;
            for (int dy = -reach; dy <= reach; ++dy) {
                const int yy = y + dy;
                if (yy < 0 || yy >= h) continue;
                for (int dx = -reach; dx <= reach; ++dx) {
                    const int xx = x + dx;
                    if (xx < 0 || xx >= w) continue;
                    const std::size_t q = image.index(xx, yy);
                    const double di = feat[q] - feat[p];
                    const double d = static_cast<double>(dx * dx + dy * dy) + di * di;
                    if (d > max_sq || d > best) continue;
                    if (!higher(q, p)) continue;
                    if (d < best || q < best_q) {
                        best = d;
                        best_q = q;
                    }
                }
            }
            parent[p] = static_cast<int>(best_q);
        }
    }

    std::vector<int> root(n, -1);
    std::vector<std::size_t> chain;
    for (std::size_t p = 0; p < n; ++p) {
        std::size_t cur = p;
        chain.clear();
        while (root[cur] < 0 && static_cast<std::size_t>(parent[cur]) != cur) {
            chain.push_back(cur);
            cur = static_cast<std::size_t>(parent[cur]);
        }
        const int r = root[cur] >= 0 ? root[cur] : static_cast<int>(cur);
        root[cur] = r;
        for (std::size_t c : chain) root[c] = r;
    }
    return root;
}

// Merges regions smaller than min_area into the 4-adjacent region with the
// closest mean intensity, smallest fragments first.
PixelLabelMap merge_small_regions(const Image& image, const SuperpixelMap& spmap, int min_area) {
    const int n = spmap.count;
    std::vector<long> area(static_cast<std::size_t>(n), 0);
    std::vector<double> sum(static_cast<std::size_t>(n), 0.0);
    std::vector<std::set<int>> nbrs(static_cast<std::size_t>(n));
    const int w = spmap.width();
    const int h = spmap.height();
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const int r = spmap.region_of.at(x, y);
            area[static_cast<std::size_t>(r)] += 1;
            sum[static_cast<std::size_t>(r)] += image.at(x, y);
            if (x + 1 < w) {
                const int s = spmap.region_of.at(x + 1, y);
                if (s != r) {
                    nbrs[static_cast<std::size_t>(r)].insert(s);
                    nbrs[static_cast<std::size_t>(s)].insert(r);
                }
            }
            if (y + 1 < h) {
                const int s = spmap.region_of.at(x, y + 1);
                if (s != r) {
                    nbrs[static_cast<std::size_t>(r)].insert(s);
                    nbrs[static_cast<std::size_t>(s)].insert(r);
                }
            }
        }
    }

    UnionFind uf(n);
    std::set<std::pair<long, int>> small;
    for (int r = 0; r < n; ++r) {
        if (area[static_cast<std::size_t>(r)] < min_area) small.insert({area[static_cast<std::size_t>(r)], r});
    }
    while (!small.empty()) {
        const auto [a, r] = *small.begin();
        small.erase(small.begin());
        auto& rn = nbrs[static_cast<std::size_t>(r)];
        if (rn.empty()) continue;
        const double mean_r = sum[static_cast<std::size_t>(r)] / static_cast<double>(a);
        int target = -1;
        double best = 0.0;
        for (int s : rn) {
            const double d = std::abs(sum[static_cast<std::size_t>(s)] / static_cast<double>(area[static_cast<std::size_t>(s)]) - mean_r);
            if (target < 0 || d < best) {
                best = d;
                target = s;
            }
        }
        const auto t = static_cast<std::size_t>(target);
        const bool target_small = area[t] < min_area;
        if (target_small) small.erase({area[t], target});
        area[t] += a;
        sum[t] += sum[static_cast<std::size_t>(r)];
        for (int s : rn) {
            auto& sn = nbrs[static_cast<std::size_t>(s)];
            sn.erase(r);
            if (s != target) {
                sn.insert(target);
                nbrs[t].insert(s);
            }
        }
        nbrs[t].erase(r);
        rn.clear();
        uf.parent[static_cast<std::size_t>(r)] = target;
        if (area[t] < min_area) small.insert({area[t], target});
    }

    PixelLabelMap out(w, h);
    for (std::size_t i = 0; i < out.size(); ++i) out.labels()[i] = uf.find(spmap.region_of.labels()[i]);
    return out;
}

}  // namespace

SuperpixelMap split_disconnected(const PixelLabelMap& labels) {
    const int w = labels.width();
    const int h = labels.height();
    PixelLabelMap out(w, h, -1);
    int next = 0;
    std::vector<std::pair<int, int>> stack;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            if (out.at(x, y) >= 0) continue;
            const int src = labels.at(x, y);
            const int id = next++;
            out.at(x, y) = id;
            stack.push_back({x, y});
            while (!stack.empty()) {
                const auto [cx, cy] = stack.back();
                stack.pop_back();
                for (int d = 0; d < 4; ++d) {
                    const int nx = cx + kDx[d];
                    const int ny = cy + kDy[d];
                    if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
                    if (out.at(nx, ny) >= 0 || labels.at(nx, ny) != src) continue;
                    out.at(nx, ny) = id;
                    stack.push_back({nx, ny});
                }
            }
        }
    }
    return SuperpixelMap{std::move(out), next};
}

bool regions_connected(const SuperpixelMap& spmap) {
    const SuperpixelMap split = split_disconnected(spmap.region_of);
    return split.count == spmap.count;
}

SuperpixelMap segment(const Image& image, const SuperpixelParams& params) {
    if (image.width() < 8 || image.height() < 8) {
        throw ContractError("segment: image must be at least 8x8, got " + std::to_string(image.width()) + "x" +
                            std::to_string(image.height()));
    }
    if (params.kernel_size < 1) throw ContractError("segment: kernel_size must be >= 1");
    if (!(params.max_dist > 0.0)) throw ContractError("segment: max_dist must be > 0");
    if (!(params.intensity_weight >= 0.0)) throw ContractError("segment: intensity_weight must be >= 0");

    const std::vector<int> roots = quickshift_roots(image, params);
    SuperpixelMap spmap = split_disconnected(PixelLabelMap(image.width(), image.height(), roots));

    const int min_area = std::max(1, static_cast<int>(std::floor(params.max_dist * params.max_dist / 4.0)));
    spmap = split_disconnected(merge_small_regions(image, spmap, min_area));

    if (spmap.count < 4) {
        PixelLabelMap cut(image.width(), image.height());
        for (int y = 0; y < image.height(); ++y) {
            for (int x = 0; x < image.width(); ++x) {
                const int quadrant = (x >= image.width() / 2 ? 1 : 0) + (y >= image.height() / 2 ? 2 : 0);
                cut.at(x, y) = spmap.region_of.at(x, y) * 4 + quadrant;
            }
        }
        spmap = split_disconnected(cut);
    }
    return spmap;
}

SuperpixelMap make_superpixel_map(PixelLabelMap region_of) {
    int max_label = -1;
    for (int v : region_of.labels()) {
        if (v < 0) throw ContractError("superpixel map: negative region index");
        max_label = std::max(max_label, v);
    }
    const int count = max_label + 1;
    std::vector<bool> used(static_cast<std::size_t>(count), false);
    for (int v : region_of.labels()) used[static_cast<std::size_t>(v)] = true;
    for (int r = 0; r < count; ++r) {
        if (!used[static_cast<std::size_t>(r)]) {
            throw ContractError("superpixel map: region index " + std::to_string(r) + " is never used");
        }
    }
    if (count < 4) throw ContractError("superpixel map: need at least 4 regions, got " + std::to_string(count));
    SuperpixelMap spmap{std::move(region_of), count};
    if (!regions_connected(spmap)) throw ContractError("superpixel map: some region is not 4-connected");
    return spmap;
}

RegionGraph build_region_graph(const Image& image, const SuperpixelMap& spmap) {
    if (image.width() != spmap.width() || image.height() != spmap.height()) {
        throw ContractError("build_region_graph: image is " + std::to_string(image.width()) + "x" +
                            std::to_string(image.height()) + " but superpixel map is " +
                            std::to_string(spmap.width()) + "x" + std::to_string(spmap.height()));
    }
    const int w = image.width();
    const int h = image.height();
    const auto n = static_cast<std::size_t>(spmap.count);

    RegionGraph g;
    g.width = w;
    g.height = h;
    g.count = spmap.count;
    g.intensity.assign(n, 0.0);
    g.center.assign(n, {0.0, 0.0});
    g.area.assign(n, 0);
    g.adjacency.assign(n, {});
    g.touches_border.assign(n, false);
    g.rows_present.assign(n, {});
    g.cols_present.assign(n, {});

    std::vector<std::uint64_t> isum(n, 0);
    std::vector<double> xsum(n, 0.0);
    std::vector<double> ysum(n, 0.0);
    std::vector<std::set<int>> adj(n);
    std::vector<std::vector<bool>> rows(n, std::vector<bool>(static_cast<std::size_t>(h), false));
    std::vector<std::vector<bool>> cols(n, std::vector<bool>(static_cast<std::size_t>(w), false));
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const int r = spmap.region_of.at(x, y);
            if (r < 0 || r >= spmap.count) throw ContractError("build_region_graph: region index out of range");
            const auto ri = static_cast<std::size_t>(r);
            g.area[ri] += 1;
            isum[ri] += image.at(x, y);
            xsum[ri] += x;
            ysum[ri] += y;
            rows[ri][static_cast<std::size_t>(y)] = true;
            cols[ri][static_cast<std::size_t>(x)] = true;
            if (x == 0 || y == 0 || x == w - 1 || y == h - 1) g.touches_border[ri] = true;
            if (x + 1 < w && spmap.region_of.at(x + 1, y) != r) {
                adj[ri].insert(spmap.region_of.at(x + 1, y));
                adj[static_cast<std::size_t>(spmap.region_of.at(x + 1, y))].insert(r);
            }
            if (y + 1 < h && spmap.region_of.at(x, y + 1) != r) {
                adj[ri].insert(spmap.region_of.at(x, y + 1));
                adj[static_cast<std::size_t>(spmap.region_of.at(x, y + 1))].insert(r);
            }
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (g.area[i] == 0) throw ContractError("build_region_graph: region " + std::to_string(i) + " is empty");
        const double a = static_cast<double>(g.area[i]);
        g.intensity[i] = static_cast<double>(isum[i]) / a / 255.0;
        g.center[i] = {xsum[i] / a / static_cast<double>(w), ysum[i] / a / static_cast<double>(h)};
        g.adjacency[i].assign(adj[i].begin(), adj[i].end());
        for (int y = 0; y < h; ++y) {
            if (rows[i][static_cast<std::size_t>(y)]) g.rows_present[i].push_back(y);
        }
        for (int x = 0; x < w; ++x) {
            if (cols[i][static_cast<std::size_t>(x)]) g.cols_present[i].push_back(x);
        }
    }
    return g;
}

namespace {

RegionLabels majority_from_votes(const std::vector<std::array<long, kNumClasses>>& votes) {
    RegionLabels out;
    out.label.assign(votes.size(), 1);
    for (std::size_t i = 0; i < votes.size(); ++i) {
        int best = 0;
        for (int k = 1; k < kNumClasses; ++k) {
            if (votes[i][static_cast<std::size_t>(k)] > votes[i][static_cast<std::size_t>(best)]) best = k;
        }
        out.label[i] = best + 1;
    }
    return out;
}

void check_same_dims(int w, int h, const SuperpixelMap& spmap, const char* what) {
    if (w != spmap.width() || h != spmap.height()) {
        throw ContractError(std::string("regionize_labels: ") + what + " is " + std::to_string(w) + "x" +
                            std::to_string(h) + " but superpixel map is " + std::to_string(spmap.width()) + "x" +
                            std::to_string(spmap.height()));
    }
}

}  // namespace

RegionLabels regionize_labels(const PixelProbMap& prob, const SuperpixelMap& spmap) {
    check_same_dims(prob.width(), prob.height(), spmap, "probability map");
    if (prob.planes() != kNumClasses) throw ContractError("regionize_labels: probability map needs 4 planes");
    const auto n = static_cast<std::size_t>(spmap.count);
    std::vector<std::array<long, kNumClasses>> votes(n, std::array<long, kNumClasses>{});
    std::array<std::vector<double>, kNumClasses> sums;
    for (auto& s : sums) s.assign(n, 0.0);
    std::vector<long> area(n, 0);
    for (int y = 0; y < prob.height(); ++y) {
        for (int x = 0; x < prob.width(); ++x) {
            const auto r = static_cast<std::size_t>(spmap.region_of.at(x, y));
            area[r] += 1;
            votes[r][static_cast<std::size_t>(argmax_class(prob, x, y) - 1)] += 1;
            for (int k = 0; k < kNumClasses; ++k) sums[static_cast<std::size_t>(k)][r] += prob.at(k, x, y);
        }
    }
    RegionLabels out = majority_from_votes(votes);
    for (int k = 0; k < kNumClasses; ++k) {
        auto& p = out.prob[static_cast<std::size_t>(k)];
        p.assign(n, 0.0);
        for (std::size_t i = 0; i < n; ++i) p[i] = sums[static_cast<std::size_t>(k)][i] / static_cast<double>(area[i]);
    }
    return out;
}

RegionLabels regionize_labels(const PixelLabelMap& classes, const SuperpixelMap& spmap) {
    check_same_dims(classes.width(), classes.height(), spmap, "class map");
    const auto n = static_cast<std::size_t>(spmap.count);
    std::vector<std::array<long, kNumClasses>> votes(n, std::array<long, kNumClasses>{});
    std::vector<long> area(n, 0);
    for (std::size_t i = 0; i < classes.size(); ++i) {
        const int c = classes.labels()[i];
        if (c < 1 || c > kNumClasses) {
            throw ContractError("regionize_labels: class label " + std::to_string(c) + " outside 1..4 at pixel " +
                                std::to_string(i));
        }
        const auto r = static_cast<std::size_t>(spmap.region_of.labels()[i]);
        area[r] += 1;
        votes[r][static_cast<std::size_t>(c - 1)] += 1;
    }
    RegionLabels out = majority_from_votes(votes);
    for (int k = 0; k < kNumClasses; ++k) {
        auto& p = out.prob[static_cast<std::size_t>(k)];
        p.assign(n, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            p[i] = static_cast<double>(votes[i][static_cast<std::size_t>(k)]) / static_cast<double>(area[i]);
        }
    }
    return out;
}

}  // namespace tse
