#include <doctest.h>

#include <algorithm>
#include <set>

#include "support/fixtures.hpp"
#include "tse/error.hpp"
#include "tse/phantom.hpp"
#include "tse/superpixel.hpp"

using namespace tse;

namespace {

// 4x4 image cut into four 2x2 quadrants.
SuperpixelMap quadrants() {
    PixelLabelMap m(4, 4);
    for (int y = 0; y < 4; ++y) {
        for (int x = 0; x < 4; ++x) m.at(x, y) = (y / 2) * 2 + x / 2;
    }
    return make_superpixel_map(m);
}

double mean_area(const SuperpixelMap& sp) {
    return static_cast<double>(sp.width()) * sp.height() / static_cast<double>(sp.count);
}

void check_graph_invariants(const RegionGraph& g) {
    long total = 0;
    for (int a : g.area) total += a;
    CHECK(total == static_cast<long>(g.width) * g.height);
    for (int i = 0; i < g.count; ++i) {
        const auto& adj = g.adjacency[static_cast<std::size_t>(i)];
        CHECK(std::find(adj.begin(), adj.end(), i) == adj.end());
        for (int j : adj) {
            const auto& back = g.adjacency[static_cast<std::size_t>(j)];
            CHECK(std::binary_search(back.begin(), back.end(), i));
        }
        CHECK(g.intensity[static_cast<std::size_t>(i)] >= 0.0);
        CHECK(g.intensity[static_cast<std::size_t>(i)] <= 1.0);
        for (double c : g.center[static_cast<std::size_t>(i)]) {
            CHECK(c >= 0.0);
            CHECK(c <= 1.0);
        }
    }
}

}  // namespace

TEST_SUITE("superpixel") {

TEST_CASE("constant image gives a tiled partition of bounded area") {
    const Image img(64, 48, 128);
    SuperpixelParams p;
    p.max_dist = 8.0;
    const SuperpixelMap sp = segment(img, p);
    CHECK(sp.count >= 4);
    CHECK(regions_connected(sp));
    CHECK(mean_area(sp) >= 0.25 * 64.0);
    CHECK(mean_area(sp) <= 4.0 * 64.0);
    // Tiles: every region's bounding box is at most twice the lattice spacing.
    const RegionGraph g = build_region_graph(img, sp);
    for (int i = 0; i < g.count; ++i) {
        const auto& rows = g.rows_present[static_cast<std::size_t>(i)];
        const auto& cols = g.cols_present[static_cast<std::size_t>(i)];
        CHECK(rows.back() - rows.front() < 20);
        CHECK(cols.back() - cols.front() < 20);
        CHECK_FALSE(g.adjacency[static_cast<std::size_t>(i)].empty());
    }
}

TEST_CASE("no region straddles a sharp vertical split at high intensity weight") {
    Image img(64, 64);
    for (int y = 0; y < 64; ++y) {
        for (int x = 0; x < 64; ++x) img.at(x, y) = x < 29 ? 30 : 220;
    }
    SuperpixelParams p;
    p.intensity_weight = 20.0;
    const SuperpixelMap sp = segment(img, p);
    for (int y = 0; y < 64; ++y) CHECK(sp.region_of.at(28, y) != sp.region_of.at(29, y));
}

TEST_CASE("segmentation is deterministic") {
    PhantomSpec spec;
    spec.width = 128;
    spec.height = 128;
    spec.noise_sigma = 10.0;
    spec.seed = 77;
    const PhantomCase ph = generate_phantom(spec);
    const SuperpixelMap a = segment(ph.image);
    const SuperpixelMap b = segment(ph.image);
    CHECK(a.count == b.count);
    CHECK(a.region_of == b.region_of);
}

TEST_CASE("phantom partitions are valid, connected and of bounded mean area") {
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        PhantomSpec spec;
        spec.width = 128;
        spec.height = 128;
        spec.noise_sigma = 10.0;
        spec.seed = seed;
        const PhantomCase ph = generate_phantom(spec);
        const SuperpixelMap sp = segment(ph.image);
        REQUIRE(regions_connected(sp));
        std::set<int> used(sp.region_of.labels().begin(), sp.region_of.labels().end());
        REQUIRE(static_cast<int>(used.size()) == sp.count);
        CHECK(mean_area(sp) >= 0.25 * 100.0);
        CHECK(mean_area(sp) <= 4.0 * 100.0);
        check_graph_invariants(build_region_graph(ph.image, sp));
    }
}

TEST_CASE("split_disconnected separates components and relabels canonically") {
    PixelLabelMap m(8, 8, 0);
    for (int y = 0; y < 8; ++y) {
        m.at(3, y) = 1;
        m.at(4, y) = 1;
    }
    // label 0 now has two components, left and right of the stripe
    const SuperpixelMap sp = split_disconnected(m);
    CHECK(sp.count == 3);
    CHECK(sp.region_of.at(0, 0) == 0);
    CHECK(sp.region_of.at(3, 0) == 1);
    CHECK(sp.region_of.at(7, 7) == 2);
    CHECK(regions_connected(sp));
}

TEST_CASE("make_superpixel_map rejects bad index maps") {
    SUBCASE("fewer than four regions") {
        PixelLabelMap m(8, 8, 0);
        for (int x = 0; x < 8; ++x) m.at(x, 7) = 1;
        CHECK_THROWS_AS(make_superpixel_map(m), ContractError);
    }
    SUBCASE("unused index") {
        PixelLabelMap m(8, 8);
        for (int y = 0; y < 8; ++y) {
            for (int x = 0; x < 8; ++x) m.at(x, y) = (y / 4) * 2 + x / 4;
        }
        m.at(0, 0) = 5;
        CHECK_THROWS_AS(make_superpixel_map(m), ContractError);
    }
    SUBCASE("disconnected region") {
        PixelLabelMap m(8, 8);
        for (int y = 0; y < 8; ++y) {
            for (int x = 0; x < 8; ++x) m.at(x, y) = (y / 4) * 2 + x / 4;
        }
        m.at(7, 7) = 0;
        CHECK_THROWS_AS(make_superpixel_map(m), ContractError);
    }
}

TEST_CASE("2x2 region of {0,255,255,0} has I' = 0.5 and area 4") {
    const Image img(4, 4, std::vector<std::uint8_t>{0, 255, 9, 9, 255, 0, 9, 9, 9, 9, 9, 9, 9, 9, 9, 9});
    const RegionGraph g = build_region_graph(img, quadrants());
    CHECK(g.intensity[0] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(g.area[0] == 4);
    // Pixel-center mean (0.5, 0.5) in index units, divided by the image size.
    CHECK(g.center[0][0] == doctest::Approx(0.5 / 4.0));
    CHECK(g.center[0][1] == doctest::Approx(0.5 / 4.0));
}

TEST_CASE("region graph adjacency and border flags") {
    const RegionGraph g = build_region_graph(Image(4, 4, 10), quadrants());
    CHECK(g.adjacency[0] == std::vector<int>{1, 2});
    CHECK(g.adjacency[1] == std::vector<int>{0, 3});
    for (int i = 0; i < 4; ++i) CHECK(g.touches_border[static_cast<std::size_t>(i)]);
    CHECK(g.rows_present[3] == std::vector<int>{2, 3});
    CHECK(g.cols_present[1] == std::vector<int>{2, 3});
    check_graph_invariants(g);
}

TEST_CASE("region graph dimension mismatch is a contract error") {
    CHECK_THROWS_AS(build_region_graph(Image(5, 4, 0), quadrants()), ContractError);
}

TEST_CASE("regionize_labels examples") {
    const SuperpixelMap sp = quadrants();
    PixelLabelMap classes(4, 4, 3);
    SUBCASE("unanimous region") {
        const RegionLabels rl = regionize_labels(classes, sp);
        CHECK(rl.label[0] == 3);
        CHECK(rl.prob[2][0] == doctest::Approx(1.0));
    }
    SUBCASE("majority {1,1,2} plus one more vote for 1") {
        classes.at(0, 0) = 1;
        classes.at(1, 0) = 1;
        classes.at(0, 1) = 2;
        classes.at(1, 1) = 1;
        CHECK(regionize_labels(classes, sp).label[0] == 1);
    }
    SUBCASE("50/50 split between 2 and 3 goes to 2") {
        classes.at(0, 0) = 2;
        classes.at(1, 0) = 2;
        classes.at(0, 1) = 3;
        classes.at(1, 1) = 3;
        const RegionLabels rl = regionize_labels(classes, sp);
        CHECK(rl.label[0] == 2);
        CHECK(rl.prob[1][0] == doctest::Approx(0.5));
        CHECK(rl.prob[2][0] == doctest::Approx(0.5));
    }
}

TEST_CASE("regionize_labels from probabilities: SP' is the mean, SA' the argmax vote") {
    const SuperpixelMap sp = quadrants();
    PixelProbMap prob(kNumClasses, 4, 4, 0.0F);
    for (int y = 0; y < 4; ++y) {
        for (int x = 0; x < 4; ++x) prob.at(3, x, y) = 1.0F;
    }
    // Region 0: three pixels lean to fat, one is confidently skin.
    const float fat[4][4] = {{0.1F, 0.6F, 0.2F, 0.1F}, {0.1F, 0.6F, 0.2F, 0.1F}, {0.1F, 0.6F, 0.2F, 0.1F}, {1.0F, 0.0F, 0.0F, 0.0F}};
    const int px[4][2] = {{0, 0}, {1, 0}, {0, 1}, {1, 1}};
    for (int i = 0; i < 4; ++i) {
        for (int k = 0; k < 4; ++k) prob.at(k, px[i][0], px[i][1]) = fat[i][k];
    }
    const RegionLabels rl = regionize_labels(prob, sp);
    CHECK(rl.label[0] == 2);
    CHECK(rl.prob[0][0] == doctest::Approx(0.325));
    CHECK(rl.prob[1][0] == doctest::Approx(0.45));
    CHECK(rl.label[3] == 4);
}

TEST_CASE("painting SA' reproduces the majority-filtered pixel map") {
    PhantomSpec spec;
    spec.width = 96;
    spec.height = 96;
    spec.noise_sigma = 10.0;
    spec.tumor = {0.5, 0.47, 0.15, 0.1};
    const PhantomCase ph = generate_phantom(spec);
    const SuperpixelMap sp = segment(ph.image);
    const RegionLabels rl = regionize_labels(ph.prob_map, sp);
    const std::vector<int> painted = paint_regions(sp, rl.label);
    const PixelLabelMap argmax = argmax_labels(ph.prob_map);
    // Oracle: recount the votes per region independently.
    std::vector<std::array<int, 4>> votes(static_cast<std::size_t>(sp.count), std::array<int, 4>{});
    for (std::size_t i = 0; i < argmax.size(); ++i) {
        ++votes[static_cast<std::size_t>(sp.region_of.labels()[i])][static_cast<std::size_t>(argmax.labels()[i] - 1)];
    }
    for (std::size_t i = 0; i < painted.size(); ++i) {
        const auto& v = votes[static_cast<std::size_t>(sp.region_of.labels()[i])];
        const int best = static_cast<int>(std::max_element(v.begin(), v.end()) - v.begin()) + 1;
        REQUIRE(painted[i] == best);
    }
}

TEST_CASE("regionize dimension mismatch is a contract error") {
    CHECK_THROWS_AS(regionize_labels(PixelLabelMap(5, 4, 1), quadrants()), ContractError);
}

}  // TEST_SUITE
