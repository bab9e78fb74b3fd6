#include <doctest.h>

#include <algorithm>
#include <set>

#include "support/fixtures.hpp"
#include "tse/anatomy.hpp"
#include "tse/error.hpp"
#include "tse/phantom.hpp"

using namespace tse;
using testing::column_graph;
using testing::labeling_from;

namespace {

struct Segmented {
    PhantomCase phantom;
    SuperpixelMap sp;
    RegionGraph graph;
    RegionLabels labels;
};

Segmented segmented_phantom(std::uint64_t seed, double noise, int size = 128) {
    PhantomSpec spec;
    spec.width = size;
    spec.height = size;
    spec.seed = seed;
    spec.noise_sigma = noise;
    spec.tumor = {0.5, 0.47, 0.15, 0.1};
    Segmented s{generate_phantom(spec), {}, {}, {}};
    s.sp = segment(s.phantom.image);
    s.graph = build_region_graph(s.phantom.image, s.sp);
    s.labels = regionize_labels(s.phantom.prob_map, s.sp);
    return s;
}

// Majority phantom band per region.
std::vector<int> region_bands(const Segmented& s) {
    std::vector<std::array<int, 4>> votes(static_cast<std::size_t>(s.sp.count), std::array<int, 4>{});
    for (std::size_t i = 0; i < s.phantom.band_labels.size(); ++i) {
        ++votes[static_cast<std::size_t>(s.sp.region_of.labels()[i])][static_cast<std::size_t>(s.phantom.band_labels.labels()[i] - 1)];
    }
    std::vector<int> out;
    for (const auto& v : votes) out.push_back(static_cast<int>(std::max_element(v.begin(), v.end()) - v.begin()) + 1);
    return out;
}

RegionGraph intensity_graph(const std::vector<double>& intensity, const std::vector<int>& area) {
    std::vector<std::vector<int>> cols(intensity.size(), std::vector<int>{0});
    RegionGraph g = column_graph(4, cols);
    g.intensity = intensity;
    g.area = area;
    return g;
}

}  // namespace

TEST_SUITE("anatomy") {

TEST_CASE("layer decomposition yields 3..5 ordered layers that partition the regions") {
    for (std::uint64_t seed = 0; seed < 12; ++seed) {
        const Segmented s = segmented_phantom(seed, seed % 2 ? 10.0 : 25.0);
        const LayerDecomposition ncl = decompose_nc_layers(s.graph);
        REQUIRE(ncl.count() >= 3);
        REQUIRE(ncl.count() <= 5);
        std::set<int> seen;
        for (const auto& l : ncl.layers) {
            CHECK_FALSE(l.empty());
            for (int r : l) CHECK(seen.insert(r).second);
        }
        CHECK(static_cast<int>(seen.size()) == s.graph.count);
        for (int k = 0; k + 1 < ncl.count(); ++k) {
            CHECK(layer_mean_row(ncl.layers[static_cast<std::size_t>(k)], s.graph) <
                  layer_mean_row(ncl.layers[static_cast<std::size_t>(k + 1)], s.graph));
        }
    }
}

TEST_CASE("noise-free phantom decomposes into its four bands") {
    const Segmented s = segmented_phantom(3, 0.0);
    const LayerDecomposition ncl = decompose_nc_layers(s.graph);
    REQUIRE(ncl.count() == 4);
    const std::vector<int> band = region_bands(s);
    for (int k = 0; k < 4; ++k) {
        for (int r : ncl.layers[static_cast<std::size_t>(k)]) CHECK(band[static_cast<std::size_t>(r)] == k + 1);
    }
}

TEST_CASE("constant image falls back to three layers") {
    const Image img(64, 64, 100);
    const SuperpixelMap sp = segment(img);
    const LayerDecomposition ncl = decompose_nc_layers(build_region_graph(img, sp));
    CHECK(ncl.count() == 3);
}

TEST_CASE("images shorter than 24 rows are rejected") {
    const Image img(64, 20, 100);
    const SuperpixelMap sp = segment(img);
    CHECK_THROWS_AS(decompose_nc_layers(build_region_graph(img, sp)), ContractError);
}

TEST_CASE("layer validity is a strict 75% column test") {
    // Width 8: region 0 spans columns 0..5 (75%), region 1 adds column 6.
    const RegionGraph g = column_graph(8, {{0, 1, 2, 3, 4, 5}, {6}, {0, 1, 2, 3, 4, 5, 6, 7}});
    CHECK_FALSE(layer_valid(std::vector<int>{0}, g));
    CHECK(layer_valid(std::vector<int>{0, 1}, g));
    CHECK(layer_valid(std::vector<int>{2}, g));
    CHECK_FALSE(layer_valid(std::vector<int>{}, g));
}

TEST_CASE("refinement matches hand-traced cases") {
    const RegionGraph g = testing::refine_grid_graph();
    const LayerDecomposition ncl = testing::refine_grid_ncl();
    for (const auto& rc : testing::refine_cases()) {
        INFO(rc.name);
        const AnatomyLabeling out = refine_layers(labeling_from(rc.semantic), ncl, g);
        CHECK(out.layer_of == rc.expected);
        CHECK(out.source == AnatomyLabeling::Source::Refined);
    }
}

TEST_CASE("invalid fat layer falls back to the first non-semantic layer") {
    // Fat occupies half the columns: blocks 0 and 1 of row 1 only.
    const RegionGraph g = testing::refine_grid_graph();
    const std::vector<int> sa{1, 1, 1, 2, 2, 3, 3, 3, 3, 4, 4, 4};
    const AnatomyLabeling out = refine_layers(labeling_from(sa), testing::refine_grid_ncl(), g);
    // NCL_1 = {0,1,2} is all skin, so nothing is left for fat.
    CHECK(out.members(Layer::Fat).empty());
    CHECK(out.layer_of[3] == 3);
    CHECK(out.layer_of[4] == 3);
}

TEST_CASE("refinement copies SP' and keeps a noise-free phantom unchanged") {
    const Segmented s = segmented_phantom(4, 0.0);
    const AnatomyLabeling sa = semantic_labeling(s.labels);
    const AnatomyLabeling nsa = refine_layers(sa, decompose_nc_layers(s.graph), s.graph);
    CHECK(nsa.layer_of == sa.layer_of);
    CHECK(nsa.prob == sa.prob);
}

TEST_CASE("refinement properties over random cases") {
    testing::Rng rng(2024);
    for (int trial = 0; trial < 2000; ++trial) {
        const auto fc = testing::random_refine_case(rng);
        const AnatomyLabeling nsa = refine_layers(fc.semantic, fc.ncl, fc.graph);
        REQUIRE(testing::is_partition(nsa, fc.graph.count));
        // Skin only shrinks.
        for (int r : nsa.members(Layer::Skin)) REQUIRE(fc.semantic.layer_of[static_cast<std::size_t>(r)] == 1);
        // Idempotence.
        AnatomyLabeling again = nsa;
        again.source = AnatomyLabeling::Source::Semantic;
        REQUIRE(refine_layers(again, fc.ncl, fc.graph).layer_of == nsa.layer_of);
    }
}

TEST_CASE("layer flags") {
    SUBCASE("all dark") {
        const RegionGraph g = intensity_graph({0.1, 0.1, 0.1}, {1, 1, 1});
        CHECK(classify_layer_flag(std::vector<int>{0, 1, 2}, g) == LayerFlag::Dark);
    }
    SUBCASE("all bright") {
        const RegionGraph g = intensity_graph({0.9, 0.9}, {1, 1});
        CHECK(classify_layer_flag(std::vector<int>{0, 1}, g) == LayerFlag::Smooth);
    }
    SUBCASE("uniform mid grey") {
        const RegionGraph g = intensity_graph({0.4, 0.4}, {1, 1});
        CHECK(classify_layer_flag(std::vector<int>{0, 1}, g) == LayerFlag::Normal);
    }
    SUBCASE("fractions are area weighted") {
        // 70% of the area is dark: dark. 60% exactly is not.
        CHECK(classify_layer_flag(std::vector<int>{0, 1}, intensity_graph({0.1, 0.5}, {7, 3})) == LayerFlag::Dark);
        CHECK(classify_layer_flag(std::vector<int>{0, 1}, intensity_graph({0.1, 0.5}, {6, 4})) == LayerFlag::Normal);
    }
    SUBCASE("empty layer is a contract error") {
        const RegionGraph g = intensity_graph({0.4}, {1});
        CHECK_THROWS_AS(classify_layer_flag(std::vector<int>{}, g), ContractError);
    }
    SUBCASE("classify_layers reports empty layers as normal") {
        const RegionGraph g = intensity_graph({0.1, 0.1, 0.9}, {1, 1, 1});
        const auto flags = classify_layers(labeling_from({2, 2, 4}), g);
        CHECK(flags[0] == LayerFlag::Normal);
        CHECK(flags[1] == LayerFlag::Dark);
        CHECK(flags[2] == LayerFlag::Normal);
        CHECK(flags[3] == LayerFlag::Smooth);
    }
}

}  // TEST_SUITE
