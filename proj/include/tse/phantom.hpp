#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "tse/image.hpp"

namespace tse {

// Axis-aligned ellipse in relative image units: center and semi-axes are
// fractions of width (x) and height (y).
struct Ellipse {
    double cx = 0.5;
    double cy = 0.45;
    double rx = 0.12;
    double ry = 0.08;

    bool contains(double px, double py) const;  // relative coordinates
};

// A dark blob painted outside the mammary band. It is not part of the ground truth.
struct Distractor {
    Ellipse shape;
    double intensity = 40.0;
};

struct PhantomSpec {
    int width = 256;
    int height = 256;
    Ellipse tumor;
    double noise_sigma = 0.0;
    std::uint64_t seed = 0;

    // Upper edge of fat, mammary and muscle bands, as fractions of the height.
    // Skin occupies [0, band_edges[0]).
    std::array<double, 3> band_edges{0.10, 0.25, 0.70};
    std::array<double, 4> band_intensity{200.0, 120.0, 140.0, 90.0};
    double tumor_intensity = 40.0;

    // Gaussian sigma (pixels) used to soften the one-hot probability planes.
    double prob_blur = 3.0;

    std::vector<Distractor> distractors;
};

struct PhantomCase {
    Image image;
    PixelLabelMap ground_truth;  // 1 inside the tumor
    PixelLabelMap band_labels;   // 1..4, tumor pixels count as mammary
    PixelProbMap prob_map;
    double tumor_center_x = 0.0;  // pixels
    double tumor_center_y = 0.0;
    std::uint64_t seed = 0;
};

// Band (1..4) of pixel row y under the spec's band edges.
int phantom_band_of_row(const PhantomSpec& spec, int y);

// Deterministic for a fixed spec. Throws GeometryError when the tumor leaves
// the mammary band or covers less than 1% / more than 40% of the image, and
// when a distractor intersects the mammary band.
PhantomCase generate_phantom(const PhantomSpec& spec);

}  // namespace tse
