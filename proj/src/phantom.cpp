#include "tse/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "tse/error.hpp"

namespace tse {

namespace {

double pixel_center(int i, int extent) { return (static_cast<double>(i) + 0.5) / static_cast<double>(extent); }

// Separable Gaussian blur of one plane with clamped borders.
std::vector<double> blur_plane(const std::vector<double>& src, int width, int height, double sigma) {
    if (sigma <= 0.0) return src;
    const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
    std::vector<double> kernel(static_cast<std::size_t>(2 * radius + 1));
    double norm = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        kernel[static_cast<std::size_t>(i + radius)] = std::exp(-0.5 * i * i / (sigma * sigma));
        norm += kernel[static_cast<std::size_t>(i + radius)];
    }
    for (double& k : kernel) k /= norm;

    std::vector<double> tmp(src.size());
    std::vector<double> dst(src.size());
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            double acc = 0.0;
            for (int i = -radius; i <= radius; ++i) {
                const int xx = std::clamp(x + i, 0, width - 1);
                acc += kernel[static_cast<std::size_t>(i + radius)] * src[static_cast<std::size_t>(y * width + xx)];
            }
            tmp[static_cast<std::size_t>(y * width + x)] = acc;
        }
    }
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            double acc = 0.0;
            for (int i = -radius; i <= radius; ++i) {
                const int yy = std::clamp(y + i, 0, height - 1);
                acc += kernel[static_cast<std::size_t>(i + radius)] * tmp[static_cast<std::size_t>(yy * width + x)];
            }
            dst[static_cast<std::size_t>(y * width + x)] = acc;
        }
    }
    return dst;
}

void check_geometry(const PhantomSpec& spec) {
    if (spec.width < 8 || spec.height < 8) throw GeometryError("phantom must be at least 8x8 pixels");
    const auto& e = spec.band_edges;
    if (!(0.0 < e[0] && e[0] < e[1] && e[1] < e[2] && e[2] < 1.0)) {
        throw GeometryError("band edges must be strictly increasing inside (0, 1)");
    }
    const Ellipse& t = spec.tumor;
    if (!(t.rx > 0.0 && t.ry > 0.0)) throw GeometryError("tumor semi-axes must be positive");
    if (t.cy - t.ry < e[1] || t.cy + t.ry >= e[2] || t.cx - t.rx < 0.0 || t.cx + t.rx > 1.0) {
        std::ostringstream msg;
        msg << "tumor ellipse (center " << t.cx << "," << t.cy << ", axes " << t.rx << "," << t.ry
            << ") escapes the mammary band [" << e[1] << ", " << e[2] << ")";
        throw GeometryError(msg.str());
    }
    for (const Distractor& d : spec.distractors) {
        const Ellipse& s = d.shape;
        const bool above = s.cy + s.ry < e[1];
        const bool below = s.cy - s.ry >= e[2];
        if (!(s.rx > 0.0 && s.ry > 0.0) || !(above || below) || s.cy - s.ry < 0.0 || s.cy + s.ry > 1.0) {
            throw GeometryError("distractor must lie entirely outside the mammary band");
        }
    }
}

}  // namespace

bool Ellipse::contains(double px, double py) const {
    const double dx = (px - cx) / rx;
    const double dy = (py - cy) / ry;
    return dx * dx + dy * dy <= 1.0;
}

int phantom_band_of_row(const PhantomSpec& spec, int y) {
    const double ry = pixel_center(y, spec.height);
    int band = 1;
    for (double edge : spec.band_edges) {
        if (ry >= edge) ++band;
    }
    return band;
}

PhantomCase generate_phantom(const PhantomSpec& spec) {
    check_geometry(spec);
    const int w = spec.width;
    const int h = spec.height;

    PhantomCase out;
    out.seed = spec.seed;
    out.image = Image(w, h);
    out.ground_truth = PixelLabelMap(w, h, 0);
    out.band_labels = PixelLabelMap(w, h, 0);

    std::vector<double> base(static_cast<std::size_t>(w) * static_cast<std::size_t>(h));
    long tumor_area = 0;
    double sum_x = 0.0;
    double sum_y = 0.0;
    for (int y = 0; y < h; ++y) {
        const int band = phantom_band_of_row(spec, y);
        for (int x = 0; x < w; ++x) {
            const std::size_t idx = out.image.index(x, y);
            const double px = pixel_center(x, w);
            const double py = pixel_center(y, h);
            out.band_labels.labels()[idx] = band;
            double v = spec.band_intensity[static_cast<std::size_t>(band - 1)];
            if (spec.tumor.contains(px, py)) {
                v = spec.tumor_intensity;
                out.ground_truth.labels()[idx] = 1;
                ++tumor_area;
                sum_x += x;
                sum_y += y;
            }
            for (const Distractor& d : spec.distractors) {
                if (d.shape.contains(px, py)) v = d.intensity;
            }
            base[idx] = v;
        }
    }

    const double area = static_cast<double>(w) * static_cast<double>(h);
    if (tumor_area < 0.01 * area || tumor_area > 0.40 * area) {
        throw GeometryError("tumor covers " + std::to_string(100.0 * tumor_area / area) +
                            "% of the image, allowed range is [1%, 40%]");
    }
    out.tumor_center_x = sum_x / static_cast<double>(tumor_area);
    out.tumor_center_y = sum_y / static_cast<double>(tumor_area);

    std::mt19937_64 rng(spec.seed);
    std::normal_distribution<double> noise(0.0, 1.0);
    for (std::size_t i = 0; i < base.size(); ++i) {
        double v = base[i];
        if (spec.noise_sigma > 0.0) v += spec.noise_sigma * noise(rng);
        out.image.pixels()[i] = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
    }

    std::array<std::vector<double>, kNumClasses> planes;
    for (int k = 0; k < kNumClasses; ++k) {
        planes[static_cast<std::size_t>(k)].assign(base.size(), 0.0);
        for (std::size_t i = 0; i < base.size(); ++i) {
            if (out.band_labels.labels()[i] == k + 1) planes[static_cast<std::size_t>(k)][i] = 1.0;
        }
        planes[static_cast<std::size_t>(k)] = blur_plane(planes[static_cast<std::size_t>(k)], w, h, spec.prob_blur);
    }
    out.prob_map = PixelProbMap(kNumClasses, w, h);
    for (std::size_t i = 0; i < base.size(); ++i) {
        double sum = 0.0;
        for (const auto& p : planes) sum += p[i];
        for (int k = 0; k < kNumClasses; ++k) {
            out.prob_map.plane(k)[i] = static_cast<float>(planes[static_cast<std::size_t>(k)][i] / sum);
        }
    }
    return out;
}

}  // namespace tse
